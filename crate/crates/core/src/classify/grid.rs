use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ClassifyError;
use crate::expr::Expression;
use crate::geometry::TangentSample;

/// How tangent directions are laid out at each base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Directions {
    /// The unit circle minus a wedge of half-angle `wedge` (radians) around `y1 = 0`.
    Circle { wedge: f64 },
    /// Both orientations of `(1, u) / |(1, u)|` for `u` in `[lo, hi]`.
    Slopes { lo: f64, hi: f64 },
}

/// A jittered product grid `nx * ny` base points times `nd` directions.
///
/// Each cell contributes one point drawn from its middle half, so the grid
/// is deterministic given the seed and never touches the box boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleGrid {
    /// `[x1_lo, x1_hi, x2_lo, x2_hi]`
    pub xbox: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub nd: usize,
    pub directions: Directions,
    pub seed: u64,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self {
            xbox: [-1.0, 1.0, -1.0, 1.0],
            nx: 10,
            ny: 10,
            nd: 10,
            directions: Directions::Circle { wedge: 0.2 },
            seed: 0,
        }
    }
}

fn jittered(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = (i as f64 + rng.gen_range(0.25..0.75)) / n as f64;
            lo + s * (hi - lo)
        })
        .collect()
}

impl SampleGrid {
    pub fn new(
        xbox: [f64; 4],
        counts: [usize; 3],
        directions: Directions,
        seed: u64,
    ) -> Result<Self, ClassifyError> {
        let g = Self {
            xbox,
            nx: counts[0],
            ny: counts[1],
            nd: counts[2],
            directions,
            seed,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: String| Err(ClassifyError::InvalidGrid(m));
        let [a, b, c, d] = self.xbox;
        if !(a < b && c < d) || self.xbox.iter().any(|v| !v.is_finite()) {
            return bad(format!(
                "x-box {:?} is not two finite increasing intervals",
                self.xbox
            ));
        }
        if self.nx == 0 || self.ny == 0 || self.nd == 0 {
            return bad("grid counts must be positive".into());
        }
        match self.directions {
            Directions::Circle { wedge } if !(wedge > 0.0 && wedge < 0.5 * PI) => {
                bad(format!("wedge half-angle {wedge} is outside (0, pi/2)"))
            }
            Directions::Slopes { lo, hi } if !(lo <= hi && lo.is_finite() && hi.is_finite()) => {
                bad(format!("slope range [{lo}, {hi}] is not a finite interval"))
            }
            _ => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nd
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_directions(mut self, directions: Directions) -> Self {
        self.directions = directions;
        self
    }

    fn axes(&self) -> (Vec<f64>, Vec<f64>, Vec<[f64; 2]>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let [a, b, c, d] = self.xbox;
        let xs = jittered(&mut rng, self.nx, a, b);
        let ys = jittered(&mut rng, self.ny, c, d);
        let dirs = match self.directions {
            Directions::Circle { wedge } => {
                let arc = PI - 2.0 * wedge;
                jittered(&mut rng, self.nd, 0.0, 2.0 * arc)
                    .into_iter()
                    .map(|s| {
                        let angle = if s < arc {
                            -0.5 * PI + wedge + s
                        } else {
                            0.5 * PI + wedge + (s - arc)
                        };
                        [angle.cos(), angle.sin()]
                    })
                    .collect()
            }
            Directions::Slopes { lo, hi } => jittered(&mut rng, self.nd, lo, hi)
                .into_iter()
                .enumerate()
                .map(|(i, u)| {
                    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let n = u.hypot(1.0);
                    [s / n, s * u / n]
                })
                .collect(),
        };
        (xs, ys, dirs)
    }

    /// Base points of the grid, row-major in `x1`.
    pub fn positions(&self) -> Vec<[f64; 2]> {
        let (xs, ys, _) = self.axes();
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| [x, y]))
            .collect()
    }

    /// All samples in a fixed order (`x1`, then `x2`, then direction).
    pub fn samples(&self) -> Result<Vec<TangentSample>, ClassifyError> {
        self.validate()?;
        let (xs, ys, dirs) = self.axes();
        let mut out = Vec::with_capacity(self.len());
        for &x1 in &xs {
            for &x2 in &ys {
                for &[y1, y2] in &dirs {
                    out.push(TangentSample::new(x1, x2, y1, y2)?);
                }
            }
        }
        Ok(out)
    }

    /// Range of a positive position function over the grid's base points.
    pub fn bounds_of(&self, expr: &Expression) -> Result<(f64, f64), ClassifyError> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for [x1, x2] in self.positions() {
            let v = expr.eval_f64(&[("x1", x1), ("x2", x2)])?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }
}

/// Slopes `u` with `rho u` inside `t_range` for every `rho` in `rho_bounds`,
/// clipped to `|u| <= cap` where the window is unbounded.
pub fn slopes_for_window(
    t_range: (f64, f64),
    rho_bounds: (f64, f64),
    cap: f64,
) -> Option<(f64, f64)> {
    let (tl, th) = t_range;
    let (rl, rh) = rho_bounds;
    if !(rl > 0.0 && rh >= rl) {
        return None;
    }
    let raw_lo = if tl < 0.0 { tl / rh } else { tl / rl };
    let raw_hi = if th > 0.0 { th / rh } else { th / rl };
    let lo = raw_lo.max((-cap).min(raw_hi - cap));
    let hi = raw_hi.min(cap.max(lo + cap));
    (lo < hi).then_some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_deterministic_and_sized() {
        let g = SampleGrid::default();
        let a = g.samples().unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(a, g.samples().unwrap());
        assert_ne!(a, g.with_seed(1).samples().unwrap());
    }

    #[test]
    fn circle_directions_avoid_the_wedge() {
        let g = SampleGrid::default().with_directions(Directions::Circle { wedge: 0.3 });
        let pos = g.samples().unwrap().iter().filter(|s| s.y1 > 0.0).count();
        for s in g.samples().unwrap() {
            assert!(s.y1.abs() >= 0.3f64.sin() - 1e-12);
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        assert!(pos > 0 && pos < 1000);
    }

    #[test]
    fn slope_directions_stay_in_range() {
        let g = SampleGrid::default().with_directions(Directions::Slopes { lo: -0.5, hi: 1.5 });
        for s in g.samples().unwrap() {
            assert!((-0.5..=1.5).contains(&s.u()));
        }
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(SampleGrid::new(
            [1.0, 0.0, 0.0, 1.0],
            [2, 2, 2],
            Directions::Circle { wedge: 0.1 },
            0
        )
        .is_err());
        assert!(SampleGrid::new(
            [0.0, 1.0, 0.0, 1.0],
            [0, 2, 2],
            Directions::Circle { wedge: 0.1 },
            0
        )
        .is_err());
        assert!(SampleGrid::new(
            [0.0, 1.0, 0.0, 1.0],
            [2, 2, 2],
            Directions::Circle { wedge: 2.0 },
            0
        )
        .is_err());
    }

    #[test]
    fn window_slopes() {
        // rho in [1, 2], t in (-2, 4): u in (-1, 2)
        assert_eq!(
            slopes_for_window((-2.0, 4.0), (1.0, 2.0), 10.0),
            Some((-1.0, 2.0))
        );
        assert_eq!(
            slopes_for_window((f64::NEG_INFINITY, 1.0), (1.0, 1.0), 3.0),
            Some((-3.0, 1.0))
        );
        // window away from zero
        assert_eq!(slopes_for_window((1.0, 2.0), (1.0, 2.0), 3.0), None);
        assert_eq!(
            slopes_for_window((1.0, 5.0), (1.0, 2.0), 3.0),
            Some((1.0, 2.5))
        );
        // half-line far from zero
        assert_eq!(
            slopes_for_window((f64::NEG_INFINITY, -5.0), (1.0, 1.0), 3.0),
            Some((-8.0, -5.0))
        );
    }
}
