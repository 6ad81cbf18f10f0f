use serde::Serialize;

use super::{LandsbergError, QProfile};
use crate::jets::{series_integrate, Jet};

/// Open interval on which `Q` is finite and `1 + t Q > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

/// Relative distance kept from window edges.
const EDGE_MARGIN: f64 = 1e-6;

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        let above = !self.lo.is_finite() || t > self.lo + EDGE_MARGIN * (1.0 + self.lo.abs());
        let below = !self.hi.is_finite() || t < self.hi - EDGE_MARGIN * (1.0 + self.hi.abs());
        t.is_finite() && above && below
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// A finite representative point (the midpoint when both ends are finite).
    pub fn center(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + self.lo.abs().max(1.0),
            (false, true) => self.hi - self.hi.abs().max(1.0),
            (false, false) => 0.0,
        }
    }

    /// The sub-interval keeping a `fraction` of the distance to each finite edge around `t0`.
    pub fn shrink_around(&self, t0: f64, fraction: f64) -> (f64, f64) {
        let lo = if self.lo.is_finite() {
            t0 - fraction * (t0 - self.lo)
        } else {
            f64::NEG_INFINITY
        };
        let hi = if self.hi.is_finite() {
            t0 + fraction * (self.hi - t0)
        } else {
            f64::INFINITY
        };
        (lo, hi)
    }
}

/// All admissible windows of `q`, in increasing order.
pub fn admissible_windows(q: &QProfile) -> Vec<Window> {
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(q.breakpoints());
    edges.push(f64::INFINITY);
    edges
        .windows(2)
        .map(|w| Window { lo: w[0], hi: w[1] })
        .filter(|w| w.hi > w.lo && q.one_plus_tq(w.center()).is_ok_and(|d| d > 0.0))
        .collect()
}

pub fn window_containing(q: &QProfile, t: f64) -> Option<Window> {
    admissible_windows(q).into_iter().find(|w| w.contains(t))
}

/// `0` when admissible, else the center of the widest window.
pub fn default_t0(q: &QProfile) -> Result<f64, LandsbergError> {
    if window_containing(q, 0.0).is_some() {
        return Ok(0.0);
    }
    admissible_windows(q)
        .into_iter()
        .max_by(|a, b| a.width().total_cmp(&b.width()))
        .map(|w| w.center())
        .ok_or(LandsbergError::Inadmissible {
            t: 0.0,
            reason: "no t with 1 + tQ(t) > 0",
        })
}

/// `phi(t) = exp(int_{t0}^t Q / (1 + sQ) ds)`, normalized by `phi(t0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiProfile {
    pub q: QProfile,
    pub t0: f64,
    pub window: Window,
}

/// Requested absolute accuracy of each quadrature panel.
const QUAD_TOL: f64 = 1e-14;
const QUAD_MAX_DEPTH: u32 = 24;

fn integrate_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, depth: u32) -> (f64, f64) {
    let out = quadrature::double_exponential::integrate(f, a, b, QUAD_TOL);
    if out.error_estimate <= QUAD_TOL * (1.0 + out.integral.abs()) || depth >= QUAD_MAX_DEPTH {
        return (out.integral, out.error_estimate);
    }
    let m = 0.5 * (a + b);
    let (l, el) = integrate_adaptive(f, a, m, depth + 1);
    let (r, er) = integrate_adaptive(f, m, b, depth + 1);
    (l + r, el + er)
}

/// Builds phi from `q`, checking that `t_range` and `t0` share one window.
pub fn phi_from_q(
    q: &QProfile,
    t_range: (f64, f64),
    t0: Option<f64>,
) -> Result<PhiProfile, LandsbergError> {
    let phi = PhiProfile::new(q.clone(), t0)?;
    for t in [t_range.0, t_range.1] {
        phi.check(t)?;
    }
    Ok(phi)
}

impl PhiProfile {
    pub fn new(q: QProfile, t0: Option<f64>) -> Result<Self, LandsbergError> {
        let t0 = match t0 {
            Some(t) => t,
            None => default_t0(&q)?,
        };
        let window = window_containing(&q, t0).ok_or(LandsbergError::Inadmissible {
            t: t0,
            reason: "base point t0 is not in an admissible window",
        })?;
        Ok(Self { q, t0, window })
    }

    fn check(&self, t: f64) -> Result<(), LandsbergError> {
        if self.window.contains(t) {
            Ok(())
        } else {
            Err(LandsbergError::Inadmissible {
                t,
                reason: "integration path from t0 crosses a pole of Q / (1 + tQ)",
            })
        }
    }

    pub fn ln_phi(&self, t: f64) -> Result<f64, LandsbergError> {
        self.check(t)?;
        if t == self.t0 {
            return Ok(0.0);
        }
        let q = &self.q;
        let g = |s: f64| q.integrand(s).unwrap_or(f64::NAN);
        let (v, err) = integrate_adaptive(&g, self.t0, t, 0);
        if !v.is_finite() || err > 1e-9 * (1.0 + v.abs()) {
            return Err(LandsbergError::Quadrature {
                t0: self.t0,
                t,
                error: err,
            });
        }
        Ok(v)
    }

    pub fn phi(&self, t: f64) -> Result<f64, LandsbergError> {
        Ok(self.ln_phi(t)?.exp())
    }

    /// Taylor coefficients of `ln phi` at `t`.
    pub fn ln_series(&self, t: f64, n: usize) -> Result<Vec<f64>, LandsbergError> {
        let g = self.q.integrand_series(t, n.max(1) - 1)?;
        let mut s = series_integrate(&[g, vec![0.0]].concat(), self.ln_phi(t)?);
        s.truncate(n + 1);
        Ok(s)
    }

    /// `phi` composed with a jet (for example `t = rho(x) u`).
    pub fn compose(&self, t: &Jet) -> Result<Jet, LandsbergError> {
        let ln = t.compose(&self.ln_series(t.value(), t.spec().nilpotency())?);
        Ok(ln.exp())
    }

    /// Univariate phi-jet of the given order at `t`.
    pub fn jet_at(&self, t: f64, order: usize) -> Result<Jet, LandsbergError> {
        self.compose(&Jet::variable_t(t, order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landsberg::q_from_phi;

    #[test]
    fn euclidean_q_reconstructs_sqrt() {
        let q = QProfile::Linear { a: 1.0, b: 0.0 };
        for t0 in [0.0, 0.7] {
            let phi = PhiProfile::new(q.clone(), Some(t0)).unwrap();
            for t in [-3.0, -0.4, 0.2, 1.9, 6.0] {
                let exact = 0.5 * ((1.0 + t * t) / (1.0 + t0 * t0)).ln();
                assert!(
                    (phi.ln_phi(t).unwrap() - exact).abs() < 1e-10,
                    "t0 {t0} t {t}"
                );
            }
        }
    }

    #[test]
    fn constant_q_gives_linear_phi() {
        let q = QProfile::Linear { a: 0.0, b: 0.5 };
        let phi = PhiProfile::new(q, None).unwrap();
        assert_eq!(
            phi.window,
            Window {
                lo: -2.0,
                hi: f64::INFINITY
            }
        );
        assert!((phi.phi(3.0).unwrap() - 2.5).abs() < 1e-12);
        assert!(q_from_phi(&phi.jet_at(1.0, 5).unwrap()).is_err());
    }

    #[test]
    fn path_across_pole_is_rejected() {
        let q = QProfile::family(1.0, 1.0, 0.0);
        let phi = PhiProfile::new(q.clone(), None).unwrap();
        assert_eq!(
            phi.window,
            Window {
                lo: f64::NEG_INFINITY,
                hi: 2.0
            }
        );
        assert!(phi.ln_phi(2.5).is_err());
        assert!(phi_from_q(&q, (-1.0, 3.0), None).is_err());
        assert!(phi_from_q(&q, (-1.0, 1.0), None).is_ok());
    }

    #[test]
    fn c3_zero_family_is_exponential() {
        // Q = 1/(2 - t): Q / (1 + tQ) = 1/2, phi = e^{t/2}
        let phi = PhiProfile::new(QProfile::family(1.0, 1.0, 0.0), None).unwrap();
        assert!((phi.ln_phi(1.2).unwrap() - 0.6).abs() < 1e-13);
        let j = phi.jet_at(0.5, 4).unwrap();
        for k in 0..=4 {
            let expect = 0.25f64.exp() * 0.5f64.powi(k as i32);
            assert!((j.du(k).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn default_t0_moves_off_inadmissible_zero() {
        // Q = -0.5 / t: pole at 0, 1 + tQ = 1/2 elsewhere
        let q = QProfile::family(0.0, 0.5, 0.0);
        let t0 = default_t0(&q).unwrap();
        assert!(t0 != 0.0);
        assert!(window_containing(&q, t0).is_some());
    }
}
