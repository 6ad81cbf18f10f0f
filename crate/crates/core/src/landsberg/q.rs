use serde::Serialize;

use super::LandsbergError;
use crate::jets::{series_mul, Jet};

/// The function `Q(t)` of the ansatz `f = phi(rho(x) u)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QProfile {
    /// `c2 / (2 c1 - t) + c3`, the general solution of the unicorn ODE.
    Family { c1: f64, c2: f64, c3: f64 },
    /// `a t + b`.
    Linear { a: f64, b: f64 },
    /// `sum coeffs[k] t^k`.
    Polynomial { coeffs: Vec<f64> },
}

/// Half-width of the search range for roots of `1 + t Q` of polynomial profiles.
const POLY_ROOT_SEARCH: f64 = 100.0;

impl QProfile {
    pub fn family(c1: f64, c2: f64, c3: f64) -> Self {
        QProfile::Family { c1, c2, c3 }
    }

    /// Taylor coefficients `Q^(k)(t0) / k!` for `k = 0..=n`.
    pub fn series(&self, t0: f64, n: usize) -> Result<Vec<f64>, LandsbergError> {
        match self {
            QProfile::Family { c1, c2, c3 } => {
                let s = 2.0 * c1 - t0;
                if s.abs() <= 1e-12 * (1.0 + (2.0 * c1).abs()) {
                    return Err(LandsbergError::Pole { t: t0 });
                }
                // c2 / (s - d) = sum c2 d^k / s^(k+1)
                let mut out = Vec::with_capacity(n + 1);
                let mut p = c2 / s;
                for _ in 0..=n {
                    out.push(p);
                    p /= s;
                }
                out[0] += c3;
                Ok(out)
            }
            QProfile::Linear { a, b } => {
                let mut out = vec![0.0; n + 1];
                out[0] = a * t0 + b;
                if n >= 1 {
                    out[1] = *a;
                }
                Ok(out)
            }
            QProfile::Polynomial { coeffs } => Ok(taylor_shift(coeffs, t0, n)),
        }
    }

    pub fn value(&self, t: f64) -> Result<f64, LandsbergError> {
        Ok(self.series(t, 0)?[0])
    }

    /// `1 + t Q(t)`, the denominator of the phi integrand.
    pub fn one_plus_tq(&self, t: f64) -> Result<f64, LandsbergError> {
        Ok(1.0 + t * self.value(t)?)
    }

    /// `Q` composed with a jet.
    pub fn jet(&self, t: &Jet) -> Result<Jet, LandsbergError> {
        Ok(t.compose(&self.series(t.value(), t.spec().nilpotency())?))
    }

    /// `Q_t` composed with a jet.
    pub fn derivative_jet(&self, t: &Jet) -> Result<Jet, LandsbergError> {
        let s = self.series(t.value(), t.spec().nilpotency() + 1)?;
        let d: Vec<f64> = s
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        Ok(t.compose(&d))
    }

    /// Taylor coefficients of the phi integrand `Q / (1 + t Q)` at `t0`.
    pub fn integrand_series(&self, t0: f64, n: usize) -> Result<Vec<f64>, LandsbergError> {
        let q = self.series(t0, n)?;
        let mut t = vec![0.0; n + 1];
        t[0] = t0;
        if n >= 1 {
            t[1] = 1.0;
        }
        let mut d = series_mul(&t, &q);
        d[0] += 1.0;
        if d[0] <= 0.0 {
            return Err(LandsbergError::Inadmissible {
                t: t0,
                reason: "1 + tQ(t) is not positive",
            });
        }
        let r = crate::jets::series_recip(&d)?;
        Ok(series_mul(&q, &r))
    }

    pub fn integrand(&self, t: f64) -> Result<f64, LandsbergError> {
        let q = self.value(t)?;
        Ok(q / (1.0 + t * q))
    }

    /// Sorted points where `Q` has a pole or `1 + t Q` vanishes.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            QProfile::Family { c1, c2, c3 } => {
                // 1 + tQ = D / (2 c1 - t), D = 2 c1 + (c - 2) t - c3 t^2
                let c = 2.0 * c1 * c3 + c2 + 1.0;
                let mut v = quadratic_roots(-c3, c - 2.0, 2.0 * c1);
                v.push(2.0 * c1);
                v
            }
            QProfile::Linear { a, b } => quadratic_roots(*a, *b, 1.0),
            QProfile::Polynomial { coeffs } => {
                let mut p = vec![1.0];
                p.extend_from_slice(coeffs);
                scan_roots(|t| horner(&p, t), -POLY_ROOT_SEARCH, POLY_ROOT_SEARCH)
            }
        };
        pts.retain(|v| v.is_finite());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
}

/// Coefficients of `p(t0 + d)` in powers of `d`, truncated at `d^n`.
fn taylor_shift(coeffs: &[f64], t0: f64, n: usize) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    // repeated synthetic division by (t - t0)
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        if c.is_empty() {
            out.push(0.0);
            continue;
        }
        let mut rem = 0.0;
        let mut q = vec![0.0; c.len().saturating_sub(1)];
        for i in (0..c.len()).rev() {
            rem = rem * t0 + c[i];
            if i > 0 {
                q[i - 1] = rem;
            }
        }
        out.push(rem);
        c = q;
    }
    out
}

/// Real roots of `a t^2 + b t + c` (also when `a = 0`).
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

fn scan_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    const STEPS: usize = 200_000;
    let h = (hi - lo) / STEPS as f64;
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=STEPS {
        let b = lo + i as f64 * h;
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut l, mut r, mut fl) = (a, b, fa);
            for _ in 0..80 {
                let m = 0.5 * (l + r);
                let fm = f(m);
                if fl * fm <= 0.0 {
                    r = m;
                } else {
                    l = m;
                    fl = fm;
                }
            }
            roots.push(0.5 * (l + r));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// `Q = c2 / (2 c1 - t) + c3` as a univariate jet of the given order.
pub fn q_solution(c1: f64, c2: f64, c3: f64, t: f64, order: usize) -> Result<Jet, LandsbergError> {
    QProfile::family(c1, c2, c3).jet(&Jet::variable_t(t, order))
}

/// `Q = phi_t / (phi - t phi_t)` from a univariate phi-jet; one order is lost.
pub fn q_from_phi(phi: &Jet) -> Result<Jet, LandsbergError> {
    let t = crate::jets::Jet::lift(crate::jets::Var::U, phi.spec(), phi.base());
    let phi_t = phi.d_u()?;
    let denom = phi - &(&t * &phi_t);
    let at = phi.base().u;
    if denom.value().abs() <= 1e-14 * phi.value().abs() {
        return Err(LandsbergError::SingularQ {
            t: at,
            reason: "phi - t phi_t vanishes",
        });
    }
    let q = phi_t.div(&denom)?;
    let q_t = q.du(1)?;
    if q_t.abs() <= 1e-13 * (1.0 + q.value().abs()) {
        return Err(LandsbergError::SingularQ {
            t: at,
            reason: "Q_t vanishes (Q locally constant, degenerate metric)",
        });
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeResidual {
    /// `3 Q_tt^2 - 2 Q_t Q_ttt`
    pub raw: f64,
    /// `raw / (1 + 3 Q_tt^2 + 2 |Q_t Q_ttt|)`
    pub normalized: f64,
}

/// Residual of the unicorn ODE `3 Q_tt^2 - 2 Q_t Q_ttt = 0`.
pub fn unicorn_ode_residual(q: &Jet) -> Result<OdeResidual, LandsbergError> {
    let (q1, q2, q3) = (q.du(1)?, q.du(2)?, q.du(3)?);
    let (a, b) = (3.0 * q2 * q2, 2.0 * q1 * q3);
    Ok(OdeResidual {
        raw: a - b,
        normalized: (a - b) / (1.0 + a + b.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{BasePoint, JetSpec};

    #[test]
    fn family_series_matches_derivatives() {
        let q = q_solution(1.0, 1.0, 0.0, 1.0, 4).unwrap();
        assert!((q.value() - 1.0).abs() < 1e-15);
        assert!((q.du(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((q.du(2).unwrap() - 2.0).abs() < 1e-14);
        assert!((q.du(3).unwrap() - 6.0).abs() < 1e-13);
        let q0 = q_solution(0.7, 1.3, -0.4, 0.0, 1).unwrap();
        assert!((q0.value() - (1.3 / 1.4 - 0.4)).abs() < 1e-15);
    }

    #[test]
    fn pole_is_reported() {
        assert!(matches!(
            q_solution(1.0, 1.0, 0.0, 2.0, 3),
            Err(LandsbergError::Pole { .. })
        ));
    }

    #[test]
    fn ode_residual_cases() {
        let lin = QProfile::Linear { a: 0.4, b: -1.0 }
            .jet(&Jet::variable_t(0.3, 4))
            .unwrap();
        assert_eq!(unicorn_ode_residual(&lin).unwrap().raw, 0.0);
        let cubic = QProfile::Polynomial {
            coeffs: vec![0.0, 0.0, 0.0, 1.0],
        };
        let r = unicorn_ode_residual(&cubic.jet(&Jet::variable_t(1.0, 4)).unwrap()).unwrap();
        assert!((r.raw - 72.0).abs() < 1e-12);
        for t in [-3.0, -0.5, 0.0, 0.9, 1.5, 4.0] {
            let q = q_solution(1.0, 0.8, 0.3, t, 4).unwrap();
            assert!(unicorn_ode_residual(&q).unwrap().normalized.abs() < 1e-12);
        }
    }

    #[test]
    fn q_of_euclidean_phi_is_identity() {
        let t = Jet::variable_t(0.6, 5);
        let phi = (&(&t * &t) + 1.0).sqrt().unwrap();
        let q = q_from_phi(&phi).unwrap();
        assert!((q.value() - 0.6).abs() < 1e-14);
        assert!((q.du(1).unwrap() - 1.0).abs() < 1e-13);
        assert!(q.du(2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn linear_phi_is_singular() {
        let t = Jet::variable_t(0.6, 5);
        let phi = &t.scale(0.5) + 2.0;
        assert!(matches!(
            q_from_phi(&phi),
            Err(LandsbergError::SingularQ { .. })
        ));
    }

    #[test]
    fn breakpoints_of_family() {
        // c1 = c2 = 1, c3 = 0: D = 2, pole at 2
        assert_eq!(QProfile::family(1.0, 1.0, 0.0).breakpoints(), vec![2.0]);
        // c1 = 1, c2 = 2, c3 = 0: D = 2 + t
        assert_eq!(
            QProfile::family(1.0, 2.0, 0.0).breakpoints(),
            vec![-2.0, 2.0]
        );
        let p = QProfile::Polynomial {
            coeffs: vec![0.0, -1.0],
        };
        let b = p.breakpoints();
        assert_eq!(b.len(), 2);
        assert!((b[0] + 1.0).abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_shift_of_cubic() {
        // t^3 at 2: 8 + 12 d + 6 d^2 + d^3
        assert_eq!(
            taylor_shift(&[0.0, 0.0, 0.0, 1.0], 2.0, 4),
            vec![8.0, 12.0, 6.0, 1.0, 0.0]
        );
    }

    #[test]
    fn derivative_jet_is_q_t() {
        let t = Jet::lift(
            crate::jets::Var::U,
            JetSpec::default(),
            BasePoint::new(0.0, 0.0, 0.5),
        );
        let q = QProfile::family(1.0, 2.0, 0.5);
        let qt = q.derivative_jet(&t).unwrap();
        let direct = q.jet(&t).unwrap().d_u().unwrap();
        for k in 0..5 {
            assert!((qt.du(k).unwrap() - direct.du(k).unwrap()).abs() < 1e-12);
        }
    }
}
