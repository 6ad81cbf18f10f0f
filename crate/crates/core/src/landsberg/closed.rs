use serde::Serialize;

use super::LandsbergError;
use crate::jets::{atanh_ext_value, Jet};

/// The explicit profiles `phi(t)`, `F = |y1| sigma(x) phi(rho(x) y2 / y1)`.
///
/// `arctanh` is read as `atanh_ext(z) = 1/2 ln|(1+z)/(1-z)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm {
    /// `sqrt(c3 t^2 - (c-2) t - 2 c1) exp(c/s atanh((2 c3 t - (c-2)) / s))`, `s = sqrt(c^2 - 4 c2)`.
    Phi1 { c1: f64, c2: f64, c3: f64 },
    /// `sqrt(a t^2 + b t + 1) exp(-b/s atanh((2 a t + b) / s))`, `s = sqrt(b^2 - 4a)`.
    Phi2 { a: f64, b: f64 },
}

/// Quadratic radicand `r2 t^2 + r1 t + r0`, exponent `k atanh((z1 t + z0) / s)`.
struct Parts {
    r: [f64; 3],
    k: f64,
    z: [f64; 2],
}

impl ClosedForm {
    fn parts(&self) -> Result<Parts, LandsbergError> {
        match *self {
            ClosedForm::Phi1 { c1, c2, c3 } => {
                let c = 2.0 * c1 * c3 + c2 + 1.0;
                let disc = c * c - 4.0 * c2;
                if !(disc > 0.0) {
                    return Err(LandsbergError::ClosedFormDomain(format!(
                        "c^2 - 4 c2 = {disc} is not positive"
                    )));
                }
                let s = disc.sqrt();
                Ok(Parts {
                    r: [-2.0 * c1, -(c - 2.0), c3],
                    k: c / s,
                    z: [-(c - 2.0) / s, 2.0 * c3 / s],
                })
            }
            ClosedForm::Phi2 { a, b } => {
                if b == 0.0 {
                    return Ok(Parts {
                        r: [1.0, 0.0, a],
                        k: 0.0,
                        z: [0.0, 0.0],
                    });
                }
                let disc = b * b - 4.0 * a;
                if !(disc > 0.0) {
                    return Err(LandsbergError::ClosedFormDomain(format!(
                        "b^2 - 4a = {disc} is not positive"
                    )));
                }
                let s = disc.sqrt();
                Ok(Parts {
                    r: [1.0, b, a],
                    k: -b / s,
                    z: [b / s, 2.0 * a / s],
                })
            }
        }
    }

    /// Checks the radicand and the arctanh argument at `t`.
    pub fn check(&self, t: f64) -> Result<(), LandsbergError> {
        let p = self.parts()?;
        let rad = p.r[0] + t * (p.r[1] + t * p.r[2]);
        if !(rad > 0.0) {
            return Err(LandsbergError::ClosedFormDomain(format!(
                "radicand {rad} is not positive at t = {t}"
            )));
        }
        let z = p.z[0] + t * p.z[1];
        if p.k != 0.0 && (z.abs() - 1.0).abs() < 1e-12 {
            return Err(LandsbergError::ClosedFormDomain(format!(
                "arctanh argument has magnitude 1 at t = {t}"
            )));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> Result<f64, LandsbergError> {
        self.check(t)?;
        let p = self.parts()?;
        let rad = p.r[0] + t * (p.r[1] + t * p.r[2]);
        let z = p.z[0] + t * p.z[1];
        let e = if p.k == 0.0 {
            0.0
        } else {
            p.k * atanh_ext_value(z)
        };
        Ok(rad.sqrt() * e.exp())
    }

    /// The profile composed with a jet.
    pub fn jet(&self, t: &Jet) -> Result<Jet, LandsbergError> {
        self.check(t.value())?;
        let p = self.parts()?;
        let rad = &(&(t * t).scale(p.r[2]) + &t.scale(p.r[1])) + p.r[0];
        let root = rad.sqrt()?;
        if p.k == 0.0 {
            return Ok(root);
        }
        let z = &t.scale(p.z[1]) + p.z[0];
        Ok(root * z.atanh_ext()?.scale(p.k).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi2_with_b_zero_is_riemannian() {
        let f = ClosedForm::Phi2 { a: -0.5, b: 0.0 };
        assert!((f.value(1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(f.value(2.0).is_err());
    }

    #[test]
    fn phi1_needs_real_square_root_of_discriminant() {
        // c1 = c2 = 1, c3 = -1: c = 0, c^2 - 4 c2 < 0
        let f = ClosedForm::Phi1 {
            c1: 1.0,
            c2: 1.0,
            c3: -1.0,
        };
        assert!(matches!(
            f.value(0.0),
            Err(LandsbergError::ClosedFormDomain(_))
        ));
    }

    #[test]
    fn phi1_with_c3_zero_sits_on_the_arctanh_branch_point() {
        let f = ClosedForm::Phi1 {
            c1: 1.0,
            c2: 2.0,
            c3: 0.0,
        };
        assert!(f.value(-3.0).is_err());
    }

    #[test]
    fn jet_matches_value() {
        let f = ClosedForm::Phi1 {
            c1: -1.0,
            c2: 0.5,
            c3: 2.0,
        };
        let t = Jet::variable_t(0.3, 3);
        let j = f.jet(&t).unwrap();
        assert!((j.value() - f.value(0.3).unwrap()).abs() < 1e-14);
        let h = 1e-5;
        let fd = (f.value(0.3 + h).unwrap() - f.value(0.3 - h).unwrap()) / (2.0 * h);
        assert!((j.du(1).unwrap() - fd).abs() < 1e-8);
    }
}
