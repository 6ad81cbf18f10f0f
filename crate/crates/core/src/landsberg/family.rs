use serde::Serialize;

use super::{ClosedForm, LandsbergError, PhiProfile, QProfile};
use crate::expr::{Expression, JetEnv, POSITION_VARS};
use crate::geometry::{ChartFunction, GeometryError, Spray, TangentSample};
use crate::jets::{BasePoint, Jet, JetSpec, Var};

/// Constants of the family `Q = c2 / (2 c1 - t) + c3` with `rho`, `sigma`.
#[derive(Debug, Clone, Serialize)]
pub struct PhiFamilyParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub rho: Expression,
    pub sigma: Expression,
}

impl PhiFamilyParams {
    pub fn new(c1: f64, c2: f64, c3: f64, rho: &str, sigma: &str) -> Result<Self, LandsbergError> {
        let p = Self {
            c1,
            c2,
            c3,
            rho: Expression::parse(rho, POSITION_VARS)?,
            sigma: Expression::parse(sigma, POSITION_VARS)?,
        };
        if !(c2 > 0.0) {
            return Err(LandsbergError::InvalidParams(format!(
                "c2 = {c2} must be positive"
            )));
        }
        Ok(p)
    }

    /// `c = 2 c1 c3 + c2 + 1`.
    pub fn c(&self) -> f64 {
        2.0 * self.c1 * self.c3 + self.c2 + 1.0
    }

    pub fn q(&self) -> QProfile {
        QProfile::family(self.c1, self.c2, self.c3)
    }

    pub fn closed_form(&self) -> ClosedForm {
        ClosedForm::Phi1 {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
        }
    }

    /// The family metric reconstructed from `Q` by quadrature.
    pub fn metric(&self, t0: Option<f64>) -> Result<FamilyMetric, LandsbergError> {
        FamilyMetric::new(self.q(), self.rho.clone(), self.sigma.clone(), t0)
    }
}

/// Constants of `Q = a t + b` with `rho`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticQParams {
    pub a: f64,
    pub b: f64,
    pub rho: Expression,
}

impl QuadraticQParams {
    pub fn new(a: f64, b: f64, rho: &str) -> Result<Self, LandsbergError> {
        if a == 0.0 {
            return Err(LandsbergError::InvalidParams(
                "a = 0 makes Q constant, which is degenerate".into(),
            ));
        }
        Ok(Self {
            a,
            b,
            rho: Expression::parse(rho, POSITION_VARS)?,
        })
    }

    pub fn q(&self) -> QProfile {
        QProfile::Linear {
            a: self.a,
            b: self.b,
        }
    }

    pub fn closed_form(&self) -> ClosedForm {
        ClosedForm::Phi2 {
            a: self.a,
            b: self.b,
        }
    }

    pub fn metric(&self, t0: Option<f64>) -> Result<FamilyMetric, LandsbergError> {
        let one = Expression::parse("1", POSITION_VARS)?;
        FamilyMetric::new(self.q(), self.rho.clone(), one, t0)
    }
}

/// Jets of `rho`, `sigma` and the chart variable `u` at a sample.
pub struct PositionJets {
    pub rho: Jet,
    pub sigma: Jet,
    pub u: Jet,
}

impl PositionJets {
    pub fn new(
        rho: &Expression,
        sigma: &Expression,
        sample: &TangentSample,
        spec: JetSpec,
    ) -> Result<Self, LandsbergError> {
        let base = BasePoint::new(sample.x1, sample.x2, sample.u());
        let env = JetEnv::coordinates(spec, base);
        let rho = rho.evaluate(&env)?;
        let sigma = sigma.evaluate(&env)?;
        for (name, v) in [("rho", rho.value()), ("sigma", sigma.value())] {
            if !(v > 0.0) {
                return Err(LandsbergError::InvalidParams(format!(
                    "{name} = {v} is not positive at ({}, {})",
                    sample.x1, sample.x2
                )));
            }
        }
        Ok(Self {
            rho,
            sigma,
            u: Jet::lift(Var::U, spec, base),
        })
    }

    /// `t = rho(x) u`.
    pub fn t(&self) -> Jet {
        &self.rho * &self.u
    }
}

/// `F = |y1| sigma(x) phi(rho(x) u)` with `phi` reconstructed from `Q`.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyMetric {
    pub phi: PhiProfile,
    pub rho: Expression,
    pub sigma: Expression,
}

impl FamilyMetric {
    pub fn new(
        q: QProfile,
        rho: Expression,
        sigma: Expression,
        t0: Option<f64>,
    ) -> Result<Self, LandsbergError> {
        Ok(Self {
            phi: PhiProfile::new(q, t0)?,
            rho,
            sigma,
        })
    }

    pub fn q(&self) -> &QProfile {
        &self.phi.q
    }

    /// `t = rho(x) u` at a sample, by plain evaluation.
    pub fn t_of(&self, sample: &TangentSample) -> Result<f64, LandsbergError> {
        let rho = self.rho.eval_f64(&[("x1", sample.x1), ("x2", sample.x2)])?;
        Ok(rho * sample.u())
    }

    pub fn position_jets(
        &self,
        sample: &TangentSample,
        spec: JetSpec,
    ) -> Result<PositionJets, LandsbergError> {
        PositionJets::new(&self.rho, &self.sigma, sample, spec)
    }
}

impl ChartFunction for FamilyMetric {
    fn f_jet(&self, sample: &TangentSample, spec: JetSpec) -> Result<Jet, GeometryError> {
        let p = self.position_jets(sample, spec)?;
        let phi = self.phi.compose(&p.t())?;
        Ok(&p.sigma * &phi)
    }

    fn label(&self) -> String {
        let q = match self.phi.q {
            QProfile::Family { c1, c2, c3 } => format!("family(c1={c1}, c2={c2}, c3={c3})"),
            QProfile::Linear { a, b } => format!("linear(a={a}, b={b})"),
            QProfile::Polynomial { ref coeffs } => format!("polynomial{coeffs:?}"),
        };
        format!("{} * phi[{q}]({} * u)", self.sigma, self.rho)
    }
}

/// `F = |y1| sigma(x) phi(rho(x) u)` with a printed closed-form `phi`.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormMetric {
    pub form: ClosedForm,
    pub rho: Expression,
    pub sigma: Expression,
}

impl ClosedFormMetric {
    pub fn new(form: ClosedForm, rho: &str, sigma: &str) -> Result<Self, LandsbergError> {
        Ok(Self {
            form,
            rho: Expression::parse(rho, POSITION_VARS)?,
            sigma: Expression::parse(sigma, POSITION_VARS)?,
        })
    }

    /// `F(x, y)` by plain evaluation.
    pub fn finsler(&self, sample: &TangentSample) -> Result<f64, LandsbergError> {
        let xs = [("x1", sample.x1), ("x2", sample.x2)];
        let rho = self.rho.eval_f64(&xs)?;
        let sigma = self.sigma.eval_f64(&xs)?;
        Ok(sample.y1.abs() * sigma * self.form.value(rho * sample.u())?)
    }
}

impl ChartFunction for ClosedFormMetric {
    fn f_jet(&self, sample: &TangentSample, spec: JetSpec) -> Result<Jet, GeometryError> {
        let p = PositionJets::new(&self.rho, &self.sigma, sample, spec)?;
        let phi = self.form.jet(&p.t())?;
        Ok(&p.sigma * &phi)
    }

    fn label(&self) -> String {
        let name = match self.form {
            ClosedForm::Phi1 { c1, c2, c3 } => format!("phi1(c1={c1}, c2={c2}, c3={c3})"),
            ClosedForm::Phi2 { a, b } => format!("phi2(a={a}, b={b})"),
        };
        format!("{} * {name}({} * u)", self.sigma, self.rho)
    }
}

/// Spray functions of `F = |y1| phi(rho u)` through `Q`:
///
/// ```text
/// f1 = -(Q^2 / Q_t) d1rho / (2 rho)
/// f2 = (u d1rho + u^2 d2rho) / (2 rho) + (Q / Q_t) d1rho / (2 rho^2)
/// ```
pub fn spray_phi_form(
    q: &QProfile,
    rho: &Expression,
    sample: &TangentSample,
    spec: JetSpec,
) -> Result<Spray, LandsbergError> {
    let one = Expression::parse("1", POSITION_VARS)?;
    let p = PositionJets::new(rho, &one, sample, spec)?;
    let t = p.t();
    let qj = q.jet(&t)?;
    let qt = q.derivative_jet(&t)?;
    let (rho, u) = (&p.rho, &p.u);
    let (d1, d2) = (rho.d_x1()?, rho.d_x2()?);
    let q2_qt = (&qj * &qj).div(&qt)?;
    let q_qt = qj.div(&qt)?;
    let two_rho = rho.scale(2.0);
    let f1 = -(&q2_qt * &d1.div(&two_rho)?);
    let f2 =
        (&(u * &d1) + &(&(u * u) * &d2)).div(&two_rho)? + &q_qt * &d1.div(&(&two_rho * rho))?;
    Ok(Spray { f1, f2 })
}

/// Transformed spray functions of `sigma F`:
///
/// ```text
/// f1_bar = f1 + (d1s + u d2s)/(2s) + d2s/(2 s rho) Q/Q_t - d1s/(2s) Q^2/Q_t
/// f2_bar = f2 + u (d1s + u d2s)/(2s) + d1s/(2 rho s) Q/Q_t - d2s/(2 s rho^2) 1/Q_t
/// ```
pub fn conformal_f1f2(
    spray: &Spray,
    q: &Jet,
    q_t: &Jet,
    rho: &Jet,
    sigma: &Jet,
) -> Result<Spray, LandsbergError> {
    let u = Jet::lift(Var::U, q.spec(), q.base());
    let (d1s, d2s) = (sigma.d_x1()?, sigma.d_x2()?);
    let two_s = sigma.scale(2.0);
    let grad = (&d1s + &(&u * &d2s)).div(&two_s)?;
    let q_qt = q.div(q_t)?;
    let q2_qt = (q * q).div(q_t)?;
    let inv_qt = q_t.recip()?;
    let f1 = &(&(&spray.f1 + &grad) + &(&d2s.div(&(&two_s * rho))? * &q_qt))
        - &(&d1s.div(&two_s)? * &q2_qt);
    let f2 = &(&(&spray.f2 + &(&u * &grad)) + &(&d1s.div(&(&two_s * rho))? * &q_qt))
        - &(&d2s.div(&(&(&two_s * rho) * rho))? * &inv_qt);
    Ok(Spray { f1, f2 })
}

/// `Q, Q_t, ..., Q_tttt` from a univariate Q-jet of order >= 4.
fn q_derivs(q: &Jet) -> Result<[f64; 5], LandsbergError> {
    Ok([q.du(0)?, q.du(1)?, q.du(2)?, q.du(3)?, q.du(4)?])
}

/// `(f1''', f2''')` as u-derivatives from the closed expansions in `Q`:
///
/// ```text
/// f1''' = rho^3 Q d1rho / (2 rho Q_t^4) (Q Q_t^2 Q_tttt - 6 Q Q_t Q_tt Q_ttt + 6 Q Q_tt^3 + 4 Q_t^3 Q_ttt - 6 Q_t^2 Q_tt^2)
/// f2''' = -rho^3 d1rho / (2 rho^2 Q_t^4) (Q Q_t^2 Q_tttt - 6 Q Q_t Q_tt Q_ttt + 6 Q Q_tt^3 + 2 Q_t^3 Q_ttt - 3 Q_t^2 Q_tt^2)
/// ```
pub fn f3_phi_form(q: &Jet, rho: f64, d1rho: f64) -> Result<[f64; 2], LandsbergError> {
    let d = q_derivs(q)?;
    if d[1] == 0.0 {
        return Err(LandsbergError::SingularQ {
            t: q.base().u,
            reason: "Q_t vanishes",
        });
    }
    let [p1, p2] = f3_polynomials(&d, d[2] * d[2] * d[2]).map(|t| t.iter().sum::<f64>());
    let qt4 = d[1].powi(4);
    let rho3 = rho * rho * rho;
    Ok([
        rho3 * d[0] * d1rho / (2.0 * rho * qt4) * p1,
        -rho3 * d1rho / (2.0 * rho * rho * qt4) * p2,
    ])
}

pub const F3_TERM_LABELS: [[&str; 5]; 2] = [
    [
        "Q Q_t^2 Q_tttt",
        "-6 Q Q_t Q_tt Q_ttt",
        "+6 Q Q_ttt^3",
        "+4 Q_t^3 Q_ttt",
        "-6 Q_t^2 Q_tt^2",
    ],
    [
        "Q Q_t^2 Q_tttt",
        "-6 Q Q_t Q_tt Q_ttt",
        "+6 Q Q_ttt^3",
        "+2 Q_t^3 Q_ttt",
        "-3 Q_t^2 Q_tt^2",
    ],
];

/// Terms of the two bracketed polynomials; `cube` is the value used for the
/// disputed third term's cubed factor.
fn f3_polynomials(d: &[f64; 5], cube: f64) -> [[f64; 5]; 2] {
    let [q, q1, q2, q3, q4] = *d;
    let common = [q * q1 * q1 * q4, -6.0 * q * q1 * q2 * q3, 6.0 * q * cube];
    [
        [
            common[0],
            common[1],
            common[2],
            4.0 * q1.powi(3) * q3,
            -6.0 * q1 * q1 * q2 * q2,
        ],
        [
            common[0],
            common[1],
            common[2],
            2.0 * q1.powi(3) * q3,
            -3.0 * q1 * q1 * q2 * q2,
        ],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermAudit {
    pub term: &'static str,
    pub printed: f64,
    pub corrected: f64,
}

/// The printed third-derivative expansions against jet differentiation of the
/// spray functions, at one `(t, rho, d1rho)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F3Audit {
    pub t: f64,
    pub rho: f64,
    pub d1rho: f64,
    /// `(f1''', f2''')` in `u`, by differentiating the spray-function jets.
    pub jet: [f64; 2],
    /// The printed expressions evaluated literally.
    pub printed: [f64; 2],
    /// Printed expressions rescaled by `rho^3` (t- to u-derivatives).
    pub printed_times_rho3: [f64; 2],
    /// With `Q_ttt^3` replaced by `Q_tt^3` and rescaled by `rho^3`.
    pub corrected: [f64; 2],
    pub terms: [Vec<TermAudit>; 2],
}

/// Compares the printed f''' expansions at `t` with jets of `f1`, `f2` along `u`.
pub fn audit_printed_f3(
    q: &QProfile,
    t: f64,
    rho: f64,
    d1rho: f64,
) -> Result<F3Audit, LandsbergError> {
    let qj = q.jet(&Jet::variable_t(t, 4))?;
    let d = q_derivs(&qj)?;
    let printed_terms = f3_polynomials(&d, d[3] * d[3] * d[3]);
    let corrected_terms = f3_polynomials(&d, d[2] * d[2] * d[2]);
    let qt4 = d[1].powi(4);
    let pre = [
        d[0] * d1rho / (2.0 * rho * qt4),
        -d1rho / (2.0 * rho * rho * qt4),
    ];
    let printed = [0, 1].map(|i| pre[i] * printed_terms[i].iter().sum::<f64>());
    let rho3 = rho.powi(3);

    // f_i as functions of u with x frozen: t = rho u
    let u = Jet::variable_t(t / rho, 3);
    let tj = u.scale(rho);
    let (qu, qtu) = (q.jet(&tj)?, q.derivative_jet(&tj)?);
    let f1 = (&qu * &qu).div(&qtu)?.scale(-d1rho / (2.0 * rho));
    let f2 = qu.div(&qtu)?.scale(d1rho / (2.0 * rho * rho));

    let terms = [0, 1].map(|i| {
        (0..5)
            .map(|k| TermAudit {
                term: F3_TERM_LABELS[i][k],
                printed: printed_terms[i][k],
                corrected: corrected_terms[i][k],
            })
            .collect()
    });
    Ok(F3Audit {
        t,
        rho,
        d1rho,
        jet: [f1.du(3)?, f2.du(3)?],
        printed,
        printed_times_rho3: printed.map(|v| v * rho3),
        corrected: f3_phi_form(&qj, rho, d1rho)?,
        terms,
    })
}
