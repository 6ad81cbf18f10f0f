use serde::Serialize;

use super::{GeometryError, Sign, TangentSample};
use crate::expr::{Expression, JetEnv, METRIC_VARS};
use crate::jets::{BasePoint, Jet, JetSpec, Var};

/// Anything that can produce the jet of `f(x, eps u)` at a tangent sample.
///
/// The returned jet is expanded at `(x1, x2, y2/y1)` in the chart variable
/// `u`; the sign `eps` is already folded in, so the component tables apply
/// to it verbatim.
pub trait ChartFunction: Sync {
    fn f_jet(&self, sample: &TangentSample, spec: JetSpec) -> Result<Jet, GeometryError>;

    fn label(&self) -> String;
}

/// A metric given by an expression for `f` in `x1, x2, u`.
#[derive(Debug, Clone, Serialize)]
pub struct MetricModel {
    pub f_expr: Expression,
    /// `None` accepts both half-planes; `Some` pins the chart.
    pub epsilon: Option<Sign>,
    pub label: String,
}

impl MetricModel {
    pub fn new(f_expr: Expression) -> Self {
        Self {
            label: f_expr.source().to_string(),
            f_expr,
            epsilon: None,
        }
    }

    pub fn parse(source: &str) -> Result<Self, GeometryError> {
        Ok(Self::new(Expression::parse(source, METRIC_VARS)?))
    }

    pub fn with_epsilon(mut self, eps: Sign) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `F(x, y)` without building a jet.
    pub fn finsler(&self, sample: &TangentSample) -> Result<f64, GeometryError> {
        let eps = self.chart(sample)?;
        let f = self.f_expr.eval_f64(&[
            ("x1", sample.x1),
            ("x2", sample.x2),
            ("u", eps.value() * sample.u()),
        ])?;
        Ok(sample.y1.abs() * f)
    }

    fn chart(&self, sample: &TangentSample) -> Result<Sign, GeometryError> {
        let found = sample.epsilon();
        match self.epsilon {
            Some(expected) if expected != found => {
                Err(GeometryError::ChartMismatch { expected, found })
            }
            _ => Ok(found),
        }
    }
}

impl ChartFunction for MetricModel {
    fn f_jet(&self, sample: &TangentSample, spec: JetSpec) -> Result<Jet, GeometryError> {
        let eps = self.chart(sample)?;
        let base = BasePoint::new(sample.x1, sample.x2, sample.u());
        let u = Jet::lift(Var::U, spec, base).scale(eps.value());
        let env = JetEnv::coordinates(spec, base).bind("u", u);
        let fj = self.f_expr.evaluate(&env)?;
        if !(fj.value() > 0.0) {
            return Err(GeometryError::NonPositive { value: fj.value() });
        }
        Ok(fj)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}
