//! Invariants of a Finsler surface in the chart form `F = |y1| f(x, eps u)`,
//! `u = y2 / y1`, `eps = sgn(y1)`.
//!
//! Everything downstream of the f-jet uses the explicit two-dimensional
//! component tables: spray functions `f1`, `f2`, the nonlinear and Berwald
//! connections, the curvature, the Berwald and Landsberg tensors, the Hilbert
//! form and the metric tensor. Index conventions: `n[i][j] = N^{i+1}_{j+1}`,
//! `gamma[h][j][k] = G^{h+1}_{j+1 k+1}`, and totally symmetric three-index
//! objects are stored by the number of 2s among their indices (`111`, `112`,
//! `122`, `222`).

mod model;

use serde::Serialize;
use thiserror::Error;

use crate::expr::ExprError;
use crate::jets::{Jet, JetError, JetSpec, Var};

pub use model::{ChartFunction, MetricModel};

/// Samples with `|y1| < MIN_CHART_RATIO * |y|` are outside the chart.
pub const MIN_CHART_RATIO: f64 = 1e-6;

/// `f''` below this fraction of `f` is treated as a degenerate metric.
const DEGENERATE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("direction ({y1}, {y2}) is outside the y1-chart (|y1| too small)")]
    Chart { y1: f64, y2: f64 },
    #[error("sample has sgn(y1) = {found}, but the model is pinned to the {expected} chart")]
    ChartMismatch { expected: Sign, found: Sign },
    #[error("f = {value} is not positive")]
    NonPositive { value: f64 },
    #[error("degenerate metric: f'' = {f2} vanishes (f = {f})")]
    Degenerate { f: f64, f2: f64 },
    #[error("jet spec {spec:?} too small: need max_x_order >= 2 and max_u_order >= 5")]
    InsufficientSpec { spec: JetSpec },
    #[error("inadmissible sample: {0}")]
    Inadmissible(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

impl GeometryError {
    /// Precondition violations (chart, spec) as opposed to numerical-domain failures.
    pub fn is_usage(&self) -> bool {
        match self {
            GeometryError::Chart { .. }
            | GeometryError::ChartMismatch { .. }
            | GeometryError::InsufficientSpec { .. } => true,
            GeometryError::Expr(e) => !e.is_domain(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.value() as i8)
    }
}

/// A point `(x1, x2)` with a direction `(y1, y2)` inside the y1-chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentSample {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
}

impl TangentSample {
    pub fn new(x1: f64, x2: f64, y1: f64, y2: f64) -> Result<Self, GeometryError> {
        let s = Self { x1, x2, y1, y2 };
        let finite = [x1, x2, y1, y2].iter().all(|v| v.is_finite());
        if !finite || y1 == 0.0 || y1.abs() < MIN_CHART_RATIO * s.norm() {
            return Err(GeometryError::Chart { y1, y2 });
        }
        Ok(s)
    }

    pub fn u(&self) -> f64 {
        self.y2 / self.y1
    }

    pub fn epsilon(&self) -> Sign {
        Sign::of(self.y1)
    }

    pub fn norm(&self) -> f64 {
        self.y1.hypot(self.y2)
    }

    /// Same point, direction scaled by `lambda` (which may be negative).
    pub fn scaled(&self, lambda: f64) -> Result<Self, GeometryError> {
        Self::new(self.x1, self.x2, lambda * self.y1, lambda * self.y2)
    }
}

/// The spray functions `G^i = f_i (y1)^2` as jets in `(x1, x2, u)`.
#[derive(Debug, Clone)]
pub struct Spray {
    pub f1: Jet,
    pub f2: Jet,
}

/// Checks the f-jet before anything divides by `f` or `f''`.
pub fn check_f_jet(fj: &Jet) -> Result<(), GeometryError> {
    let spec = fj.spec();
    if spec.max_x_order < 2 || spec.max_u_order < 5 {
        return Err(GeometryError::InsufficientSpec { spec });
    }
    let f = fj.value();
    if !(f > 0.0) || !f.is_finite() {
        return Err(GeometryError::NonPositive { value: f });
    }
    let f2 = fj.du(2)?;
    if !(f2.abs() > DEGENERATE_RATIO * f) {
        return Err(GeometryError::Degenerate { f, f2 });
    }
    Ok(())
}

/// Spray functions from the f-jet:
///
/// ```text
/// f1 = [(d1f + u d2f) f'' - (d1f' + u d2f' - d2f) f'] / (2 f f'')
/// f2 = [u (d1f + u d2f) f'' + (d1f' + u d2f' - d2f)(f - u f')] / (2 f f'')
/// ```
pub fn spray_f1f2(fj: &Jet) -> Result<Spray, GeometryError> {
    check_f_jet(fj)?;
    let u = Jet::lift(Var::U, fj.spec(), fj.base());
    let fp = fj.d_u()?;
    let fpp = fp.d_u()?;
    let d1f = fj.d_x1()?;
    let d2f = fj.d_x2()?;
    let d1fp = fp.d_x1()?;
    let d2fp = fp.d_x2()?;

    let a = &d1f + &(&u * &d2f);
    let b = &(&d1fp + &(&u * &d2fp)) - &d2f;
    let denom = (fj * &fpp).scale(2.0);
    let f1 = (&(&a * &fpp) - &(&b * &fp)).div(&denom)?;
    let f2 = (&(&(&u * &a) * &fpp) + &(&b * &(fj - &(&u * &fp)))).div(&denom)?;
    Ok(Spray { f1, f2 })
}

/// Point values of a spray function that the component tables consume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SprayValues {
    /// `f_i, f_i', f_i'', f_i'''`
    pub du: [f64; 4],
    pub d1: f64,
    pub d2: f64,
    pub d1_du: f64,
    pub d2_du: f64,
}

impl SprayValues {
    fn from_jet(j: &Jet) -> Result<Self, JetError> {
        Ok(Self {
            du: [j.du(0)?, j.du(1)?, j.du(2)?, j.du(3)?],
            d1: j.extract(1, 0, 0)?,
            d2: j.extract(0, 1, 0)?,
            d1_du: j.extract(1, 0, 1)?,
            d2_du: j.extract(0, 1, 1)?,
        })
    }
}

/// Derivatives of `f` read off its jet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FValues {
    /// `f, f', ..., f^(5)`
    pub du: [f64; 6],
    pub d1: f64,
    pub d2: f64,
    pub d1_du: f64,
    pub d2_du: f64,
}

impl FValues {
    fn from_jet(j: &Jet) -> Result<Self, JetError> {
        let mut du = [0.0; 6];
        for (k, slot) in du.iter_mut().enumerate() {
            *slot = j.du(k)?;
        }
        Ok(Self {
            du,
            d1: j.extract(1, 0, 0)?,
            d2: j.extract(0, 1, 0)?,
            d1_du: j.extract(1, 0, 1)?,
            d2_du: j.extract(0, 1, 1)?,
        })
    }
}

/// `G^h_{ijk} = f_h''' w / y1` with `w` indexed by the number of 2s.
const BERWALD_WEIGHTS: fn(f64) -> [f64; 4] = |u| [-u * u * u, u * u, -u, 1.0];

/// Every tabulated quantity at one tangent sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryReport {
    pub sample: TangentSample,
    pub epsilon: Sign,
    pub u: f64,
    pub f: FValues,
    pub finsler: f64,
    pub f1: SprayValues,
    pub f2: SprayValues,
    pub spray: [f64; 2],
    pub nonlinear: [[f64; 2]; 2],
    pub berwald_connection: [[[f64; 2]; 2]; 2],
    /// `R^1_12`, `R^2_12`
    pub curvature: [f64; 2],
    /// `R^i_j = R^i_{kj} y^k`
    pub jacobi: [[f64; 2]; 2],
    pub berwald_tensor: [[f64; 4]; 2],
    pub landsberg_tensor: [f64; 4],
    pub hilbert: [f64; 2],
    /// `g11, g12, g22`
    pub metric: [f64; 3],
    pub det_g: f64,
    /// `r = f1''' l1 + f2''' l2`
    pub landsberg_residual: f64,
    /// `r / (1 + |f1''' l1| + |f2''' l2|)`
    pub landsberg_pde_residual: f64,
    /// `max |G^h_ijk| |y| / (1 + max |G^h_jk|)`
    pub berwald_norm: f64,
    pub metricity_residual: f64,
}

impl GeometryReport {
    /// `G^{h+1}_{ijk}` for indices in `{1, 2}`.
    pub fn berwald(&self, h: usize, i: usize, j: usize, k: usize) -> f64 {
        let twos = [i, j, k].iter().filter(|&&v| v == 2).count();
        self.berwald_tensor[h - 1][twos]
    }

    /// `L_ijk` for indices in `{1, 2}`.
    pub fn landsberg(&self, i: usize, j: usize, k: usize) -> f64 {
        let twos = [i, j, k].iter().filter(|&&v| v == 2).count();
        self.landsberg_tensor[twos]
    }

    pub fn jacobi_trace(&self) -> f64 {
        self.jacobi[0][0] + self.jacobi[1][1]
    }
}

pub fn f_jet(
    model: &dyn ChartFunction,
    sample: &TangentSample,
    spec: JetSpec,
) -> Result<Jet, GeometryError> {
    model.f_jet(sample, spec)
}

/// Full pipeline for one model at one sample.
pub fn analyze(
    model: &dyn ChartFunction,
    sample: &TangentSample,
    spec: JetSpec,
) -> Result<GeometryReport, GeometryError> {
    let fj = model.f_jet(sample, spec)?;
    analyze_jet(&fj, sample)
}

/// Full pipeline from an f-jet expanded at `(x1, x2, y2/y1)`.
pub fn analyze_jet(fj: &Jet, sample: &TangentSample) -> Result<GeometryReport, GeometryError> {
    let spray = spray_f1f2(fj)?;
    report_from_spray(fj, &spray, sample)
}

pub fn report_from_spray(
    fj: &Jet,
    spray: &Spray,
    sample: &TangentSample,
) -> Result<GeometryReport, GeometryError> {
    let y1 = sample.y1;
    let u = sample.u();
    let eps = sample.epsilon();
    let f = FValues::from_jet(fj)?;
    let s1 = SprayValues::from_jet(&spray.f1)?;
    let s2 = SprayValues::from_jet(&spray.f2)?;

    let spray_g = spray_coefficients(&s1, &s2, sample);
    let nonlinear = nonlinear_connection(&s1, &s2, sample);
    let berwald_connection = berwald_connection(&s1, &s2, u);
    let curvature = curvature(&s1, &s2, sample);
    let jacobi = jacobi_endomorphism(curvature, sample);
    let berwald_tensor = berwald_tensor(&s1, &s2, sample);
    let hilbert = hilbert_components(&f, u, eps);
    let (metric, det_g) = metric_tensor(&f, u);
    let finsler = y1.abs() * f.du[0];

    let terms = [s1.du[3] * hilbert[0], s2.du[3] * hilbert[1]];
    let r = terms[0] + terms[1];
    let landsberg_pde_residual = r / (1.0 + terms[0].abs() + terms[1].abs());
    let w = BERWALD_WEIGHTS(u);
    // L_ijk = -1/2 F G^h_ijk l_h = -1/2 F (w / y1) r
    let landsberg_tensor = w.map(|wi| -0.5 * finsler * wi / y1 * r);

    let max_g3 = berwald_tensor
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let max_g2 = berwald_connection
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let berwald_norm = max_g3 * sample.norm() / (1.0 + max_g2);

    Ok(GeometryReport {
        sample: *sample,
        epsilon: eps,
        u,
        f,
        finsler,
        f1: s1,
        f2: s2,
        spray: spray_g,
        nonlinear,
        berwald_connection,
        curvature,
        jacobi,
        berwald_tensor,
        landsberg_tensor,
        hilbert,
        metric,
        det_g,
        landsberg_residual: r,
        landsberg_pde_residual,
        berwald_norm,
        metricity_residual: metricity_from_values(&f, &nonlinear, &hilbert, sample),
    })
}

/// `G^i = f_i (y1)^2`.
pub fn spray_coefficients(s1: &SprayValues, s2: &SprayValues, sample: &TangentSample) -> [f64; 2] {
    let y1sq = sample.y1 * sample.y1;
    [s1.du[0] * y1sq, s2.du[0] * y1sq]
}

/// `N^i_1 = 2 y1 f_i - y2 f_i'`, `N^i_2 = y1 f_i'`.
pub fn nonlinear_connection(
    s1: &SprayValues,
    s2: &SprayValues,
    sample: &TangentSample,
) -> [[f64; 2]; 2] {
    let (y1, y2) = (sample.y1, sample.y2);
    [s1, s2].map(|s| [2.0 * y1 * s.du[0] - y2 * s.du[1], y1 * s.du[1]])
}

pub fn berwald_connection(s1: &SprayValues, s2: &SprayValues, u: f64) -> [[[f64; 2]; 2]; 2] {
    [s1, s2].map(|s| {
        let [f, fp, fpp, _] = s.du;
        let g11 = 2.0 * f - 2.0 * u * fp + u * u * fpp;
        let g12 = fp - u * fpp;
        [[g11, g12], [g12, fpp]]
    })
}

/// `(R^1_12, R^2_12)`.
pub fn curvature(s1: &SprayValues, s2: &SprayValues, sample: &TangentSample) -> [f64; 2] {
    let u = sample.u();
    let [f1, f1p, f1pp, _] = s1.du;
    let [f2, f2p, f2pp, _] = s2.du;
    let r1 = u * f1p * f1p - f1p * f2p - 2.0 * u * f1 * f1pp + 2.0 * f2 * f1pp - u * s1.d2_du
        + 2.0 * s1.d2
        - s1.d1_du;
    let r2 = -2.0 * u * f1 * f2pp + 2.0 * f2 * f2pp + u * f1p * f2p - 2.0 * f2 * f1p
        + 2.0 * f1 * f2p
        - f2p * f2p
        - u * s2.d2_du
        + 2.0 * s2.d2
        - s2.d1_du;
    [sample.y1 * r1, sample.y1 * r2]
}

/// `R^i_j = R^i_{kj} y^k`, so `R^i_1 = -R^i_12 y2` and `R^i_2 = R^i_12 y1`.
pub fn jacobi_endomorphism(curvature: [f64; 2], sample: &TangentSample) -> [[f64; 2]; 2] {
    curvature.map(|r| [-r * sample.y2, r * sample.y1])
}

pub fn berwald_tensor(s1: &SprayValues, s2: &SprayValues, sample: &TangentSample) -> [[f64; 4]; 2] {
    let w = BERWALD_WEIGHTS(sample.u());
    [s1, s2].map(|s| w.map(|wi| s.du[3] * wi / sample.y1))
}

/// `l1 = eps (f - u f')`, `l2 = eps f'`.
pub fn hilbert_components(f: &FValues, u: f64, eps: Sign) -> [f64; 2] {
    let e = eps.value();
    [e * (f.du[0] - u * f.du[1]), e * f.du[1]]
}

/// `(g11, g12, g22)` and `det g = f^3 f''`.
pub fn metric_tensor(f: &FValues, u: f64) -> ([f64; 3], f64) {
    let [f0, fp, fpp, ..] = f.du;
    let a = f0 - u * fp;
    let g = [
        a * a + u * u * f0 * fpp,
        a * fp - u * f0 * fpp,
        fp * fp + f0 * fpp,
    ];
    (g, f0 * f0 * f0 * fpp)
}

fn metricity_from_values(
    f: &FValues,
    n: &[[f64; 2]; 2],
    l: &[f64; 2],
    sample: &TangentSample,
) -> f64 {
    let big_f = sample.y1.abs() * f.du[0];
    let dx = [f.d1, f.d2].map(|d| sample.y1.abs() * d);
    (0..2)
        .map(|i| (dx[i] - n[0][i] * l[0] - n[1][i] * l[1]).abs() / big_f)
        .fold(0.0, f64::max)
}

/// `max_i |d_i F - N^h_i l_h| / F` for the metric behind `fj` and any spray,
/// which need not be the metric's own.
pub fn metricity_residual(
    fj: &Jet,
    spray: &Spray,
    sample: &TangentSample,
) -> Result<f64, GeometryError> {
    let f = FValues::from_jet(fj)?;
    let s1 = SprayValues::from_jet(&spray.f1)?;
    let s2 = SprayValues::from_jet(&spray.f2)?;
    let n = nonlinear_connection(&s1, &s2, sample);
    let l = hilbert_components(&f, sample.u(), sample.epsilon());
    Ok(metricity_from_values(&f, &n, &l, sample))
}

/// Largest `|d^k g / du^k|` at the base point for `k > degree`, up to the
/// jet's u-cap: zero when `g` is locally a polynomial of that degree in `u`.
pub fn u_degree_excess(g: &Jet, degree: usize) -> f64 {
    (degree + 1..=g.spec().max_u_order)
        .filter_map(|k| g.du(k).ok())
        .fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::JetSpec;

    fn example() -> MetricModel {
        MetricModel::parse("sqrt(exp(x2)+u^2)").unwrap()
    }

    fn euclid() -> MetricModel {
        MetricModel::parse("sqrt(1+u^2)").unwrap()
    }

    fn at(x1: f64, x2: f64, y1: f64, y2: f64) -> TangentSample {
        TangentSample::new(x1, x2, y1, y2).unwrap()
    }

    #[test]
    fn example_f_jet_at_origin() {
        let fj = f_jet(&example(), &at(0.0, 0.0, 1.0, 0.0), JetSpec::default()).unwrap();
        assert_eq!(fj.value(), 1.0);
        assert!(fj.du(1).unwrap().abs() < 1e-15);
        assert!((fj.du(2).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn example_spray_and_curvature() {
        let s = at(0.3, -0.7, 1.5, 0.6);
        let r = analyze(&example(), &s, JetSpec::default()).unwrap();
        let e = (-0.7f64).exp();
        assert!((r.f1.du[0] - 0.2).abs() < 1e-13);
        assert!((r.f2.du[0] + e / 4.0).abs() < 1e-13);
        assert!((r.curvature[0] - 0.25 * 0.6).abs() < 1e-12);
        assert!((r.curvature[1] + 0.25 * e * 1.5).abs() < 1e-12);
        assert!(r.berwald_norm < 1e-12);
    }

    #[test]
    fn example_connection_at_unit_direction() {
        let r = analyze(&example(), &at(0.0, 0.4, 1.0, 0.0), JetSpec::default()).unwrap();
        let e = 0.4f64.exp();
        let expect = [[0.0, 0.5], [-0.5 * e, 0.0]];
        for (row, want) in r.nonlinear.iter().zip(expect) {
            for (v, w) in row.iter().zip(want) {
                assert!((v - w).abs() < 1e-13);
            }
        }
        assert!((r.berwald_connection[0][0][1] - 0.5).abs() < 1e-13);
        assert!(r.berwald_connection[0][1][1].abs() < 1e-13);
        assert!((r.berwald_connection[1][0][0] + 0.5 * e).abs() < 1e-13);
    }

    #[test]
    fn euclidean_is_flat() {
        let r = analyze(&euclid(), &at(1.0, 2.0, -0.8, 0.3), JetSpec::default()).unwrap();
        let all = r
            .spray
            .iter()
            .chain(r.nonlinear.iter().flatten())
            .chain(r.curvature.iter())
            .chain(r.berwald_tensor.iter().flatten())
            .chain(r.landsberg_tensor.iter());
        for v in all {
            assert_eq!(*v, 0.0);
        }
        assert_eq!(r.metricity_residual, 0.0);
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let r = analyze(&euclid(), &at(0.0, 0.0, 2.0, -1.0), JetSpec::default()).unwrap();
        assert!((r.metric[0] - 1.0).abs() < 1e-14);
        assert!(r.metric[1].abs() < 1e-14);
        assert!((r.metric[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hilbert_form_of_randers_shift() {
        let m = MetricModel::parse("sqrt(1+u^2) + 0.25").unwrap();
        let r = analyze(&m, &at(0.0, 0.0, 1.0, 0.0), JetSpec::default()).unwrap();
        assert!((r.hilbert[0] - 1.25).abs() < 1e-15);
        assert!(r.hilbert[1].abs() < 1e-15);
    }

    #[test]
    fn chart_is_enforced() {
        assert!(matches!(
            TangentSample::new(0.0, 0.0, 0.0, 1.0),
            Err(GeometryError::Chart { .. })
        ));
        assert!(TangentSample::new(0.0, 0.0, 1e-9, 1.0).is_err());
        let pinned = MetricModel::parse("sqrt(1+u^2)")
            .unwrap()
            .with_epsilon(Sign::Plus);
        let err = analyze(&pinned, &at(0.0, 0.0, -1.0, 0.0), JetSpec::default()).unwrap_err();
        assert!(matches!(err, GeometryError::ChartMismatch { .. }));
        assert!(err.is_usage());
    }

    #[test]
    fn small_spec_is_rejected() {
        let err = analyze(&example(), &at(0.0, 0.0, 1.0, 0.0), JetSpec::new(1, 6)).unwrap_err();
        assert!(matches!(err, GeometryError::InsufficientSpec { .. }));
    }

    #[test]
    fn linear_metric_is_degenerate() {
        let m = MetricModel::parse("1 + 0.5*u").unwrap();
        let err = analyze(&m, &at(0.0, 0.0, 1.0, 0.2), JetSpec::default()).unwrap_err();
        assert!(matches!(err, GeometryError::Degenerate { .. }));
    }

    #[test]
    fn negative_f_is_rejected() {
        let m = MetricModel::parse("u^2 - 1").unwrap();
        let err = analyze(&m, &at(0.0, 0.0, 1.0, 0.0), JetSpec::default()).unwrap_err();
        assert!(matches!(err, GeometryError::NonPositive { .. }));
    }

    #[test]
    fn perturbed_example_is_not_landsberg() {
        let m = MetricModel::parse("sqrt(exp(x2)+u^2) + 0.1*x1*u^3/(1+u^2)").unwrap();
        let r = analyze(&m, &at(0.5, 0.2, 1.0, 0.7), JetSpec::default()).unwrap();
        assert!(r.landsberg_pde_residual.abs() > 1e-3);
        assert!(r.metricity_residual < 1e-12);
    }

    #[test]
    fn mismatched_spray_breaks_metricity() {
        let s = at(0.1, 0.3, 1.0, 0.4);
        let fa = f_jet(&example(), &s, JetSpec::default()).unwrap();
        let fb = f_jet(&euclid(), &s, JetSpec::default()).unwrap();
        let spray_a = spray_f1f2(&fa).unwrap();
        assert!(metricity_residual(&fa, &spray_a, &s).unwrap() < 1e-13);
        assert!(metricity_residual(&fb, &spray_a, &s).unwrap() > 1e-3);
    }

    #[test]
    fn quadratic_spray_has_no_excess_degree() {
        let s = at(0.1, 0.3, 1.0, 0.4);
        let spray = spray_f1f2(&f_jet(&example(), &s, JetSpec::default()).unwrap()).unwrap();
        assert!(u_degree_excess(&spray.f1, 2) < 1e-12);
        assert!(u_degree_excess(&spray.f2, 2) < 1e-12);
    }

    #[test]
    fn report_accessors_follow_index_counting() {
        let m = MetricModel::parse("sqrt(exp(x2)+u^2) + 0.1*x1*u^3/(1+u^2)").unwrap();
        let r = analyze(&m, &at(0.5, 0.2, 1.0, 0.7), JetSpec::default()).unwrap();
        assert_eq!(r.berwald(1, 1, 2, 1), r.berwald_tensor[0][1]);
        assert_eq!(r.berwald(2, 2, 2, 1), r.berwald_tensor[1][2]);
        assert_eq!(r.landsberg(2, 1, 2), r.landsberg_tensor[2]);
    }
}
