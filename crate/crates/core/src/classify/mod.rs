//! Grid sweeps, residual aggregation and the Berwald / Landsberg verdict.

mod grid;
pub mod oracle;
mod verify;

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{analyze, ChartFunction, GeometryError, GeometryReport, TangentSample};
use crate::jets::JetSpec;
use crate::landsberg::LandsbergError;

pub use grid::{slopes_for_window, Directions, SampleGrid};
pub use verify::{
    builtin_metrics, concluding_remark_scan, conformal_gap, fit_constant, grid_for_window,
    implication_instances, jet_vs_differences, random_expression, random_family_cases,
    roundtrip_gap, run_suite, worked_example_suite, BuiltinMetric, Check, CheckKind,
    ConcludingRemarkScan, DInstance, DiscrepancyAudit, FamilyCase, ScaleFit, Suite, SuiteReport,
    CONFORMAL_FACTORS, EXAMPLE_METRIC, PERTURBED_METRIC, RHO_CHOICES,
};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid tolerances: {0}")]
    InvalidTolerance(String),
    #[error("unknown suite '{0}' (expected paper, A, B, C, D, jets or roundtrip)")]
    UnknownSuite(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Landsberg(#[from] LandsbergError),
}

impl From<crate::expr::ExprError> for ClassifyError {
    fn from(e: crate::expr::ExprError) -> Self {
        ClassifyError::Geometry(e.into())
    }
}

impl From<crate::jets::JetError> for ClassifyError {
    fn from(e: crate::jets::JetError) -> Self {
        ClassifyError::Geometry(e.into())
    }
}

impl ClassifyError {
    /// Errors caused by the request rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        match self {
            ClassifyError::InvalidGrid(_)
            | ClassifyError::InvalidTolerance(_)
            | ClassifyError::UnknownSuite(_) => true,
            ClassifyError::Geometry(g) => g.is_usage(),
            ClassifyError::Landsberg(LandsbergError::InvalidParams(_)) => true,
            ClassifyError::Landsberg(LandsbergError::Expr(e)) => !e.is_domain(),
            ClassifyError::Landsberg(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub berwald: f64,
    pub landsberg: f64,
    pub degeneracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            berwald: 1e-8,
            landsberg: 1e-8,
            degeneracy: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        for (name, v) in [
            ("berwald", self.berwald),
            ("landsberg", self.landsberg),
            ("degeneracy", self.degeneracy),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ClassifyError::InvalidTolerance(format!(
                    "{name} tolerance {v} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Berwald,
    LandsbergCandidateNonBerwald,
    NonLandsberg,
    Degenerate,
    Inadmissible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Berwald => "berwald",
            Verdict::LandsbergCandidateNonBerwald => "landsberg_candidate_non_berwald",
            Verdict::NonLandsberg => "non_landsberg",
            Verdict::Degenerate => "degenerate",
            Verdict::Inadmissible => "inadmissible",
        })
    }
}

/// Sup and mean of a non-negative residual over the evaluated samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub sup: f64,
    pub mean: f64,
}

impl Stat {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut sup, mut sum, mut n) = (0.0f64, 0.0, 0usize);
        for v in values {
            sup = sup.max(v);
            sum += v;
            n += 1;
        }
        if n == 0 {
            return Self {
                sup: f64::NAN,
                mean: f64::NAN,
            };
        }
        Self {
            sup,
            mean: sum / n as f64,
        }
    }
}

/// The residual-level form of "Berwald implies Landsberg".
///
/// Pointwise `|r_hat| <= (|l1| + |l2|) (1 + M) b`, with `M` the largest
/// Berwald connection coefficient and `b` the normalized Berwald tensor, so
/// `sup |r_hat| <= C sup b` with `C = sup (|l1| + |l2|) (1 + M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandsbergBound {
    pub constant: f64,
    pub holds: bool,
}

/// Per-sample residuals, kept for CSV dumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub index: usize,
    pub sample: TangentSample,
    pub values: Option<RowValues>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowValues {
    pub finsler: f64,
    pub det_g: f64,
    pub berwald: f64,
    pub landsberg: f64,
    pub metricity: f64,
    /// `(|l1| + |l2|) (1 + max |G^h_jk|)`
    pub bound_factor: f64,
}

impl RowValues {
    fn from_report(r: &GeometryReport) -> Self {
        let m = r
            .berwald_connection
            .iter()
            .flatten()
            .flatten()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        Self {
            finsler: r.finsler,
            det_g: r.det_g,
            berwald: r.berwald_norm,
            landsberg: r.landsberg_pde_residual.abs(),
            metricity: r.metricity_residual,
            bound_factor: (r.hilbert[0].abs() + r.hilbert[1].abs()) * (1.0 + m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub model: String,
    pub grid: SampleGrid,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub samples: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub berwald: Stat,
    pub landsberg: Stat,
    pub metricity: Stat,
    pub min_det_g: f64,
    pub min_finsler: f64,
    pub landsberg_bound: LandsbergBound,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<SampleRow>,
}

/// Share of samples that must evaluate for a verdict other than inadmissible.
pub const MIN_ADMISSIBLE_FRACTION: f64 = 0.9;
const MAX_DIAGNOSTICS: usize = 8;

/// The verdict from aggregated residuals; verdicts use sup norms.
pub fn verdict_for(
    admissible_fraction: f64,
    min_det_g: f64,
    berwald_sup: f64,
    landsberg_sup: f64,
    tol: &Tolerances,
) -> Verdict {
    if !(admissible_fraction >= MIN_ADMISSIBLE_FRACTION) {
        Verdict::Inadmissible
    } else if !(min_det_g >= tol.degeneracy) {
        Verdict::Degenerate
    } else if landsberg_sup <= tol.landsberg {
        if berwald_sup <= tol.berwald {
            Verdict::Berwald
        } else {
            Verdict::LandsbergCandidateNonBerwald
        }
    } else {
        Verdict::NonLandsberg
    }
}

pub fn classify(
    model: &dyn ChartFunction,
    grid: &SampleGrid,
    tol: &Tolerances,
) -> Result<ClassificationReport, ClassifyError> {
    tol.validate()?;
    let samples = grid.samples()?;
    let spec = JetSpec::default();
    let outcomes: Vec<Result<RowValues, GeometryError>> = samples
        .par_iter()
        .map(|s| analyze(model, s, spec).map(|r| RowValues::from_report(&r)))
        .collect();

    let mut diagnostics = Vec::new();
    let mut degenerate_count = 0;
    let mut rows = Vec::with_capacity(samples.len());
    for (index, (sample, outcome)) in samples.iter().zip(outcomes).enumerate() {
        let values = match outcome {
            Ok(v) => Some(v),
            Err(e) => {
                if matches!(e, GeometryError::Degenerate { .. }) {
                    degenerate_count += 1;
                }
                if diagnostics.len() < MAX_DIAGNOSTICS {
                    diagnostics.push(format!(
                        "sample {index} (x = ({}, {}), y = ({}, {})): {e}",
                        sample.x1, sample.x2, sample.y1, sample.y2
                    ));
                }
                None
            }
        };
        rows.push(SampleRow {
            index,
            sample: *sample,
            values,
        });
    }

    let ok: Vec<RowValues> = rows.iter().filter_map(|r| r.values).collect();
    let evaluated = ok.len();
    // f'' = 0 makes det g = f^3 f'' vanish: degenerate, not inadmissible
    let degenerate = degenerate_count;
    let berwald = Stat::of(ok.iter().map(|v| v.berwald));
    let landsberg = Stat::of(ok.iter().map(|v| v.landsberg));
    let metricity = Stat::of(ok.iter().map(|v| v.metricity));
    let mut min_det_g = ok.iter().map(|v| v.det_g).fold(f64::INFINITY, f64::min);
    if degenerate > 0 {
        min_det_g = min_det_g.min(0.0);
    }
    let min_finsler = ok.iter().map(|v| v.finsler).fold(f64::INFINITY, f64::min);

    let constant = ok.iter().map(|v| v.bound_factor).fold(0.0, f64::max);
    let holds = ok
        .iter()
        .all(|v| v.landsberg <= v.bound_factor * v.berwald * (1.0 + 1e-9) + f64::MIN_POSITIVE);
    if !holds {
        diagnostics.push("residual-level bound |r_hat| <= C b failed at some sample".into());
    }

    let fraction = if samples.is_empty() {
        0.0
    } else {
        (evaluated + degenerate) as f64 / samples.len() as f64
    };
    let verdict = verdict_for(fraction, min_det_g, berwald.sup, landsberg.sup, tol);
    if verdict == Verdict::NonLandsberg && berwald.sup <= tol.berwald {
        diagnostics
            .push("Berwald residual is below tolerance but the Landsberg residual is not".into());
    }

    Ok(ClassificationReport {
        model: model.label(),
        grid: *grid,
        tolerances: *tol,
        seed: grid.seed,
        samples: samples.len(),
        evaluated,
        skipped: samples.len() - evaluated,
        berwald,
        landsberg,
        metricity,
        min_det_g,
        min_finsler,
        landsberg_bound: LandsbergBound { constant, holds },
        verdict,
        diagnostics,
        rows,
    })
}

/// Renders a double with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl ClassificationReport {
    /// One CSV row per sample; skipped samples leave the residual columns empty.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(
            w,
            "index,x1,x2,y1,y2,status,finsler,det_g,berwald,landsberg,metricity"
        )?;
        for r in &self.rows {
            let s = &r.sample;
            let head = [s.x1, s.x2, s.y1, s.y2].map(fmt_f64).join(",");
            match r.values {
                Some(v) => {
                    let tail = [v.finsler, v.det_g, v.berwald, v.landsberg, v.metricity]
                        .map(fmt_f64)
                        .join(",");
                    writeln!(w, "{},{head},ok,{tail}", r.index)?;
                }
                None => writeln!(w, "{},{head},skipped,,,,,", r.index)?,
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, k: &str, v: String| s.push_str(&format!("{k:<18} {v}\n"));
        line(&mut s, "model", self.model.clone());
        line(&mut s, "verdict", self.verdict.to_string());
        line(
            &mut s,
            "samples",
            format!(
                "{} ({} evaluated, {} skipped)",
                self.samples, self.evaluated, self.skipped
            ),
        );
        line(
            &mut s,
            "berwald sup/mean",
            format!("{:e} / {:e}", self.berwald.sup, self.berwald.mean),
        );
        line(
            &mut s,
            "landsberg sup/mean",
            format!("{:e} / {:e}", self.landsberg.sup, self.landsberg.mean),
        );
        line(
            &mut s,
            "metricity sup/mean",
            format!("{:e} / {:e}", self.metricity.sup, self.metricity.mean),
        );
        line(&mut s, "min det g", format!("{:e}", self.min_det_g));
        line(&mut s, "min F", format!("{:e}", self.min_finsler));
        line(
            &mut s,
            "bound constant",
            format!(
                "{:e} ({})",
                self.landsberg_bound.constant,
                if self.landsberg_bound.holds {
                    "holds"
                } else {
                    "FAILS"
                }
            ),
        );
        for d in &self.diagnostics {
            line(&mut s, "note", d.clone());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricModel;
    use proptest::prelude::*;

    const PERTURBED: &str = "sqrt(exp(x2)+u^2)+0.1*x1*u^3/(1+u^2)";

    fn run(src: &str) -> ClassificationReport {
        let m = MetricModel::parse(src).unwrap();
        let g = SampleGrid {
            nx: 4,
            ny: 4,
            nd: 6,
            ..SampleGrid::default()
        };
        classify(&m, &g, &Tolerances::default()).unwrap()
    }

    #[test]
    fn example_is_berwald() {
        let r = run("sqrt(exp(x2)+u^2)");
        assert_eq!(r.verdict, Verdict::Berwald);
        assert_eq!(r.skipped, 0);
        assert!(r.landsberg_bound.holds);
    }

    #[test]
    fn euclidean_has_zero_residuals() {
        let r = run("sqrt(1+u^2)");
        assert_eq!(r.verdict, Verdict::Berwald);
        assert_eq!(r.berwald.sup, 0.0);
        assert_eq!(r.landsberg.sup, 0.0);
    }

    #[test]
    fn perturbed_metric_is_not_landsberg() {
        let r = run(PERTURBED);
        assert_eq!(r.verdict, Verdict::NonLandsberg);
        assert!(r.landsberg_bound.holds);
        assert!(r.landsberg.sup <= r.landsberg_bound.constant * r.berwald.sup);
    }

    #[test]
    fn linear_metric_is_degenerate() {
        let r = run("1+0.2*u");
        assert_eq!(r.verdict, Verdict::Degenerate);
        assert_eq!(r.min_det_g, 0.0);
        assert!(!r.diagnostics.is_empty());
    }

    #[test]
    fn report_is_deterministic() {
        let a = serde_json::to_string(&run(PERTURBED)).unwrap();
        let b = serde_json::to_string(&run(PERTURBED)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let r = run("sqrt(exp(x2)+u^2)");
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.samples + 1);
        let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        let x1: f64 = first[1].parse().unwrap();
        assert_eq!(x1, r.rows[0].sample.x1);
    }

    #[test]
    fn bad_tolerances_are_rejected() {
        let m = MetricModel::parse("sqrt(1+u^2)").unwrap();
        let tol = Tolerances {
            berwald: 0.0,
            ..Tolerances::default()
        };
        assert!(classify(&m, &SampleGrid::default(), &tol).is_err());
    }

    proptest! {
        #[test]
        fn shrinking_tolerances_never_promotes_to_berwald(
            b in 0.0f64..1e-6, l in 0.0f64..1e-6, det in 1e-12f64..1.0,
            tb in 1e-9f64..1e-6, tl in 1e-9f64..1e-6, shrink in 0.01f64..1.0,
        ) {
            let wide = Tolerances { berwald: tb, landsberg: tl, degeneracy: 1e-10 };
            let narrow = Tolerances { berwald: tb * shrink, landsberg: tl * shrink, degeneracy: 1e-10 };
            let before = verdict_for(1.0, det, b, l, &wide);
            let after = verdict_for(1.0, det, b, l, &narrow);
            if before != Verdict::Berwald {
                prop_assert_ne!(after, Verdict::Berwald);
            }
            if before == Verdict::NonLandsberg {
                prop_assert_eq!(after, Verdict::NonLandsberg);
            }
        }
    }
}
