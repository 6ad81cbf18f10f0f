//! Acceptance criteria 1-10: one PASS/FAIL line each, nonzero exit on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use landsberg_core::classify::{
    builtin_metrics, implication_instances, run_suite, CheckKind, SampleGrid, Suite, SuiteReport,
};
use landsberg_core::geometry::{
    analyze, metricity_residual, spray_f1f2, ChartFunction, GeometryReport, MetricModel,
};
use landsberg_core::jets::{Jet, JetSpec};
use landsberg_core::landsberg::{q_solution, unicorn_ode_residual};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn suite(s: Suite) -> (SuiteReport, Duration) {
    let start = Instant::now();
    let rep = run_suite(s, 0).expect("suite runs");
    (rep, start.elapsed())
}

fn failures(rep: &SuiteReport) -> String {
    let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).take(4).collect();
    if names.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", names.join(", "))
    }
}

fn suite_outcome(rep: &SuiteReport, elapsed: Duration, budget: Option<Duration>) -> Outcome {
    let worst = rep
        .checks
        .iter()
        .filter(|c| c.kind == CheckKind::AtMost)
        .map(|c| c.value / c.tolerance)
        .fold(0.0, f64::max);
    let in_time = budget.is_none_or(|b| elapsed < b);
    outcome(
        rep.passed && in_time,
        format!(
            "{} checks, {} failed, worst value/limit {worst:.2e}, {:.2?}{}{}",
            rep.checks.len(),
            rep.failures().count(),
            elapsed,
            budget
                .map(|b| format!(" (budget {b:.0?})"))
                .unwrap_or_default(),
            failures(rep)
        ),
    )
}

fn worked_example() -> Outcome {
    let (rep, elapsed) = suite(Suite::Example);
    suite_outcome(&rep, elapsed, Some(Duration::from_secs(1)))
}

fn reports(model: &dyn ChartFunction, grid: &SampleGrid) -> Vec<GeometryReport> {
    let spec = JetSpec::default();
    grid.samples()
        .unwrap()
        .iter()
        .filter_map(|s| analyze(model, s, spec).ok())
        .collect()
}

fn metricity() -> Outcome {
    let mut worst = (0.0f64, "");
    let mut short = Vec::new();
    for b in builtin_metrics().unwrap() {
        let grid = SampleGrid::default().with_directions(b.directions);
        let rs = reports(b.model.as_ref(), &grid);
        if rs.len() < grid.len() * 9 / 10 {
            short.push(b.name);
        }
        for r in rs {
            if r.metricity_residual > worst.0 {
                worst = (r.metricity_residual, b.name);
            }
        }
    }
    // the example's own metric against the euclidean spray
    let spec = JetSpec::default();
    let metric = MetricModel::parse("sqrt(exp(x2)+u^2)").unwrap();
    let wrong = MetricModel::parse("sqrt(1+u^2)").unwrap();
    let mut control = 0.0f64;
    for s in SampleGrid::default().samples().unwrap() {
        let spray = spray_f1f2(&wrong.f_jet(&s, spec).unwrap()).unwrap();
        control =
            control.max(metricity_residual(&metric.f_jet(&s, spec).unwrap(), &spray, &s).unwrap());
    }
    outcome(
        worst.0 <= 1e-9 && control > 1e-3 && short.is_empty(),
        format!(
            "sup residual {:.2e} ({}), limit 1e-9; mismatched spray sup {control:.2e} > 1e-3{}",
            worst.0,
            worst.1,
            if short.is_empty() {
                String::new()
            } else {
                format!("; under-sampled: {short:?}")
            }
        ),
    )
}

fn family_witnesses() -> Outcome {
    let (rep, elapsed) = suite(Suite::A);
    let min_samples = rep
        .classifications
        .iter()
        .map(|c| c.evaluated)
        .min()
        .unwrap_or(0);
    let mut o = suite_outcome(&rep, elapsed, Some(Duration::from_secs(30)));
    o.passed &= rep.classifications.len() == 20 && min_samples >= 500;
    o.detail.push_str(&format!(
        ", {} families, min {min_samples} samples each",
        rep.classifications.len()
    ));
    o
}

fn conformal() -> Outcome {
    let (rep, elapsed) = suite(Suite::B);
    let laws = rep
        .checks
        .iter()
        .filter(|c| c.name.contains("conformal law"))
        .count();
    let mut o = suite_outcome(&rep, elapsed, None);
    o.passed &= laws == 40;
    o.detail
        .push_str(&format!(", {laws} conformal-law checks at 1e-9"));
    o
}

fn unicorn_ode() -> Outcome {
    let params = [
        (1.0, 1.0, 0.0),
        (0.7, 1.3, -0.4),
        (-0.5, 0.4, 1.2),
        (1.5, 2.0, -1.0),
    ];
    let mut worst = 0.0f64;
    let mut points = 0;
    for (c1, c2, c3) in params {
        let pole = 2.0 * c1;
        for i in 0..81 {
            let t = pole - 4.0 + 0.1 * i as f64;
            if (t - pole).abs() < 0.05 {
                continue;
            }
            let r = unicorn_ode_residual(&q_solution(c1, c2, c3, t, 3).unwrap()).unwrap();
            worst = worst.max(r.normalized.abs());
            points += 1;
        }
    }
    // Q = t + 0.3 t^3: 3 Q_tt^2 - 2 Q_t Q_ttt = 6.48 t^2 - 3.6
    let mut control = 0.0f64;
    for i in 0..41 {
        let t = Jet::variable_t(-2.0 + 0.1 * i as f64, 3);
        let q = &t + &(&t * &(&t * &t)).scale(0.3);
        control = control.max(unicorn_ode_residual(&q).unwrap().raw.abs());
    }
    outcome(
        worst <= 1e-12 && control > 1.0,
        format!("sup normalized residual {worst:.2e} over {points} points, limit 1e-12; cubic control sup {control:.3}"),
    )
}

fn closed_forms() -> Outcome {
    let (rep, elapsed) = suite(Suite::C);
    let worst = rep.fits.iter().map(|f| f.max_rel_error).fold(0.0, f64::max);
    let fit_checks: Vec<_> = rep
        .checks
        .iter()
        .filter(|c| c.name.contains("closed form vs quadrature"))
        .collect();
    let ok = !rep.fits.is_empty() && fit_checks.iter().all(|c| c.passed) && worst <= 1e-6;
    let constants: Vec<String> = rep
        .fits
        .iter()
        .take(3)
        .map(|f| format!("{:.6}", f.constant))
        .collect();
    outcome(
        ok,
        format!(
            "{} fits, worst relative error {worst:.2e}, limit 1e-6; constants {} ...; {:.2?}",
            rep.fits.len(),
            constants.join(", "),
            elapsed
        ),
    )
}

fn jets() -> Outcome {
    let (rep, elapsed) = suite(Suite::Jets);
    suite_outcome(&rep, elapsed, None)
}

fn identities() -> Outcome {
    let mut worst = [0.0f64; 5];
    let mut count = 0;
    for b in builtin_metrics().unwrap() {
        let grid = SampleGrid::default().with_directions(b.directions);
        for r in reports(b.model.as_ref(), &grid) {
            let y = [r.sample.y1, r.sample.y2];
            let rel = |lhs: f64, rhs: f64, scale: f64| (lhs - rhs).abs() / (1.0 + scale);
            let ly = r.hilbert[0] * y[0] + r.hilbert[1] * y[1];
            worst[0] = worst[0].max(rel(ly, r.finsler, r.finsler));
            let [g11, g12, g22] = r.metric;
            let gyy = g11 * y[0] * y[0] + 2.0 * g12 * y[0] * y[1] + g22 * y[1] * y[1];
            worst[3] = worst[3].max(rel(gyy, r.finsler * r.finsler, r.finsler * r.finsler));
            for h in 0..2 {
                let ny = r.nonlinear[h][0] * y[0] + r.nonlinear[h][1] * y[1];
                let scale =
                    r.nonlinear[h][0].abs() * y[0].abs() + r.nonlinear[h][1].abs() * y[1].abs();
                worst[1] = worst[1].max(rel(ny, 2.0 * r.spray[h], scale));
                for j in 0..2 {
                    let gy =
                        r.berwald_connection[h][j][0] * y[0] + r.berwald_connection[h][j][1] * y[1];
                    let scale = r.berwald_connection[h][j][0].abs() * y[0].abs()
                        + r.berwald_connection[h][j][1].abs() * y[1].abs();
                    worst[2] = worst[2].max(rel(gy, r.nonlinear[h][j], scale));
                    for i in 1..=2 {
                        let (a, b2) =
                            (r.berwald(h + 1, i, j + 1, 1), r.berwald(h + 1, i, j + 1, 2));
                        let v = a * y[0] + b2 * y[1];
                        worst[4] = worst[4]
                            .max(v.abs() / (1.0 + a.abs() * y[0].abs() + b2.abs() * y[1].abs()));
                    }
                }
            }
            count += 1;
        }
    }
    let names = ["l.y=F", "N.y=2G", "Gy=N", "g(y,y)=F^2", "Berwald.y"];
    let detail: Vec<String> = names
        .iter()
        .zip(worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect();
    outcome(
        worst.iter().all(|&w| w <= 1e-12),
        format!("{count} samples; {}; limit 1e-12", detail.join(", ")),
    )
}

fn implication() -> Outcome {
    let (rep, elapsed) = suite(Suite::D);
    let instances = implication_instances(0, 10).unwrap();
    let violations = instances.iter().filter(|i| !i.implication_holds).count();
    let landsberg = instances.iter().filter(|i| i.landsberg <= 1e-8).count();
    let mut o = suite_outcome(&rep, elapsed, None);
    o.passed &= instances.len() == 10 && violations == 0;
    o.detail.push_str(&format!(
        ", {} instances, {landsberg} Landsberg, {violations} violations",
        instances.len()
    ));
    o
}

fn audit() -> Outcome {
    let (rep, _) = suite(Suite::C);
    match &rep.audit {
        Some(a) => {
            let text = serde_json::to_string(a).unwrap();
            let scan = &a.concluding_remark;
            outcome(
                !a.f3.is_empty() && a.f3.iter().all(|f| f.terms.iter().all(|t| !t.is_empty())) && !text.is_empty(),
                format!(
                    "f''' audit at {} points; constants (1, 1, -1): c = {}, windows {}, closed form {}",
                    a.f3.len(),
                    scan.c,
                    scan.windows.len(),
                    scan.closed_form_error.as_deref().unwrap_or("defined")
                ),
            )
        }
        None => outcome(false, "verify C produced no audit"),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("worked example reproduction", worked_example),
        ("metricity self-consistency", metricity),
        ("Berwald witnesses for the family", family_witnesses),
        ("conformal invariance", conformal),
        ("unicorn ODE", unicorn_ode),
        ("quadrature vs closed form", closed_forms),
        ("jet engine vs finite differences", jets),
        ("algebraic identities", identities),
        ("Landsberg implies Berwald", implication),
        ("discrepancy audit", audit),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        all &= o.passed;
        println!(
            "{} {:>2} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
