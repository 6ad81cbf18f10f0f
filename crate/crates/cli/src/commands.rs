use std::fs;
use std::path::Path;

use landsberg_core::classify::{
    self, fit_constant, grid_for_window, run_suite, ClassificationReport, ClassifyError,
    Directions, SampleGrid, ScaleFit, Suite, Tolerances,
};
use landsberg_core::expr::{ExprError, Expression};
use landsberg_core::geometry::{
    analyze, ChartFunction, GeometryError, GeometryReport, MetricModel, TangentSample,
};
use landsberg_core::jets::JetSpec;
use landsberg_core::landsberg::{
    admissible_windows, unicorn_ode_residual, window_containing, ClosedForm, ClosedFormMetric,
    FamilyMetric, LandsbergError, PhiFamilyParams, PhiProfile, QProfile, QuadraticQParams, Window,
};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Domain(e.to_string())
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        ClassifyError::from(e).into()
    }
}

impl From<LandsbergError> for CliError {
    fn from(e: LandsbergError) -> Self {
        ClassifyError::from(e).into()
    }
}

fn expr_error(source: &str, e: ExprError) -> CliError {
    let text = e.render(source);
    if e.is_domain() {
        CliError::Domain(text)
    } else {
        CliError::Usage(text)
    }
}

fn parse_position(cfg: &RunConfig, key: &str) -> Result<String, CliError> {
    let src = cfg.get(key).unwrap_or("1").to_string();
    Expression::position(&src).map_err(|e| expr_error(&src, e))?;
    Ok(src)
}

/// A model plus, for the phi families, the t-window its grids must respect.
struct Built {
    model: Box<dyn ChartFunction + Send>,
    window: Option<(Window, f64, Expression)>,
    /// Keys that define the model, for the echo.
    keys: Vec<&'static str>,
}

fn need(cfg: &RunConfig, key: &str) -> Result<f64, CliError> {
    cfg.typed::<f64>(key)?.ok_or_else(|| {
        CliError::Usage(format!(
            "--family {} needs --{key}",
            cfg.get("family").unwrap_or("")
        ))
    })
}

/// The closed-form window of `q` containing `t0`, or the first usable one.
fn closed_window(
    q: &QProfile,
    t0: Option<f64>,
    usable: impl Fn(&Window) -> bool,
) -> Result<(Window, f64), CliError> {
    let windows: Vec<Window> = admissible_windows(q)
        .into_iter()
        .filter(|w| usable(w))
        .collect();
    let found = match t0 {
        Some(t) => windows.into_iter().find(|w| w.contains(t)).map(|w| (w, t)),
        None => match windows.iter().find(|w| w.contains(0.0)) {
            Some(w) => Some((*w, 0.0)),
            None => windows.into_iter().next().map(|w| (w, w.center())),
        },
    };
    found.ok_or_else(|| {
        CliError::Domain("no admissible t-window on which the closed form is real".into())
    })
}

fn build_model(cfg: &mut RunConfig) -> Result<Built, CliError> {
    match (cfg.get("metric"), cfg.get("family")) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give either --metric or --family, not both".into(),
        )),
        (None, None) => Err(CliError::Usage("missing --metric (or --family)".into())),
        (Some(src), None) => {
            let src = src.to_string();
            let expr = Expression::metric(&src).map_err(|e| expr_error(&src, e))?;
            Ok(Built {
                model: Box::new(MetricModel::new(expr)),
                window: None,
                keys: vec!["metric"],
            })
        }
        (None, Some(kind)) => {
            let kind = kind.to_string();
            let t0 = cfg.typed::<f64>("t0")?;
            let closed = cfg.flag("closed-form")?;
            if kind == "phi-special" {
                if cfg.get("rho").is_some_and(|r| r != "1") {
                    return Err(CliError::Usage("--family phi-special fixes rho = 1".into()));
                }
                cfg.set("rho", Some("1".into()));
            }
            cfg.set_default("rho", "1");
            cfg.set_default("sigma", "1");
            let rho = parse_position(cfg, "rho")?;
            let sigma = parse_position(cfg, "sigma")?;
            let mut keys = vec!["family", "rho", "sigma", "t0", "closed-form"];
            let built = match kind.as_str() {
                "phi1" | "phi-special" => {
                    let (c1, c2, c3) = (need(cfg, "c1")?, need(cfg, "c2")?, need(cfg, "c3")?);
                    keys.extend(["c1", "c2", "c3"]);
                    let p = PhiFamilyParams::new(c1, c2, c3, &rho, &sigma)?;
                    if closed {
                        let (w, t) = closed_window(&p.q(), t0, |w| w.lo >= 2.0 * c1)?;
                        p.closed_form()
                            .value(t)
                            .map_err(|e| CliError::Domain(e.to_string()))?;
                        let m = ClosedFormMetric::new(p.closed_form(), &rho, &sigma)?;
                        let r = m.rho.clone();
                        Built {
                            model: Box::new(m),
                            window: Some((w, t, r)),
                            keys,
                        }
                    } else {
                        let m = p.metric(t0)?;
                        let w = (m.phi.window, m.phi.t0, m.rho.clone());
                        Built {
                            model: Box::new(m),
                            window: Some(w),
                            keys,
                        }
                    }
                }
                "phi2" => {
                    let (a, b) = (need(cfg, "a")?, need(cfg, "b")?);
                    keys.extend(["a", "b"]);
                    let p = QuadraticQParams::new(a, b, &rho)?;
                    if closed {
                        let (w, t) = closed_window(&p.q(), t0, |_| true)?;
                        p.closed_form()
                            .value(t)
                            .map_err(|e| CliError::Domain(e.to_string()))?;
                        let m = ClosedFormMetric::new(p.closed_form(), &rho, &sigma)?;
                        let r = m.rho.clone();
                        Built {
                            model: Box::new(m),
                            window: Some((w, t, r)),
                            keys,
                        }
                    } else {
                        let sigma =
                            Expression::position(&sigma).map_err(|e| expr_error(&sigma, e))?;
                        let m = FamilyMetric::new(p.q(), p.rho.clone(), sigma, t0)?;
                        let w = (m.phi.window, m.phi.t0, m.rho.clone());
                        Built {
                            model: Box::new(m),
                            window: Some(w),
                            keys,
                        }
                    }
                }
                other => return Err(CliError::Usage(format!("unknown family '{other}'"))),
            };
            Ok(built)
        }
    }
}

fn echo(cfg: &RunConfig) {
    eprint!("# effective config\n{cfg}");
}

fn write_file(path: &str, contents: &str) -> Result<(), CliError> {
    fs::write(Path::new(path), contents)
        .map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))
}

fn to_json<T: Serialize>(cfg: &RunConfig, report: &T) -> String {
    let v = json!({ "config": cfg.as_map(), "report": report });
    serde_json::to_string_pretty(&v).expect("reports serialize")
}

fn build_grid(
    cfg: &mut RunConfig,
    built: &Built,
    default_counts: &str,
) -> Result<SampleGrid, CliError> {
    cfg.set_default("grid", default_counts);
    cfg.set_default("xbox", "-1,1,-1,1");
    cfg.set_default("seed", "0");
    let counts = cfg.list::<usize, 3>("grid")?.expect("defaulted");
    let xbox = cfg.list::<f64, 4>("xbox")?.expect("defaulted");
    let seed = cfg.typed::<u64>("seed")?.expect("defaulted");
    let directions = if let Some([lo, hi]) = cfg.list::<f64, 2>("slopes")? {
        Directions::Slopes { lo, hi }
    } else if let Some((w, t0, rho)) = &built.window {
        let base = SampleGrid::new(xbox, counts, Directions::Circle { wedge: 0.2 }, seed)?;
        let grid = grid_for_window(base, rho, w, *t0)?.ok_or_else(|| {
            CliError::Domain("no slope range keeps rho u inside the admissible window".into())
        })?;
        let Directions::Slopes { lo, hi } = grid.directions else {
            unreachable!()
        };
        cfg.set("slopes", Some(format!("{lo},{hi}")));
        grid.directions
    } else {
        cfg.set_default("wedge", "0.2");
        Directions::Circle {
            wedge: cfg.typed::<f64>("wedge")?.expect("defaulted"),
        }
    };
    Ok(SampleGrid::new(xbox, counts, directions, seed)?)
}

fn tolerances(cfg: &mut RunConfig) -> Result<Tolerances, CliError> {
    let d = Tolerances::default();
    cfg.set_default("tol-berwald", &d.berwald.to_string());
    cfg.set_default("tol-landsberg", &d.landsberg.to_string());
    cfg.set_default("tol-degeneracy", &d.degeneracy.to_string());
    let t = Tolerances {
        berwald: cfg.typed("tol-berwald")?.expect("defaulted"),
        landsberg: cfg.typed("tol-landsberg")?.expect("defaulted"),
        degeneracy: cfg.typed("tol-degeneracy")?.expect("defaulted"),
    };
    t.validate()?;
    Ok(t)
}

const GRID_KEYS: [&str; 8] = [
    "grid",
    "xbox",
    "seed",
    "wedge",
    "slopes",
    "tol-berwald",
    "tol-landsberg",
    "tol-degeneracy",
];

pub fn eval(mut cfg: RunConfig) -> Result<(), CliError> {
    let built = build_model(&mut cfg)?;
    let [x1, x2, y1, y2] = cfg
        .list::<f64, 4>("point")?
        .ok_or_else(|| CliError::Usage("missing --point x1,x2,y1,y2".into()))?;
    let keep: Vec<&str> = built
        .keys
        .iter()
        .copied()
        .chain(["point", "json"])
        .collect();
    cfg.retain(&keep);
    echo(&cfg);
    let sample = TangentSample::new(x1, x2, y1, y2)?;
    let report = analyze(built.model.as_ref(), &sample, JetSpec::default())?;
    if cfg.flag("json")? {
        println!("{}", to_json(&cfg, &report));
    } else {
        print!("{}", render_geometry(&built.model.label(), &report));
    }
    Ok(())
}

fn render_geometry(label: &str, r: &GeometryReport) -> String {
    let s = &r.sample;
    let mut out = String::new();
    let mut row = |k: &str, v: String| out.push_str(&format!("{k:<22} {v}\n"));
    row("model", label.to_string());
    row(
        "sample",
        format!("x = ({}, {}), y = ({}, {})", s.x1, s.x2, s.y1, s.y2),
    );
    row("eps, u", format!("{}, {}", r.epsilon, r.u));
    row("F", r.finsler.to_string());
    row("f, f', ..., f^(5)", format!("{:?}", r.f.du));
    row("f1, f1', f1'', f1'''", format!("{:?}", r.f1.du));
    row("f2, f2', f2'', f2'''", format!("{:?}", r.f2.du));
    row("G^1, G^2", format!("{:?}", r.spray));
    row("N^i_j", format!("{:?}", r.nonlinear));
    row("G^h_jk", format!("{:?}", r.berwald_connection));
    row("R^1_12, R^2_12", format!("{:?}", r.curvature));
    row("R^i_k", format!("{:?}", r.jacobi));
    row(
        "G^1_ijk (111,112,122,222)",
        format!("{:?}", r.berwald_tensor[0]),
    );
    row(
        "G^2_ijk (111,112,122,222)",
        format!("{:?}", r.berwald_tensor[1]),
    );
    row(
        "L_ijk (111,112,122,222)",
        format!("{:?}", r.landsberg_tensor),
    );
    row("l_1, l_2", format!("{:?}", r.hilbert));
    row("g11, g12, g22", format!("{:?}", r.metric));
    row("det g", r.det_g.to_string());
    row("landsberg r", format!("{:e}", r.landsberg_residual));
    row(
        "landsberg r (normed)",
        format!("{:e}", r.landsberg_pde_residual),
    );
    row("berwald (normed)", format!("{:e}", r.berwald_norm));
    row("metricity", format!("{:e}", r.metricity_residual));
    out
}

fn finish_report<T: Serialize>(
    cfg: &RunConfig,
    report: &T,
    text: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let json = to_json(cfg, report);
    if let Some(path) = cfg.get("report") {
        write_file(path, &json)?;
    }
    if cfg.flag("json")? {
        println!("{json}");
    } else {
        print!("{}", text());
    }
    Ok(())
}

pub fn classify(mut cfg: RunConfig) -> Result<(), CliError> {
    let built = build_model(&mut cfg)?;
    let grid = build_grid(&mut cfg, &built, "10,10,10")?;
    let tol = tolerances(&mut cfg)?;
    let keep: Vec<&str> = built
        .keys
        .iter()
        .copied()
        .chain(GRID_KEYS)
        .chain(["json", "csv", "report"])
        .collect();
    cfg.retain(&keep);
    echo(&cfg);
    let report = classify::classify(built.model.as_ref(), &grid, &tol)?;
    if let Some(path) = cfg.get("csv") {
        let mut buf = Vec::new();
        report.write_csv(&mut buf).expect("in-memory write");
        write_file(path, &String::from_utf8(buf).expect("ascii csv"))?;
    }
    finish_report(&cfg, &report, || report.summary())
}

#[derive(Debug, Serialize)]
struct ClosedFormStatus {
    /// `c^2 - 4 c2` or `b^2 - 4 a`; the printed form needs it positive.
    discriminant: f64,
    status: String,
    fit: Option<ScaleFit>,
}

#[derive(Debug, Serialize)]
struct FamilyReport {
    model: String,
    q: QProfile,
    c: Option<f64>,
    t0: f64,
    window: Window,
    windows: Vec<Window>,
    q_at_t0: f64,
    /// Largest normalized `3 Q_tt^2 - 2 Q_t Q_ttt` on the window.
    ode_residual: f64,
    closed_form: ClosedFormStatus,
    classification: ClassificationReport,
}

fn t_points(w: &Window, t0: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = w.shrink_around(t0, 0.8);
    let (lo, hi) = (lo.max(t0 - 3.0), hi.min(t0 + 3.0));
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
        .collect()
}

pub fn family(mut cfg: RunConfig) -> Result<(), CliError> {
    if cfg.get("family").is_none() {
        return Err(CliError::Usage(
            "family needs --family phi1|phi2|phi-special".into(),
        ));
    }
    let built = build_model(&mut cfg)?;
    let grid = build_grid(&mut cfg, &built, "6,6,6")?;
    let tol = tolerances(&mut cfg)?;
    let keep: Vec<&str> = built
        .keys
        .iter()
        .copied()
        .chain(GRID_KEYS)
        .chain(["json", "report"])
        .collect();
    cfg.retain(&keep);
    echo(&cfg);

    let (window, t0, _) = built.window.clone().expect("families carry a window");
    let (q, form, c) = match cfg.get("family") {
        Some("phi2") => {
            let (a, b) = (need(&cfg, "a")?, need(&cfg, "b")?);
            (QProfile::Linear { a, b }, ClosedForm::Phi2 { a, b }, None)
        }
        _ => {
            let (c1, c2, c3) = (need(&cfg, "c1")?, need(&cfg, "c2")?, need(&cfg, "c3")?);
            (
                QProfile::family(c1, c2, c3),
                ClosedForm::Phi1 { c1, c2, c3 },
                Some(2.0 * c1 * c3 + c2 + 1.0),
            )
        }
    };
    let discriminant = match form {
        ClosedForm::Phi1 { c2, .. } => c.unwrap_or(0.0).powi(2) - 4.0 * c2,
        ClosedForm::Phi2 { a, b } => b * b - 4.0 * a,
    };
    let ts = t_points(&window, t0, 41);
    let mut ode = 0.0f64;
    for &t in &ts {
        let qj = q.jet(&landsberg_core::jets::Jet::variable_t(t, 3))?;
        ode = ode.max(unicorn_ode_residual(&qj)?.normalized.abs());
    }
    let closed_form = match window_containing(&q, t0)
        .map(|w| PhiProfile::new(q.clone(), Some(t0)).map(|p| (w, p)))
    {
        Some(Ok((_, phi))) => {
            match fit_constant(
                "closed form / quadrature",
                &ts,
                |t| Ok(form.value(t)?),
                |t| Ok(phi.phi(t)?),
            ) {
                Ok(fit) => ClosedFormStatus {
                    discriminant,
                    status: "defined on the window".into(),
                    fit: Some(fit),
                },
                Err(e) => ClosedFormStatus {
                    discriminant,
                    status: e.to_string(),
                    fit: None,
                },
            }
        }
        _ => ClosedFormStatus {
            discriminant,
            status: "t0 is outside every admissible window".into(),
            fit: None,
        },
    };
    let classification = classify::classify(built.model.as_ref(), &grid, &tol)?;
    let report = FamilyReport {
        model: built.model.label(),
        q_at_t0: q.value(t0)?,
        windows: admissible_windows(&q),
        q,
        c,
        t0,
        window,
        ode_residual: ode,
        closed_form,
        classification,
    };
    finish_report(&cfg, &report, || {
        let mut s = String::new();
        s.push_str(&format!("{:<18} {}\n", "model", report.model));
        if let Some(c) = report.c {
            s.push_str(&format!("{:<18} {c}\n", "c"));
        }
        s.push_str(&format!(
            "{:<18} {} in ({}, {})\n",
            "t0", report.t0, report.window.lo, report.window.hi
        ));
        s.push_str(&format!("{:<18} {}\n", "Q(t0)", report.q_at_t0));
        s.push_str(&format!(
            "{:<18} {:e}\n",
            "ODE residual", report.ode_residual
        ));
        let cf = &report.closed_form;
        s.push_str(&format!(
            "{:<18} {} (discriminant {})\n",
            "closed form", cf.status, cf.discriminant
        ));
        if let Some(f) = &cf.fit {
            s.push_str(&format!(
                "{:<18} C = {:e}, max rel error {:e}\n",
                "closed / quad", f.constant, f.max_rel_error
            ));
        }
        s.push_str(&report.classification.summary());
        s
    })
}

pub fn verify(mut cfg: RunConfig) -> Result<(), CliError> {
    let suite: Suite = cfg.require("suite")?.parse()?;
    cfg.set_default("seed", "0");
    let seed = cfg.typed::<u64>("seed")?.expect("defaulted");
    cfg.retain(&["suite", "seed", "json", "report"]);
    echo(&cfg);
    let report = run_suite(suite, seed)?;
    finish_report(&cfg, &report, || report.summary())?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}
