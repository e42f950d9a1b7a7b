//! Single experiment: iterate, locate `θ⋆`, extract curvature, judge rates.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use surro_core::rates::{curvature_at, estimate_theta_star, verdicts, CurvatureFrame, CurvatureSource, DecayEstimate, RateReport};
use surro_core::surrogate::iterate;
use surro_core::{linalg, ParamVector, Surrogate, Trace};

use crate::config::ExperimentConfig;
use crate::error::{io_error, CliError, CliResult, Context};
use crate::format::{json_matrix, json_num, json_opt, json_sym, json_vec, num, to_json_text};
use crate::svg;

pub struct RunOutcome {
    pub name: String,
    pub algorithm: &'static str,
    pub problem: Box<dyn Surrogate>,
    pub trace: Trace,
    pub theta_star: Vec<f64>,
    /// `Q_{θ⋆}(θ⋆)`.
    pub q_star: f64,
    pub frame: CurvatureFrame,
    pub report: RateReport,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.report.all_pass()
    }
}

/// Runs the pipeline described by `cfg` without touching the filesystem.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let (problem, mut warnings) = cfg.build()?;
    let theta0 = cfg.theta0(problem.as_ref())?;
    let stop = cfg.stop_rule();
    let fd = cfg.fd_spec();
    let theta0 = ParamVector::new(theta0).map_err(|e| CliError::ConfigInvalid(format!("theta0: {e}")))?;
    let trace = iterate(problem.as_ref(), &theta0, &stop).context(|| format!("{}: iterating", cfg.name))?;
    let theta_star = match cfg.pinned_theta_star() {
        Some(t) => {
            if t.len() != problem.dim() {
                return Err(CliError::ConfigInvalid(format!(
                    "theta_star has {} coordinates, problem has {}",
                    t.len(),
                    problem.dim()
                )));
            }
            t.to_vec()
        }
        None => estimate_theta_star(problem.as_ref(), trace.last(), &stop, &fd)
            .context(|| format!("{}: locating the fixed point", cfg.name))?
            .into_inner(),
    };
    let frame = curvature_at(problem.as_ref(), &theta_star, &fd)
        .context(|| format!("{}: curvature at the fixed point", cfg.name))?;
    let report = verdicts(problem.as_ref(), &trace, &theta_star, &frame, &cfg.verdict_options())
        .context(|| format!("{}: rate verdicts", cfg.name))?;
    let q_star = problem
        .value(&theta_star, &theta_star)
        .context(|| format!("{}: surrogate at the fixed point", cfg.name))?;
    warnings.extend(report.warnings.iter().cloned());
    Ok(RunOutcome {
        name: cfg.name.clone(),
        algorithm: cfg.algorithm.as_str(),
        problem,
        trace,
        theta_star,
        q_star,
        frame,
        report,
        warnings,
    })
}

/// `n, theta_0..theta_{q−1}, err_l2, q_gap, residual`; the last row has
/// empty `q_gap` and `residual`.
pub fn trace_csv(out: &RunOutcome) -> String {
    let q = out.problem.dim();
    let mut s = String::from("n");
    for i in 0..q {
        write!(s, ",theta_{i}").unwrap();
    }
    s.push_str(",err_l2,q_gap,residual\n");
    for (n, t) in out.trace.iterates.iter().enumerate() {
        write!(s, "{n}").unwrap();
        for x in t.coords() {
            write!(s, ",{}", num(*x)).unwrap();
        }
        write!(s, ",{}", num(linalg::dist2(t, &out.theta_star))).unwrap();
        match (out.trace.q_values.get(n), out.trace.residuals.get(n)) {
            (Some(qv), Some(r)) => write!(s, ",{},{}", num(qv - out.q_star), num(*r)).unwrap(),
            _ => s.push_str(",,"),
        }
        s.push('\n');
    }
    s
}

fn decay_json(e: &Option<DecayEstimate>) -> Value {
    match e {
        None => Value::Null,
        Some(e) => json!({
            "slope": json_num(e.slope),
            "rate": json_num(e.rate()),
            "successive_ratio": json_num(e.successive_ratio),
            "window_start": e.start,
            "window_end": e.end,
            "superlinear": e.superlinear,
        }),
    }
}

fn source_str(s: CurvatureSource) -> &'static str {
    match s {
        CurvatureSource::Analytic => "analytic",
        CurvatureSource::FiniteDifference => "finite_difference",
        CurvatureSource::Mixed => "mixed",
    }
}

pub fn rates_json(out: &RunOutcome) -> Value {
    let r = &out.report;
    let mut verdict_map = Map::new();
    for (k, v) in &r.verdicts {
        verdict_map.insert((*k).to_string(), Value::String(v.as_str().into()));
    }
    let f = &out.frame;
    json!({
        "name": out.name,
        "algorithm": out.algorithm,
        "dim": out.problem.dim(),
        "reduced_dim": f.reduced_dim(),
        "iterations": out.trace.len() - 1,
        "stop_reason": out.trace.stop_reason.as_str(),
        "theta_star": json_vec(&out.theta_star),
        "theta_star_interior": r.theta_star_interior,
        "theory": {
            "rho_inf": json_num(r.theory.rho_inf),
            "rho_sup": json_num(r.theory.rho_sup),
        },
        "empirical": decay_json(&r.empirical),
        "q_gap": decay_json(&r.q_gap),
        "verdicts": Value::Object(verdict_map),
        "all_pass": r.all_pass(),
        "curvature": {
            "source": source_str(f.source),
            "a_star": json_sym(&f.a_star),
            "b_star": json_sym(&f.b_star),
            "p": json_matrix(&f.p),
            "a_tilde": json_sym(&f.a_tilde),
            "b_tilde": json_sym(&f.b_tilde),
            "asymmetry_diag": json_num(f.asymmetry_diag),
            "h4_pass": f.h4_pass,
        },
        "max_surrogate_increase": json_opt(
            (!out.trace.q_values.is_empty()).then_some(out.trace.max_surrogate_increase)
        ),
        "warnings": out.warnings,
    })
}

pub struct ReportBundle {
    pub trace_csv: PathBuf,
    pub rates_json: PathBuf,
    pub plot_svg: Option<PathBuf>,
}

pub fn write_bundle(out: &RunOutcome, dir: &Path, plot: bool) -> CliResult<ReportBundle> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let trace_csv = dir.join("trace.csv");
    fs::write(&trace_csv, self::trace_csv(out)).map_err(io_error(&trace_csv))?;
    let rates = dir.join("rates.json");
    fs::write(&rates, to_json_text(&rates_json(out))).map_err(io_error(&rates))?;
    let plot_svg = if plot {
        let p = dir.join("plot.svg");
        let errors = out.trace.errors(&out.theta_star);
        fs::write(&p, svg::error_plot(&out.name, &errors, out.report.theory.rho_sup)).map_err(io_error(&p))?;
        Some(p)
    } else {
        None
    };
    Ok(ReportBundle {
        trace_csv,
        rates_json: rates,
        plot_svg,
    })
}

/// One-line summary for the terminal.
pub fn summary_line(out: &RunOutcome) -> String {
    let r = &out.report;
    let emp = match &r.empirical {
        Some(e) if e.superlinear => format!("{:.4} (superlinear)", e.rate()),
        Some(e) => format!("{:.4}", e.rate()),
        None => "n/a".into(),
    };
    let verdicts: Vec<String> = r.verdicts.iter().map(|(k, v)| format!("{k}={}", v.as_str())).collect();
    format!(
        "{}: theory [{:.4}, {:.4}], empirical {emp}; {}",
        out.name,
        r.theory.rho_inf,
        r.theory.rho_sup,
        verdicts.join(" ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gd() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"name": "gd", "algorithm": "gradient_descent",
                "objective": {"kind": "quadratic", "h": [[1, 0], [0, 4]]},
                "eta": 0.4, "theta0": [1, 1]}"#,
        )
        .unwrap()
    }

    #[test]
    fn gradient_descent_report() {
        let out = run_experiment(&gd()).unwrap();
        assert!((out.report.theory.rho_sup - 0.6).abs() < 1e-8);
        assert!(out.all_pass());
        let csv = trace_csv(&out);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,theta_0,theta_1,err_l2,q_gap,residual");
        assert_eq!(csv.lines().count(), out.trace.len() + 1);
        assert!(csv.lines().last().unwrap().ends_with(",,"));
        let j = rates_json(&out);
        assert_eq!(j["verdicts"]["theorem1_upper"], "pass");
        assert_eq!(j["curvature"]["source"], "analytic");
    }

    #[test]
    fn identical_configs_give_identical_text() {
        let a = run_experiment(&gd()).unwrap();
        let b = run_experiment(&gd()).unwrap();
        assert_eq!(trace_csv(&a), trace_csv(&b));
        assert_eq!(to_json_text(&rates_json(&a)), to_json_text(&rates_json(&b)));
    }
}
