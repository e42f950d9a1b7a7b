//! The registered acceptance experiments E1–E12.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};
use surro_core::lemmas;
use surro_core::linalg::{self, SymMatrix};
use surro_core::models::{
    boundary_counterexample, em_population_problem, fisher_information, mirror_descent_problem,
    mirror_prox_problem, newton_problem, GaussianLatentModel, MirrorMap, Objective,
    SymmetricMixture,
};
use surro_core::rates::{
    accelerate, alpha_transform, curvature_at, curvature_fd, mirror_prox_spectrum_map, optimal_alpha,
    prox_identity_deviation, reparam_invariance_check, sample_rate_sweep, summarize, theoretical_rates,
    FdSpec, Reparametrization, SweepModel, Verdict,
};
use surro_core::surrogate::{inner_minimize, iterate};
use surro_core::{rng, ConvexDomain, ParamVector, RatePair, StopRule, Surrogate};

use crate::config::ExperimentConfig;
use crate::error::{CliResult, Context};
use crate::format::{json_num, to_json_text};
use crate::run::{run_experiment, RunOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub id: &'static str,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub measured: BTreeMap<String, f64>,
    pub error: Option<String>,
}

impl ExperimentResult {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// `E1 pass: title` plus the failing checks, if any.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {}: {}",
            self.id,
            if self.pass() { "pass" } else { "FAIL" },
            self.title
        );
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        if !failed.is_empty() {
            s.push_str(&format!(" [failed: {}]", failed.join(", ")));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!(" [error: {e}]"));
        }
        s
    }
}

/// Collects checks and measured values for one experiment.
struct Recorder {
    checks: Vec<Check>,
    measured: BTreeMap<String, f64>,
}

impl Recorder {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            measured: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push(Check {
            name: name.into(),
            pass,
        });
    }

    fn measure(&mut self, name: impl Into<String>, value: f64) -> f64 {
        self.measured.insert(name.into(), value);
        value
    }

    /// Records `value` and checks `|value − target| ≤ tol`.
    fn near(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        self.measure(name, value);
        self.check(format!("|{name} - {target}| <= {tol:e}"), (value - target).abs() <= tol);
    }
}

type Body = fn(&mut Recorder) -> CliResult<()>;

const EXPERIMENTS: [(&str, &str, Body); 12] = [
    ("E1", "gradient descent on diag(1, 4), all rate verdicts", e1),
    ("E2", "exact-rate regime with distinct rates 0.4 and 0.6", e2),
    ("E3", "mirror-prox spectrum identity and the 3/4 floor", e3),
    ("E4", "population EM rate equals the missing-information ratio", e4),
    ("E5", "sample rates approach the population rate", e5),
    ("E6", "alpha-EM optimum and transformed rates", e6),
    ("E7", "Newton curvature (I, 0) and quadratic convergence", e7),
    ("E8", "surrogate-gap decay bounded by the upper rate", e8),
    ("E9", "mirror prox with the ball map converges from every start", e9),
    ("E10", "matrix lemma property suites", e10),
    ("E11", "one-step acceleration on affine maps", e11),
    ("E12", "reparametrization: interior invariance, boundary counterexample", e12),
];

/// Experiment ids in suite order.
pub fn ids() -> Vec<&'static str> {
    EXPERIMENTS.iter().map(|e| e.0).collect()
}

fn run_one(id: &'static str, title: &'static str, body: Body) -> ExperimentResult {
    let mut r = Recorder::new();
    let error = body(&mut r).err().map(|e| e.to_string());
    ExperimentResult {
        id,
        title,
        checks: r.checks,
        measured: r.measured,
        error,
    }
}

/// Runs every experiment (concurrently) and returns results in E1..E12
/// order.
pub fn run_suite() -> Vec<ExperimentResult> {
    EXPERIMENTS
        .par_iter()
        .map(|&(id, title, body)| run_one(id, title, body))
        .collect()
}

/// Runs the experiments whose ids are listed.
pub fn run_selected(ids: &[&str]) -> Vec<ExperimentResult> {
    EXPERIMENTS
        .par_iter()
        .filter(|(id, _, _)| ids.contains(id))
        .map(|&(id, title, body)| run_one(id, title, body))
        .collect()
}

pub fn suite_json(results: &[ExperimentResult]) -> Value {
    let experiments: Vec<Value> = results
        .iter()
        .map(|r| {
            let measured: serde_json::Map<String, Value> =
                r.measured.iter().map(|(k, v)| (k.clone(), json_num(*v))).collect();
            json!({
                "id": r.id,
                "title": r.title,
                "pass": r.pass(),
                "checks": r.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass})).collect::<Vec<_>>(),
                "measured": measured,
                "error": r.error,
            })
        })
        .collect();
    json!({
        "count": results.len(),
        "all_pass": results.iter().all(|r| r.pass()),
        "experiments": experiments,
    })
}

pub fn suite_text(results: &[ExperimentResult]) -> String {
    to_json_text(&suite_json(results))
}

fn config(text: &str) -> CliResult<ExperimentConfig> {
    ExperimentConfig::from_json(text)
}

const GD_DIAG: &str = r#"{
    "name": "gd_diag", "algorithm": "gradient_descent",
    "objective": {"kind": "quadratic", "h": [[1, 0], [0, 4]]},
    "eta": 0.4, "theta0": [1, 1], "theta_star": [0, 0]
}"#;

const EM_POP: &str = r#"{
    "name": "em_population", "algorithm": "em_population",
    "latent": {"sigma_x2": 1, "sigma_y2": 1, "theta_star": 0.5},
    "theta0": [3], "theta_star": [0.5]
}"#;

fn em_model() -> GaussianLatentModel {
    GaussianLatentModel::new(1.0, 1.0, 0.5).expect("valid model")
}

fn verdict_is(r: &mut Recorder, out: &RunOutcome, key: &str, want: Verdict) {
    let got = out.report.verdicts.get(key).copied();
    r.check(format!("{key} is {}", want.as_str()), got == Some(want));
}

fn empirical(r: &mut Recorder, out: &RunOutcome) -> f64 {
    let rate = out.report.empirical_rate().unwrap_or(f64::NAN);
    r.measure("empirical_rate", rate)
}

fn e1(r: &mut Recorder) -> CliResult<()> {
    let out = run_experiment(&config(GD_DIAG)?)?;
    r.near("rho_inf", out.report.theory.rho_inf, 0.6, 1e-6);
    r.near("rho_sup", out.report.theory.rho_sup, 0.6, 1e-6);
    let e = empirical(r, &out);
    r.check("|empirical_rate - 0.6| <= 0.005", (e - 0.6).abs() <= 0.005);
    for key in ["theorem1_upper", "theorem2_lower", "theorem3_exact", "corollary1_q_gap"] {
        verdict_is(r, &out, key, Verdict::Pass);
    }
    Ok(())
}

fn e2(r: &mut Recorder) -> CliResult<()> {
    let out = run_experiment(&config(&GD_DIAG.replace("[0, 4]", "[0, 1.5]"))?)?;
    let t = out.report.theory;
    r.near("rho_inf", t.rho_inf, 0.4, 1e-6);
    r.near("rho_sup", t.rho_sup, 0.6, 1e-6);
    r.check("rho_sup^2 <= rho_inf", t.rho_sup * t.rho_sup <= t.rho_inf);
    let e = empirical(r, &out);
    r.measure("log_rate", e.ln());
    r.check("|log(empirical) - log(0.6)| <= 0.02", (e.ln() - 0.6f64.ln()).abs() <= 0.02);
    verdict_is(r, &out, "theorem3_exact", Verdict::Pass);
    Ok(())
}

fn e3(r: &mut Recorder) -> CliResult<()> {
    let fd = FdSpec::default();
    // Quadratic mirror map: mirror descent spectrum {0.8, 0.5}.
    let f = Objective::quadratic_at_origin(SymMatrix::from_diag(&[1.0, 2.5])).context(|| "objective".into())?;
    let full = ConvexDomain::full_space(2).context(|| "domain".into())?;
    let md = mirror_descent_problem(f.clone(), MirrorMap::Quadratic, 0.2, full.clone()).context(|| "md".into())?;
    let mp = mirror_prox_problem(f, MirrorMap::Quadratic, 0.2, full).context(|| "prox".into())?;
    let md_frame = curvature_at(&md, &[0.0, 0.0], &fd).context(|| "md curvature".into())?;
    let mp_frame = curvature_fd(&mp, &[0.0, 0.0], &fd).context(|| "prox curvature".into())?;
    let dev = prox_identity_deviation(&md_frame, &mp_frame).context(|| "identity".into())?;
    r.measure("identity_deviation_quadratic", dev);
    r.check("quadratic identity deviation <= 1e-6", dev <= 1e-6);

    // Entropy on the simplex.
    let c = vec![0.2, 0.3, 0.5];
    let f = Objective::quadratic(SymMatrix::identity(3), c.clone()).context(|| "objective".into())?;
    let simplex = ConvexDomain::simplex(3, 0.0).context(|| "domain".into())?;
    let md_e = mirror_descent_problem(f.clone(), MirrorMap::NegEntropy, 0.1, simplex.clone())
        .context(|| "md".into())?;
    let mp_e = mirror_prox_problem(f, MirrorMap::NegEntropy, 0.1, simplex).context(|| "prox".into())?;
    let md_frame_e = curvature_at(&md_e, &c, &fd).context(|| "md curvature".into())?;
    let mp_frame_e = curvature_fd(&mp_e, &c, &fd).context(|| "prox curvature".into())?;
    let dev_e = prox_identity_deviation(&md_frame_e, &mp_frame_e).context(|| "identity".into())?;
    r.measure("identity_deviation_entropy", dev_e);
    r.check("entropy identity deviation <= 1e-6", dev_e <= 1e-6);

    // Predicted against measured prox rates.
    for (label, md_frame, prox, theta0, star) in [
        ("quadratic", &md_frame, &mp as &dyn Surrogate, vec![1.0, -1.0], vec![0.0, 0.0]),
        ("entropy", &md_frame_e, &mp_e as &dyn Surrogate, vec![0.5, 0.3, 0.2], c.clone()),
    ] {
        let pred = mirror_prox_spectrum_map(md_frame).context(|| "spectrum map".into())?;
        r.measure(format!("predicted_prox_rho_sup_{label}"), pred.rates.rho_sup);
        r.measure(format!("predicted_prox_rho_inf_{label}"), pred.rates.rho_inf);
        r.check(format!("{label} prox rho_inf >= 3/4"), pred.rates.rho_inf >= 0.75 - 1e-9);
        let tr = iterate(prox, &ParamVector::from(theta0), &StopRule::default()).context(|| "prox trace".into())?;
        let est = surro_core::rates::empirical_rate(&tr, &star, &Default::default())
            .context(|| "prox empirical rate".into())?;
        let e = r.measure(format!("empirical_prox_rate_{label}"), est.rate());
        r.check(
            format!("{label} prox empirical within 0.02 of prediction"),
            (e - pred.rates.rho_sup).abs() <= 0.02,
        );
    }
    Ok(())
}

fn e4(r: &mut Recorder) -> CliResult<()> {
    let out = run_experiment(&config(EM_POP)?)?;
    r.near("rho_inf", out.report.theory.rho_inf, 0.5, 0.005);
    r.near("rho_sup", out.report.theory.rho_sup, 0.5, 0.005);
    let e = empirical(r, &out);
    r.check("|empirical_rate - 0.5| <= 0.005", (e - 0.5).abs() <= 0.005);
    let fi = fisher_information(&em_model());
    let p = em_population_problem(em_model());
    let frame = curvature_fd(&p, &[0.5], &FdSpec::default()).context(|| "FD curvature".into())?;
    let da = (frame.a_star.get(0, 0) - fi.i_xy.get(0, 0)).abs();
    let db = (frame.b_star.get(0, 0) - (fi.i_xy.get(0, 0) - fi.i_y.get(0, 0))).abs();
    r.measure("fd_a_minus_i_xy", da);
    r.measure("fd_b_minus_i_xy_minus_i_y", db);
    r.check("FD curvature equals Fisher informations within 1e-6", da <= 1e-6 && db <= 1e-6);
    Ok(())
}

const SWEEP_KS: [usize; 4] = [100, 400, 1600, 6400];

fn e5(r: &mut Recorder) -> CliResult<()> {
    let seeds: Vec<u64> = (0..16).collect();
    let mixture = SweepModel::Mixture(SymmetricMixture::new(1.5).context(|| "mixture".into())?);
    let rows = sample_rate_sweep(&mixture, &SWEEP_KS, &seeds).context(|| "mixture sweep".into())?;
    let summary = summarize(&rows);
    for s in &summary {
        r.measure(format!("mixture_median_abs_dev_k{}", s.k), s.median_abs_dev);
    }
    r.check(
        "mixture median deviation strictly decreasing in k",
        summary.windows(2).all(|w| w[1].median_abs_dev < w[0].median_abs_dev),
    );
    let gauss = SweepModel::Gaussian(em_model());
    let rows = sample_rate_sweep(&gauss, &SWEEP_KS, &seeds).context(|| "gaussian sweep".into())?;
    let worst = rows.iter().map(|x| x.abs_dev).fold(0.0, f64::max);
    r.measure("gaussian_max_abs_dev", worst);
    r.check("gaussian deviation <= 1e-6 at every k", worst <= 1e-6);
    Ok(())
}

fn alpha_config(alpha: f64) -> String {
    format!(
        r#"{{"name": "alpha_em", "algorithm": "alpha_em", "alpha": {alpha},
            "latent": {{"sigma_x2": 1, "sigma_y2": 1, "theta_star": 0.5}},
            "theta0": [2.5], "theta_star": [0.5]}}"#
    )
}

fn e6(r: &mut Recorder) -> CliResult<()> {
    let em = RatePair::new(0.5, 0.5);
    let (a_opt, rho_opt) = optimal_alpha(&em);
    r.near("alpha_opt", a_opt, 0.5, 1e-12);
    r.near("rho_opt", rho_opt, 0.0, 1e-12);

    let out = run_experiment(&config(&alpha_config(0.5))?)?;
    let fast = r.measure("empirical_rate_alpha_0.5", out.report.empirical_rate().unwrap_or(f64::NAN));
    r.check("alpha = 0.5 windowed rate < 0.05", fast < 0.05);

    let predicted = alpha_transform(&em, 0.25).context(|| "alpha transform".into())?;
    r.near("predicted_rate_alpha_0.25", predicted, 1.0 / 3.0, 1e-12);
    let out = run_experiment(&config(&alpha_config(0.25))?)?;
    let e = r.measure("empirical_rate_alpha_0.25", out.report.empirical_rate().unwrap_or(f64::NAN));
    r.check("alpha = 0.25 empirical within 0.02 of 1/3", (e - 1.0 / 3.0).abs() <= 0.02);
    Ok(())
}

fn e7(r: &mut Recorder) -> CliResult<()> {
    let p = newton_problem(Objective::Quartic1D).context(|| "newton".into())?;
    let frame = curvature_at(&p, &[0.0], &FdSpec::default()).context(|| "curvature".into())?;
    let a = frame.a_star.get(0, 0);
    let b = frame.b_star.get(0, 0);
    r.near("a_star", a, 1.0, 1e-6);
    r.near("b_star", b, 0.0, 1e-6);
    let tr = iterate(&p, &ParamVector::scalar(1.0), &StopRule::default()).context(|| "newton trace".into())?;
    let errors = tr.errors(&[0.0]);
    let mut ok = true;
    let mut worst = 0.0f64;
    for w in errors.windows(2) {
        if w[0] < 0.1 && w[0] > 0.0 {
            worst = worst.max(w[1] / (w[0] * w[0]));
            ok &= w[1] <= 2.0 * w[0] * w[0];
        }
    }
    r.measure("max_e_next_over_e_squared", worst);
    r.check("e_{n+1} <= 2 e_n^2 once e_n < 0.1", ok);
    Ok(())
}

fn e8(r: &mut Recorder) -> CliResult<()> {
    for (label, text) in [("gd", GD_DIAG), ("em", EM_POP)] {
        let out = run_experiment(&config(text)?)?;
        let rho = out.report.theory.rho_sup;
        match out.report.q_gap_slope() {
            Some(s) => {
                let q = r.measure(format!("q_gap_rate_{label}"), s.exp());
                r.check(format!("{label} exp(q_gap slope) <= rho_sup + 0.02"), q <= rho + 0.02);
            }
            None => r.check(format!("{label} q-gap window available"), false),
        }
    }
    Ok(())
}

fn e9(r: &mut Recorder) -> CliResult<()> {
    let center = vec![0.3, -0.4];
    let f = Objective::smooth_log_sum_exp(0.5, center.clone()).context(|| "objective".into())?;
    let dom = ConvexDomain::ball(vec![0.0, 0.0], 1.0, false).context(|| "domain".into())?;
    let phi = MirrorMap::ball(1.5).context(|| "mirror map".into())?;
    let probe = mirror_prox_problem(f.clone(), phi, 1.0, dom.clone()).context(|| "prox".into())?;
    let (gamma, beta) = probe.constants();
    let (gamma, beta) = (gamma.unwrap_or(f64::NAN), beta.unwrap_or(f64::NAN));
    let eta = 0.9 * gamma / beta;
    r.measure("eta", eta);
    r.check("eta < gamma / beta", eta < gamma / beta);
    let p = mirror_prox_problem(f, phi, eta, dom.clone()).context(|| "prox".into())?;
    let mut g = rng::seeded(0xe9, 0);
    let mut starts: Vec<Vec<f64>> = (0..5).map(|_| dom.sample(&mut g)).collect();
    for k in 0..3 {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / 3.0 + 0.3;
        starts.push(vec![(1.0 - 1e-7) * angle.cos(), (1.0 - 1e-7) * angle.sin()]);
    }
    let mut worst = 0.0f64;
    for s in starts {
        let tr = iterate(&p, &ParamVector::from(s), &StopRule::default()).context(|| "prox trace".into())?;
        worst = worst.max(linalg::dist2(tr.last(), &center));
    }
    r.measure("worst_final_error", worst);
    r.check("final error <= 1e-10 from all 8 starts", worst <= 1e-10);
    Ok(())
}

fn e10(r: &mut Recorder) -> CliResult<()> {
    let outcomes = lemmas::run_all(1000, 0x5eed).context(|| "lemma suites".into())?;
    for o in outcomes {
        r.measure(format!("{}_counterexamples", o.name), o.counterexamples as f64);
        r.measure(format!("{}_worst", o.name), o.worst);
        r.check(format!("{} has no counterexamples in 1000 trials", o.name), o.passed());
    }
    Ok(())
}

fn e11(r: &mut Recorder) -> CliResult<()> {
    let fd = FdSpec::default();
    let p = em_population_problem(em_model());
    let tn = [0.6];
    let next = inner_minimize(&p, &ParamVector::from(tn.to_vec())).context(|| "EM step".into())?;
    let plain = r.measure("em_plain_error", (next[0] - 0.5).abs());
    r.check("plain EM step error is 5e-2", (plain - 0.05).abs() <= 1e-12);
    let frame = curvature_at(&p, &tn, &fd).context(|| "curvature".into())?;
    let acc = accelerate(&tn, &next, &frame).context(|| "accelerate".into())?;
    let e = r.measure("em_accelerated_error", (acc[0] - 0.5).abs());
    r.check("accelerated EM error <= 1e-8", e <= 1e-8);

    let f = Objective::quadratic_at_origin(SymMatrix::from_diag(&[1.0, 4.0])).context(|| "objective".into())?;
    let full = ConvexDomain::full_space(2).context(|| "domain".into())?;
    let gd = surro_core::models::gradient_descent_problem(f, 0.4, full).context(|| "gd".into())?;
    let t0 = [1.0, 1.0];
    let t1 = inner_minimize(&gd, &ParamVector::from(t0.to_vec())).context(|| "GD step".into())?;
    let frame = curvature_at(&gd, &t0, &fd).context(|| "curvature".into())?;
    let acc = accelerate(&t0, &t1, &frame).context(|| "accelerate".into())?;
    let e = r.measure("gd_accelerated_error", linalg::norm2(&acc));
    r.check("accelerated GD recovers the minimizer within 1e-10", e <= 1e-10);
    Ok(())
}

fn e12(r: &mut Recorder) -> CliResult<()> {
    let fd = FdSpec::default();
    let shift = Reparametrization::coordinatewise(
        |t| t + 0.1 * t * t,
        |y| (-1.0 + (1.0 + 0.4 * y).sqrt()) / 0.2,
        |t| 1.0 + 0.2 * t,
    );
    let p: Arc<dyn Surrogate> = Arc::new(em_population_problem(em_model()));
    let (orig, re) = reparam_invariance_check(p, &[0.5], &shift, &fd).context(|| "interior check".into())?;
    r.measure("interior_rho_sup", orig.rho_sup);
    r.measure("interior_rho_sup_reparam", re.rho_sup);
    r.check(
        "interior rates agree within 1e-5",
        (orig.rho_sup - re.rho_sup).abs() <= 1e-5 && (orig.rho_inf - re.rho_inf).abs() <= 1e-5,
    );

    let power = Reparametrization::coordinatewise(|t| t.powf(0.4), |y| y.powf(2.5), |t| 0.4 * t.powf(-0.6));
    let p: Arc<dyn Surrogate> = Arc::new(boundary_counterexample());
    let (orig, re) = reparam_invariance_check(p, &[1.0], &power, &fd).context(|| "boundary check".into())?;
    r.near("boundary_rho_sup", orig.rho_sup, 0.5, 1e-3);
    r.near("boundary_rho_inf", orig.rho_inf, 0.5, 1e-3);
    r.near("boundary_rho_sup_reparam", re.rho_sup, 2.0, 1e-3);
    r.near("boundary_rho_inf_reparam", re.rho_inf, 2.0, 1e-3);
    let direct = theoretical_rates(&curvature_at(&boundary_counterexample(), &[1.0], &fd).context(|| "curvature".into())?)
        .context(|| "rates".into())?;
    r.check("analytic boundary curvature gives 1/2", (direct.rho_sup - 0.5).abs() <= 1e-12);
    Ok(())
}
