//! The `carlson` experiment runner: one experiment per invocation, artifacts
//! written atomically, and a one-line JSON verdict.
//!
//! Exit status: 0 when every tolerance is met, 1 on a tolerance failure,
//! 2 for an invalid configuration or input, 3 when a construction or solver
//! gives up.

mod cli;
mod config;
mod io;

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub use cli::{main_with_args, Cli};
pub use config::{ExperimentConfig, Kind, MAX_BUDGET, MAX_LEVELS, MIN_EPS};
pub use io::{write_atomic, write_atomic_bytes};

use crate::ergodic::{
    convergence_sweep, mean_upper_bound, monte_carlo_space_average, point_mass_error_bound,
    recover_moments, LineMeasure,
};
use crate::error::{Error, Result};
use crate::kronecker::{self, KroneckerProblem};
use crate::measure::{
    build_nested_lambda, build_point_mass_lambda, parse_point_mass_json, AtomicLineMeasure,
    BuildOptions, Growth, NestedConstructionPlan, PlanJson,
};
use crate::poly::{bohr_lift, parse_dirichlet_json, DirichletPolynomial};
use crate::primes::PrimeBasis;
use crate::torus::MultiIndex;

/// Default verify-sigma tolerance on the final row.
pub const DEFAULT_SIGMA_TOL: f64 = 1e-2;
/// Default moment tolerance against an attached `μ`.
pub const DEFAULT_MOMENT_TOL: f64 = 0.2;
/// Default bound on off-diagonal Lebesgue moments.
pub const DEFAULT_LEBESGUE_MOMENT_TOL: f64 = 0.01;
pub const DEFAULT_KRONECKER_BUDGET: u64 = 100_000_000;
/// Relative tolerance for the mass trace against the growth schedule.
pub const MASS_TRACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    ToleranceFailure = 1,
    Usage = 2,
    Construction = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn of_error(err: &Error) -> Self {
        match err {
            Error::Budget { .. }
            | Error::Construction { .. }
            | Error::Capacity { .. }
            | Error::Representation(_)
            | Error::EmptyMeasure(_)
            | Error::ImaginaryResidue { .. } => Status::Construction,
            _ => Status::Usage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub kind: String,
    pub wall_time: f64,
    pub key_metrics: Map<String, Value>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Top-level fields specific to one experiment kind.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Summary {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("summary is plain JSON")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Summary,
    pub status: Status,
}

struct Report {
    metrics: Map<String, Value>,
    extra: Map<String, Value>,
    pass: bool,
}

impl Report {
    fn new(pass: bool, metrics: Value) -> Self {
        let Value::Object(metrics) = metrics else {
            unreachable!("metrics are built with json!({{..}})")
        };
        Self {
            metrics,
            extra: Map::new(),
            pass,
        }
    }
}

/// Run one experiment.
pub fn run(config: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let kind = config.kind;
    let result = match config.threads {
        Some(0) => Err(Error::Invalid("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(config))),
        None => dispatch(config),
    };
    let wall_time = start.elapsed().as_secs_f64();
    let kind = kind.map(|k| k.to_string()).unwrap_or_else(|| "none".into());
    match result {
        Ok(report) => Outcome {
            status: if report.pass {
                Status::Pass
            } else {
                Status::ToleranceFailure
            },
            summary: Summary {
                kind,
                wall_time,
                key_metrics: report.metrics,
                pass: report.pass,
                error: None,
                extra: report.extra,
            },
        },
        Err(err) => Outcome {
            status: Status::of_error(&err),
            summary: Summary {
                kind,
                wall_time,
                key_metrics: error_metrics(&err),
                pass: false,
                error: Some(err.to_string()),
                extra: Map::new(),
            },
        },
    }
}

fn error_metrics(err: &Error) -> Map<String, Value> {
    let value = match err {
        Error::Budget {
            budget,
            best_residuals,
        } => json!({"budget": budget, "best_residuals": best_residuals}),
        Error::Construction {
            level,
            source_index,
            repetition,
            ..
        } => json!({"level": level, "source_index": source_index, "repetition": repetition}),
        Error::Capacity { needed, cap } => json!({"needed": needed.to_string(), "cap": cap}),
        _ => json!({}),
    };
    match value {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn dispatch(config: &ExperimentConfig) -> Result<Report> {
    match config.kind {
        None => Err(Error::Invalid(
            "no experiment kind: give a subcommand or \"kind\" in --config".into(),
        )),
        Some(Kind::VerifySigma) => verify_sigma(config),
        Some(Kind::BuildMeasure) => build_measure(config),
        Some(Kind::VerifyBoundary) => verify_boundary(config),
        Some(Kind::NestedBuild) => nested_build(config),
        Some(Kind::Moments) => moments(config),
        Some(Kind::Kronecker) => kronecker_run(config),
    }
}

fn read_poly(path: &Path) -> Result<DirichletPolynomial> {
    parse_dirichlet_json(&io::read_to_string(path)?)
}

fn read_atoms(path: &Path) -> Result<AtomicLineMeasure> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    AtomicLineMeasure::load(std::io::BufReader::new(file))
}

fn growth(config: &ExperimentConfig) -> Result<Growth> {
    match &config.growth {
        None => Ok(Growth::PowerOfTwo),
        Some(s) => s.parse(),
    }
}

fn out_or(config: &ExperimentConfig, default: &str) -> PathBuf {
    config.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn f64_list(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| json!(v)).collect())
}

fn verify_sigma(config: &ExperimentConfig) -> Result<Report> {
    let f = read_poly(config.require(&config.poly, "poly")?)?;
    let sigma = *config.require(&config.sigma, "sigma")?;
    let grid = config.require(&config.t_grid, "t-grid")?;
    let tol = config.tol.unwrap_or(DEFAULT_SIGMA_TOL);
    let target = f.carlson_limit(sigma);
    let record = convergence_sweep(&f, LineMeasure::Lebesgue { sigma }, target, grid)?;
    let violations = record.mean_bound_violations(mean_upper_bound(&f));
    let final_error = record.final_error().unwrap_or(f64::INFINITY);
    let mut pass = final_error < tol && violations.is_empty();
    let mut metrics = json!({
        "sigma": sigma,
        "target": target,
        "final_abs_error": final_error,
        "tol": tol,
        "rows": record.rows.len(),
        "mean_bound_violations": violations.len(),
    });
    if let Some(samples) = config.mc_samples {
        // Parseval on the lift of f(σ + ·), sampled on the torus.
        let damped = DirichletPolynomial::new(
            f.basis().dimension(),
            f.terms().iter().map(|(&n, &a)| (n, a * (n as f64).powf(-sigma))),
        )?;
        let est = monte_carlo_space_average(&bohr_lift(&damped), samples, config.seed.unwrap_or(0))?;
        let covers = est.covers(target, 3.0);
        pass &= covers;
        metrics["mc_mean"] = json!(est.mean);
        metrics["mc_std_error"] = json!(est.std_error);
        metrics["mc_within_3se"] = json!(covers);
    }
    if let Some(out) = &config.out {
        write_atomic_bytes(out, record.to_csv().as_bytes())?;
    }
    Ok(Report::new(pass, metrics))
}

/// Whether `masses` follows the schedule of `growth` to relative `MASS_TRACE_TOL`.
pub fn mass_trace_matches(masses: &[f64], growth: Growth) -> bool {
    let Some((_, expected)) = growth.schedule(masses.len() as u32) else {
        return false;
    };
    masses
        .iter()
        .zip(&expected)
        .all(|(&m, &e)| (m - e as f64).abs() <= MASS_TRACE_TOL * e as f64)
}

fn build_measure(config: &ExperimentConfig) -> Result<Report> {
    let mu = parse_point_mass_json(&io::read_to_string(config.require(&config.mu, "mu")?)?)?;
    let levels = config.levels_checked()?;
    let growth = growth(config)?;
    let options = BuildOptions {
        growth,
        budget: config.budget_checked(MAX_BUDGET)?,
        ..BuildOptions::default()
    };
    let lambda = build_point_mass_lambda(&mu, levels, &options)?;
    let out = out_or(config, "atoms.jsonl");
    write_atomic(&out, |w| lambda.save(w))?;
    let pass = mass_trace_matches(lambda.total_mass_by_level(), growth);
    Ok(Report::new(
        pass,
        json!({
            "levels": levels,
            "growth": growth.to_string(),
            "atoms": lambda.len(),
            "mass_trace": f64_list(lambda.total_mass_by_level()),
            "boundaries": f64_list(lambda.level_boundaries()),
            "out": out.display().to_string(),
        }),
    ))
}

fn verify_boundary(config: &ExperimentConfig) -> Result<Report> {
    let f = read_poly(config.require(&config.poly, "poly")?)?;
    let lambda = read_atoms(config.require(&config.atoms, "atoms")?)?;
    let mu = parse_point_mass_json(&io::read_to_string(config.require(&config.mu, "mu")?)?)?;
    if let Some(a) = lambda.atoms().iter().find(|a| a.j as usize >= mu.len()) {
        return Err(Error::Invalid(format!(
            "atom at t = {} refers to ω_{} but μ has {} atoms",
            a.t,
            a.j,
            mu.len()
        )));
    }
    if lambda.levels() == 0 {
        return Err(Error::EmptyMeasure(0.0));
    }
    let lifted = bohr_lift(&f);
    let target = mu.space_average(&lifted)?;
    let record = convergence_sweep(&f, LineMeasure::Atomic(&lambda), target, lambda.level_boundaries())?;
    let masses = lambda.total_mass_by_level();
    let bounds: Vec<f64> = (1..=masses.len())
        .map(|k| point_mass_error_bound(&lifted, mu.dimension(), &masses[..k]))
        .collect();
    let within = record
        .rows
        .iter()
        .zip(&bounds)
        .filter(|(r, &b)| r.abs_error <= b)
        .count();
    let violations = record.mean_bound_violations(mean_upper_bound(&f));
    let pass = within == bounds.len() && violations.is_empty();
    if let Some(out) = &config.out {
        write_atomic_bytes(out, record.to_csv().as_bytes())?;
    }
    Ok(Report::new(
        pass,
        json!({
            "target": target,
            "final_abs_error": record.final_error(),
            "bounds": f64_list(&bounds),
            "rows_within_bound": within,
            "rows": record.rows.len(),
            "mean_bound_violations": violations.len(),
        }),
    ))
}

fn nested_build(config: &ExperimentConfig) -> Result<Report> {
    let text = io::read_to_string(config.require(&config.plan, "plan")?)?;
    let plan_json: PlanJson =
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("plan: {e}")))?;
    let plan = NestedConstructionPlan::from_json(&plan_json)?;
    let levels = config.levels_checked()?;
    let growth = growth(config)?;
    let options = BuildOptions {
        growth,
        budget: config.budget_checked(MAX_BUDGET)?,
        ..BuildOptions::default()
    };
    let built = build_nested_lambda(&plan, levels, &options)?;
    let out = out_or(config, "atoms.jsonl");
    write_atomic(&out, |w| built.lambda.save(w))?;
    if let Some(path) = &config.windows {
        write_atomic(path, |w| {
            writeln!(w, "level,index,t_lo,t_hi,estimate,tolerance,precision")?;
            for r in &built.windows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.level, r.index, r.t_lo, r.t_hi, r.estimate, r.tolerance, r.precision
                )?;
            }
            Ok(())
        })?;
    }
    let worst_ratio = built
        .windows
        .iter()
        .map(|w| w.estimate / w.tolerance)
        .fold(0.0, f64::max);
    let escalations = built.windows.iter().filter(|w| w.precision > w.level).count();
    let pass = worst_ratio < 1.0 && mass_trace_matches(built.lambda.total_mass_by_level(), growth);
    Ok(Report::new(
        pass,
        json!({
            "levels": levels,
            "growth": growth.to_string(),
            "atoms": built.lambda.len(),
            "windows": built.windows.len(),
            "worst_estimate_ratio": worst_ratio,
            "precision_escalations": escalations,
            "mass_trace": f64_list(built.lambda.total_mass_by_level()),
            "out": out.display().to_string(),
        }),
    ))
}

/// `"1,0:0,0;0,1:1,0"` → `[((1,0),(0,0)), ((0,1),(1,0))]`.
pub fn parse_pairs(text: &str) -> Result<Vec<(MultiIndex, MultiIndex)>> {
    let index = |s: &str| -> Result<MultiIndex> {
        s.split(',')
            .map(|e| {
                e.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Invalid(format!("bad exponent {e:?} in --pairs")))
            })
            .collect::<Result<Vec<u32>>>()
            .map(MultiIndex::new)
    };
    let pairs = text
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| match p.split_once(':') {
            Some((a, b)) => Ok((index(a)?, index(b)?)),
            None => Err(Error::Invalid(format!("pair {p:?} must be alpha:beta"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if pairs.is_empty() {
        return Err(Error::Invalid("--pairs lists no pairs".into()));
    }
    Ok(pairs)
}

fn moments(config: &ExperimentConfig) -> Result<Report> {
    let pairs = parse_pairs(config.require(&config.pairs, "pairs")?)?;
    let mu = match &config.mu {
        Some(path) => Some(parse_point_mass_json(&io::read_to_string(path)?)?),
        None => None,
    };
    let lebesgue = config.lebesgue.unwrap_or(false);
    let lambda = match (&config.atoms, lebesgue) {
        (Some(_), true) => return Err(Error::Invalid("--atoms and --lebesgue are exclusive".into())),
        (None, false) => return Err(Error::Invalid("moments requires --atoms or --lebesgue".into())),
        (Some(path), false) => Some(read_atoms(path)?),
        (None, true) => None,
    };
    let (line, t_max) = match &lambda {
        Some(l) => {
            let end = l.atoms().last().map(|a| a.t).unwrap_or(0.0);
            (LineMeasure::Atomic(l), config.t_max.unwrap_or(end))
        }
        None => (LineMeasure::Lebesgue { sigma: 0.0 }, *config.require(&config.t_max, "t-max")?),
    };
    let found = recover_moments(line, &pairs, t_max, mu.as_ref())?;

    let (tol, worst) = if lebesgue {
        let worst = found
            .iter()
            .filter(|m| m.alpha != m.beta)
            .map(|m| m.empirical.norm())
            .fold(0.0, f64::max);
        (config.tol.unwrap_or(DEFAULT_LEBESGUE_MOMENT_TOL), Some(worst))
    } else {
        let worst = found.iter().filter_map(|m| m.error()).reduce(f64::max);
        (config.tol.unwrap_or(DEFAULT_MOMENT_TOL), worst)
    };
    let pass = worst.map_or(true, |w| w < tol);

    if let Some(out) = &config.out {
        write_atomic(out, |w| {
            writeln!(w, "alpha,beta,empirical_re,empirical_im,reference_re,reference_im,abs_error")?;
            for m in &found {
                let (rr, ri, err) = match m.reference {
                    Some(Complex64 { re, im }) => (re.to_string(), im.to_string(), m.error().unwrap().to_string()),
                    None => (String::new(), String::new(), String::new()),
                };
                writeln!(
                    w,
                    "\"{}\",\"{}\",{},{},{rr},{ri},{err}",
                    m.alpha, m.beta, m.empirical.re, m.empirical.im
                )?;
            }
            Ok(())
        })?;
    }
    Ok(Report::new(
        pass,
        json!({
            "pairs": found.len(),
            "t_max": t_max,
            "tol": tol,
            "worst": worst,
            "measure": if lebesgue { "lebesgue" } else { "atomic" },
        }),
    ))
}

fn kronecker_run(config: &ExperimentConfig) -> Result<Report> {
    let dim = *config.require(&config.dim, "dim")?;
    let theta = config.require(&config.theta, "theta")?;
    if theta.len() != dim {
        return Err(Error::Invalid(format!(
            "--theta has {} angles, --dim is {dim}",
            theta.len()
        )));
    }
    let eps = config.eps_checked()?;
    let t_min = config.t_min.unwrap_or(0.0);
    let budget = config.budget_checked(DEFAULT_KRONECKER_BUDGET)?;
    let problem = KroneckerProblem::new(PrimeBasis::new(dim)?, theta.clone(), eps, t_min)?;
    let solution = kronecker::solve(&problem, budget)?;
    let line = json!({"t": solution.t, "residuals": solution.residuals, "q": solution.q});
    if let Some(out) = &config.out {
        write_atomic_bytes(out, format!("{line}\n").as_bytes())?;
    }
    let mut report = Report::new(
        solution.max_residual() < eps,
        json!({"max_residual": solution.max_residual(), "eps": eps, "scan_hit": solution.scan_hit}),
    );
    if let Value::Object(fields) = line {
        report.extra = fields;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_syntax() {
        let p = parse_pairs("1,0:0,0;0,1:1,0").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].0, MultiIndex::new(vec![1]));
        assert!(p[0].1.is_zero());
        assert_eq!(p[1].1, MultiIndex::new(vec![1]));
        assert!(parse_pairs("1,0").is_err());
        assert!(parse_pairs("a:0").is_err());
        assert!(parse_pairs("").is_err());
    }

    #[test]
    fn missing_kind_is_usage() {
        let outcome = run(&ExperimentConfig::default());
        assert_eq!(outcome.status, Status::Usage);
        assert!(!outcome.summary.pass);
    }

    #[test]
    fn kronecker_summary_carries_solution() {
        let config = ExperimentConfig {
            kind: Some(Kind::Kronecker),
            dim: Some(1),
            theta: Some(vec![0.0]),
            eps: Some(0.01),
            t_min: Some(10.0),
            ..Default::default()
        };
        let outcome = run(&config);
        assert_eq!(outcome.status, Status::Pass, "{:?}", outcome.summary);
        let line: Value = serde_json::from_str(&outcome.summary.to_line()).unwrap();
        assert!(line["t"].as_f64().unwrap() > 10.0);
        assert_eq!(line["q"].as_array().unwrap().len(), 1);
        assert_eq!(line["kind"], "kronecker");
    }

    #[test]
    fn kronecker_budget_is_status_three() {
        let config = ExperimentConfig {
            kind: Some(Kind::Kronecker),
            dim: Some(3),
            theta: Some(vec![1.0, 2.0, 3.0]),
            eps: Some(1e-3),
            budget: Some(10),
            ..Default::default()
        };
        let outcome = run(&config);
        assert_eq!(outcome.status, Status::Construction);
        assert!(outcome.summary.key_metrics.contains_key("best_residuals"));
    }

    #[test]
    fn mass_trace_check() {
        assert!(mass_trace_matches(&[2.0, 10.0, 90.0, 1530.0], Growth::PowerOfTwo));
        assert!(!mass_trace_matches(&[2.0, 10.0, 91.0], Growth::PowerOfTwo));
        assert!(mass_trace_matches(&[2.0, 6.0, 18.0], Growth::Constant(2)));
    }
}
