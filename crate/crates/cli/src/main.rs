//! `qvcss`: simulate datasets, fit the samplers, score fits, check
//! convergence and run replicate studies.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qvcss::ald::QuantileLevel;
use qvcss::config::{Method, RunConfig};
use qvcss::diagnostics::{diagnose, CHECKPOINT_STEP};
use qvcss::exec::Execution;
use qvcss::io::{
    read_curves_csv, read_dataset_csv, read_json, read_samples, write_curves_csv, write_dataset_csv, write_json,
    write_samples,
};
use qvcss::metrics::{aggregate, FitMetrics};
use qvcss::simulate::{simulate_dataset, CovariateKind, ErrorKind, MixtureScale, ScenarioSpec};
use qvcss::study::{evaluate, fit, run_study, write_study_tables, FitSummary, StudyConfig, Truth};

const DATASET_FILE: &str = "dataset.csv";
const TRUTH_FILE: &str = "truth.json";
const SCENARIO_FILE: &str = "scenario.json";
const SAMPLES_FILE: &str = "samples.bin";
const SUMMARY_FILE: &str = "summary.json";
const CURVES_FILE: &str = "curves.csv";

#[derive(Parser)]
#[command(name = "qvcss", version, about = "Bayesian regularized quantile varying-coefficient models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated dataset with its truth.
    Simulate(SimulateArgs),
    /// Run the sampler on a dataset and summarize the posterior.
    Fit(FitArgs),
    /// Score one or more fits against the simulation truth.
    Evaluate(EvaluateArgs),
    /// Gelman–Rubin diagnostics for a fit.
    Diagnose(DiagnoseArgs),
    /// Replicate study over scenarios and methods.
    ReplicateStudy(StudyArgs),
}

#[derive(Args)]
struct OutputDir {
    /// Output directory.
    #[arg(long, short, env = "QVCSS_OUTPUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// gene or snp
    #[arg(long)]
    covariates: Option<String>,
    /// normal, normal_mixture, laplace, lognormal or t2
    #[arg(long)]
    errors: Option<String>,
    #[arg(long)]
    heteroscedastic: bool,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the high-frequency intercept curve.
    #[arg(long)]
    hard: bool,
    /// Read the wide mixture component's 3 as a standard deviation.
    #[arg(long)]
    mixture_sd: bool,
    #[command(flatten)]
    output: OutputDir,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset CSV (columns V, E_1..E_q, X_1..X_p, Y).
    #[arg(long)]
    data: PathBuf,
    /// Run configuration JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bqrvcss, bqrvc, bvcss or bvc
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Spline degree.
    #[arg(long)]
    degree: Option<usize>,
    /// Number of interior knots.
    #[arg(long)]
    knots: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Run chains one after another.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    output: OutputDir,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Fit directory (repeatable for batch mode).
    #[arg(long = "fit", required = true)]
    fits: Vec<PathBuf>,
    /// Truth JSON: one shared by all fits, or one per fit.
    #[arg(long = "truth", required = true)]
    truths: Vec<PathBuf>,
    #[command(flatten)]
    output: OutputDir,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Fit directory.
    #[arg(long)]
    fit: PathBuf,
    /// Split each chain in halves (allows a single chain).
    #[arg(long)]
    split: bool,
    /// Trace spacing in stored draws.
    #[arg(long, default_value_t = CHECKPOINT_STEP)]
    checkpoint_step: usize,
    #[command(flatten)]
    output: OutputDir,
}

#[derive(Args)]
struct StudyArgs {
    /// Study configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Run replicates one after another.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    output: OutputDir,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::ReplicateStudy(a) => cmd_replicate_study(a),
    }
}

fn load_or_default<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(read_json(p).with_context(|| format!("reading config {}", p.display()))?),
        None => Ok(T::default()),
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut spec: ScenarioSpec = load_or_default(a.config.as_deref())?;
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(p) = a.p {
        spec.p = p;
    }
    if let Some(c) = &a.covariates {
        spec.covariate_kind = c.parse::<CovariateKind>()?;
    }
    if let Some(e) = &a.errors {
        spec.error_kind = e.parse::<ErrorKind>()?;
    }
    if a.heteroscedastic {
        spec.heteroscedastic = true;
    }
    if let Some(t) = a.tau {
        spec.tau = QuantileLevel::new(t)?;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if a.hard {
        spec.hard_intercept = true;
    }
    if a.mixture_sd {
        spec.mixture_scale = MixtureScale::Sd;
    }
    let sim = simulate_dataset(&spec)?;
    let out = &a.output.out;
    write_dataset_csv(&out.join(DATASET_FILE), &sim.dataset)?;
    write_json(&out.join(TRUTH_FILE), &Truth::from_spec(&spec))?;
    write_json(&out.join(SCENARIO_FILE), &spec)?;
    println!(
        "wrote {} ({} rows, p = {}) and {}",
        out.join(DATASET_FILE).display(),
        spec.n,
        spec.p,
        out.join(TRUTH_FILE).display()
    );
    Ok(())
}

fn fit_config(a: &FitArgs) -> Result<RunConfig> {
    let mut cfg: RunConfig = load_or_default(a.config.as_deref())?;
    if let Some(m) = &a.method {
        cfg.method = m.parse::<Method>()?;
    }
    if let Some(t) = a.tau {
        cfg.tau = QuantileLevel::new(t)?;
    }
    if let Some(v) = a.iterations {
        cfg.mcmc.iterations = v;
    }
    if let Some(v) = a.burn_in {
        cfg.mcmc.burn_in = v;
    }
    if let Some(v) = a.thin {
        cfg.mcmc.thin = v;
    }
    if let Some(v) = a.chains {
        cfg.mcmc.chains = v;
    }
    if let Some(v) = a.seed {
        cfg.mcmc.seed = v;
    }
    if let Some(v) = a.degree {
        cfg.spline.degree = v;
    }
    if let Some(v) = a.knots {
        cfg.spline.interior_knots = v;
    }
    if let Some(v) = a.grid_points {
        cfg.grid_points = v;
    }
    if a.sequential {
        cfg.execution = Execution::Sequential;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let cfg = fit_config(&a)?;
    let dataset = read_dataset_csv(&a.data)?;
    let out = fit(&dataset, &cfg)?;
    let dir = &a.output.out;
    write_samples(&dir.join(SAMPLES_FILE), &out.samples)?;
    write_curves_csv(&dir.join(CURVES_FILE), &out.curves)?;
    let mut summary = serde_json::to_value(&out.summary)?;
    summary["data"] = json!(a.data.display().to_string());
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    let sel = &out.summary.selection;
    println!(
        "{}: {} chain(s) x {} draws in {:.2}s; {:?} selection {:?}",
        cfg.method,
        out.samples.chains.len(),
        out.samples.draws(),
        out.summary.sampling_seconds,
        sel.rule,
        sel.selected
    );
    Ok(())
}

fn read_summary(dir: &Path) -> Result<FitSummary> {
    let path = dir.join(SUMMARY_FILE);
    read_json(&path).with_context(|| format!("reading fit summary {}", path.display()))
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    if a.truths.len() != 1 && a.truths.len() != a.fits.len() {
        bail!("give one truth file for all fits or one per fit ({} fits, {} truths)", a.fits.len(), a.truths.len());
    }
    let mut per_fit = Vec::new();
    let mut metrics: Vec<FitMetrics> = Vec::new();
    for (k, dir) in a.fits.iter().enumerate() {
        let truth_path = &a.truths[if a.truths.len() == 1 { 0 } else { k }];
        if !truth_path.exists() {
            bail!("truth file {} not found", truth_path.display());
        }
        let truth: Truth = read_json(truth_path).with_context(|| format!("reading truth {}", truth_path.display()))?;
        let summary = read_summary(dir)?;
        let curves = read_curves_csv(&dir.join(CURVES_FILE))?;
        let m = evaluate(&summary.selection.selected, &curves, &truth)?;
        per_fit.push(json!({
            "fit": dir.display().to_string(),
            "truth": truth_path.display().to_string(),
            "config": summary.config,
            "metrics": m,
        }));
        println!(
            "{}: {} TIMSE {:.4} selected {:?}",
            dir.display(),
            m.classification.label(),
            m.timse,
            m.selected
        );
        metrics.push(m);
    }
    let mut report = json!({ "fits": per_fit });
    if metrics.len() > 1 {
        let agg = aggregate(&metrics)?;
        println!("C {:.2} O {:.2} U {:.2} TIMSE {}", agg.c, agg.o, agg.u, agg.timse);
        report["aggregate"] = serde_json::to_value(agg)?;
    }
    write_json(&a.output.out.join("metrics.json"), &report)?;
    Ok(())
}

fn cmd_diagnose(a: DiagnoseArgs) -> Result<()> {
    let summary = read_summary(&a.fit)?;
    let samples = read_samples(&a.fit.join(SAMPLES_FILE))?;
    if !a.split && samples.chains.len() < 2 {
        bail!(
            "{} has a single chain; PSRF needs at least two chains, or rerun with --split to halve the chain",
            a.fit.display()
        );
    }
    let cfg = &summary.config;
    let report = diagnose(&samples, a.split, a.checkpoint_step, cfg.inclusion_threshold, cfg.credible_level)?;
    let mut value: Value = serde_json::to_value(&report)?;
    value["config"] = serde_json::to_value(cfg)?;
    write_json(&a.output.out.join("psrf.json"), &value)?;
    println!(
        "{} parameters tracked, max PSRF {:.4}, {}",
        report.parameters.len(),
        report.max_psrf,
        if report.converged { "converged (all <= 1.1)" } else { "not converged" }
    );
    Ok(())
}

fn cmd_replicate_study(a: StudyArgs) -> Result<()> {
    let study: StudyConfig = read_json(&a.config).with_context(|| format!("reading study {}", a.config.display()))?;
    let exec = if a.sequential { Execution::Sequential } else { study.run.execution };
    let dir = &a.output.out;
    let result = run_study(&study, Some(dir), exec)?;
    write_study_tables(dir, &result)?;
    write_json(&dir.join("study.json"), &json!({ "config": study, "result": result }))?;
    for row in &result.aggregates {
        let m = &row.metrics;
        println!(
            "{} {}: C {:.2} O {:.2} U {:.2} TIMSE {}",
            row.scenario, row.method, m.c, m.o, m.u, m.timse
        );
    }
    Ok(())
}
