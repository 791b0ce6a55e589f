//! End-to-end pipelines: fit a dataset, score a fit against the simulation
//! truth, and run resumable replicate studies over a scenario grid.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::uniform_grid;
use crate::config::{Method, RunConfig};
use crate::data::Dataset;
use crate::diagnostics::{diagnose, CHECKPOINT_STEP};
use crate::exec::Execution;
use crate::inference::{
    ci_selection, curve_estimates, inclusion_probabilities, posterior_scalar_summaries, CurveEstimate,
    InclusionSummary, ScalarSummary,
};
use crate::io::{read_json, write_json};
use crate::metrics::{aggregate, evaluate_fit, AggregateMetrics, FitMetrics};
use crate::sampler::{sample_posterior_with, PosteriorSamples};
use crate::simulate::{simulate_dataset, ScenarioSpec, TrueCurves};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionRule {
    /// Median probability model.
    Mpm,
    /// Credible interval excluding zero.
    Ci,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub rule: SelectionRule,
    pub selected: Vec<usize>,
    /// Present for the median probability model.
    pub inclusion: Option<InclusionSummary>,
    pub credible_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainInfo {
    pub chain: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub draws: usize,
}

/// Everything about a fit except the raw draws and curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub config: RunConfig,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub chains: Vec<ChainInfo>,
    pub selection: Selection,
    pub scalars: Vec<ScalarSummary>,
    pub sampling_seconds: f64,
    pub summary_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub samples: PosteriorSamples,
    pub curves: Vec<CurveEstimate>,
    pub summary: FitSummary,
}

/// Selection according to the sampler: MPM with spikes, CI otherwise.
pub fn selection(samples: &PosteriorSamples, config: &RunConfig) -> Result<Selection> {
    if samples.method.has_spike() {
        let inc = inclusion_probabilities(samples, config.inclusion_threshold)?;
        Ok(Selection {
            rule: SelectionRule::Mpm,
            selected: inc.selected.clone(),
            inclusion: Some(inc),
            credible_level: config.credible_level,
        })
    } else {
        Ok(Selection {
            rule: SelectionRule::Ci,
            selected: ci_selection(samples, config.credible_level)?,
            inclusion: None,
            credible_level: config.credible_level,
        })
    }
}

/// Summaries of existing draws.
pub fn summarize(samples: PosteriorSamples, config: &RunConfig, sampling_seconds: f64) -> Result<FitOutput> {
    let start = Instant::now();
    let selection = selection(&samples, config)?;
    let curves = curve_estimates(&samples, config.grid_points, config.credible_level, config.execution)?;
    let scalars = posterior_scalar_summaries(&samples, config.credible_level)?;
    let summary = FitSummary {
        config: config.clone(),
        n: samples.n,
        p: samples.p,
        q: samples.q,
        d: samples.d,
        chains: samples
            .chains
            .iter()
            .map(|c| ChainInfo {
                chain: c.chain,
                seed: c.seed,
                stream_id: c.stream_id,
                draws: c.draws,
            })
            .collect(),
        selection,
        scalars,
        sampling_seconds,
        summary_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(FitOutput {
        samples,
        curves,
        summary,
    })
}

/// Samples all chains and summarizes them.
pub fn fit(dataset: &Dataset, config: &RunConfig) -> Result<FitOutput> {
    fit_with(dataset, config, config.execution)
}

pub fn fit_with(dataset: &Dataset, config: &RunConfig, execution: Execution) -> Result<FitOutput> {
    config.validate()?;
    let start = Instant::now();
    let samples = sample_posterior_with(dataset, config, execution)?;
    let secs = start.elapsed().as_secs_f64();
    let cfg = RunConfig {
        execution,
        ..config.clone()
    };
    summarize(samples, &cfg, secs)
}

/// Simulation truth as persisted next to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub spec: ScenarioSpec,
    pub curves: TrueCurves,
    pub support: Vec<usize>,
}

impl Truth {
    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        let curves = spec.curves();
        Self {
            spec: spec.clone(),
            support: curves.support(),
            curves,
        }
    }
}

/// Scores curves and a selection against the truth. Curves must cover
/// `0..=p` on a common grid.
pub fn evaluate(selected: &[usize], curves: &[CurveEstimate], truth: &Truth) -> Result<FitMetrics> {
    if curves.len() != truth.curves.p + 1 || curves.iter().enumerate().any(|(j, c)| c.j != j) {
        return Err(Error::DimensionMismatch(format!(
            "expected curves 0..={} for the truth, found {}",
            truth.curves.p,
            curves.len()
        )));
    }
    let grid = &curves[0].grid;
    if curves.iter().any(|c| &c.grid != grid) {
        return Err(Error::Inconsistent("curves use different grids".into()));
    }
    let truth_curves = truth.curves.on_grid(grid);
    evaluate_fit(selected, &truth.support, curves, &truth_curves)
}

/// Scenario grid × methods × replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub scenarios: Vec<ScenarioSpec>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    /// Replicate `r` uses seed `seed_base + r` for both data and chains.
    pub seed_base: u64,
    /// Template for every fit; `method`, `tau` and the seed are overridden.
    pub run: RunConfig,
    /// Compute PSRF for each fit (needs `run.mcmc.chains ≥ 2`).
    pub diagnose: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            scenarios: vec![ScenarioSpec::default()],
            methods: vec![Method::Bqrvcss],
            replicates: 10,
            seed_base: 1,
            run: RunConfig::default(),
            diagnose: false,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() || self.methods.is_empty() || self.replicates == 0 {
            return Err(Error::invalid("study needs at least one scenario, method and replicate"));
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        if self.diagnose && self.run.mcmc.chains < 2 {
            return Err(Error::invalid("diagnostics in a study need at least two chains"));
        }
        self.run.validate()
    }

    /// Run configuration of one task.
    pub fn task_config(&self, task: &StudyTask) -> RunConfig {
        let mut cfg = self.run.clone();
        cfg.method = task.method;
        cfg.tau = self.scenarios[task.scenario].tau;
        cfg.mcmc.seed = task.seed;
        cfg
    }

    pub fn task_spec(&self, task: &StudyTask) -> ScenarioSpec {
        ScenarioSpec {
            seed: task.seed,
            ..self.scenarios[task.scenario].clone()
        }
    }

    pub fn tasks(&self) -> Vec<StudyTask> {
        let mut out = Vec::new();
        for scenario in 0..self.scenarios.len() {
            for &method in &self.methods {
                for replicate in 0..self.replicates {
                    out.push(StudyTask {
                        scenario,
                        method,
                        replicate,
                        seed: self.seed_base + replicate as u64,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyTask {
    pub scenario: usize,
    pub method: Method,
    pub replicate: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsrfSummary {
    pub converged: bool,
    pub max_psrf: f64,
    pub tracked: usize,
}

/// Outcome of one replicate fit; also the on-disk manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub scenario: String,
    pub method: Method,
    pub replicate: usize,
    pub seed: u64,
    pub config: RunConfig,
    pub spec: ScenarioSpec,
    pub metrics: FitMetrics,
    pub psrf: Option<PsrfSummary>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: String,
    pub method: Method,
    pub metrics: AggregateMetrics,
    /// Fraction of replicates whose tracked PSRF all pass the cutoff.
    pub psrf_converged: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub fits: Vec<ReplicateResult>,
    pub aggregates: Vec<AggregateRow>,
}

/// Fits one task from scratch.
pub fn run_task(study: &StudyConfig, task: &StudyTask, inner: Execution) -> Result<ReplicateResult> {
    let start = Instant::now();
    let spec = study.task_spec(task);
    let cfg = study.task_config(task);
    let sim = simulate_dataset(&spec)?;
    let out = fit_with(&sim.dataset, &cfg, inner)?;
    let truth = Truth::from_spec(&spec);
    let metrics = evaluate(&out.summary.selection.selected, &out.curves, &truth)?;
    let psrf = if study.diagnose {
        let rep = diagnose(&out.samples, false, CHECKPOINT_STEP, cfg.inclusion_threshold, cfg.credible_level)?;
        Some(PsrfSummary {
            converged: rep.converged,
            max_psrf: rep.max_psrf,
            tracked: rep.parameters.len(),
        })
    } else {
        None
    };
    Ok(ReplicateResult {
        scenario: spec.label(),
        method: task.method,
        replicate: task.replicate,
        seed: task.seed,
        config: cfg,
        spec,
        metrics,
        psrf,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn manifest_path(dir: &Path, study: &StudyConfig, task: &StudyTask) -> PathBuf {
    dir.join("manifests").join(format!(
        "{}-{}-r{:04}.json",
        study.task_spec(task).label(),
        task.method,
        task.replicate
    ))
}

/// Reuses a manifest only if it was produced by the same task settings.
fn load_manifest(path: &Path, study: &StudyConfig, task: &StudyTask) -> Option<ReplicateResult> {
    let r: ReplicateResult = read_json(path).ok()?;
    let same = r.config == study.task_config(task) && r.spec == study.task_spec(task) && (r.psrf.is_some() == study.diagnose);
    same.then_some(r)
}

/// Runs every task, reusing manifests in `out_dir/manifests` and writing one
/// per completed task, so an interrupted study resumes where it stopped.
pub fn run_study(study: &StudyConfig, out_dir: Option<&Path>, execution: Execution) -> Result<StudyResult> {
    study.validate()?;
    let tasks = study.tasks();
    let fits = execution.try_map(tasks.len(), |k| {
        let task = &tasks[k];
        if let Some(dir) = out_dir {
            let path = manifest_path(dir, study, task);
            if let Some(done) = load_manifest(&path, study, task) {
                return Ok(done);
            }
            let res = run_task(study, task, Execution::Sequential)?;
            write_json(&path, &res)?;
            Ok(res)
        } else {
            run_task(study, task, Execution::Sequential)
        }
    })?;
    let aggregates = aggregate_results(&fits)?;
    Ok(StudyResult { fits, aggregates })
}

/// Groups replicate results by scenario and method, in first-seen order.
pub fn aggregate_results(fits: &[ReplicateResult]) -> Result<Vec<AggregateRow>> {
    let mut keys: Vec<(String, Method)> = Vec::new();
    for f in fits {
        let k = (f.scenario.clone(), f.method);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(scenario, method)| {
            let group: Vec<&ReplicateResult> =
                fits.iter().filter(|f| f.scenario == scenario && f.method == method).collect();
            let metrics: Vec<FitMetrics> = group.iter().map(|f| f.metrics.clone()).collect();
            let psrf: Vec<bool> = group.iter().filter_map(|f| f.psrf.map(|p| p.converged)).collect();
            Ok(AggregateRow {
                psrf_converged: (!psrf.is_empty())
                    .then(|| psrf.iter().filter(|&&c| c).count() as f64 / psrf.len() as f64),
                metrics: aggregate(&metrics)?,
                scenario,
                method,
            })
        })
        .collect()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

fn join_indices(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// Coverage columns reported in the tables: the intercept and the three
/// nonzero curves.
const TABLE_CURVES: usize = 4;

/// `fits.csv` (one row per replicate) and `summary.csv` (one row per
/// scenario and method).
pub fn write_study_tables(dir: &Path, result: &StudyResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cov_headers: Vec<String> = (0..TABLE_CURVES).map(|j| format!("coverage_gamma{j}")).collect();
    let cov_cells = |c: &[f64]| -> Vec<String> {
        (0..TABLE_CURVES).map(|j| c.get(j).map_or(String::new(), |v| format!("{v:.3}"))).collect()
    };

    let path = dir.join("fits.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    let mut header: Vec<String> = ["scenario", "method", "replicate", "seed", "fit", "timse", "selected"]
        .map(String::from)
        .to_vec();
    header.extend(cov_headers.iter().cloned());
    header.extend(["psrf_max", "psrf_converged", "wall_seconds"].map(String::from));
    w.write_record(&header).map_err(|e| csv_err(&path, e))?;
    for f in &result.fits {
        let mut row = vec![
            f.scenario.clone(),
            f.method.to_string(),
            f.replicate.to_string(),
            f.seed.to_string(),
            f.metrics.classification.label().to_string(),
            format!("{:.6}", f.metrics.timse),
            join_indices(&f.metrics.selected),
        ];
        row.extend(cov_cells(&f.metrics.coverage));
        row.push(f.psrf.map_or(String::new(), |p| format!("{:.4}", p.max_psrf)));
        row.push(f.psrf.map_or(String::new(), |p| p.converged.to_string()));
        row.push(format!("{:.3}", f.wall_seconds));
        w.write_record(&row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    let mut header: Vec<String> = ["scenario", "method", "replicates", "C", "O", "U", "TIMSE", "timse_mean", "timse_sd"]
        .map(String::from)
        .to_vec();
    header.extend(cov_headers);
    header.push("psrf_converged".into());
    w.write_record(&header).map_err(|e| csv_err(&path, e))?;
    for a in &result.aggregates {
        let m = &a.metrics;
        let mut row = vec![
            a.scenario.clone(),
            a.method.to_string(),
            m.replicates.to_string(),
            format!("{:.2}", m.c),
            format!("{:.2}", m.o),
            format!("{:.2}", m.u),
            m.timse.clone(),
            format!("{:.6}", m.timse_mean),
            format!("{:.6}", m.timse_sd),
        ];
        row.extend(cov_cells(&m.coverage));
        row.push(a.psrf_converged.map_or(String::new(), |c| format!("{c:.2}")));
        w.write_record(&row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Uniform curve grid used by fits with `grid_points` points.
pub fn curve_grid(grid_points: usize) -> Vec<f64> {
    uniform_grid(grid_points)
}
