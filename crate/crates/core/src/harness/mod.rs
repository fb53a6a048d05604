//! Experiment runner: repeated BO loops on a benchmark, metrics and trace files.

mod session;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use session::{suggest_file, update_file, BoSession, Evaluation, PendingBatch, PendingKind};

use crate::acquisition::{AcquisitionKind, MaximizeBudget};
use crate::benchmarks::{self, Benchmark};
use crate::error::{parse_json, Error, Result};
use crate::gp::{Domain, DEFAULT_FEATURES};
use crate::hyperposterior::{McmcConfig, PriorSpec};
use crate::strategies::{BatchConfig, PointProvenance, Strategy};

pub const EXTERNAL: &str = "external";
pub const REGRET_FLOOR: f64 = 1e-6;
pub const CSV_HEADER: [&str; 7] = ["rep", "iter", "evals", "best", "regret", "batch_diversity", "wallclock_ms"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in benchmark name, or `external` for ask/tell use.
    pub benchmark: String,
    /// Search box; required for `external`, ignored otherwise.
    pub domain: Option<Domain>,
    pub strategy: Strategy,
    pub batch_size: usize,
    pub s: usize,
    pub acquisition_kind: AcquisitionKind,
    pub enhance_p: f64,
    pub jitter_p: f64,
    pub n_features: usize,
    pub n_iterations: usize,
    pub n_repetitions: usize,
    pub n_init: usize,
    pub root_seed: u64,
    pub output: Option<PathBuf>,
    /// Off makes trace files byte-reproducible.
    pub record_wallclock: bool,
    pub mcmc: McmcConfig,
    pub prior: PriorSpec,
    pub budget: MaximizeBudget,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let b = BatchConfig::default();
        Self {
            benchmark: "branin".into(),
            domain: None,
            strategy: b.strategy,
            batch_size: b.batch_size,
            s: b.s,
            acquisition_kind: b.acquisition_kind,
            enhance_p: b.enhance_p,
            jitter_p: b.jitter_p,
            n_features: DEFAULT_FEATURES,
            n_iterations: 10,
            n_repetitions: 10,
            n_init: 5,
            root_seed: 0,
            output: None,
            record_wallclock: true,
            mcmc: b.mcmc,
            prior: b.prior,
            budget: b.budget,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_json("config", text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Batch settings for one iteration seeded with `seed`.
    pub fn batch_config(&self, seed: u64) -> BatchConfig {
        BatchConfig {
            batch_size: self.batch_size,
            s: self.s,
            acquisition_kind: self.acquisition_kind,
            strategy: self.strategy,
            enhance_p: self.enhance_p,
            jitter_p: self.jitter_p,
            root_seed: seed,
            n_features: self.n_features,
            mcmc: self.mcmc.clone(),
            prior: self.prior.clone(),
            budget: self.budget.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_init == 0 || self.n_iterations == 0 || self.n_repetitions == 0 {
            return Err(Error::Config(
                "n_init, n_iterations and n_repetitions must be at least 1".into(),
            ));
        }
        let dim = self.resolve_domain()?.dim();
        self.batch_config(self.root_seed).validate()?;
        self.mcmc.validate(dim + 2)
    }

    pub fn is_external(&self) -> bool {
        self.benchmark.eq_ignore_ascii_case(EXTERNAL)
    }

    pub fn resolve_benchmark(&self) -> Result<Option<Benchmark>> {
        if self.is_external() {
            return Ok(None);
        }
        benchmarks::lookup(&self.benchmark).map(Some)
    }

    pub fn resolve_domain(&self) -> Result<Domain> {
        match (self.resolve_benchmark()?, &self.domain) {
            (Some(b), None) => Ok(b.domain()),
            (Some(b), Some(_)) => Err(Error::Config(format!(
                "`domain` is only allowed with the external objective, not `{}`",
                b.name
            ))),
            (None, Some(d)) => Ok(d.clone()),
            (None, None) => Err(Error::Config("the external objective needs a `domain`".into())),
        }
    }

    pub fn min_value(&self) -> Option<f64> {
        self.resolve_benchmark().ok().flatten().map(|b| b.min_value)
    }
}

pub fn regret(best: f64, min_value: Option<f64>) -> Option<f64> {
    min_value.map(|m| (best - m).max(REGRET_FLOOR))
}

/// Mean over points of the mean ℓ2 distance to the other points; `None` for
/// fewer than two points.
pub fn intra_batch_distance(points: &[Vec<f64>]) -> Option<f64> {
    let m = points.len();
    if m < 2 {
        return None;
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let total: f64 = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| dist(p, q))
                .sum::<f64>()
                / (m - 1) as f64
        })
        .sum();
    Some(total / m as f64)
}

/// Per-point record kept in the trace, without the θ vectors themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceSummary {
    pub theta_draw: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_pick: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jitter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coin: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hallucination: Option<f64>,
    pub acquisition_value: f64,
}

impl From<&PointProvenance> for ProvenanceSummary {
    fn from(p: &PointProvenance) -> Self {
        Self {
            theta_draw: p.theta_draw,
            theta_pick: p.theta_pick,
            jitter: p.jitter.map(|j| j.value),
            coin: p.coin,
            hallucination: p.hallucination,
            acquisition_value: p.acquisition_value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub evals: usize,
    pub best: f64,
    pub regret: Option<f64>,
    pub batch_diversity: Option<f64>,
    pub wallclock_ms: f64,
    pub points: Vec<Vec<f64>>,
    pub provenance: Vec<ProvenanceSummary>,
}

impl IterationRecord {
    /// Row for a batch that `session` has just absorbed.
    pub fn after_update(session: &BoSession, batch: &PendingBatch, wallclock_ms: f64) -> Self {
        let best = session.dataset.best().expect("dataset is non-empty after an update");
        let unit: Vec<Vec<f64>> = batch.points.iter().map(|p| session.domain().to_unit(p)).collect();
        Self {
            iter: session.iteration,
            evals: session.dataset.len(),
            best,
            regret: regret(best, session.config.min_value()),
            batch_diversity: intra_batch_distance(&unit),
            wallclock_ms,
            points: batch.points.clone(),
            provenance: batch.provenance.iter().map(ProvenanceSummary::from).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// Iteration that was being computed.
    pub iter: usize,
    pub evals: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionTrace {
    pub rep: usize,
    pub rep_seed: u64,
    pub initial_points: Vec<Vec<f64>>,
    pub initial_best: Option<f64>,
    pub iterations: Vec<IterationRecord>,
    pub failure: Option<Failure>,
}

impl RepetitionTrace {
    pub fn final_best(&self) -> Option<f64> {
        self.iterations.last().map(|r| r.best)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub config: ExperimentConfig,
    pub repetitions: Vec<RepetitionTrace>,
}

impl ExperimentTrace {
    pub fn successful(&self) -> impl Iterator<Item = &RepetitionTrace> {
        self.repetitions.iter().filter(|r| r.failure.is_none())
    }

    /// Mean over successful repetitions of the final best value.
    pub fn mean_final_best(&self) -> Option<f64> {
        let v: Vec<f64> = self.successful().filter_map(RepetitionTrace::final_best).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Runs every repetition of a built-in benchmark experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentTrace> {
    cfg.validate()?;
    let bench = cfg
        .resolve_benchmark()?
        .ok_or_else(|| Error::Config("`run` needs a built-in benchmark; use suggest/update for external objectives".into()))?;
    let repetitions = (0..cfg.n_repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(cfg, rep, |x| bench.evaluate(x)))
        .collect();
    Ok(ExperimentTrace {
        config: cfg.clone(),
        repetitions,
    })
}

fn evaluate_all<F>(points: &[Vec<f64>], objective: &F) -> Result<Vec<Evaluation>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    points
        .iter()
        .map(|x| Ok(Evaluation { x: x.clone(), y: objective(x)? }))
        .collect()
}

/// One BO run driven through a [`BoSession`]; errors end the run with a
/// recorded failure.
pub fn run_repetition<F>(cfg: &ExperimentConfig, rep: usize, objective: F) -> RepetitionTrace
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut trace = RepetitionTrace {
        rep,
        rep_seed: 0,
        initial_points: Vec::new(),
        initial_best: None,
        iterations: Vec::new(),
        failure: None,
    };
    let mut session = match BoSession::new(cfg.clone(), rep) {
        Ok(s) => s,
        Err(e) => {
            trace.failure = Some(Failure { iter: 0, evals: 0, message: e.to_string() });
            return trace;
        }
    };
    trace.rep_seed = session.rep_seed;
    let result = (|| -> Result<()> {
        let init = session.suggest()?.points.clone();
        session.update(&evaluate_all(&init, &objective)?)?;
        trace.initial_points = init;
        trace.initial_best = session.dataset.best();
        while !session.finished() {
            let start = Instant::now();
            let batch = session.suggest()?.clone();
            let evals = evaluate_all(&batch.points, &objective)?;
            session.update(&evals)?;
            let ms = if cfg.record_wallclock {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            trace.iterations.push(IterationRecord::after_update(&session, &batch, ms));
        }
        Ok(())
    })();
    if let Err(e) = result {
        trace.failure = Some(Failure {
            iter: session.iteration + 1,
            evals: session.dataset.len(),
            message: e.to_string(),
        });
    }
    trace
}

/// Cross-repetition statistics for one iteration; failed repetitions excluded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iter: usize,
    pub evals: usize,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean_best: f64,
    pub se_best: f64,
    pub mean_regret: Option<f64>,
    pub se_regret: Option<f64>,
    pub mean_batch_diversity: Option<f64>,
}

/// Mean and standard error (sample standard deviation over √n; 0 for n = 1).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn aggregate(trace: &ExperimentTrace) -> Vec<AggregateRow> {
    let ok: Vec<&RepetitionTrace> = trace.successful().collect();
    let n_failed = trace.repetitions.len() - ok.len();
    let Some(first) = ok.first() else {
        return Vec::new();
    };
    (0..first.iterations.len())
        .map(|k| {
            let rows: Vec<&IterationRecord> = ok.iter().map(|r| &r.iterations[k]).collect();
            let best: Vec<f64> = rows.iter().map(|r| r.best).collect();
            let regret: Option<Vec<f64>> = rows.iter().map(|r| r.regret).collect();
            let div: Option<Vec<f64>> = rows.iter().map(|r| r.batch_diversity).collect();
            let (mean_best, se_best) = mean_se(&best);
            let reg = regret.map(|v| mean_se(&v));
            AggregateRow {
                iter: rows[0].iter,
                evals: rows[0].evals,
                n_ok: ok.len(),
                n_failed,
                mean_best,
                se_best,
                mean_regret: reg.map(|r| r.0),
                se_regret: reg.map(|r| r.1),
                mean_batch_diversity: div.map(|v| mean_se(&v).0),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow {
    rep: usize,
    iter: usize,
    evals: usize,
    best: Option<f64>,
    regret: Option<f64>,
    batch_diversity: Option<f64>,
    wallclock_ms: Option<f64>,
}

/// Per-iteration CSV; a failed repetition ends with a row of empty metrics.
pub fn write_trace_csv<W: std::io::Write>(trace: &ExperimentTrace, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rep in &trace.repetitions {
        for r in &rep.iterations {
            w.serialize(CsvRow {
                rep: rep.rep,
                iter: r.iter,
                evals: r.evals,
                best: Some(r.best),
                regret: r.regret,
                batch_diversity: r.batch_diversity,
                wallclock_ms: Some(r.wallclock_ms),
            })?;
        }
        if let Some(f) = &rep.failure {
            w.serialize(CsvRow {
                rep: rep.rep,
                iter: f.iter,
                evals: f.evals,
                best: None,
                regret: None,
                batch_diversity: None,
                wallclock_ms: None,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: std::io::Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "iter", "evals", "n_ok", "n_failed", "mean_best", "se_best", "mean_regret", "se_regret",
            "mean_batch_diversity",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `trace.csv`, `trace.json` (config and provenance) and `summary.csv` into `dir`.
pub fn write_outputs(trace: &ExperimentTrace, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trace_csv(trace, fs::File::create(dir.join("trace.csv"))?)?;
    let json = serde_json::to_string_pretty(trace).expect("trace serializes");
    fs::write(dir.join("trace.json"), json)?;
    write_summary_csv(&aggregate(trace), fs::File::create(dir.join("summary.csv"))?)?;
    Ok(())
}
