//! Ask/tell optimization session: the loop state between a suggestion and
//! the evaluations that answer it.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{parse_json, Error, Result};
use crate::gp::{Dataset, Domain};
use crate::rng::{derive_seed, derived_rng, tag};
use crate::strategies::{propose_batch, PointProvenance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PendingKind {
    InitialDesign,
    Batch,
}

/// A suggested batch that has not been evaluated yet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingBatch {
    pub kind: PendingKind,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub provenance: Vec<PointProvenance>,
}

/// One evaluated point as returned by the user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoSession {
    pub config: ExperimentConfig,
    pub repetition: usize,
    pub rep_seed: u64,
    /// Completed batch iterations; the initial design does not count.
    pub iteration: usize,
    pub dataset: Dataset,
    pub pending: Option<PendingBatch>,
}

/// Relative tolerance for matching returned points against the pending batch.
const MATCH_TOL: f64 = 1e-9;

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= MATCH_TOL * x.abs().max(y.abs()).max(1.0))
}

impl BoSession {
    pub fn new(config: ExperimentConfig, repetition: usize) -> Result<Self> {
        config.validate()?;
        let domain = config.resolve_domain()?;
        let rep_seed = derive_seed(config.root_seed, &[tag::REPETITION, repetition as u64]);
        Ok(Self {
            config,
            repetition,
            rep_seed,
            iteration: 0,
            dataset: Dataset::new(domain),
            pending: None,
        })
    }

    pub fn domain(&self) -> &Domain {
        self.dataset.domain()
    }

    /// True once `n_iterations` batches have been evaluated.
    pub fn finished(&self) -> bool {
        self.iteration >= self.config.n_iterations
    }

    /// Seed for batch iteration `k` (0-based).
    pub fn iteration_seed(&self, k: usize) -> u64 {
        derive_seed(self.rep_seed, &[tag::ITERATION, k as u64])
    }

    fn initial_design(&self) -> Vec<Vec<f64>> {
        let mut rng = derived_rng(self.rep_seed, &[tag::INIT_DESIGN]);
        let domain = self.domain();
        (0..self.config.n_init)
            .map(|_| {
                let u: Vec<f64> = (0..domain.dim()).map(|_| rng.random::<f64>()).collect();
                domain.from_unit(&u)
            })
            .collect()
    }

    /// Returns the pending batch, proposing one first if nothing is pending.
    /// Repeated calls without `update` return the same batch.
    pub fn suggest(&mut self) -> Result<&PendingBatch> {
        if self.pending.is_none() {
            let pending = if self.dataset.is_empty() {
                PendingBatch {
                    kind: PendingKind::InitialDesign,
                    points: self.initial_design(),
                    provenance: Vec::new(),
                }
            } else {
                if self.finished() {
                    return Err(Error::InvalidState(format!(
                        "all {} iterations are complete",
                        self.config.n_iterations
                    )));
                }
                let cfg = self.config.batch_config(self.iteration_seed(self.iteration));
                let batch = propose_batch(&self.dataset, &cfg)?;
                PendingBatch {
                    kind: PendingKind::Batch,
                    points: batch.points,
                    provenance: batch.provenance,
                }
            };
            self.pending = Some(pending);
        }
        Ok(self.pending.as_ref().expect("pending batch was just set"))
    }

    /// Appends the evaluations of the pending batch. The results must cover
    /// every pending point exactly once (in any order); on error the session
    /// is left untouched.
    pub fn update(&mut self, results: &[Evaluation]) -> Result<PendingBatch> {
        let pending = self
            .pending
            .as_ref()
            .ok_or_else(|| Error::StateMismatch("no pending batch to update".into()))?;
        if results.len() != pending.points.len() {
            return Err(Error::StateMismatch(format!(
                "expected {} results, got {}",
                pending.points.len(),
                results.len()
            )));
        }
        let mut ys = vec![None; pending.points.len()];
        for r in results {
            let slot = pending
                .points
                .iter()
                .enumerate()
                .position(|(i, p)| ys[i].is_none() && same_point(p, &r.x))
                .ok_or_else(|| {
                    Error::StateMismatch(format!("result point {:?} is not in the pending batch", r.x))
                })?;
            ys[slot] = Some(r.y);
        }
        let mut dataset = self.dataset.clone();
        for (p, y) in pending.points.iter().zip(ys) {
            dataset.push(p.clone(), y.expect("every slot matched"))?;
        }
        let done = self.pending.take().expect("checked above");
        if done.kind == PendingKind::Batch {
            self.iteration += 1;
        }
        self.dataset = dataset;
        Ok(done)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let session: Self = parse_json("state file", &text)?;
        session.config.validate()?;
        Ok(session)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("session serializes");
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text)?;
        fs::rename(tmp, path)?;
        Ok(())
    }
}

/// `suggest` on a state file: persists the pending batch and returns it.
pub fn suggest_file(state: &Path) -> Result<PendingBatch> {
    let mut session = BoSession::load(state)?;
    let had_pending = session.pending.is_some();
    let pending = session.suggest()?.clone();
    if !had_pending {
        session.save(state)?;
    }
    Ok(pending)
}

/// `update` on a state file with a JSON array of `{"x": [...], "y": ...}`.
pub fn update_file(state: &Path, results: &Path) -> Result<BoSession> {
    let mut session = BoSession::load(state)?;
    let evals: Vec<Evaluation> = parse_json("results file", &fs::read_to_string(results)?)?;
    session.update(&evals)?;
    session.save(state)?;
    Ok(session)
}
