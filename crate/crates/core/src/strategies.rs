//! Batch proposal strategies.
//!
//! Every random decision of a batch is keyed on `(root_seed, tag, point index)`
//! so a batch is a deterministic function of the data and the configuration,
//! and the independent strategies (ATS, j-ATS, P-TS) give the same points
//! whatever order their batch points are computed in.
//!
//! The θ posterior of `D_t` is burned in once per batch; each batch point
//! then continues that ensemble under its own seed to obtain a fresh θ-set.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{maximize, AcquisitionKind, AcquisitionSample, MaximizeBudget, Maximum};
use crate::error::{Error, Result};
use crate::gp::{sample_gp_function, Dataset, Domain, HyperParams, NormalizedData, DEFAULT_FEATURES};
use crate::hyperposterior::{sample_jitter, JitterDraw, JitterSpec, McmcConfig, PriorSpec, ThetaSampler};
use crate::rng::{derive_seed, derived_rng, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "sequential")]
    Sequential,
    #[serde(rename = "ats")]
    Ats,
    #[serde(rename = "jats")]
    JAts,
    #[serde(rename = "hats")]
    HAts,
    #[serde(rename = "blcb")]
    BLcb,
    #[serde(rename = "pts")]
    Pts,
    #[serde(rename = "ats_blcb")]
    AtsOnBLcb,
    #[serde(rename = "ats_pts")]
    AtsOnPts,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Sequential,
        Strategy::Ats,
        Strategy::JAts,
        Strategy::HAts,
        Strategy::BLcb,
        Strategy::Pts,
        Strategy::AtsOnBLcb,
        Strategy::AtsOnPts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Sequential => "sequential",
            Strategy::Ats => "ats",
            Strategy::JAts => "jats",
            Strategy::HAts => "hats",
            Strategy::BLcb => "blcb",
            Strategy::Pts => "pts",
            Strategy::AtsOnBLcb => "ats_blcb",
            Strategy::AtsOnPts => "ats_pts",
        }
    }

    fn needs_lcb(self) -> bool {
        matches!(self, Strategy::BLcb | Strategy::AtsOnBLcb)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// Parallel baselines that ATS can be layered on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnhanceBase {
    BLcb,
    Pts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchConfig {
    pub batch_size: usize,
    /// θ draws averaged in each acquisition sample.
    pub s: usize,
    pub acquisition_kind: AcquisitionKind,
    pub strategy: Strategy,
    /// Probability of resampling the θ-set before each point (ATS on B-LCB / P-TS).
    pub enhance_p: f64,
    /// Probability of an explorative jitter draw (j-ATS).
    pub jitter_p: f64,
    pub root_seed: u64,
    pub n_features: usize,
    pub mcmc: McmcConfig,
    pub prior: PriorSpec,
    pub budget: MaximizeBudget,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            batch_size: 5,
            s: 10,
            acquisition_kind: AcquisitionKind::Ei,
            strategy: Strategy::Ats,
            enhance_p: 0.5,
            jitter_p: 0.5,
            root_seed: 0,
            n_features: DEFAULT_FEATURES,
            mcmc: McmcConfig::default(),
            prior: PriorSpec::default(),
            budget: MaximizeBudget::default(),
        }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.s == 0 {
            return Err(Error::Config("batch_size and s must be at least 1".into()));
        }
        for (name, p) in [("enhance_p", self.enhance_p), ("jitter_p", self.jitter_p)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.n_features == 0 {
            return Err(Error::Config("n_features must be at least 1".into()));
        }
        if self.strategy.needs_lcb() && self.acquisition_kind != AcquisitionKind::Lcb {
            return Err(Error::Config(format!(
                "strategy `{}` requires the LCB acquisition",
                self.strategy
            )));
        }
        Ok(())
    }
}

/// How one batch point came about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointProvenance {
    pub index: usize,
    /// Index of the seed the θ-set was drawn with; equal ids mean a shared set.
    pub theta_draw: usize,
    pub thetas: Vec<HyperParams>,
    /// For function draws: which member of the θ-set was used.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_pick: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jitter: Option<JitterDraw>,
    /// Outcome of the resampling coin; absent for the first point and for base strategies.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coin: Option<bool>,
    /// Hallucinated normalized output appended after this point.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hallucination: Option<f64>,
    pub acquisition_value: f64,
    pub unit_point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchProposal {
    /// Points in the original domain.
    pub points: Vec<Vec<f64>>,
    pub provenance: Vec<PointProvenance>,
}

/// Normalized data and the burned-in θ posterior of one batch iteration.
pub struct BatchContext {
    cfg: BatchConfig,
    data: NormalizedData,
    unit: Domain,
    sampler: ThetaSampler,
}

impl BatchContext {
    pub fn new(dataset: &Dataset, cfg: &BatchConfig) -> Result<Self> {
        cfg.validate()?;
        if dataset.is_empty() {
            return Err(Error::InvalidState("a batch needs at least one observation".into()));
        }
        let data = dataset.normalize()?;
        let sampler = ThetaSampler::burn_in(&data, &cfg.prior, &burn_in_config(cfg, 0))?;
        Ok(Self {
            cfg: cfg.clone(),
            unit: Domain::unit_cube(dataset.dim()),
            data,
            sampler,
        })
    }

    pub fn data(&self) -> &NormalizedData {
        &self.data
    }

    pub fn config(&self) -> &BatchConfig {
        &self.cfg
    }

    fn seed(&self, t: u64, i: usize) -> u64 {
        derive_seed(self.cfg.root_seed, &[t, i as u64])
    }

    fn theta_set(&self, sampler: &ThetaSampler, i: usize) -> Result<Vec<HyperParams>> {
        sampler.draw(self.cfg.s, self.seed(tag::THETA, i))
    }

    fn maximize(&self, sample: &AcquisitionSample, i: usize) -> Result<Maximum> {
        maximize(|x| sample.value(x), &self.unit, &self.cfg.budget, self.seed(tag::OPTIMIZE, i))
    }

    pub fn jitter(&self, i: usize) -> JitterDraw {
        let spec = JitterSpec {
            kind: self.cfg.acquisition_kind,
            bernoulli_p: self.cfg.jitter_p,
        };
        sample_jitter(&spec, self.seed(tag::JITTER, i))
    }

    /// Point `i` of an ATS batch, or of a j-ATS batch when `jitter` is given.
    pub fn marginal_point(&self, i: usize, jitter: Option<JitterDraw>) -> Result<PointProvenance> {
        let thetas = self.theta_set(&self.sampler, i)?;
        let j = jitter.map_or(self.cfg.acquisition_kind.default_jitter(), |d| d.value);
        let sample = AcquisitionSample::marginal(self.cfg.acquisition_kind, &self.data, &thetas, j)?;
        let best = self.maximize(&sample, i)?;
        Ok(PointProvenance {
            index: i,
            theta_draw: i,
            thetas,
            theta_pick: None,
            jitter,
            coin: None,
            hallucination: None,
            acquisition_value: best.value,
            unit_point: best.point,
        })
    }

    /// Point `i` of a P-TS batch: minimizer of a function drawn with a θ
    /// picked from `thetas`.
    fn thompson_point(
        &self,
        i: usize,
        thetas: Vec<HyperParams>,
        theta_draw: usize,
        coin: Option<bool>,
    ) -> Result<PointProvenance> {
        let pick = derived_rng(self.cfg.root_seed, &[tag::PICK, i as u64]).random_range(0..thetas.len());
        let g = sample_gp_function(&self.data, &thetas[pick], self.seed(tag::FUNCTION, i), self.cfg.n_features)?;
        let best = self.maximize(&AcquisitionSample::Thompson(g), i)?;
        Ok(PointProvenance {
            index: i,
            theta_draw,
            thetas,
            theta_pick: Some(pick),
            jitter: None,
            coin,
            hallucination: None,
            acquisition_value: best.value,
            unit_point: best.point,
        })
    }

    fn finish(&self, provenance: Vec<PointProvenance>) -> BatchProposal {
        BatchProposal {
            points: provenance
                .iter()
                .map(|p| self.data.state.from_unit(&p.unit_point))
                .collect(),
            provenance,
        }
    }
}

fn burn_in_config(cfg: &BatchConfig, i: usize) -> McmcConfig {
    McmcConfig {
        seed: derive_seed(cfg.root_seed, &[tag::BURN_IN, i as u64]),
        ..cfg.mcmc.clone()
    }
}

/// The resampling coin for point `i` of a batch seeded with `root_seed`.
pub fn coin_flip(root_seed: u64, i: usize, p: f64) -> bool {
    derived_rng(root_seed, &[tag::COIN, i as u64]).random::<f64>() < p
}

/// One sequential step: a single marginalized-acquisition maximizer.
pub fn sequential_step(dataset: &Dataset, cfg: &BatchConfig) -> Result<BatchProposal> {
    let cfg = BatchConfig {
        batch_size: 1,
        ..cfg.clone()
    };
    ats_batch(dataset, &cfg)
}

pub fn ats_batch(dataset: &Dataset, cfg: &BatchConfig) -> Result<BatchProposal> {
    let ctx = BatchContext::new(dataset, cfg)?;
    let prov = (0..cfg.batch_size)
        .into_par_iter()
        .map(|i| ctx.marginal_point(i, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(ctx.finish(prov))
}

pub fn jats_batch(dataset: &Dataset, cfg: &BatchConfig) -> Result<BatchProposal> {
    let ctx = BatchContext::new(dataset, cfg)?;
    let prov = (0..cfg.batch_size)
        .into_par_iter()
        .map(|i| ctx.marginal_point(i, Some(ctx.jitter(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok(ctx.finish(prov))
}

/// `D_t` plus the (unit-cube point, hallucinated output) pairs appended
/// so far within a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct HallucinatedDataset {
    base: NormalizedData,
    pending: Vec<(Vec<f64>, f64)>,
    combined: NormalizedData,
}

impl HallucinatedDataset {
    pub fn new(base: NormalizedData) -> Self {
        Self { combined: base.clone(), base, pending: Vec::new() }
    }

    pub fn push(&mut self, x_unit: Vec<f64>, h: f64) -> Result<()> {
        if x_unit.len() != self.base.dim() || !x_unit.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(format!("hallucinated point {x_unit:?} is outside the unit cube")));
        }
        if !h.is_finite() {
            return Err(Error::InvalidArgument(format!("hallucinated value {h} is not finite")));
        }
        self.combined = self.combined.with_point(x_unit.clone(), h);
        self.pending.push((x_unit, h));
        Ok(())
    }

    pub fn base(&self) -> &NormalizedData {
        &self.base
    }

    pub fn pending(&self) -> &[(Vec<f64>, f64)] {
        &self.pending
    }

    /// The base data with every pending pair appended.
    pub fn data(&self) -> &NormalizedData {
        &self.combined
    }
}

/// θ is drawn from the posterior of `D_t` plus the hallucinations so far; the
/// acquisition itself and the hallucinated values condition on `D_t` only.
pub fn hats_batch(dataset: &Dataset, cfg: &BatchConfig) -> Result<BatchProposal> {
    let ctx = BatchContext::new(dataset, cfg)?;
    let kind = cfg.acquisition_kind;
    let mut hallucinated = HallucinatedDataset::new(ctx.data.clone());
    let mut prov = Vec::with_capacity(cfg.batch_size);
    for i in 0..cfg.batch_size {
        let resampled;
        let sampler = if i == 0 {
            &ctx.sampler
        } else {
            resampled = ThetaSampler::burn_in(hallucinated.data(), &cfg.prior, &burn_in_config(cfg, i))?;
            &resampled
        };
        let thetas = ctx.theta_set(sampler, i)?;
        let sample = AcquisitionSample::marginal(kind, &ctx.data, &thetas, kind.default_jitter())?;
        let best = ctx.maximize(&sample, i)?;
        let AcquisitionSample::Marginal(m) = &sample else { unreachable!() };
        let h = m.mean_prediction(&best.point);
        hallucinated.push(best.point.clone(), h)?;
        prov.push(PointProvenance {
            index: i,
            theta_draw: i,
            thetas,
            theta_pick: None,
            jitter: None,
            coin: None,
            hallucination: Some(h),
            acquisition_value: best.value,
            unit_point: best.point,
        });
    }
    Ok(ctx.finish(prov))
}

/// B-LCB with an optional resampling coin of probability `p` before each point.
fn hallucinated_lcb(ctx: &BatchContext, p: Option<f64>) -> Result<BatchProposal> {
    let cfg = &ctx.cfg;
    if cfg.acquisition_kind != AcquisitionKind::Lcb {
        return Err(Error::Config("B-LCB requires the LCB acquisition".into()));
    }
    let mut thetas = ctx.theta_set(&ctx.sampler, 0)?;
    let mut theta_draw = 0;
    let mut data = HallucinatedDataset::new(ctx.data.clone());
    let mut prov = Vec::with_capacity(cfg.batch_size);
    for i in 0..cfg.batch_size {
        let coin = match p {
            Some(p) if i > 0 => {
                let heads = coin_flip(ctx.cfg.root_seed, i, p);
                if heads {
                    thetas = ctx.theta_set(&ctx.sampler, i)?;
                    theta_draw = i;
                }
                Some(heads)
            }
            _ => None,
        };
        let sample = AcquisitionSample::marginal(AcquisitionKind::Lcb, data.data(), &thetas, 1.0)?;
        let best = ctx.maximize(&sample, i)?;
        let AcquisitionSample::Marginal(m) = &sample else { unreachable!() };
        let h = m.mean_prediction(&best.point);
        data.push(best.point.clone(), h)?;
        prov.push(PointProvenance {
            index: i,
            theta_draw,
            thetas: thetas.clone(),
            theta_pick: None,
            jitter: None,
            coin,
            hallucination: Some(h),
            acquisition_value: best.value,
            unit_point: best.point,
        });
    }
    Ok(ctx.finish(prov))
}

pub fn blcb_batch(dataset: &Dataset, cfg: &BatchConfig) -> Result<BatchProposal> {
    if cfg.acquisition_kind != AcquisitionKind::Lcb {
        return Err(Error::Config("B-LCB requires the LCB acquisition".into()));
    }
    hallucinated_lcb(&BatchContext::new(dataset, cfg)?, None)
}

/// P-TS; one θ-set per batch, each function draw uses a random member of it.
fn thompson(ctx: &BatchContext, p: Option<f64>) -> Result<BatchProposal> {
    let m = ctx.cfg.batch_size;
    let base = ctx.theta_set(&ctx.sampler, 0)?;
    let prov = match p {
        None => (0..m)
            .into_par_iter()
            .map(|i| ctx.thompson_point(i, base.clone(), 0, None))
            .collect::<Result<Vec<_>>>()?,
        Some(p) => {
            let mut current = (base, 0);
            let mut prov = Vec::with_capacity(m);
            for i in 0..m {
                let coin = if i > 0 {
                    let heads = coin_flip(ctx.cfg.root_seed, i, p);
                    if heads {
                        current = (ctx.theta_set(&ctx.sampler, i)?, i);
                    }
                    Some(heads)
                } else {
                    None
                };
                prov.push(ctx.thompson_point(i, current.0.clone(), current.1, coin)?);
            }
            prov
        }
    };
    Ok(ctx.finish(prov))
}

pub fn pts_batch(dataset: &Dataset, cfg: &BatchConfig) -> Result<BatchProposal> {
    thompson(&BatchContext::new(dataset, cfg)?, None)
}

/// Runs a parallel baseline, resampling its θ-set with probability
/// `cfg.enhance_p` before every point after the first.
pub fn ats_enhance(base: EnhanceBase, dataset: &Dataset, cfg: &BatchConfig) -> Result<BatchProposal> {
    let ctx = BatchContext::new(dataset, cfg)?;
    match base {
        EnhanceBase::BLcb => hallucinated_lcb(&ctx, Some(cfg.enhance_p)),
        EnhanceBase::Pts => thompson(&ctx, Some(cfg.enhance_p)),
    }
}

pub fn propose_batch(dataset: &Dataset, cfg: &BatchConfig) -> Result<BatchProposal> {
    match cfg.strategy {
        Strategy::Sequential => sequential_step(dataset, cfg),
        Strategy::Ats => ats_batch(dataset, cfg),
        Strategy::JAts => jats_batch(dataset, cfg),
        Strategy::HAts => hats_batch(dataset, cfg),
        Strategy::BLcb => blcb_batch(dataset, cfg),
        Strategy::Pts => pts_batch(dataset, cfg),
        Strategy::AtsOnBLcb => ats_enhance(EnhanceBase::BLcb, dataset, cfg),
        Strategy::AtsOnPts => ats_enhance(EnhanceBase::Pts, dataset, cfg),
    }
}
