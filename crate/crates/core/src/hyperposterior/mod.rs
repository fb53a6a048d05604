//! Data posterior of the GP hyper-parameters and the jitter prior.
//!
//! θ = (ARD lengthscales, signal variance, constant mean). Lengthscales and
//! signal variance carry independent Gamma(shape 1, rate 6) priors, the mean a
//! Uniform(−3, 3) prior on normalized outputs. Positive components are sampled
//! in log space with the log-Jacobian folded into the target density.

mod ensemble;
mod jitter;

use rand::Rng as _;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gp::{log_marginal_likelihood, HyperParams, NormalizedData, DEFAULT_NUGGET};
use crate::rng::{derive_seed, rng_from_seed};

pub use ensemble::{
    ensemble_sample, log_acceptance, sample_stretch, stretch_proposal, ChainOutput, Ensemble,
    McmcConfig,
};
pub use jitter::{sample_jitter, JitterDraw, JitterSpec};

/// Attempts per walker to find a finite starting density.
const INIT_ATTEMPTS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSpec {
    pub lengthscale_shape: f64,
    pub lengthscale_rate: f64,
    pub signal_shape: f64,
    pub signal_rate: f64,
    pub mean_low: f64,
    pub mean_high: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            lengthscale_shape: 1.0,
            lengthscale_rate: 6.0,
            signal_shape: 1.0,
            signal_rate: 6.0,
            mean_low: -3.0,
            mean_high: 3.0,
        }
    }
}

fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

pub fn log_prior(hp: &HyperParams, spec: &PriorSpec) -> f64 {
    let mu = hp.mean_const;
    if !(mu >= spec.mean_low && mu <= spec.mean_high) {
        return f64::NEG_INFINITY;
    }
    let mut lp = -(spec.mean_high - spec.mean_low).ln();
    lp += gamma_ln_pdf(hp.signal_variance, spec.signal_shape, spec.signal_rate);
    for &l in &hp.lengthscales {
        lp += gamma_ln_pdf(l, spec.lengthscale_shape, spec.lengthscale_rate);
    }
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

/// `log_prior + likelihood(hp)`, skipping the likelihood outside the support.
pub fn log_posterior_with<F>(hp: &HyperParams, spec: &PriorSpec, likelihood: F) -> Result<f64>
where
    F: FnOnce(&HyperParams) -> Result<f64>,
{
    let lp = log_prior(hp, spec);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + likelihood(hp)?)
}

pub fn log_posterior(hp: &HyperParams, data: &NormalizedData, spec: &PriorSpec) -> Result<f64> {
    log_posterior_with(hp, spec, |hp| log_marginal_likelihood(data, hp))
}

/// Target density over the unconstrained vector `[ln ℓ, ln σ², μ_p]`.
fn unconstrained_log_density(v: &[f64], data: &NormalizedData, spec: &PriorSpec) -> f64 {
    let hp = HyperParams::from_unconstrained(v, DEFAULT_NUGGET);
    let log_jacobian: f64 = v[..v.len() - 1].iter().sum();
    match log_posterior(&hp, data, spec) {
        Ok(lp) if lp.is_finite() => lp + log_jacobian,
        _ => f64::NEG_INFINITY,
    }
}

fn prior_draw(dim: usize, spec: &PriorSpec, rng: &mut crate::rng::Rng) -> HyperParams {
    let ls = rand_distr::Gamma::new(spec.lengthscale_shape, 1.0 / spec.lengthscale_rate)
        .expect("valid lengthscale prior");
    let sv = rand_distr::Gamma::new(spec.signal_shape, 1.0 / spec.signal_rate)
        .expect("valid signal prior");
    let lengthscales = (0..dim).map(|_| ls.sample(rng)).collect();
    let signal_variance = sv.sample(rng);
    let mean_const = spec.mean_low + rng.random::<f64>() * (spec.mean_high - spec.mean_low);
    HyperParams::new(lengthscales, signal_variance, mean_const)
}

/// An ensemble burned in on `p(θ | data)`, from which independent θ-sets are
/// drawn by continuing the chain with different seeds.
#[derive(Clone, Debug)]
pub struct ThetaSampler {
    data: NormalizedData,
    spec: PriorSpec,
    cfg: McmcConfig,
    ensemble: Ensemble,
}

impl ThetaSampler {
    pub fn burn_in(data: &NormalizedData, spec: &PriorSpec, cfg: &McmcConfig) -> Result<Self> {
        let dim = data.dim() + 2;
        cfg.validate(dim)?;
        let mut rng = rng_from_seed(cfg.seed);
        let target = |v: &[f64]| unconstrained_log_density(v, data, spec);

        let mut init = Vec::with_capacity(cfg.n_walkers);
        for _ in 0..cfg.n_walkers {
            let mut walker = prior_draw(data.dim(), spec, &mut rng).to_unconstrained();
            for _ in 1..INIT_ATTEMPTS {
                if target(&walker).is_finite() {
                    break;
                }
                walker = prior_draw(data.dim(), spec, &mut rng).to_unconstrained();
            }
            init.push(walker);
        }
        let mut ensemble = Ensemble::new(init, &target)?;
        ensemble.run(&target, cfg.burn_in, 1, cfg.stretch_a, &mut rng);
        Ok(Self {
            data: data.clone(),
            spec: spec.clone(),
            cfg: cfg.clone(),
            ensemble,
        })
    }

    pub fn data(&self) -> &NormalizedData {
        &self.data
    }

    /// Continues the burned-in ensemble under `seed` and returns its last `s` draws.
    pub fn draw(&self, s: usize, seed: u64) -> Result<Vec<HyperParams>> {
        if s == 0 {
            return Err(Error::InvalidArgument("s must be at least 1".into()));
        }
        let cfg = &self.cfg;
        let recorded_per_step = cfg.n_walkers as f64 / cfg.thin as f64;
        let needed = ((s as f64 / recorded_per_step).ceil() as usize) * cfg.thin;
        let steps = cfg.n_steps.max(needed).max(cfg.thin);
        let target = |v: &[f64]| unconstrained_log_density(v, &self.data, &self.spec);
        let mut ensemble = self.ensemble.clone();
        let mut rng = rng_from_seed(seed);
        let (draws, _) = ensemble.run(&target, steps, cfg.thin, cfg.stretch_a, &mut rng);
        Ok(draws[draws.len() - s..]
            .iter()
            .map(|v| HyperParams::from_unconstrained(v, DEFAULT_NUGGET))
            .collect())
    }
}

/// Draws `s` hyper-parameter vectors from `p(θ | data)`.
pub fn sample_hyperparams(
    data: &NormalizedData,
    s: usize,
    cfg: &McmcConfig,
    spec: &PriorSpec,
) -> Result<Vec<HyperParams>> {
    ThetaSampler::burn_in(data, spec, cfg)?.draw(s, derive_seed(cfg.seed, &[1]))
}
