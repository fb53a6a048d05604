//! Affine-invariant ensemble sampler (Goodman & Weare stretch move).

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub n_walkers: usize,
    pub burn_in: usize,
    /// Steps run after burn-in; draws are recorded every `thin` of them.
    pub n_steps: usize,
    pub thin: usize,
    pub stretch_a: f64,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_walkers: 32,
            burn_in: 300,
            n_steps: 10,
            thin: 1,
            stretch_a: 2.0,
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_walkers < 2 * dim || self.n_walkers % 2 != 0 {
            return Err(Error::Config(format!(
                "need an even number of walkers >= {} for dimension {dim}, got {}",
                2 * dim,
                self.n_walkers
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be positive".into()));
        }
        if !(self.stretch_a > 1.0) {
            return Err(Error::Config(format!("stretch scale must exceed 1, got {}", self.stretch_a)));
        }
        Ok(())
    }
}

/// Draws the stretch factor from `g(z) ∝ 1/√z` on `[1/a, a]`.
pub fn sample_stretch(a: f64, rng: &mut Rng) -> f64 {
    let u: f64 = rng.random();
    ((a - 1.0) * u + 1.0).powi(2) / a
}

/// `x_j + z (x_k − x_j)`
pub fn stretch_proposal(walker: &[f64], partner: &[f64], z: f64) -> Vec<f64> {
    walker
        .iter()
        .zip(partner)
        .map(|(xk, xj)| xj + z * (xk - xj))
        .collect()
}

/// Log of the stretch-move acceptance ratio.
pub fn log_acceptance(z: f64, dim: usize, lp_proposal: f64, lp_current: f64) -> f64 {
    (dim as f64 - 1.0) * z.ln() + lp_proposal - lp_current
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub walkers: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
}

fn sanitize(lp: f64) -> f64 {
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

impl Ensemble {
    pub fn new<F: Fn(&[f64]) -> f64>(walkers: Vec<Vec<f64>>, logpdf: &F) -> Result<Self> {
        let dim = walkers.first().map_or(0, Vec::len);
        if dim == 0 || walkers.iter().any(|w| w.len() != dim) {
            return Err(Error::InvalidArgument("walkers must share a positive dimension".into()));
        }
        if walkers.len() < 2 || walkers.len() % 2 != 0 {
            return Err(Error::InvalidArgument("need an even number of at least two walkers".into()));
        }
        let log_probs: Vec<f64> = walkers.iter().map(|w| sanitize(logpdf(w))).collect();
        if log_probs.iter().all(|lp| *lp == f64::NEG_INFINITY) {
            return Err(Error::Initialization(
                "every walker starts at zero density".into(),
            ));
        }
        Ok(Self { walkers, log_probs })
    }

    pub fn dim(&self) -> usize {
        self.walkers[0].len()
    }

    /// One sweep: each half is moved using partners from the other half.
    /// Returns the number of accepted proposals.
    pub fn step<F: Fn(&[f64]) -> f64>(&mut self, logpdf: &F, a: f64, rng: &mut Rng) -> usize {
        let n = self.walkers.len();
        let half = n / 2;
        let dim = self.dim();
        let mut accepted = 0;
        for (active, partners) in [(0..half, half..n), (half..n, 0..half)] {
            for k in active {
                let j = partners.start + rng.random_range(0..partners.len());
                let z = sample_stretch(a, rng);
                let proposal = stretch_proposal(&self.walkers[k], &self.walkers[j], z);
                let lp = sanitize(logpdf(&proposal));
                let log_ratio = log_acceptance(z, dim, lp, self.log_probs[k]);
                let u: f64 = rng.random();
                if u.ln() < log_ratio {
                    self.walkers[k] = proposal;
                    self.log_probs[k] = lp;
                    accepted += 1;
                }
            }
        }
        accepted
    }

    /// Runs `steps` sweeps, recording every walker after each `thin`-th one.
    pub fn run<F: Fn(&[f64]) -> f64>(
        &mut self,
        logpdf: &F,
        steps: usize,
        thin: usize,
        a: f64,
        rng: &mut Rng,
    ) -> (Vec<Vec<f64>>, usize) {
        let mut draws = Vec::new();
        let mut accepted = 0;
        for i in 0..steps {
            accepted += self.step(logpdf, a, rng);
            if (i + 1) % thin == 0 {
                draws.extend(self.walkers.iter().cloned());
            }
        }
        (draws, accepted)
    }
}

#[derive(Clone, Debug)]
pub struct ChainOutput {
    /// Post burn-in draws, walker-major within each recorded step.
    pub draws: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
    pub ensemble: Ensemble,
}

/// Burns in from `init`, then records `cfg.n_steps` thinned sweeps.
pub fn ensemble_sample<F: Fn(&[f64]) -> f64>(
    logpdf: F,
    init: Vec<Vec<f64>>,
    cfg: &McmcConfig,
) -> Result<ChainOutput> {
    if init.len() != cfg.n_walkers {
        return Err(Error::InvalidArgument(format!(
            "{} initial walkers for a {}-walker configuration",
            init.len(),
            cfg.n_walkers
        )));
    }
    let mut ensemble = Ensemble::new(init, &logpdf)?;
    cfg.validate(ensemble.dim())?;
    let mut rng = rng_from_seed(cfg.seed);
    let (_, burn_accepted) = ensemble.run(&logpdf, cfg.burn_in, 1, cfg.stretch_a, &mut rng);
    let (draws, accepted) = ensemble.run(&logpdf, cfg.n_steps, cfg.thin, cfg.stretch_a, &mut rng);
    let proposals = (cfg.burn_in + cfg.n_steps) * cfg.n_walkers;
    Ok(ChainOutput {
        draws,
        acceptance_rate: if proposals == 0 {
            0.0
        } else {
            (burn_accepted + accepted) as f64 / proposals as f64
        },
        ensemble,
    })
}
