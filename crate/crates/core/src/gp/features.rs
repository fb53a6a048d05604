//! Approximate posterior function draws via random Fourier features.
//!
//! The Matérn 5/2 spectral density is a multivariate Student-t with five
//! degrees of freedom, so frequencies are drawn as `z·sqrt(5/u)/ℓ` with
//! `z ~ N(0, I)` and `u ~ χ²(5)`. The feature weights are then conditioned
//! on the data exactly, by a pathwise (Matheron) update of a prior weight draw.

use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::{check_compatible, Factor, HyperParams, NormalizedData};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const DEFAULT_FEATURES: usize = 1024;

/// A deterministic function drawn (approximately) from the GP posterior.
#[derive(Clone, Debug)]
pub struct GpSample {
    dim: usize,
    omega: Vec<f64>,
    phase: Vec<f64>,
    weights: Vec<f64>,
    amplitude: f64,
    mean_const: f64,
}

impl GpSample {
    pub fn n_features(&self) -> usize {
        self.phase.len()
    }

    /// Value at a unit-cube point, in normalized output units.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "query dimension does not match the sample");
        let s: f64 = self
            .omega
            .chunks_exact(self.dim)
            .zip(&self.phase)
            .zip(&self.weights)
            .map(|((w, b), a)| {
                let arg = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
                a * arg.cos()
            })
            .sum();
        self.mean_const + self.amplitude * s
    }
}

pub fn sample_gp_function(
    data: &NormalizedData,
    hp: &HyperParams,
    seed: u64,
    n_features: usize,
) -> Result<GpSample> {
    if n_features < 1 {
        return Err(Error::InvalidArgument("at least one random feature is required".into()));
    }
    check_compatible(data, hp)?;
    let d = hp.dim();
    let mut rng = rng_from_seed(seed);
    let chi = ChiSquared::new(5.0).expect("valid degrees of freedom");

    let mut omega = Vec::with_capacity(n_features * d);
    let mut phase = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        let u: f64 = chi.sample(&mut rng);
        let scale = (5.0 / u).sqrt();
        for l in &hp.lengthscales {
            let z: f64 = StandardNormal.sample(&mut rng);
            omega.push(z * scale / l);
        }
        phase.push(rng.random::<f64>() * std::f64::consts::TAU);
    }
    let amplitude = (2.0 * hp.signal_variance / n_features as f64).sqrt();
    let mut weights: Vec<f64> = (0..n_features).map(|_| StandardNormal.sample(&mut rng)).collect();

    let n = data.len();
    if n > 0 {
        // Φ[i][f] = amplitude·cos(ω_f·x_i + b_f)
        let phi: Vec<f64> = data
            .inputs
            .iter()
            .flat_map(|x| {
                omega.chunks_exact(d).zip(&phase).map(move |(w, b)| {
                    amplitude * (w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b).cos()
                })
            })
            .collect();
        let row = |i: usize| &phi[i * n_features..(i + 1) * n_features];
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = row(i).iter().zip(row(j)).map(|(a, b)| a * b).sum();
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        let factor = Factor::new(&gram, n, hp.nugget)?;
        let noise_sd = factor.nugget().sqrt();
        let residual: Vec<f64> = (0..n)
            .map(|i| {
                let prior_fit: f64 = row(i).iter().zip(&weights).map(|(a, w)| a * w).sum();
                let eps: f64 = StandardNormal.sample(&mut rng);
                data.outputs[i] - hp.mean_const - prior_fit - noise_sd * eps
            })
            .collect();
        let beta = factor.solve(&residual);
        for (i, b) in beta.iter().enumerate() {
            for (w, p) in weights.iter_mut().zip(row(i)) {
                *w += p * b;
            }
        }
    }

    Ok(GpSample {
        dim: d,
        omega,
        phase,
        weights,
        amplitude,
        mean_const: hp.mean_const,
    })
}
