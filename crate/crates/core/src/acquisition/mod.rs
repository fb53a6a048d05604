//! Sequential acquisition functions and their marginalized samples.
//!
//! All values are computed in normalized units and are *maximized*: EI is
//! the expected improvement below the incumbent, LCB is `j·σ − μ`.

mod optimize;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::gp::{GpSample, HyperParams, NormalizedData, Posterior};

pub use optimize::{maximize, MaximizeBudget, Maximum};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Ei,
    Lcb,
}

impl AcquisitionKind {
    /// Jitter that reduces the criterion to its plain form.
    pub fn default_jitter(self) -> f64 {
        match self {
            AcquisitionKind::Ei => 0.0,
            AcquisitionKind::Lcb => 1.0,
        }
    }
}

pub fn normal_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

pub fn normal_cdf(u: f64) -> f64 {
    0.5 * erfc(-u * std::f64::consts::FRAC_1_SQRT_2)
}

/// Closed-form `E[max(incumbent − jitter − f, 0)]` for `f ~ N(mean, std²)`.
pub fn expected_improvement(mean: f64, std: f64, incumbent: f64, jitter: f64) -> f64 {
    let delta = incumbent - jitter - mean;
    if std > 0.0 {
        let u = delta / std;
        (delta * normal_cdf(u) + std * normal_pdf(u)).max(0.0)
    } else {
        delta.max(0.0)
    }
}

pub fn ei_value(x: &[f64], post: &Posterior, incumbent: f64, jitter: f64) -> f64 {
    let (m, v) = post.predict(x);
    expected_improvement(m, v.sqrt(), incumbent, jitter)
}

pub fn lcb_value(x: &[f64], post: &Posterior, jitter: f64) -> f64 {
    let (m, v) = post.predict(x);
    jitter * v.sqrt() - m
}

/// `ã_s`: the average of one criterion over `s` posteriors.
#[derive(Clone, Debug)]
pub struct MarginalAcquisition {
    pub kind: AcquisitionKind,
    pub posteriors: Vec<Posterior>,
    pub jitter: f64,
    /// Best normalized output of the conditioning data.
    pub incumbent: f64,
}

impl MarginalAcquisition {
    pub fn thetas(&self) -> impl Iterator<Item = &HyperParams> {
        self.posteriors.iter().map(Posterior::hyperparams)
    }

    /// Average posterior mean, used for hallucinated outputs.
    pub fn mean_prediction(&self, x: &[f64]) -> f64 {
        self.posteriors.iter().map(|p| p.mean(x)).sum::<f64>() / self.posteriors.len() as f64
    }

    fn single(&self, post: &Posterior, x: &[f64]) -> f64 {
        match self.kind {
            AcquisitionKind::Ei => ei_value(x, post, self.incumbent, self.jitter),
            AcquisitionKind::Lcb => lcb_value(x, post, self.jitter),
        }
    }
}

/// One draw from the acquisition process.
#[derive(Clone, Debug)]
pub enum AcquisitionSample {
    Marginal(MarginalAcquisition),
    /// A GP function draw; its value is `−g(x)`.
    Thompson(GpSample),
}

impl AcquisitionSample {
    /// Builds `ã_s` on `data` from the given θ draws.
    pub fn marginal(
        kind: AcquisitionKind,
        data: &NormalizedData,
        thetas: &[HyperParams],
        jitter: f64,
    ) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::InvalidArgument("need at least one θ draw".into()));
        }
        match kind {
            AcquisitionKind::Ei if !(jitter >= 0.0) => {
                return Err(Error::InvalidArgument(format!("EI jitter must be >= 0, got {jitter}")))
            }
            AcquisitionKind::Lcb if !(jitter > 0.0) => {
                return Err(Error::InvalidArgument(format!("LCB jitter must be > 0, got {jitter}")))
            }
            _ => {}
        }
        let posteriors = thetas
            .iter()
            .map(|hp| Posterior::new(data, hp))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Marginal(MarginalAcquisition {
            kind,
            posteriors,
            jitter,
            incumbent: data.incumbent(),
        }))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        marginal_value(x, self)
    }
}

pub fn marginal_value(x: &[f64], sample: &AcquisitionSample) -> f64 {
    match sample {
        AcquisitionSample::Marginal(m) => {
            m.posteriors.iter().map(|p| m.single(p, x)).sum::<f64>() / m.posteriors.len() as f64
        }
        AcquisitionSample::Thompson(g) => -g.evaluate(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{Dataset, Domain};

    fn toy() -> NormalizedData {
        let mut ds = Dataset::new(Domain::unit_cube(1));
        for (x, y) in [(0.1, 1.0), (0.45, -0.3), (0.8, 0.6)] {
            ds.push(vec![x], y).unwrap();
        }
        ds.normalize().unwrap()
    }

    #[test]
    fn ei_without_uncertainty_or_improvement_is_zero() {
        assert_eq!(expected_improvement(1.0, 0.0, 1.2, 0.3), 0.0);
        assert!((expected_improvement(0.5, 0.0, 1.2, 0.3) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn ei_symmetric_case() {
        let v = expected_improvement(0.0, 1.0, 0.0, 0.0);
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn lcb_arithmetic() {
        let data = NormalizedData::empty(Domain::unit_cube(1));
        let post = Posterior::new(&data, &HyperParams::new(vec![0.3], 4.0, 1.0)).unwrap();
        assert!((lcb_value(&[0.5], &post, 0.2) - (-0.6)).abs() < 1e-15);
        assert_eq!(lcb_value(&[0.5], &post, 1.0), 2.0 - 1.0);
    }

    #[test]
    fn lcb_at_training_point_is_minus_output() {
        let data = toy();
        let post = Posterior::new(&data, &HyperParams::new(vec![0.2], 1.0, 0.0)).unwrap();
        let v = lcb_value(&data.inputs[1], &post, 1.0);
        assert!((v + data.outputs[1]).abs() < 2e-3, "{v}");
    }

    #[test]
    fn degenerate_averages() {
        let data = toy();
        let hp = HyperParams::new(vec![0.2], 1.0, 0.1);
        let one = AcquisitionSample::marginal(AcquisitionKind::Ei, &data, std::slice::from_ref(&hp), 0.0).unwrap();
        let two =
            AcquisitionSample::marginal(AcquisitionKind::Ei, &data, &[hp.clone(), hp.clone()], 0.0)
                .unwrap();
        let post = Posterior::new(&data, &hp).unwrap();
        for x in [0.0, 0.3, 0.62, 1.0] {
            let single = ei_value(&[x], &post, data.incumbent(), 0.0);
            assert_eq!(one.value(&[x]), single);
            assert_eq!(two.value(&[x]), single);
        }
    }

    #[test]
    fn rejects_bad_jitter_and_empty_theta() {
        let data = toy();
        let hp = HyperParams::new(vec![0.2], 1.0, 0.1);
        assert!(AcquisitionSample::marginal(AcquisitionKind::Lcb, &data, std::slice::from_ref(&hp), 0.0).is_err());
        assert!(AcquisitionSample::marginal(AcquisitionKind::Ei, &data, &[hp], -0.1).is_err());
        assert!(AcquisitionSample::marginal(AcquisitionKind::Ei, &data, &[], 0.0).is_err());
    }
}
