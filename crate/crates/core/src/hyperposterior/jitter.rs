use rand::Rng as _;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionKind;
use crate::rng::rng_from_seed;

/// Jitter prior: with probability `bernoulli_p` an explorative draw
/// (EI: 10^U(−3, 0), LCB: Beta(1, 12)), otherwise the plain criterion's
/// value (EI: 0, LCB: 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    pub kind: AcquisitionKind,
    pub bernoulli_p: f64,
}

impl JitterSpec {
    pub fn new(kind: AcquisitionKind) -> Self {
        Self { kind, bernoulli_p: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterDraw {
    pub value: f64,
    pub explorative: bool,
}

pub fn sample_jitter(spec: &JitterSpec, seed: u64) -> JitterDraw {
    let mut rng = rng_from_seed(seed);
    let coin: f64 = rng.random();
    if coin >= spec.bernoulli_p {
        return JitterDraw {
            value: spec.kind.default_jitter(),
            explorative: false,
        };
    }
    let value = match spec.kind {
        AcquisitionKind::Ei => 10f64.powf(-3.0 + 3.0 * rng.random::<f64>()),
        AcquisitionKind::Lcb => Beta::new(1.0, 12.0).expect("valid beta").sample(&mut rng),
    };
    JitterDraw {
        value,
        explorative: true,
    }
}
