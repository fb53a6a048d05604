//! Independent dense-linear-algebra references shared by the integration tests.
#![allow(dead_code)]

use ats_core::gp::{Domain, HyperParams, NormState, NormalizedData};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matérn 5/2 written out from its textbook form.
pub fn matern(a: &[f64], b: &[f64], hp: &HyperParams) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&hp.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    let r = r2.sqrt();
    let s5 = 5f64.sqrt();
    hp.signal_variance * (1.0 + s5 * r + 5.0 * r2 / 3.0) * (-s5 * r).exp()
}

pub struct Oracle {
    inputs: Vec<Vec<f64>>,
    resid: DVector<f64>,
    k_inv: DMatrix<f64>,
    log_det: f64,
    hp: HyperParams,
}

impl Oracle {
    pub fn new(data: &NormalizedData, hp: &HyperParams) -> Self {
        let t = data.len();
        let k = DMatrix::from_fn(t, t, |i, j| {
            matern(&data.inputs[i], &data.inputs[j], hp) + if i == j { hp.nugget } else { 0.0 }
        });
        let log_det = k.clone().lu().determinant().ln();
        let k_inv = k.try_inverse().expect("invertible Gram matrix");
        let resid = DVector::from_iterator(t, data.outputs.iter().map(|y| y - hp.mean_const));
        Self {
            inputs: data.inputs.clone(),
            resid,
            k_inv,
            log_det,
            hp: hp.clone(),
        }
    }

    fn kstar(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|xi| matern(x, xi, &self.hp)))
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.hp.mean_const + self.kstar(x).dot(&(&self.k_inv * &self.resid))
    }

    pub fn var(&self, x: &[f64]) -> f64 {
        let ks = self.kstar(x);
        self.hp.signal_variance - ks.dot(&(&self.k_inv * &ks))
    }

    pub fn lml(&self) -> f64 {
        let t = self.inputs.len() as f64;
        -0.5 * self.resid.dot(&(&self.k_inv * &self.resid))
            - 0.5 * self.log_det
            - 0.5 * t * (2.0 * std::f64::consts::PI).ln()
    }
}

pub fn random_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>()).collect()
}

pub fn random_data<R: Rng>(rng: &mut R, t: usize, d: usize) -> NormalizedData {
    NormalizedData {
        inputs: (0..t).map(|_| random_point(rng, d)).collect(),
        outputs: (0..t).map(|_| rng.random_range(-2.0..2.0)).collect(),
        state: NormState::identity(Domain::unit_cube(d)),
    }
}

fn gram(data: &NormalizedData, hp: &HyperParams) -> DMatrix<f64> {
    let t = data.len();
    DMatrix::from_fn(t, t, |i, j| {
        matern(&data.inputs[i], &data.inputs[j], hp) + if i == j { hp.nugget } else { 0.0 }
    })
}

/// The f64 explicit inverse is only trusted to 1e-8 on Gram matrices with
/// condition number up to this bound.
pub const MAX_ORACLE_COND: f64 = 1e5;

pub fn condition_number(data: &NormalizedData, hp: &HyperParams) -> f64 {
    let sv = gram(data, hp).singular_values();
    sv.max() / sv.min()
}

/// Random θ and inputs with outputs drawn from the GP prior under that θ,
/// redrawn until the Gram matrix is well enough conditioned for the oracle.
pub fn random_instance<R: Rng>(rng: &mut R, t: usize, d: usize) -> (NormalizedData, HyperParams) {
    let (hp, mut data) = loop {
        let hp = random_hp(rng, d);
        let data = random_data(rng, t, d);
        if condition_number(&data, &hp) <= MAX_ORACLE_COND {
            break (hp, data);
        }
    };
    let k = gram(&data, &hp);
    let l = k.cholesky().expect("positive definite").l();
    let z = DVector::from_fn(t, |_, _| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, rng));
    let y = l * z;
    data.outputs = y.iter().map(|v| v + hp.mean_const).collect();
    (data, hp)
}

pub fn random_hp<R: Rng>(rng: &mut R, d: usize) -> HyperParams {
    HyperParams::new(
        (0..d).map(|_| rng.random_range(0.1..1.0)).collect(),
        rng.random_range(0.5..2.0),
        rng.random_range(-1.0..1.0),
    )
}

/// Minimum of `f` over an `n × n` grid spanning `bounds`, with its location.
pub fn grid_min(f: fn(&[f64]) -> f64, bounds: [(f64, f64); 2], n: usize) -> (f64, [f64; 2]) {
    let mut best = (f64::INFINITY, [0.0; 2]);
    for i in 0..n {
        let x = bounds[0].0 + (bounds[0].1 - bounds[0].0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let y = bounds[1].0 + (bounds[1].1 - bounds[1].0) * j as f64 / (n - 1) as f64;
            let v = f(&[x, y]);
            if v < best.0 {
                best = (v, [x, y]);
            }
        }
    }
    best
}

/// Shrinking-box grid search around a start point, clipped to the bounds.
pub fn polish(f: fn(&[f64]) -> f64, bounds: [(f64, f64); 2], start: [f64; 2], radius: f64) -> f64 {
    let (mut c, mut r, mut best) = (start, radius, f(&start));
    for _ in 0..40 {
        let b = [
            ((c[0] - r).max(bounds[0].0), (c[0] + r).min(bounds[0].1)),
            ((c[1] - r).max(bounds[1].0), (c[1] + r).min(bounds[1].1)),
        ];
        let (v, p) = grid_min(f, b, 21);
        if v < best {
            best = v;
            c = p;
        }
        r *= 0.5;
    }
    best
}
