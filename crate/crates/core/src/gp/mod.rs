//! Gaussian process surrogate: data handling, the Matérn 5/2 kernel, the
//! exact posterior and the log marginal likelihood.
//!
//! Everything here works in *normalized* coordinates: inputs mapped to the
//! unit cube through the domain bounds, outputs z-scored. [`Dataset`] keeps the
//! raw evaluations and [`Dataset::normalize`] produces the [`NormalizedData`]
//! the model is fitted on.

mod features;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{sample_gp_function, GpSample, DEFAULT_FEATURES};

/// Nugget added to the Gram diagonal, in normalized output units.
pub const DEFAULT_NUGGET: f64 = 1e-6;
/// Largest nugget tried before giving up on a factorization.
pub const MAX_NUGGET: f64 = 1e-2;

const SQRT_5: f64 = 2.236_067_977_499_79;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Axis-aligned box `[lo, hi]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("domain needs at least one dimension".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "dimension {i}: bounds [{lo}, {hi}] are not a finite non-empty interval"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn unit_cube(dim: usize) -> Self {
        Self {
            bounds: vec![(0.0, 1.0); dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| (lo + v * (hi - lo)).clamp(lo, hi))
            .collect()
    }
}

impl TryFrom<Vec<(f64, f64)>> for Domain {
    type Error = Error;

    fn try_from(bounds: Vec<(f64, f64)>) -> Result<Self> {
        Domain::new(bounds)
    }
}

impl From<Domain> for Vec<(f64, f64)> {
    fn from(d: Domain) -> Self {
        d.bounds
    }
}

/// Raw evaluations `(x_i, y_i)` collected on a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    domain: Domain,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(domain: Domain) -> Self {
        Self {
            domain,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if x.len() != self.domain.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected a {}-dimensional point, got {}",
                self.domain.dim(),
                x.len()
            )));
        }
        if !self.domain.contains(&x) {
            return Err(Error::OutOfDomain { point: x });
        }
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite output {y}")));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Smallest observed output.
    pub fn best(&self) -> Option<f64> {
        self.outputs.iter().copied().reduce(f64::min)
    }

    /// Maps inputs to the unit cube and z-scores the outputs.
    pub fn normalize(&self) -> Result<NormalizedData> {
        if self.is_empty() {
            return Err(Error::InvalidState("cannot normalize an empty dataset".into()));
        }
        let n = self.len() as f64;
        let mean = self.outputs.iter().sum::<f64>() / n;
        let all_equal = self.outputs.iter().all(|&y| y == self.outputs[0]);
        let std = if all_equal {
            1.0
        } else {
            let var = self.outputs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        };
        let state = NormState {
            domain: self.domain.clone(),
            out_mean: if all_equal { self.outputs[0] } else { mean },
            out_std: std,
        };
        Ok(NormalizedData {
            inputs: self.inputs.iter().map(|x| state.to_unit(x)).collect(),
            outputs: self.outputs.iter().map(|&y| state.normalize_output(y)).collect(),
            state,
        })
    }
}

/// The affine maps applied by [`Dataset::normalize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormState {
    pub domain: Domain,
    pub out_mean: f64,
    pub out_std: f64,
}

impl NormState {
    pub fn identity(domain: Domain) -> Self {
        Self {
            domain,
            out_mean: 0.0,
            out_std: 1.0,
        }
    }

    pub fn normalize_output(&self, y: f64) -> f64 {
        (y - self.out_mean) / self.out_std
    }

    pub fn denormalize_output(&self, z: f64) -> f64 {
        z * self.out_std + self.out_mean
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.domain.to_unit(x)
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.domain.from_unit(u)
    }
}

/// Unit-cube inputs and z-scored outputs the GP is fitted on.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedData {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub state: NormState,
}

impl NormalizedData {
    /// No observations; used for prior-only computations.
    pub fn empty(domain: Domain) -> Self {
        Self {
            inputs: Vec::new(),
            outputs: Vec::new(),
            state: NormState::identity(domain),
        }
    }

    pub fn dim(&self) -> usize {
        self.state.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Best normalized output, `0.0` when there is no data.
    pub fn incumbent(&self) -> f64 {
        self.outputs.iter().copied().reduce(f64::min).unwrap_or(0.0)
    }

    /// Copy with one extra (unit-cube input, normalized output) pair.
    pub fn with_point(&self, x_unit: Vec<f64>, z: f64) -> Self {
        let mut out = self.clone();
        out.inputs.push(x_unit);
        out.outputs.push(z);
        out
    }
}

/// One GP hyper-parameter vector θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// One lengthscale per input dimension, in unit-cube units.
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub mean_const: f64,
    pub nugget: f64,
}

impl HyperParams {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64, mean_const: f64) -> Self {
        Self {
            lengthscales,
            signal_variance,
            mean_const,
            nugget: DEFAULT_NUGGET,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.lengthscales.is_empty() || !self.lengthscales.iter().all(|&l| positive(l)) {
            return Err(Error::InvalidArgument(format!(
                "lengthscales must be positive: {:?}",
                self.lengthscales
            )));
        }
        if !positive(self.signal_variance) || !positive(self.nugget) {
            return Err(Error::InvalidArgument(
                "signal variance and nugget must be positive".into(),
            ));
        }
        if !self.mean_const.is_finite() {
            return Err(Error::InvalidArgument("mean constant must be finite".into()));
        }
        Ok(())
    }

    /// `[ln ℓ_1, .., ln ℓ_d, ln σ², μ_p]`, the space the MCMC walks in.
    pub fn to_unconstrained(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.mean_const);
        v
    }

    pub fn from_unconstrained(v: &[f64], nugget: f64) -> Self {
        let d = v.len() - 2;
        Self {
            lengthscales: v[..d].iter().map(|l| l.exp()).collect(),
            signal_variance: v[d].exp(),
            mean_const: v[d + 1],
            nugget,
        }
    }

    fn inverse_lengthscales(&self) -> Vec<f64> {
        self.lengthscales.iter().map(|l| 1.0 / l).collect()
    }
}

#[inline]
fn matern52_of_r(r: f64, signal_variance: f64) -> f64 {
    let sr = SQRT_5 * r;
    signal_variance * (1.0 + sr + sr * sr / 3.0) * (-sr).exp()
}

#[inline]
fn scaled_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Matérn 5/2 covariance with ARD lengthscales.
pub fn matern52(a: &[f64], b: &[f64], hp: &HyperParams) -> Result<f64> {
    if a.len() != b.len() || a.len() != hp.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {} with {} lengthscales",
            a.len(),
            b.len(),
            hp.dim()
        )));
    }
    let r = a
        .iter()
        .zip(b)
        .zip(&hp.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(matern52_of_r(r, hp.signal_variance))
}

/// Lower Cholesky factor stored row-major, with the nugget that made it succeed.
#[derive(Clone, Debug)]
pub(crate) struct Factor {
    l: Vec<f64>,
    n: usize,
    nugget: f64,
}

impl Factor {
    /// Factorizes `gram + nugget·I`, escalating the nugget ×10 up to [`MAX_NUGGET`].
    pub(crate) fn new(gram: &[f64], n: usize, base_nugget: f64) -> Result<Self> {
        let mut nugget = base_nugget;
        loop {
            let mut m = nalgebra::DMatrix::from_row_slice(n, n, gram);
            for i in 0..n {
                m[(i, i)] += nugget;
            }
            if let Some(chol) = m.cholesky() {
                let lm = chol.l();
                let mut l = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..=i {
                        l[i * n + j] = lm[(i, j)];
                    }
                }
                return Ok(Self { l, n, nugget });
            }
            let next = nugget * 10.0;
            if next > MAX_NUGGET * (1.0 + 1e-9) {
                return Err(Error::Numerical {
                    message: format!("Cholesky factorization of a {n}x{n} Gram matrix failed"),
                    nugget,
                });
            }
            nugget = next;
        }
    }

    pub(crate) fn nugget(&self) -> f64 {
        self.nugget
    }

    /// Solves `L v = b` in place.
    pub(crate) fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, v)| l * v).sum();
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ x = v` in place.
    pub(crate) fn backward_in_place(&self, v: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = v[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * v[k];
            }
            v[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `(L Lᵀ) x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    pub(crate) fn half_log_det(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum()
    }
}

fn scale_inputs(inputs: &[Vec<f64>], inv_ls: &[f64]) -> Vec<f64> {
    inputs
        .iter()
        .flat_map(|x| x.iter().zip(inv_ls).map(|(v, s)| v * s))
        .collect()
}

fn gram(scaled: &[f64], n: usize, d: usize, signal_variance: f64) -> Vec<f64> {
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = signal_variance;
        let xi = &scaled[i * d..(i + 1) * d];
        for j in 0..i {
            let v = matern52_of_r(scaled_distance(xi, &scaled[j * d..(j + 1) * d]), signal_variance);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

fn check_compatible(data: &NormalizedData, hp: &HyperParams) -> Result<()> {
    hp.validate()?;
    if hp.dim() != data.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} lengthscales for {}-dimensional data",
            hp.dim(),
            data.dim()
        )));
    }
    Ok(())
}

/// Exact GP posterior for one θ, with the factorization cached.
#[derive(Clone, Debug)]
pub struct Posterior {
    hp: HyperParams,
    inv_ls: Vec<f64>,
    scaled: Vec<f64>,
    factor: Option<Factor>,
    alpha: Vec<f64>,
}

impl Posterior {
    pub fn new(data: &NormalizedData, hp: &HyperParams) -> Result<Self> {
        check_compatible(data, hp)?;
        let inv_ls = hp.inverse_lengthscales();
        let n = data.len();
        let scaled = scale_inputs(&data.inputs, &inv_ls);
        let (factor, alpha) = if n == 0 {
            (None, Vec::new())
        } else {
            let k = gram(&scaled, n, hp.dim(), hp.signal_variance);
            let factor = Factor::new(&k, n, hp.nugget)?;
            let centered: Vec<f64> = data.outputs.iter().map(|y| y - hp.mean_const).collect();
            let alpha = factor.solve(&centered);
            (Some(factor), alpha)
        };
        Ok(Self {
            hp: hp.clone(),
            inv_ls,
            scaled,
            factor,
            alpha,
        })
    }

    pub fn hyperparams(&self) -> &HyperParams {
        &self.hp
    }

    /// Nugget actually used in the factorization, after any escalation.
    pub fn effective_nugget(&self) -> f64 {
        self.factor.as_ref().map_or(self.hp.nugget, Factor::nugget)
    }

    /// Posterior mean and variance of the latent function at a unit-cube point.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let d = self.inv_ls.len();
        assert_eq!(x.len(), d, "query dimension does not match the model");
        let Some(factor) = &self.factor else {
            return (self.hp.mean_const, self.hp.signal_variance);
        };
        let xs: Vec<f64> = x.iter().zip(&self.inv_ls).map(|(v, s)| v * s).collect();
        let mut k: Vec<f64> = self
            .scaled
            .chunks_exact(d)
            .map(|row| matern52_of_r(scaled_distance(&xs, row), self.hp.signal_variance))
            .collect();
        let mean = self.hp.mean_const + k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        factor.forward_in_place(&mut k);
        let var = self.hp.signal_variance - k.iter().map(|v| v * v).sum::<f64>();
        (mean, var.max(0.0))
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.predict(x).0
    }

    pub fn stddev(&self, x: &[f64]) -> f64 {
        self.predict(x).1.sqrt()
    }
}

/// `log p(y | θ)` under the GP; zero for an empty dataset.
pub fn log_marginal_likelihood(data: &NormalizedData, hp: &HyperParams) -> Result<f64> {
    check_compatible(data, hp)?;
    let n = data.len();
    if n == 0 {
        return Ok(0.0);
    }
    let scaled = scale_inputs(&data.inputs, &hp.inverse_lengthscales());
    let k = gram(&scaled, n, hp.dim(), hp.signal_variance);
    let factor = Factor::new(&k, n, hp.nugget)?;
    let mut v: Vec<f64> = data.outputs.iter().map(|y| y - hp.mean_const).collect();
    factor.forward_in_place(&mut v);
    let quad = v.iter().map(|x| x * x).sum::<f64>();
    Ok(-0.5 * quad - factor.half_log_det() - 0.5 * n as f64 * LN_2PI)
}
