//! Synthetic test functions with their domains and known minima.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gp::Domain;

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: &'static str,
    pub bounds: Vec<(f64, f64)>,
    pub min_value: f64,
    evaluator: fn(&[f64]) -> f64,
}

impl Benchmark {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn domain(&self) -> Domain {
        Domain::new(self.bounds.clone()).expect("benchmark bounds are valid")
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if !self.domain().contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        Ok((self.evaluator)(x))
    }
}

pub fn branin(x: &[f64]) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x[1] - b * x[0] * x[0] + c * x[0] - 6.0).powi(2) + 10.0 * (1.0 - t) * x[0].cos() + 10.0
}

/// `1 − Σ (g(x_i)² − 0.3 cos(3π g(x_i)))` with `g(w) = 1.6 w − 0.5`, minimized on `[0, 1]²`.
pub fn cosines(x: &[f64]) -> f64 {
    1.0 - x
        .iter()
        .map(|&w| {
            let g = 1.6 * w - 0.5;
            g * g - 0.3 * (3.0 * PI * g).cos()
        })
        .sum::<f64>()
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

pub fn hartmann6(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..6)
                .map(|j| HARTMANN_A[i][j] * (x[j] - HARTMANN_P[i][j]).powi(2))
                .sum();
            HARTMANN_ALPHA[i] * (-inner).exp()
        })
        .sum::<f64>()
}

pub fn eggholder(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1] + 47.0);
    -b * (b + a / 2.0).abs().sqrt().sin() - a * (a - b).abs().sqrt().sin()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn all() -> Vec<Benchmark> {
    vec![
        Benchmark {
            name: "Branin",
            bounds: vec![(-5.0, 10.0), (0.0, 15.0)],
            min_value: 0.3979,
            evaluator: branin,
        },
        Benchmark {
            name: "Cosines",
            bounds: vec![(0.0, 1.0); 2],
            min_value: -1.773,
            evaluator: cosines,
        },
        Benchmark {
            name: "Hartmann6",
            bounds: vec![(0.0, 1.0); 6],
            min_value: -3.322,
            evaluator: hartmann6,
        },
        Benchmark {
            name: "Eggholder",
            bounds: vec![(-512.0, 512.0); 2],
            min_value: -959.64,
            evaluator: eggholder,
        },
        Benchmark {
            name: "Rosenbrock4",
            bounds: vec![(-5.0, 10.0); 4],
            min_value: 0.0,
            evaluator: rosenbrock,
        },
    ]
}

/// Case-insensitive lookup by name.
pub fn lookup(name: &str) -> Result<Benchmark> {
    all()
        .into_iter()
        .find(|b| b.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownBenchmark(name.to_string()))
}

pub fn evaluate(name: &str, x: &[f64]) -> Result<f64> {
    lookup(name)?.evaluate(x)
}

pub fn min_value(name: &str) -> Result<f64> {
    Ok(lookup(name)?.min_value)
}
