//! Derivative-free maximization: uniform random probes, then coordinate
//! pattern search from the best few.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::Domain;
use crate::rng::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximizeBudget {
    pub probes_per_dim: usize,
    pub n_starts: usize,
    pub refine_iters: usize,
    /// Initial pattern step as a fraction of each side of the domain.
    pub initial_step: f64,
}

impl Default for MaximizeBudget {
    fn default() -> Self {
        Self {
            probes_per_dim: 2048,
            n_starts: 5,
            refine_iters: 100,
            initial_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Maximum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Largest value seen among the random probes.
    pub best_probe_value: f64,
}

fn finite_or_worst(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn pattern_search<F: Fn(&[f64]) -> f64>(
    objective: &F,
    domain: &Domain,
    mut x: Vec<f64>,
    mut fx: f64,
    budget: &MaximizeBudget,
) -> (Vec<f64>, f64) {
    let bounds = domain.bounds();
    let mut steps: Vec<f64> = bounds.iter().map(|(lo, hi)| budget.initial_step * (hi - lo)).collect();
    for _ in 0..budget.refine_iters {
        let mut improved = false;
        for c in 0..x.len() {
            let (lo, hi) = bounds[c];
            for dir in [1.0, -1.0] {
                let moved = (x[c] + dir * steps[c]).clamp(lo, hi);
                if moved == x[c] {
                    continue;
                }
                let mut cand = x.clone();
                cand[c] = moved;
                let v = finite_or_worst(objective(&cand));
                if v > fx {
                    x = cand;
                    fx = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
            let converged = steps
                .iter()
                .zip(bounds)
                .all(|(s, (lo, hi))| *s < 1e-12 * (hi - lo));
            if converged {
                break;
            }
        }
    }
    (x, fx)
}

/// Maximizes `objective` over `domain`. Ties between probes go to the lowest
/// probe index, ties between refined starts to the better-ranked start.
pub fn maximize<F: Fn(&[f64]) -> f64>(
    objective: F,
    domain: &Domain,
    budget: &MaximizeBudget,
    seed: u64,
) -> Result<Maximum> {
    let d = domain.dim();
    let n_probes = budget.probes_per_dim * d;
    if n_probes == 0 || budget.n_starts == 0 {
        return Err(Error::InvalidArgument("maximization budget must be at least one probe".into()));
    }
    let mut rng = rng_from_seed(seed);
    let probes: Vec<Vec<f64>> = (0..n_probes)
        .map(|_| {
            domain
                .bounds()
                .iter()
                .map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
                .collect()
        })
        .collect();
    let values: Vec<f64> = probes.iter().map(|p| finite_or_worst(objective(p))).collect();

    let mut order: Vec<usize> = (0..n_probes).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let best_probe_value = values[order[0]];

    let mut best: Option<(Vec<f64>, f64)> = None;
    for &idx in order.iter().take(budget.n_starts) {
        let (x, fx) = pattern_search(&objective, domain, probes[idx].clone(), values[idx], budget);
        if best.as_ref().is_none_or(|(_, bv)| fx > *bv) {
            best = Some((x, fx));
        }
    }
    let (point, value) = best.expect("at least one start");
    Ok(Maximum {
        point,
        value,
        best_probe_value,
    })
}
