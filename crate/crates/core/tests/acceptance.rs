//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

mod common;

use std::collections::HashMap;
use std::time::Instant;

use ats_core::acquisition::{
    ei_value, expected_improvement, lcb_value, marginal_value, AcquisitionKind, AcquisitionSample,
};
use ats_core::benchmarks::{self, cosines, eggholder};
use ats_core::gp::{log_marginal_likelihood, Dataset, HyperParams, Posterior};
use ats_core::harness::{aggregate, run_experiment, ExperimentConfig, ExperimentTrace};
use ats_core::hyperposterior::{ensemble_sample, McmcConfig};
use ats_core::strategies::*;
use common::{grid_min, polish, random_hp, random_instance, random_point, rng, Oracle};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const REPS: usize = 10;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Run {
    bench: &'static str,
    strategy: Strategy,
    m: usize,
    kind: AcquisitionKind,
    iters: usize,
}

struct Done {
    trace: ExperimentTrace,
    secs: f64,
}

impl Done {
    fn mean_best_at(&self, iter: usize) -> f64 {
        aggregate(&self.trace)[iter - 1].mean_best
    }

    fn mean_final(&self) -> f64 {
        self.trace.mean_final_best().expect("at least one repetition succeeded")
    }

    fn failures(&self) -> usize {
        self.trace.repetitions.len() - self.trace.successful().count()
    }
}

#[derive(Default)]
struct Runs(HashMap<Run, Done>);

impl Runs {
    fn get(&mut self, r: Run) -> &Done {
        self.0.entry(r).or_insert_with(|| {
            let cfg = ExperimentConfig {
                benchmark: r.bench.into(),
                strategy: r.strategy,
                batch_size: r.m,
                acquisition_kind: r.kind,
                n_iterations: r.iters,
                n_repetitions: REPS,
                record_wallclock: false,
                ..Default::default()
            };
            let start = Instant::now();
            let trace = run_experiment(&cfg).expect("valid experiment config");
            Done { trace, secs: start.elapsed().as_secs_f64() }
        })
    }
}

use AcquisitionKind::{Ei, Lcb};

const ATS_BRANIN: Run = Run { bench: "branin", strategy: Strategy::Ats, m: 10, kind: Lcb, iters: 7 };
const BLCB_BRANIN: Run = Run { bench: "branin", strategy: Strategy::BLcb, m: 10, kind: Lcb, iters: 7 };
const ATS_COSINES: Run = Run { bench: "cosines", strategy: Strategy::Ats, m: 5, kind: Ei, iters: 9 };
const PTS_COSINES: Run = Run { strategy: Strategy::Pts, ..ATS_COSINES };
const JATS_COSINES: Run = Run { strategy: Strategy::JAts, iters: 3, ..ATS_COSINES };
const ATS_HARTMANN: Run = Run { bench: "hartmann6", strategy: Strategy::Ats, m: 10, kind: Ei, iters: 9 };
const PTS_HARTMANN: Run = Run { strategy: Strategy::Pts, ..ATS_HARTMANN };
const ATS_BLCB_HARTMANN: Run = Run { strategy: Strategy::AtsOnBLcb, kind: Lcb, ..ATS_HARTMANN };
const SEQ_HARTMANN: Run = Run { strategy: Strategy::Sequential, m: 1, iters: 20, ..ATS_HARTMANN };

fn within_time(secs: f64, limit: f64) -> bool {
    secs <= limit
}

fn c1(runs: &mut Runs) -> (bool, String) {
    let r = runs.get(ATS_BRANIN);
    let mean = r.mean_final();
    let ok = (0.3979..=0.3995).contains(&mean) && r.failures() == 0 && within_time(r.secs, 300.0);
    (ok, format!("ATS Branin M=10 LCB: mean best {mean:.5} (accept [0.3979, 0.3995]), {:.0}s", r.secs))
}

fn c2(runs: &mut Runs) -> (bool, String) {
    let r = runs.get(ATS_COSINES);
    let mean = r.mean_final();
    let ok = mean <= -1.770 && r.failures() == 0 && within_time(r.secs, 300.0);
    (ok, format!("ATS Cosines M=5 EI: mean best {mean:.5} (accept <= -1.770), {:.0}s", r.secs))
}

fn c3(runs: &mut Runs) -> (bool, String) {
    let r = runs.get(BLCB_BRANIN);
    let mean = r.mean_final();
    let ok = mean <= 0.3985 && r.failures() == 0 && within_time(r.secs, 300.0);
    (ok, format!("B-LCB Branin M=10: mean best {mean:.5} (accept <= 0.3985), {:.0}s", r.secs))
}

fn c4(runs: &mut Runs) -> (bool, String) {
    let mut ok = true;
    let mut secs = 0.0;
    let mut parts = Vec::new();
    for (ats, pts) in [(ATS_COSINES, PTS_COSINES), (ATS_HARTMANN, PTS_HARTMANN)] {
        let (a, ta) = {
            let r = runs.get(ats);
            (r.mean_final(), r.secs)
        };
        let (p, tp) = {
            let r = runs.get(pts);
            (r.mean_final(), r.secs)
        };
        secs += ta + tp;
        ok &= a < p;
        parts.push(format!("{} ATS {a:.5} vs P-TS {p:.5}", ats.bench));
    }
    ok &= within_time(secs, 900.0);
    (ok, format!("{}, {secs:.0}s", parts.join("; ")))
}

fn c5(runs: &mut Runs) -> (bool, String) {
    let r = runs.get(ATS_BLCB_HARTMANN);
    let mean = r.mean_final();
    let ok = mean <= -3.25 && r.failures() == 0 && within_time(r.secs, 600.0);
    (ok, format!("ATS-B-LCB Hartmann6 M=10: mean best {mean:.5} (accept <= -3.25), {:.0}s", r.secs))
}

fn c6(runs: &mut Runs) -> (bool, String) {
    let (target, ts) = {
        let r = runs.get(SEQ_HARTMANN);
        (r.mean_final(), r.secs)
    };
    let r = runs.get(ATS_HARTMANN);
    let reached = (1..=ATS_HARTMANN.iters).find(|&k| r.mean_best_at(k) <= target);
    let ok = reached.is_some_and(|k| k <= 5) && within_time(ts + r.secs, 600.0);
    (
        ok,
        format!(
            "sequential Hartmann6 after 20 iterations {target:.5}; ATS M=10 reaches it at iteration {} (accept <= 5), {:.0}s",
            reached.map_or("never".into(), |k| k.to_string()),
            ts + r.secs
        ),
    )
}

fn c7() -> (bool, String) {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let t = r.random_range(1..=8);
        let d = r.random_range(1..=3);
        let (data, hp) = random_instance(&mut r, t, d);
        let post = Posterior::new(&data, &hp).unwrap();
        let oracle = Oracle::new(&data, &hp);
        worst = worst.max((log_marginal_likelihood(&data, &hp).unwrap() - oracle.lml()).abs());
        for _ in 0..5 {
            let x = random_point(&mut r, d);
            let (m, v) = post.predict(&x);
            worst = worst.max((m - oracle.mean(&x)).abs()).max((v - oracle.var(&x)).abs());
        }
    }
    (worst <= 1e-8, format!("50 random GP instances, max deviation from oracle {worst:.2e} (accept <= 1e-8)"))
}

fn c8() -> (bool, String) {
    let mut r = rng(8);
    let n = 1_000_000;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let delta: f64 = r.random_range(-2.0..2.0);
        let sigma: f64 = r.random_range(0.05..2.0);
        let j: f64 = r.random_range(0.0..0.5);
        let closed = expected_improvement(0.0, sigma, delta, j);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut r);
            let v = (delta - j - sigma * z).max(0.0);
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt().max(1e-12);
        worst = worst.max((closed - mean).abs() / se);
    }
    (worst <= 3.0, format!("EI vs 1e6-sample Monte Carlo on 20 triples, worst {worst:.2} standard errors (accept <= 3)"))
}

fn c9() -> (bool, String) {
    let target = |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
    let init = |n: usize, seed: u64| -> Vec<Vec<f64>> {
        let mut r = rng(seed);
        (0..n).map(|_| (0..2).map(|_| StandardNormal.sample(&mut r)).collect()).collect()
    };
    let cfg = McmcConfig { n_walkers: 32, burn_in: 500, n_steps: 2000, seed: 9, ..Default::default() };
    let out = ensemble_sample(target, init(32, 1), &cfg).unwrap();
    let mut moments_ok = true;
    let mut moments = Vec::new();
    for k in 0..2 {
        let xs: Vec<f64> = out.draws.iter().map(|d| d[k]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        moments_ok &= mean.abs() <= 0.05 && (0.9..=1.1).contains(&var);
        moments.push(format!("({mean:.3}, {var:.3})"));
    }

    let a = [[2.0, 0.5], [-0.3, 0.7]];
    let b = [1.5, -4.0];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let map = |x: &[f64]| vec![a[0][0] * x[0] + a[0][1] * x[1] + b[0], a[1][0] * x[0] + a[1][1] * x[1] + b[1]];
    let unmap = |y: &[f64]| {
        let (u, v) = (y[0] - b[0], y[1] - b[1]);
        vec![(a[1][1] * u - a[0][1] * v) / det, (a[0][0] * v - a[1][0] * u) / det]
    };
    let start = init(16, 3);
    let cfg = McmcConfig { n_walkers: 16, burn_in: 10, n_steps: 40, seed: 4, ..Default::default() };
    let plain = ensemble_sample(target, start.clone(), &cfg).unwrap();
    let mapped =
        ensemble_sample(|y: &[f64]| target(&unmap(y)), start.iter().map(|x| map(x)).collect(), &cfg).unwrap();
    let affine_err = plain
        .draws
        .iter()
        .zip(&mapped.draws)
        .map(|(x, y)| {
            let fx = map(x);
            (fx[0] - y[0]).abs().max((fx[1] - y[1]).abs())
        })
        .fold(0.0, f64::max);
    (
        moments_ok && affine_err <= 1e-8,
        format!(
            "Gaussian (mean, variance) per coordinate {}; affine-invariance error {affine_err:.2e} (accept <= 1e-8)",
            moments.join(" ")
        ),
    )
}

fn bits(b: &BatchProposal) -> Vec<u64> {
    b.points.iter().flatten().map(|v| v.to_bits()).collect()
}

fn c10() -> (bool, String) {
    let bench = benchmarks::lookup("branin").unwrap();
    let mut r = rng(10);
    let mut ds = Dataset::new(bench.domain());
    for _ in 0..6 {
        let x = vec![r.random_range(-5.0..10.0), r.random_range(0.0..15.0)];
        let y = bench.evaluate(&x).unwrap();
        ds.push(x, y).unwrap();
    }
    let cfg = |strategy, kind, m| BatchConfig {
        strategy,
        acquisition_kind: kind,
        batch_size: m,
        root_seed: 42,
        ..Default::default()
    };
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };

    let one = cfg(Strategy::Ats, Ei, 1);
    let ats1 = ats_batch(&ds, &one).unwrap();
    check("ATS(M=1) = sequential", bits(&ats1) == bits(&sequential_step(&ds, &one).unwrap()));
    check("h-ATS(M=1) = ATS(M=1)", bits(&hats_batch(&ds, &one).unwrap()) == bits(&ats1));

    let mut lcb = cfg(Strategy::AtsOnBLcb, Lcb, 3);
    lcb.enhance_p = 0.0;
    let blcb = blcb_batch(&ds, &lcb).unwrap();
    check("enhance(p=0) = B-LCB", bits(&ats_enhance(EnhanceBase::BLcb, &ds, &lcb).unwrap()) == bits(&blcb));
    let mut ts = cfg(Strategy::AtsOnPts, Ei, 3);
    ts.enhance_p = 0.0;
    let pts = pts_batch(&ds, &ts).unwrap();
    check("enhance(p=0) = P-TS", bits(&ats_enhance(EnhanceBase::Pts, &ds, &ts).unwrap()) == bits(&pts));

    for kind in [Ei, Lcb] {
        let mut j = cfg(Strategy::JAts, kind, 3);
        j.jitter_p = 0.0;
        check("j-ATS(default coins) = ATS", bits(&jats_batch(&ds, &j).unwrap()) == bits(&ats_batch(&ds, &j).unwrap()));
    }

    let data = ds.normalize().unwrap();
    let mut all_equal = true;
    for _ in 0..50 {
        let hp: HyperParams = random_hp(&mut r, 2);
        let post = Posterior::new(&data, &hp).unwrap();
        let x = random_point(&mut r, 2);
        let ei = AcquisitionSample::marginal(Ei, &data, std::slice::from_ref(&hp), 0.01).unwrap();
        let lc = AcquisitionSample::marginal(Lcb, &data, std::slice::from_ref(&hp), 0.3).unwrap();
        all_equal &= marginal_value(&x, &ei).to_bits() == ei_value(&x, &post, data.incumbent(), 0.01).to_bits();
        all_equal &= marginal_value(&x, &lc).to_bits() == lcb_value(&x, &post, 0.3).to_bits();
    }
    check("marginal(s=1) = single", all_equal);

    let ok = failed.is_empty();
    (ok, if ok { "all five reduction identities hold bitwise".into() } else { format!("broken: {}", failed.join(", ")) })
}

fn c11() -> (bool, String) {
    let mut found = Vec::new();
    let unit = [(0.0, 1.0), (0.0, 1.0)];
    let (v, p) = grid_min(cosines, unit, 2001);
    found.push(("cosines", polish(cosines, unit, p, 1e-3).min(v)));
    let egg = [(-512.0, 512.0), (-512.0, 512.0)];
    let (v, p) = grid_min(eggholder, egg, 4096);
    found.push(("eggholder", polish(eggholder, egg, p, 0.5).min(v)));
    let (v, p) = grid_min(benchmarks::branin, [(-5.0, 10.0), (0.0, 15.0)], 1501);
    found.push(("branin", polish(benchmarks::branin, [(-5.0, 10.0), (0.0, 15.0)], p, 0.01).min(v)));
    found.push(("hartmann6", benchmarks::hartmann6(&[0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573])));
    found.push(("rosenbrock4", benchmarks::rosenbrock(&[1.0; 4])));
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, v) in found {
        let table = benchmarks::min_value(name).unwrap();
        ok &= (v - table).abs() <= 1e-3;
        parts.push(format!("{name} {v:.4}/{table}"));
    }
    (ok, format!("found/table minima: {}", parts.join(", ")))
}

fn c12(runs: &mut Runs) -> (bool, String) {
    let diversity = |d: &Done| {
        let v: Vec<f64> = d
            .trace
            .successful()
            .flat_map(|r| r.iterations.iter().take(3).filter_map(|i| i.batch_diversity))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let a = diversity(runs.get(ATS_COSINES));
    let j = diversity(runs.get(JATS_COSINES));
    (j > a, format!("Cosines M=5 mean intra-batch distance over 3 iterations: j-ATS {j:.4} vs ATS {a:.4}"))
}

fn main() {
    let mut runs = Runs::default();
    let criteria: [&dyn Fn(&mut Runs) -> (bool, String); 12] = [
        &c1,
        &c2,
        &c3,
        &c4,
        &c5,
        &c6,
        &|_| c7(),
        &|_| c8(),
        &|_| c9(),
        &|_| c10(),
        &|_| c11(),
        &c12,
    ];
    let mut failed = Vec::new();
    for (i, criterion) in criteria.iter().enumerate() {
        let (ok, detail) = criterion(&mut runs);
        println!("criterion {:>2}: {}  {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
