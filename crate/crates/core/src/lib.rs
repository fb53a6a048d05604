//! Batch Bayesian optimization by sampling acquisition functions.
//!
//! Each point of a batch maximizes its own acquisition function, obtained by
//! averaging a sequential criterion (EI or LCB) over a handful of Gaussian
//! process hyper-parameter vectors drawn from their data posterior. The crate
//! also ships the jittered and hallucinated variants, the B-LCB and parallel
//! Thompson sampling baselines, the synthetic benchmarks used to compare them
//! and an experiment harness with an ask/tell mode.
//!
//! ```no_run
//! use ats_core::benchmarks;
//! use ats_core::gp::Dataset;
//! use ats_core::strategies::{propose_batch, BatchConfig, Strategy};
//!
//! let bench = benchmarks::lookup("Branin").unwrap();
//! let mut data = Dataset::new(bench.domain());
//! for x in [[0.0, 5.0], [5.0, 10.0], [-3.0, 12.0]] {
//!     data.push(x.to_vec(), bench.evaluate(&x).unwrap()).unwrap();
//! }
//! let cfg = BatchConfig { strategy: Strategy::Ats, batch_size: 4, ..BatchConfig::default() };
//! let batch = propose_batch(&data, &cfg).unwrap();
//! assert_eq!(batch.points.len(), 4);
//! ```

pub mod acquisition;
pub mod benchmarks;
pub mod error;
pub mod gp;
pub mod harness;
pub mod hyperposterior;
pub mod rng;
pub mod strategies;

pub use error::{Error, Result};
