//! Rayon-backed batch evaluation for the global optimizers.

use rayon::prelude::*;
use rayon::ThreadPool;
use rollover_core::calibration::{Executor, ObjectiveFn};

/// Evaluates candidate batches on a rayon pool.
///
/// Each candidate is evaluated independently and results keep their input
/// order, so optimizer trajectories do not depend on the worker count.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// A pool with `workers` threads; `0` uses rayon's default.
    pub fn new(workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        Parallel { pool }
    }

    /// Number of worker threads.
    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `f` inside the pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

impl Executor for Parallel {
    fn map(&self, xs: &[Vec<f64>], f: &ObjectiveFn<'_>) -> Vec<f64> {
        self.pool.install(|| xs.par_iter().map(|x| f(x)).collect())
    }
}
