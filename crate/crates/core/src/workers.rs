//! Worker pool for per-dyad batch work.
//!
//! Jobs write into pre-assigned output slots, so output order and content are
//! independent of the thread count.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

pub struct Workers {
    pool: ThreadPool,
    count: usize,
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workers").field("count", &self.count).finish()
    }
}

impl Workers {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(count)
            .thread_name(|i| format!("netfuse-worker-{i}"))
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
        Ok(Self { pool, count })
    }

    /// One worker per logical core.
    pub fn available() -> Self {
        let n = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self::new(n).expect("positive worker count")
    }

    pub fn single() -> Self {
        Self::new(1).expect("positive worker count")
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `f(index, item)` for every item; results in input order.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(usize, &T) -> U + Sync + Send,
    {
        self.pool
            .install(|| items.par_iter().enumerate().map(|(k, x)| f(k, x)).collect())
    }

    /// `f(index)` for `0..n`; results in index order.
    pub fn map_range<U, F>(&self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }

    /// Mutates every item in place.
    pub fn for_each_mut<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        self.pool
            .install(|| items.par_iter_mut().enumerate().for_each(|(k, x)| f(k, x)));
    }
}
