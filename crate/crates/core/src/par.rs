//! Parallel-map capability handed to sweep routines. The CLI owns the pool;
//! the numerical modules stay agnostic of how work is scheduled.

use rayon::prelude::*;

/// Executes independent work items, either serially or on a rayon pool.
#[derive(Clone)]
pub enum ParMap {
    Serial,
    Pool(std::sync::Arc<rayon::ThreadPool>),
}

impl Default for ParMap {
    fn default() -> Self {
        ParMap::Serial
    }
}

impl ParMap {
    /// Build a pool with `jobs` threads; `jobs <= 1` stays serial.
    pub fn with_jobs(jobs: usize) -> Self {
        if jobs <= 1 {
            ParMap::Serial
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .expect("failed to build worker pool");
            ParMap::Pool(std::sync::Arc::new(pool))
        }
    }

    /// Map `f` over `items`, preserving input order in the output.
    pub fn map<T, U, F>(&self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        match self {
            ParMap::Serial => items.into_iter().map(f).collect(),
            ParMap::Pool(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_preserves_order() {
        let p = ParMap::with_jobs(4);
        let out = p.map((0..100).collect(), |i| i * i);
        for (i, &v) in out.iter().enumerate() {
            assert_eq!(v, i * i);
        }
    }
}
