//! Execution strategy for the data-parallel loops in this crate.
//!
//! With the `parallel` feature (default) `ExecMode::Parallel` fans work out
//! over rayon; without it every mode runs sequentially. Results are always
//! returned in input order, so output never depends on the mode.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Runs `f` with at most `jobs` worker threads. `None` keeps the global pool.
    pub fn with_jobs<R: Send>(self, jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "parallel")]
        if let (true, Some(jobs)) = (self.is_parallel(), jobs) {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
            {
                return pool.install(f);
            }
        }
        let _ = jobs;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let xs: Vec<u64> = (0..500).collect();
        let a = ExecMode::Sequential.map(&xs, |x| x * x);
        let b = ExecMode::Parallel.map(&xs, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(ExecMode::Parallel.map_range(4, |i| i + 1), vec![1, 2, 3, 4]);
        assert_eq!(ExecMode::Parallel.with_jobs(Some(2), || 7), 7);
    }
}
