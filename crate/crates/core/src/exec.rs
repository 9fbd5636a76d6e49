//! Shot-level data parallelism.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it every map runs sequentially. Results are always returned in
//! index order, so reductions over them do not depend on the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How index-parallel work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Executor {
    Sequential,
    /// `None` uses the global rayon pool; `Some(n)` a dedicated pool of `n`
    /// threads. Falls back to sequential without the `parallel` feature.
    #[default]
    Parallel,
    Workers(usize),
}

impl Executor {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            None | Some(0) => Executor::Parallel,
            Some(1) => Executor::Sequential,
            Some(n) => Executor::Workers(n),
        }
    }

    /// Evaluate `f(i)` for `i in 0..n`, collecting results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Executor::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel => (0..n).into_par_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Workers(w) => match rayon::ThreadPoolBuilder::new().num_threads(*w).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
                Err(_) => (0..n).map(f).collect(),
            },
            #[cfg(not(feature = "parallel"))]
            _ => (0..n).map(f).collect(),
        }
    }

    /// Fallible variant of [`Executor::map`]; the first error by index wins.
    pub fn try_map<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        for ex in [Executor::Sequential, Executor::Parallel, Executor::Workers(3)] {
            let v = ex.map(100, |i| i * i);
            assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_by_index() {
        let r: Result<Vec<usize>, usize> =
            Executor::Workers(4).try_map(50, |i| if i % 7 == 6 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(6));
    }
}
