//! Run-level parallelism for grid searches.
//!
//! A single optimizer run is inherently sequential. Independent runs are
//! mapped over a rayon pool when the `parallel` feature is enabled; otherwise
//! every request falls back to a plain loop. Results always come back in
//! input order, so output never depends on scheduling.

use crate::error::Result;

/// How independent runs are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// `workers == 0` uses the rayon default (one thread per core).
    Parallel { workers: usize },
}

impl Execution {
    /// `Some(1)` means sequential; `None` means the default pool width.
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            Some(w) => Execution::Parallel { workers: w },
            None => Execution::Parallel { workers: 0 },
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel { .. })
    }
}

/// Applies `f` to every item and returns the results in input order.
pub fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => Ok(items.iter().map(f).collect()),
        Execution::Parallel { workers } => parallel_map(items, workers, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    log::debug!("built without the parallel feature; running {workers} workers sequentially");
    Ok(items.iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let seq = map_ordered(&items, Execution::Sequential, |x| x * x).unwrap();
        let par = map_ordered(&items, Execution::Parallel { workers: 3 }, |x| x * x).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[199], 199 * 199);
    }

    #[test]
    fn worker_flag_mapping() {
        assert_eq!(Execution::from_workers(Some(1)), Execution::Sequential);
        assert_eq!(Execution::from_workers(Some(4)), Execution::Parallel { workers: 4 });
        assert_eq!(Execution::from_workers(None), Execution::Parallel { workers: 0 });
    }
}
