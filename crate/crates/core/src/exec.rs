//! Execution mode for the data-parallel loops (Monte-Carlo instances,
//! stability grid cells, bound sweeps).
//!
//! Results are always collected in index order, so both modes produce
//! bit-identical output.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses the rayon global pool when the `parallel` feature is enabled,
    /// falls back to [`Exec::Sequential`] otherwise.
    #[default]
    Parallel,
}

impl Exec {
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..len).map(f).collect(),
            Exec::Parallel => parallel_map(len, f),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Caps the global thread pool. Returns `false` if the pool was already
/// initialized or parallelism is compiled out.
pub fn init_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let f = |i: usize| (i as f64).sqrt() * 3.0;
        let a = Exec::Sequential.map(257, f);
        let b = Exec::Parallel.map(257, f);
        assert_eq!(a, b);
        assert_eq!(a[4], 6.0);
    }

    #[test]
    fn empty_range() {
        assert!(Exec::Parallel.map(0, |i| i).is_empty());
    }
}
