//! Data-parallel execution with a sequential fallback.
//!
//! Every sweep in the crate (frequency grids, coefficient searches,
//! initial-condition hunts) goes through [`map_indexed`]. With the
//! `parallel` feature enabled the work is spread over the rayon pool;
//! without it, or with [`ExecMode::Sequential`], it runs in order on the
//! calling thread. Results are always returned in index order, so
//! reductions over them are deterministic in either mode.

/// How a sweep is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

impl ExecMode {
    /// True when this mode will actually use more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_with(ExecMode::default(), n, f)
}

/// As [`map_indexed`] with an explicit execution mode.
pub fn map_indexed_with<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == ExecMode::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Maps over a slice, preserving order.
pub fn map_slice<A, T, F>(items: &[A], f: F) -> Vec<T>
where
    A: Sync,
    T: Send,
    F: Fn(&A) -> T + Sync + Send,
{
    map_indexed(items.len(), |i| f(&items[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let seq = map_indexed_with(ExecMode::Sequential, 1000, |i| (i as f64).sqrt());
        let par = map_indexed_with(ExecMode::Parallel, 1000, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
        assert_eq!(seq[49], 7.0);
    }

    #[test]
    fn empty_sweep() {
        let v: Vec<u8> = map_indexed(0, |_| 1);
        assert!(v.is_empty());
    }
}
