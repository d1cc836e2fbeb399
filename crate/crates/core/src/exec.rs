//! Execution-mode switch for the data-parallel kernels.
//!
//! The hot loops (stencil updates, per-receiver solves, map scans) are
//! written against this switch so benchmarks can compare the rayon path
//! with the plain sequential one on identical inputs. Without the
//! `parallel` feature the Parallel variant silently degrades to
//! sequential execution.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Maps `f` over `0..n`, in parallel when the mode (and feature) allow it.
/// Output order matches index order in both paths.
pub fn map_indexed<T: Send>(mode: ExecMode, n: usize, f: impl Fn(usize) -> T + Send + Sync) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if mode.is_parallel() {
            return (0..n).into_par_iter().map(&f).collect();
        }
    }
    let _ = mode;
    (0..n).map(f).collect()
}
