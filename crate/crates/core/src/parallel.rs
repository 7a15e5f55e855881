//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the grid kernels run on rayon; without it (or
//! with [`Exec::Sequential`]) the same closures run on a plain loop. Every
//! output element is computed independently, so results are bitwise identical
//! whichever path is taken.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for grid kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Fill `out` with `f(i)` for every index.
pub fn fill_indexed<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
        return;
    }
    let _ = exec;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Map `f` over `0..n` and collect into a `Vec`.
pub fn map_range<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Sum of `f(i)` over `0..n`, reduced per row so the result does not depend on
/// how rayon splits the range.
pub fn sum_rows<T, F>(exec: Exec, n: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range(exec, n, f).into_iter().sum()
}
