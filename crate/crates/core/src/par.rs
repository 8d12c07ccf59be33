//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) per-node work is spread over a rayon
//! pool. Without it the same functions run sequentially. Reductions always
//! use the same fixed binary tree, so results do not depend on the feature
//! or on the number of worker threads.

use num_complex::Complex64;

/// Leaf size of the pairwise summation tree.
const LEAF: usize = 32;
/// Below this length a reduction never forks.
const FORK_MIN: usize = 4096;

/// Evaluate `f` at every index in `0..n` and collect in index order.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Map over a slice, preserving order.
pub fn map_slice<S, T, F>(xs: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indices(xs.len(), |i| f(&xs[i]))
}

/// Pairwise (tree) sum with fixed split points.
///
/// The tree only depends on `xs.len()`, so a serial run and a parallel run
/// over any number of threads produce bitwise identical results.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= LEAF {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    let (lo, hi) = xs.split_at(mid);
    let (a, b) = if xs.len() >= FORK_MIN {
        join(|| pairwise_sum(lo), || pairwise_sum(hi))
    } else {
        (pairwise_sum(lo), pairwise_sum(hi))
    };
    a + b
}

/// Real-valued variant of [`pairwise_sum`].
pub fn pairwise_sum_real(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |acc, x| acc + x);
    }
    let mid = xs.len() / 2;
    let (lo, hi) = xs.split_at(mid);
    let (a, b) = if xs.len() >= FORK_MIN {
        join(|| pairwise_sum_real(lo), || pairwise_sum_real(hi))
    } else {
        (pairwise_sum_real(lo), pairwise_sum_real(hi))
    };
    a + b
}

fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}

/// Run `f` with at most `jobs` worker threads (`0` means the global default).
///
/// Without the `parallel` feature this simply calls `f`.
pub fn with_jobs<R, F>(jobs: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

/// Number of worker threads currently available.
pub fn current_jobs() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
