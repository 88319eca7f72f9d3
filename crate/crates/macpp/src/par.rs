// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! the rayon pool; without it the same closures run on the calling thread.

/// Map `f` over `items`, preserving order.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map `f` over `0..n`, preserving order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
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

/// Sum of `f(i)` over `0..n` for vector-valued `f` of fixed length `dim`.
pub fn sum_range<F>(n: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> Vec<f64> + Sync + Send,
{
    let add = |mut a: Vec<f64>, b: Vec<f64>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(f)
            .reduce(|| vec![0.0; dim], add)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(vec![0.0; dim], add)
    }
}

/// Run `f` inside a pool with `threads` workers (0 = default). Sequential
/// builds ignore the thread count.
pub fn with_threads<R: Send, F: FnOnce() -> R + Send>(threads: usize, f: F) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
