//! Thin maybe-parallel shims.
//!
//! With the `parallel` feature (default) these fan out over rayon; without it
//! they run the same closures sequentially. All of them preserve output order,
//! so anything built on top stays deterministic for a given input.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_slice<'a, I, T, F>(items: &'a [I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&'a I) -> T + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<'a, I, T, F>(items: &'a [I], f: F) -> Vec<T>
where
    F: Fn(&'a I) -> T,
{
    items.iter().map(f).collect()
}

/// Runs `f` once per item, in parallel when enabled. Used for worker shards
/// that share state through atomics; ordering across items is not guaranteed
/// under the `parallel` feature.
#[cfg(feature = "parallel")]
pub fn for_each_item<I, F>(items: Vec<I>, f: F)
where
    I: Send,
    F: Fn(I) + Sync + Send,
{
    items.into_par_iter().for_each(f);
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_item<I, F>(items: Vec<I>, f: F)
where
    F: Fn(I),
{
    items.into_iter().for_each(f);
}
