//! Data-parallel helpers.
//!
//! With the default `parallel` feature the mapping helpers fan out over a
//! rayon pool; without it they degrade to plain sequential iteration. The
//! `_seq` variants are always sequential so the two execution paths can be
//! compared directly (see `benches/parallel.rs`).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over a slice, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential reference path, available regardless of features.
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_and_preserve_order() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let a = map_collect(&xs, |x| x * x);
        let b = map_collect_seq(&xs, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(a[10], 100.0);
    }
}
