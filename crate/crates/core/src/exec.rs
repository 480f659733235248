//! Data-parallel execution helpers.
//!
//! Independent jobs (fluid probe samples, simulation replications, sweep
//! grid points) run through [`map`], which uses rayon when the `parallel`
//! feature is enabled and falls back to a plain sequential loop otherwise.
//! Results are returned in input order either way, so outputs do not
//! depend on thread scheduling.

/// Sequential reference implementation.
pub fn map_seq<T: Sync, R: Send, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Rayon-backed implementation, preserving input order.
#[cfg(feature = "parallel")]
pub fn map_par<T: Sync, R: Send, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Default mapper: parallel when the feature is on.
#[cfg(feature = "parallel")]
pub fn map<T: Sync, R: Send, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R + Sync + Send,
{
    map_par(items, f)
}

/// Default mapper: sequential fallback build.
#[cfg(not(feature = "parallel"))]
pub fn map<T: Sync, R: Send, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R + Sync + Send,
{
    map_seq(items, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let items: Vec<u64> = (0..64).collect();
        let out = map(&items, |&x| x * x);
        assert_eq!(out, items.iter().map(|&x| x * x).collect::<Vec<_>>());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_agree() {
        let items: Vec<u64> = (0..257).collect();
        assert_eq!(map_seq(&items, |&x| x * 3 + 1), map_par(&items, |&x| x * 3 + 1));
    }
}
