//! Indexed work distribution with a sequential fallback.
//!
//! Results always come back in index order, so reductions over them are
//! identical for every worker count.

/// How many workers to use. `None` means the global default (all cores when the
/// `parallel` feature is on, one otherwise).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Workers(pub Option<usize>);

impl Workers {
    pub const SEQUENTIAL: Workers = Workers(Some(1));

    pub fn is_sequential(&self) -> bool {
        !cfg!(feature = "parallel") || self.0 == Some(1)
    }
}

/// Evaluates `f(0..count)` and returns the results in index order.
pub fn map_indexed<T, F>(workers: Workers, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers.is_sequential() || count <= 1 {
        return (0..count).map(f).collect();
    }
    parallel_map(workers, count, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(workers: Workers, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..count).into_par_iter().map(&f).collect();
    match workers.0 {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                log::warn!("could not build a {threads}-thread pool ({e}); using the global pool");
                run()
            }
        },
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(_workers: Workers, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}
