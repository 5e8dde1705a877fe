//! Data-parallel helpers, rayon-backed when the `parallel` feature is on and
//! plain sequential otherwise.  Outputs keep the input order either way, so
//! callers see identical results under both builds.

use crate::error::Result;

/// Applies a fallible function to every item, collecting results in input
/// order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Applies a fallible function to every item, collecting results in input
/// order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    F: Fn(&T) -> Result<U>,
{
    items.iter().map(f).collect()
}

/// Whether the parallel backend is compiled in.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
