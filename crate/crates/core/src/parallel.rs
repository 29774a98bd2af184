//! Execution policy for the data-parallel loops (model evaluation over
//! quadrature nodes and validation samples, coefficient assembly).
//!
//! With the `parallel` feature the work is distributed with rayon. Without
//! it, [`Execution::Parallel`] silently runs sequentially. Both paths collect
//! results in input order, so outputs never depend on scheduling.

/// How to run a data-parallel loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Maps `f` over `0..len`, preserving order.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }

    /// Like [`map_indexed`](Self::map_indexed) for fallible closures. Returns
    /// the error with the smallest index, independent of scheduling.
    pub fn try_map_indexed<T, E, F>(self, len: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Send + Sync,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                let results = self.map_indexed(len, f);
                results.into_iter().collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }
}
