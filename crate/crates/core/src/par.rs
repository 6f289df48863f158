//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the work is spread over the rayon pool; without
//! it (or with [`Execution::Sequential`]) it runs in a plain loop. Results are
//! always returned in index order, so both paths produce identical output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

pub fn map_indexed<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}
