//! Index-parallel map used by the grid sweeps and the replication loop.
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it (or with [`Execution::Sequential`]) it runs in order. Each
//! output slot depends only on its own index, so both paths produce
//! identical vectors.

use serde::{Deserialize, Serialize};

/// Grid nodes are cheap; smaller rayon jobs cost more in scheduling than
/// they save.
#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 128;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map_indexed<T, F>(mode: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Fills `out[i] = f(i)`.
pub fn fill_indexed<T, F>(mode: Execution, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        out.par_iter_mut().with_min_len(MIN_CHUNK).enumerate().for_each(|(i, o)| *o = f(i));
        return;
    }
    let _ = mode;
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}
