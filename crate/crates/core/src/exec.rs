//! Execution strategy for grid evaluations.
//!
//! Every grid loop in the crate (frequency grids, reflectivity sweeps, layer
//! scans) is a pure map over independent points. With the `parallel` feature
//! the map runs on the rayon pool; without it, or when
//! [`Execution::Sequential`] is requested, it runs on the calling thread.
//! Both paths produce results in input order and are bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    /// Maps `f` over `items`, preserving order.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// All strategies compiled into this build.
    pub fn available() -> &'static [Execution] {
        #[cfg(feature = "parallel")]
        {
            &[Execution::Sequential, Execution::Parallel]
        }
        #[cfg(not(feature = "parallel"))]
        {
            &[Execution::Sequential]
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Execution::Sequential => "sequential",
            #[cfg(feature = "parallel")]
            Execution::Parallel => "parallel",
        }
    }
}
