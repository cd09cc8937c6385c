//! Sequential / data-parallel execution switch.
//!
//! Every parallel loop in the crate goes through [`Exec`], so results are
//! independent of the chosen mode: work is split into index-ordered items and
//! the outputs are collected in that order. Without the `parallel` feature,
//! [`Exec::Parallel`] runs the sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Sequential,
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Maps `f` over `0..len`, returning outputs in index order.
    pub fn map_indices<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Maps `f` over a slice, returning outputs in slice order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Applies `f` to every element of `items` together with its index.
    pub fn for_each_mut<T, F>(self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            return;
        }
        items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }
}
