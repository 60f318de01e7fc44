//! Execution policy for the data-parallel loops over cells and facets.
//!
//! Every hot loop in the crate (stencil construction, element assembly,
//! energy-release estimation) goes through [`Execution::map`]. With the
//! `parallel` feature enabled the [`Execution::Parallel`] policy dispatches to
//! rayon; without it both policies run sequentially, so results never depend
//! on the feature set.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this policy actually fans out to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `0..n`, preserving index order in the output.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps `f` over a slice, preserving order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Fallible variant of [`Execution::map`]; returns the first error in
    /// index order.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }

    /// Sorts in place; the output is identical for both policies.
    pub fn sort_by_key<T, K, F>(self, items: &mut [T], key: F)
    where
        T: Send,
        K: Ord,
        F: Fn(&T) -> K + Sync,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            items.par_sort_by_key(key);
            return;
        }
        items.sort_by_key(key);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let seq = Execution::Sequential.map(1000, |i| (i * i) % 97);
        let par = Execution::Parallel.map(1000, |i| (i * i) % 97);
        assert_eq!(seq, par);
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> =
            Execution::Parallel.try_map(100, |i| if i % 30 == 29 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(29));
    }

    #[test]
    fn stable_sort_matches() {
        let mut a: Vec<(u32, u32)> = (0..500).map(|i| ((i * 7919) % 101, i)).collect();
        let mut b = a.clone();
        Execution::Sequential.sort_by_key(&mut a, |x| *x);
        Execution::Parallel.sort_by_key(&mut b, |x| *x);
        assert_eq!(a, b);
    }
}
