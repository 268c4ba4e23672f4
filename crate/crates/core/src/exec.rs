//! Sequential / data-parallel execution switch.
//!
//! Every data-parallel loop in the workspace goes through these helpers so the
//! same build can run either path. Without the `parallel` feature,
//! [`Execution::Parallel`] silently degrades to sequential iteration.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this value will actually fan out onto the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Runs two closures, potentially concurrently, and returns both results.
    pub fn join<A, B, RA, RB>(self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return rayon::join(a, b);
        }
        (a(), b())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_preserve_order() {
        let xs: Vec<u32> = (0..1000).collect();
        let seq = Execution::Sequential.map(&xs, |x| x * 3);
        let par = Execution::Parallel.map(&xs, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(
            Execution::Parallel.map_range(10, |i| i * i),
            (0..10).map(|i| i * i).collect::<Vec<_>>()
        );
    }

    #[test]
    fn join_returns_both() {
        assert_eq!(Execution::Parallel.join(|| 1, || "b"), (1, "b"));
        assert_eq!(Execution::Sequential.join(|| 1, || "b"), (1, "b"));
    }
}
