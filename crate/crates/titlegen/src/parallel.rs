use rayon::prelude::*;
use titlegen_core::model::Executor;

/// Runs jobs on the rayon pool; results keep index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use titlegen_core::model::Sequential;

    #[test]
    fn matches_sequential_order() {
        let f = |i: usize| i * i + 1;
        assert_eq!(Rayon.map(1000, f), Sequential.map(1000, f));
    }
}
