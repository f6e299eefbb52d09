//! Executes independent jobs, in parallel when the `parallel` feature is on.
//! Results always come back in job order, so output does not depend on
//! scheduling or the number of workers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Runs `f` on every job. `workers = Some(1)` forces the sequential path;
/// `None` uses every available core.
pub fn run_jobs<J, T, F>(jobs: &[J], workers: Option<usize>, f: F) -> Vec<T>
where
    J: Sync,
    T: Send,
    F: Fn(usize, &J) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers != Some(1) && jobs.len() > 1 {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(w) = workers {
                builder = builder.num_threads(w);
            }
            if let Ok(pool) = builder.build() {
                return pool.install(|| jobs.par_iter().enumerate().map(|(i, j)| f(i, j)).collect());
            }
        }
    }
    let _ = workers;
    run_sequential(jobs, f)
}

/// Plain in-order loop over the jobs.
pub fn run_sequential<J, T, F>(jobs: &[J], f: F) -> Vec<T>
where
    F: Fn(usize, &J) -> T,
{
    jobs.iter().enumerate().map(|(i, j)| f(i, j)).collect()
}

/// Whether the crate was built with the parallel executor.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let jobs: Vec<u64> = (0..200).collect();
        let f = |i: usize, j: &u64| (i as u64) * 1000 + j * j;
        let seq = run_sequential(&jobs, f);
        assert_eq!(run_jobs(&jobs, Some(4), f), seq);
        assert_eq!(run_jobs(&jobs, Some(1), f), seq);
        assert_eq!(run_jobs(&jobs, None, f), seq);
    }
}
