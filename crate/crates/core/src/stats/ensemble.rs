//! Replica ensembles: one master seed, replica `r` on stream id `r`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::{WalkParams, Walker};

/// Runs `f(r)` for `r = 0..replicas` on `workers` threads and returns the
/// results in replica order. `workers = 0` means one thread per core.
pub fn run_replicas<T, F>(replicas: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..replicas).into_par_iter().map(&f).collect()))
}

/// Fallible variant; the first error in replica order is returned.
pub fn try_run_replicas<T, F>(replicas: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    run_replicas(replicas, workers, f)?.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaEnsemble {
    pub params: WalkParams,
    pub replicas: u64,
    pub master_seed: u64,
    /// Increasing step indices at which statistics are recorded.
    pub checkpoints: Vec<u64>,
    #[serde(default)]
    pub workers: usize,
}

impl ReplicaEnsemble {
    pub fn new(params: WalkParams, replicas: u64, master_seed: u64, checkpoints: Vec<u64>) -> Result<Self> {
        params.validate()?;
        if replicas == 0 {
            return Err(Error::InvalidParam("need at least one replica".into()));
        }
        if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParam("checkpoints must be positive and increasing".into()));
        }
        Ok(Self { params, replicas, master_seed, checkpoints, workers: 0 })
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn n_max(&self) -> u64 {
        *self.checkpoints.last().expect("non-empty")
    }

    pub fn walker(&self, replica: u64) -> Walker {
        Walker::new(&self.params, self.master_seed, replica).expect("validated params")
    }

    /// Streams every replica to the last checkpoint; `f` sees the walker at
    /// each checkpoint and returns one value.
    pub fn map_checkpoints<T, F>(&self, f: F) -> Result<Vec<Vec<T>>>
    where
        T: Send,
        F: Fn(&Walker) -> T + Sync + Send,
    {
        run_replicas(self.replicas, self.workers, |r| {
            let mut w = self.walker(r);
            let mut out = Vec::with_capacity(self.checkpoints.len());
            for &c in &self.checkpoints {
                w.run_to(c);
                out.push(f(&w));
            }
            out
        })
    }

    /// Runs `f` on a fresh walker for every replica.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut Walker) -> T + Sync + Send,
    {
        run_replicas(self.replicas, self.workers, |r| {
            let mut w = self.walker(r);
            f(&mut w)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_independent_of_workers() {
        let params = WalkParams::rational(2, 1, 2).unwrap();
        let e = ReplicaEnsemble::new(params, 16, 3, vec![10, 100]).unwrap();
        let a = e.clone().with_workers(1).map_checkpoints(|w| w.state().norm2()).unwrap();
        let b = e.with_workers(3).map_checkpoints(|w| w.state().norm2()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation() {
        let params = WalkParams::rational(1, 1, 2).unwrap();
        assert!(ReplicaEnsemble::new(params.clone(), 0, 1, vec![1]).is_err());
        assert!(ReplicaEnsemble::new(params.clone(), 1, 1, vec![5, 5]).is_err());
        assert!(ReplicaEnsemble::new(params, 1, 1, vec![0, 5]).is_err());
    }
}
