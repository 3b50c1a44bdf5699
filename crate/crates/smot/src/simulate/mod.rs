//! Path simulation for the n-period chain of one-period couplings and for
//! the limiting jump process.
//!
//! Every path draws from its own ChaCha stream, selected by the path index,
//! so ensembles are reproducible and independent of the thread count.

mod chain;
mod increasing;
mod sde;
mod stats;

pub use chain::{build_chain_kernels, run_discrete_chain, run_kernel_chain};
pub use increasing::{run_increasing_uniform, IncreasingUniformEngine};
pub use sde::{run_sde, run_sde_on, SdeEngine};
pub use stats::{binned_drift, path_statistics, DriftBin, EnsembleStats, TimeStats};

use crate::error::{Result, SmotError};
use crate::marginals::MarginalFamily;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Simulation scheme of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    DiscreteChain { n: usize },
    ContinuousSde { dt: f64 },
    IncreasingUniform { dt: f64 },
}

/// Strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(SmotError::InvalidInput("a partition needs at least two times".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SmotError::InvalidInput("partition times must be finite and strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// `n` equal steps from `t0` to `t1`.
    pub fn uniform(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SmotError::InvalidInput("partition needs n >= 1".into()));
        }
        let mut times: Vec<f64> = (0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect();
        times[n] = t1;
        Self::new(times)
    }

    /// `n` equal steps over the time range of `family`.
    pub fn for_family(family: &dyn MarginalFamily, n: usize) -> Result<Self> {
        Self::uniform(family.t_min(), family.t_max(), n)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn mesh(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// A jump of a path: the value moves from `pre` to `post` at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub pre: f64,
    pub post: f64,
}

/// A càdlàg path stored as its jumps. Chain paths are constant between
/// events; SDE paths follow the drift of their engine between events.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    pub x0: f64,
    pub events: Vec<JumpEvent>,
    /// Values at the ensemble's sample times.
    pub samples: Vec<f64>,
    pub x_end: f64,
}

impl JumpPath {
    pub fn n_jumps(&self) -> usize {
        self.events.len()
    }

    pub fn largest_jump(&self) -> f64 {
        self.events.iter().map(|e| (e.post - e.pre).abs()).fold(0.0, f64::max)
    }

    /// Value at `t` for a path that is constant between events.
    pub fn value_if_piecewise_constant(&self, t: f64) -> f64 {
        let tol = 1e-12 * (1.0 + t.abs());
        self.events.iter().take_while(|e| e.time <= t + tol).last().map_or(self.x0, |e| e.post)
    }
}

/// Path values on a time grid: `x[k]` at `times[k]` and the left limit
/// `x_left[k]`. Between grid points the path moves linearly from `x[k - 1]`
/// to `x_left[k]`; a jump at `times[k]` is `x[k] != x_left[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrace {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub x_left: Vec<f64>,
}

/// A simulated ensemble with the information needed to re-evaluate paths.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub paths: Vec<JumpPath>,
    pub seed: u64,
    pub scheme: Scheme,
    pub t0: f64,
    pub sample_times: Vec<f64>,
    pub family: Arc<dyn MarginalFamily>,
    /// Chain partition times (empty for SDE schemes).
    pub partition: Vec<f64>,
    /// Advisory messages produced during simulation.
    pub warnings: Vec<String>,
    engine: Option<Arc<SdeEngine>>,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn engine(&self) -> Option<&Arc<SdeEngine>> {
        self.engine.as_ref()
    }

    fn sample_index(&self, t: f64) -> Option<usize> {
        self.sample_times.iter().position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }

    /// Values of all paths at time `t`.
    pub fn values_at(&self, t: f64) -> Result<Vec<f64>> {
        if let Some(i) = self.sample_index(t) {
            return Ok(self.paths.iter().map(|p| p.samples[i]).collect());
        }
        if (t - 1.0).abs() < 1e-12 {
            return Ok(self.paths.iter().map(|p| p.x_end).collect());
        }
        match (&self.scheme, &self.engine) {
            (Scheme::DiscreteChain { .. }, _) => {
                Ok(self.paths.iter().map(|p| p.value_if_piecewise_constant(t)).collect())
            }
            (Scheme::ContinuousSde { .. }, Some(engine)) => {
                let k = engine.step_at(t);
                self.paths.iter().map(|p| engine.replay(p).map(|tr| tr.x[k])).collect()
            }
            _ => Err(SmotError::InvalidInput(format!("time {t} was not sampled for this ensemble"))),
        }
    }

    /// Dense trace of path `i`. SDE paths are replayed on their engine grid;
    /// chain paths are laid on a grid of step at most `dt` that contains the
    /// partition times.
    pub fn trace(&self, i: usize, dt: f64) -> Result<DenseTrace> {
        let path = &self.paths[i];
        if let Some(engine) = &self.engine {
            return engine.replay(path);
        }
        let mut times = Vec::new();
        for w in self.partition.windows(2) {
            let n = ((w[1] - w[0]) / dt).ceil().max(1.0) as usize;
            for j in 0..n {
                times.push(w[0] + (w[1] - w[0]) * j as f64 / n as f64);
            }
        }
        if let Some(&last) = self.partition.last() {
            times.push(last);
        }
        let mut x = Vec::with_capacity(times.len());
        let mut x_left = Vec::with_capacity(times.len());
        let mut current = path.x0;
        let mut ev = path.events.iter().peekable();
        for &t in &times {
            x_left.push(current);
            while let Some(e) = ev.peek() {
                if e.time <= t + 1e-12 * (1.0 + t.abs()) {
                    current = e.post;
                    ev.next();
                } else {
                    break;
                }
            }
            x.push(current);
        }
        Ok(DenseTrace { times, x, x_left })
    }
}

/// The random stream of path `index`.
pub(crate) fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Uniform variate in the open interval `(0, 1)`.
pub(crate) fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.gen::<u64>() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) + 0.5 / (1u64 << 53) as f64
}

pub(crate) fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(SmotError::InvalidInput("n_paths must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn check_sample_times(t0: f64, times: &[f64]) -> Result<()> {
    for &s in times {
        if !(s >= t0 - 1e-12 && s <= 1.0 + 1e-12) {
            return Err(SmotError::Domain { what: "sample time", value: s, domain: format!("[{t0}, 1]") });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
