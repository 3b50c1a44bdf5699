use super::{check_paths, check_sample_times, open_uniform, path_rng, JumpEvent, JumpPath, PathEnsemble, Scheme};
use crate::curve::eval_increasing_chars_uniform;
use crate::error::{Result, SmotError};
use crate::marginals::make_uniform_family;
use crate::numerics::roots::bisect;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Time-stepping scheme for the increasing uniform limit: downward jumps to
/// the lower end `-e^{2t}` with intensity `ju / jd`, upward drift `ju dt`,
/// and a forced jump to `-e^{2s}` when the drift reaches the upper end `e^s`.
#[derive(Debug, Clone, Copy)]
pub struct IncreasingUniformEngine {
    dt: f64,
    n_steps: usize,
}

impl IncreasingUniformEngine {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= 0.1) {
            return Err(SmotError::Domain { what: "dt", value: dt, domain: "(0, 0.1]".into() });
        }
        let n_steps = (1.0 / dt - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { dt: 1.0 / n_steps as f64, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        if k >= self.n_steps {
            1.0
        } else {
            k as f64 * self.dt
        }
    }

    pub fn step_at(&self, t: f64) -> usize {
        ((t / self.dt) + 1e-7).floor().clamp(0.0, self.n_steps as f64) as usize
    }

    /// Intensity of downward jumps; independent of `x`.
    pub fn intensity(t: f64) -> f64 {
        let e = t.exp();
        0.5 * (1.0 + 2.0 * e) / (1.0 + e)
    }

    pub fn simulate_path(&self, x0: f64, rng: &mut ChaCha8Rng, sample_steps: &[usize]) -> Result<JumpPath> {
        let uniform = make_uniform_family();
        let mut x = x0;
        let mut events = Vec::new();
        let mut samples = vec![f64::NAN; sample_steps.len()];
        let mut next = 0;
        for k in 0..self.n_steps {
            while next < sample_steps.len() && sample_steps[next] == k {
                samples[next] = x;
                next += 1;
            }
            let (t, t_next) = (self.time(k), self.time(k + 1));
            let lower = -(2.0 * t).exp();
            let x_in = x.clamp(lower, t.exp());
            let c = eval_increasing_chars_uniform(uniform.as_ref(), t, x_in)?;
            let p = (Self::intensity(t) * self.dt).min(1.0);
            if x_in > lower && rng.gen::<f64>() < p {
                events.push(JumpEvent { time: t_next, pre: x, post: lower });
                x = lower;
                continue;
            }
            let y = x_in + c.ju * (t_next - t);
            if y >= t_next.exp() {
                let hit = |s: f64| x_in + c.ju * (s - t) - s.exp();
                let s = bisect(hit, t, t_next, 1e-15).unwrap_or(t_next);
                let post = -(2.0 * s).exp();
                events.push(JumpEvent { time: s, pre: s.exp(), post });
                x = post;
            } else {
                x = y;
            }
        }
        while next < sample_steps.len() {
            samples[next] = x;
            next += 1;
        }
        Ok(JumpPath { x0, events, samples, x_end: x })
    }
}

/// Simulates the increasing-coupling limit of the uniform family.
pub fn run_increasing_uniform(dt: f64, n_paths: usize, seed: u64, sample_times: &[f64]) -> Result<PathEnsemble> {
    check_paths(n_paths)?;
    check_sample_times(0.0, sample_times)?;
    let engine = IncreasingUniformEngine::new(dt)?;
    let family = make_uniform_family();
    let steps: Vec<usize> = sample_times.iter().map(|&s| engine.step_at(s)).collect();
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| steps[i]);
    let sorted: Vec<usize> = order.iter().map(|&i| steps[i]).collect();
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let x0 = family.quantile(0.0, open_uniform(&mut rng));
            let p = engine.simulate_path(x0, &mut rng, &sorted)?;
            let mut samples = vec![0.0; p.samples.len()];
            for (j, &o) in order.iter().enumerate() {
                samples[o] = p.samples[j];
            }
            Ok(JumpPath { samples, ..p })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble {
        paths,
        seed,
        scheme: Scheme::IncreasingUniform { dt: engine.dt },
        t0: 0.0,
        sample_times: sample_times.to_vec(),
        family,
        partition: Vec::new(),
        warnings: Vec::new(),
        engine: None,
    })
}
