use super::{check_paths, check_sample_times, open_uniform, path_rng, DenseTrace, JumpEvent, JumpPath, PathEnsemble, Scheme};
use crate::curve::{special, CharSlice, ContCharacteristics, Regime, SLICE_NODES};
use crate::error::{Result, SmotError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Time-stepping scheme for the decreasing jump process: drift `-jd dt`
/// below `x1`, thinned jumps to `T_u` with probability `min(nu dt, 1)` on the
/// band, otherwise drift `-jd dt`; constant at or above `m`.
#[derive(Debug, Clone)]
pub struct SdeEngine {
    chars: Arc<ContCharacteristics>,
    t0: f64,
    t1: f64,
    dt: f64,
    n_steps: usize,
    slices: Vec<CharSlice>,
    closed_uniform: bool,
}

/// What happened during one step.
enum Step {
    Drift(f64),
    Jump(f64),
}

impl SdeEngine {
    pub fn new(chars: Arc<ContCharacteristics>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= 0.1) {
            return Err(SmotError::Domain { what: "dt", value: dt, domain: "(0, 0.1]".into() });
        }
        let fam = chars.family();
        let (t0, t1) = (fam.t_min(), fam.t_max());
        let n_steps = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / n_steps as f64;
        let closed_uniform = chars.is_closed_uniform();
        let slices = (0..n_steps)
            .into_par_iter()
            .map(|k| chars.slice(t0 + k as f64 * dt, if closed_uniform { 2 } else { SLICE_NODES }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { chars, t0, t1, dt, n_steps, slices, closed_uniform })
    }

    pub fn chars(&self) -> &Arc<ContCharacteristics> {
        &self.chars
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn time(&self, k: usize) -> f64 {
        if k >= self.n_steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt
        }
    }

    pub fn slice(&self, k: usize) -> &CharSlice {
        &self.slices[k.min(self.n_steps - 1)]
    }

    /// Grid index of the last step time not after `t`.
    pub fn step_at(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt) + 1e-7).floor().clamp(0.0, self.n_steps as f64) as usize
    }

    /// `(regime, jd, intensity)` at step `k`.
    pub fn rates(&self, k: usize, x: f64) -> (Regime, f64, f64) {
        let s = &self.slices[k];
        let t = s.t;
        let regime = s.regime(x);
        match regime {
            Regime::Diagonal => (regime, 0.0, 0.0),
            Regime::Supermartingale => (regime, self.chars.jd_super(t, x), 0.0),
            Regime::Martingale if self.closed_uniform => {
                (regime, special::uniform_jd_band(t, x), special::uniform_intensity(t))
            }
            Regime::Martingale => (regime, s.band_jd(x), s.band_intensity(x)),
        }
    }

    /// Jump destination from `x` at step `k`.
    pub fn jump_target(&self, k: usize, x: f64) -> Result<f64> {
        let s = &self.slices[k];
        let mut hint = s.tu_estimate(x);
        self.chars.solve_tu_near(s.t, x, &mut hint)
    }

    fn drift(&self, k: usize, x: f64, jd: f64, band: bool) -> Result<f64> {
        let step = jd * self.dt;
        if band {
            let s = &self.slices[k];
            if step > s.m - s.x1 {
                return Err(SmotError::StepOverflow {
                    t: s.t,
                    x,
                    detail: format!("drift step {step} exceeds band width {}; reduce dt", s.m - s.x1),
                });
            }
        }
        let ell = self.chars.ell(self.time(k + 1));
        Ok((x - step).max(ell))
    }

    fn step(&self, k: usize, x: f64, rng: Option<&mut ChaCha8Rng>, forced_jump: Option<f64>) -> Result<Step> {
        let (regime, jd, nu) = self.rates(k, x);
        match regime {
            Regime::Diagonal => Ok(Step::Drift(x)),
            Regime::Supermartingale => Ok(Step::Drift(self.drift(k, x, jd, false)?)),
            Regime::Martingale => {
                if let Some(y) = forced_jump {
                    return Ok(Step::Jump(y));
                }
                if let Some(rng) = rng {
                    let p = (nu * self.dt).min(1.0);
                    if rng.gen::<f64>() < p {
                        return Ok(Step::Jump(self.jump_target(k, x)?));
                    }
                }
                Ok(Step::Drift(self.drift(k, x, jd, true)?))
            }
        }
    }

    /// Simulates one path from `x0` and records values at `sample_steps`
    /// (sorted grid indices).
    pub fn simulate_path(&self, x0: f64, rng: &mut ChaCha8Rng, sample_steps: &[usize]) -> Result<JumpPath> {
        let mut x = x0;
        let mut events = Vec::new();
        let mut samples = vec![f64::NAN; sample_steps.len()];
        let mut next = 0;
        for k in 0..self.n_steps {
            while next < sample_steps.len() && sample_steps[next] == k {
                samples[next] = x;
                next += 1;
            }
            match self.step(k, x, Some(rng), None)? {
                Step::Drift(y) => x = y,
                Step::Jump(y) => {
                    events.push(JumpEvent { time: self.time(k + 1), pre: x, post: y });
                    x = y;
                }
            }
        }
        while next < sample_steps.len() {
            samples[next] = x;
            next += 1;
        }
        Ok(JumpPath { x0, events, samples, x_end: x })
    }

    /// Reconstructs the grid values of a simulated path from its jumps.
    pub fn replay(&self, path: &JumpPath) -> Result<DenseTrace> {
        let n = self.n_steps;
        let mut times = Vec::with_capacity(n + 1);
        let mut xs = Vec::with_capacity(n + 1);
        let mut left = Vec::with_capacity(n + 1);
        let mut x = path.x0;
        times.push(self.time(0));
        xs.push(x);
        left.push(x);
        let mut ev = path.events.iter().peekable();
        for k in 0..n {
            let t_next = self.time(k + 1);
            let forced = match ev.peek() {
                Some(e) if (e.time - t_next).abs() <= 1e-9 * self.dt => {
                    let y = e.post;
                    ev.next();
                    Some(y)
                }
                _ => None,
            };
            match self.step(k, x, None, forced)? {
                Step::Drift(y) => {
                    left.push(y);
                    x = y;
                }
                Step::Jump(y) => {
                    left.push(x);
                    x = y;
                }
            }
            times.push(t_next);
            xs.push(x);
        }
        Ok(DenseTrace { times, x: xs, x_left: left })
    }
}

/// Simulates `n_paths` paths of the decreasing jump process with step `dt`,
/// starting from `mu_{t_min}`.
pub fn run_sde(
    chars: Arc<ContCharacteristics>,
    dt: f64,
    n_paths: usize,
    seed: u64,
    sample_times: &[f64],
) -> Result<PathEnsemble> {
    check_paths(n_paths)?;
    let engine = Arc::new(SdeEngine::new(chars, dt)?);
    run_sde_on(engine, n_paths, seed, sample_times)
}

/// As [`run_sde`] with a prebuilt engine.
pub fn run_sde_on(engine: Arc<SdeEngine>, n_paths: usize, seed: u64, sample_times: &[f64]) -> Result<PathEnsemble> {
    check_paths(n_paths)?;
    check_sample_times(engine.t0, sample_times)?;
    let family = engine.chars.family().clone();
    let t0 = engine.t0;
    let steps: Vec<usize> = sample_times.iter().map(|&s| engine.step_at(s)).collect();
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| steps[i]);
    let sorted: Vec<usize> = order.iter().map(|&i| steps[i]).collect();
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let x0 = family.quantile(t0, open_uniform(&mut rng));
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
        scheme: Scheme::ContinuousSde { dt: engine.dt },
        t0,
        sample_times: sample_times.to_vec(),
        family,
        partition: Vec::new(),
        warnings: Vec::new(),
        engine: Some(engine),
    })
}
