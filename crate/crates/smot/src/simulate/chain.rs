use super::{check_paths, check_sample_times, open_uniform, path_rng, JumpEvent, JumpPath, Partition, PathEnsemble, Scheme};
use crate::coupling1p::{DecreasingCoupling, MeasurePair, TransitionKernel};
use crate::error::{Result, SmotError};
use crate::marginals::MarginalFamily;
use rayon::prelude::*;
use std::sync::Arc;

/// Builds the decreasing coupling of every adjacent pair of the partition.
/// Returns the kernels and the dispersion warnings.
pub fn build_chain_kernels(
    family: &dyn MarginalFamily,
    partition: &Partition,
) -> Result<(Vec<Arc<dyn TransitionKernel>>, Vec<String>)> {
    let times = partition.times();
    if times[0] < family.t_min() - 1e-12 || times[times.len() - 1] > family.t_max() + 1e-12 {
        return Err(SmotError::InvalidInput(format!(
            "partition [{}, {}] leaves the family's time range [{}, {}]",
            times[0],
            times[times.len() - 1],
            family.t_min(),
            family.t_max()
        )));
    }
    let built = times
        .par_windows(2)
        .map(|w| {
            let annotate = |e: SmotError| SmotError::InvalidInput(format!("coupling on [{}, {}]: {e}", w[0], w[1]));
            let pair = MeasurePair::from_family(family, w[0], w[1] - w[0]).map_err(annotate)?;
            let warning = pair.dispersion_warning().map(|m| format!("[{}, {}]: {m}", w[0], w[1]));
            let k = DecreasingCoupling::build(pair).map_err(annotate)?;
            Ok((Arc::new(k) as Arc<dyn TransitionKernel>, warning))
        })
        .collect::<Result<Vec<_>>>()?;
    let warnings = built.iter().filter_map(|b| b.1.clone()).collect();
    Ok((built.into_iter().map(|b| b.0).collect(), warnings))
}

/// Iterates the given kernels over `times` (one kernel per interval).
/// `x0_sampler` maps a uniform variate to the initial value.
pub fn run_kernel_chain<S: Fn(f64) -> f64 + Sync>(
    kernels: &[Arc<dyn TransitionKernel>],
    times: &[f64],
    x0_sampler: S,
    n_paths: usize,
    seed: u64,
    sample_times: &[f64],
) -> Result<Vec<JumpPath>> {
    check_paths(n_paths)?;
    if kernels.len() + 1 != times.len() {
        return Err(SmotError::InvalidInput("need one kernel per partition interval".into()));
    }
    check_sample_times(times[0], sample_times)?;
    let sample_steps: Vec<usize> = sample_times
        .iter()
        .map(|&s| times.iter().rposition(|&t| t <= s + 1e-12 * (1.0 + s.abs())).unwrap_or(0))
        .collect();
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let x0 = x0_sampler(open_uniform(&mut rng));
            let mut values = Vec::with_capacity(times.len());
            values.push(x0);
            let mut events = Vec::new();
            let mut x = x0;
            for (k, kernel) in kernels.iter().enumerate() {
                let y = kernel.kernel_sample(x, open_uniform(&mut rng));
                if y != x {
                    events.push(JumpEvent { time: times[k + 1], pre: x, post: y });
                }
                x = y;
                values.push(x);
            }
            let samples = sample_steps.iter().map(|&k| values[k]).collect();
            JumpPath { x0, events, samples, x_end: x }
        })
        .collect();
    Ok(paths)
}

/// Simulates the n-period chain of decreasing couplings along `partition`,
/// starting from `mu_{t_0}` by inverse-CDF sampling.
pub fn run_discrete_chain(
    family: Arc<dyn MarginalFamily>,
    partition: &Partition,
    n_paths: usize,
    seed: u64,
    sample_times: &[f64],
) -> Result<PathEnsemble> {
    check_paths(n_paths)?;
    let (kernels, warnings) = build_chain_kernels(family.as_ref(), partition)?;
    let times = partition.times();
    let t0 = times[0];
    let fam = family.clone();
    let paths = run_kernel_chain(&kernels, times, move |u| fam.quantile(t0, u), n_paths, seed, sample_times)?;
    Ok(PathEnsemble {
        paths,
        seed,
        scheme: Scheme::DiscreteChain { n: partition.steps() },
        t0,
        sample_times: sample_times.to_vec(),
        family,
        partition: times.to_vec(),
        warnings,
        engine: None,
    })
}
