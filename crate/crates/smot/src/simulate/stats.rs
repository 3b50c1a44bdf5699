use super::PathEnsemble;
use crate::error::{Result, SmotError};
use crate::numerics::stats::{ks_sorted, moments};
use serde::Serialize;

/// Summary of the ensemble marginal at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeStats {
    pub t: f64,
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se: f64,
    /// Kolmogorov-Smirnov distance to `F(t, .)`; NaN for a degenerate sample.
    pub ks: f64,
    pub degenerate: bool,
}

/// Mean increment `X_t - X_s` over paths whose `X_s` falls in `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub times: Vec<TimeStats>,
    /// Binned drift between consecutive reported times.
    pub drift: Vec<Vec<DriftBin>>,
    /// `jump_histogram[j]` paths with exactly `j` jumps.
    pub jump_histogram: Vec<usize>,
    pub largest_jump: f64,
}

/// Number of drift bins used by [`path_statistics`].
pub const DRIFT_BINS: usize = 30;

/// Marginal summaries at `times`, binned drift between consecutive times
/// and jump counts.
pub fn path_statistics(ensemble: &PathEnsemble, times: &[f64]) -> Result<EnsembleStats> {
    let fam = ensemble.family.as_ref();
    let mut rows = Vec::with_capacity(times.len());
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= ensemble.t0 - 1e-12 && t <= 1.0 + 1e-12) {
            return Err(SmotError::Domain { what: "time", value: t, domain: format!("[{}, 1]", ensemble.t0) });
        }
        let v = ensemble.values_at(t)?;
        let m = moments(&v);
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let degenerate = sorted.first() == sorted.last();
        let ks = if degenerate { f64::NAN } else { ks_sorted(&sorted, |x| fam.cdf(t, x)) };
        let (var, se) = if degenerate { (0.0, 0.0) } else { (m.var, m.se) };
        rows.push(TimeStats { t, n: m.n, mean: m.mean, var, se, ks, degenerate });
        values.push(v);
    }
    let drift = values.windows(2).map(|w| bin_increments(&w[0], &w[1], DRIFT_BINS)).collect();
    let max_jumps = ensemble.paths.iter().map(|p| p.n_jumps()).max().unwrap_or(0);
    let mut jump_histogram = vec![0; max_jumps + 1];
    for p in &ensemble.paths {
        jump_histogram[p.n_jumps()] += 1;
    }
    let largest_jump = ensemble.paths.iter().map(|p| p.largest_jump()).fold(0.0, f64::max);
    Ok(EnsembleStats { times: rows, drift, jump_histogram, largest_jump })
}

/// Increments `X_t - X_s` binned into `bins` equal-count bins of `X_s`.
pub fn binned_drift(ensemble: &PathEnsemble, s: f64, t: f64, bins: usize) -> Result<Vec<DriftBin>> {
    if !(t > s) || bins == 0 {
        return Err(SmotError::InvalidInput(format!("binned drift needs s < t and bins > 0, got s={s}, t={t}")));
    }
    let a = ensemble.values_at(s)?;
    let b = ensemble.values_at(t)?;
    Ok(bin_increments(&a, &b, bins))
}

fn bin_increments(a: &[f64], b: &[f64], bins: usize) -> Vec<DriftBin> {
    let mut pairs: Vec<(f64, f64)> = a.iter().zip(b).map(|(&x, &y)| (x, y - x)).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let n = pairs.len();
    let bins = bins.min(n.max(1));
    (0..bins)
        .filter_map(|j| {
            let (i0, i1) = (j * n / bins, (j + 1) * n / bins);
            if i1 <= i0 {
                return None;
            }
            let d: Vec<f64> = pairs[i0..i1].iter().map(|p| p.1).collect();
            let m = moments(&d);
            let hi = if i1 < n { pairs[i1].0 } else { f64::INFINITY };
            Some(DriftBin { lo: pairs[i0].0, hi, count: m.n, mean: m.mean, se: m.se })
        })
        .collect()
}
