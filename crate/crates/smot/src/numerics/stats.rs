//! Sample statistics used by the validation code.

/// Mean, sample variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len();
    if n == 0 {
        return Moments { n, mean: f64::NAN, var: f64::NAN, se: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Moments { n, mean, var, se: (var / n as f64).sqrt() }
}

/// One-sample Kolmogorov-Smirnov distance between the sample and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    ks_sorted(&xs, cdf)
}

/// As [`ks_statistic`] for an already sorted sample.
pub fn ks_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Wasserstein-1 distance between two empirical distributions, computed as
/// the integral of `|F_a - F_b|`.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut merged: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&y| (y, false)))
        .collect();
    merged.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut ca, mut cb) = (0.0, 0.0);
    let mut total = 0.0;
    for k in 0..merged.len() {
        if merged[k].1 {
            ca += 1.0;
        } else {
            cb += 1.0;
        }
        if k + 1 < merged.len() {
            total += (ca / na - cb / nb).abs() * (merged[k + 1].0 - merged[k].0);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_basic() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.var - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn w1_shift() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.25).collect();
        assert!((wasserstein1(&a, &b) - 0.25).abs() < 1e-12);
        assert!(wasserstein1(&a, &a).abs() < 1e-15);
    }
}
