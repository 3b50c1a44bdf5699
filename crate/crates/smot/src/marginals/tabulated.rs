use super::{check_cd_order, invert_cdf, FamilyKind, MarginalFamily, Measure};
use crate::error::{Result, SmotError};
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

/// Probability measure whose density is piecewise linear between knots.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearDensity {
    xs: Vec<f64>,
    fs: Vec<f64>,
    cum_mass: Vec<f64>,
    cum_moment: Vec<f64>,
    mean: f64,
}

impl PiecewiseLinearDensity {
    /// Normalises the samples to unit mass. Samples must be nonnegative,
    /// positive at interior knots, and the knots strictly increasing.
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || fs.len() != n {
            return Err(SmotError::InvalidInput(
                "a density slice needs at least two (x, f) samples".into(),
            ));
        }
        if xs.iter().chain(fs.iter()).any(|v| !v.is_finite()) {
            return Err(SmotError::InvalidInput("non-finite density sample".into()));
        }
        if let Some(w) = xs.windows(2).find(|w| w[1] <= w[0]) {
            return Err(SmotError::InvalidInput(format!(
                "density knots must be strictly increasing (x={} then x={})",
                w[0], w[1]
            )));
        }
        if let Some((i, f)) = fs.iter().enumerate().find(|(_, f)| **f < 0.0) {
            return Err(SmotError::InvalidInput(format!(
                "negative density sample f={f} at x={}",
                xs[i]
            )));
        }
        if let Some(i) = (1..n - 1).find(|&i| fs[i] <= 0.0) {
            return Err(SmotError::InvalidInput(format!(
                "density must be strictly positive inside its support (x={})",
                xs[i]
            )));
        }
        let mut cum_mass = vec![0.0; n];
        let mut cum_moment = vec![0.0; n];
        for i in 0..n - 1 {
            let h = xs[i + 1] - xs[i];
            let s = (fs[i + 1] - fs[i]) / h;
            cum_mass[i + 1] = cum_mass[i] + 0.5 * h * (fs[i] + fs[i + 1]);
            cum_moment[i + 1] = cum_moment[i] + cell_moment(xs[i], fs[i], s, h);
        }
        let total = cum_mass[n - 1];
        if !(total > 0.0) {
            return Err(SmotError::InvalidInput("density slice has zero mass".into()));
        }
        let fs: Vec<f64> = fs.iter().map(|f| f / total).collect();
        cum_mass.iter_mut().for_each(|c| *c /= total);
        cum_moment.iter_mut().for_each(|c| *c /= total);
        let mean = cum_moment[n - 1];
        Ok(Self { xs, fs, cum_mass, cum_moment, mean })
    }

    fn cell(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }
}

fn cell_moment(x0: f64, f0: f64, s: f64, u: f64) -> f64 {
    x0 * f0 * u + (x0 * s + f0) * u * u / 2.0 + s * u * u * u / 3.0
}

impl Measure for PiecewiseLinearDensity {
    fn cdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (self.fs[i + 1] - self.fs[i]) / h;
        let u = x - self.xs[i];
        (self.cum_mass[i] + self.fs[i] * u + 0.5 * s * u * u).clamp(0.0, 1.0)
    }
    fn pdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let i = self.cell(x);
        let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.fs[i] + w * (self.fs[i + 1] - self.fs[i])
    }
    fn quantile(&self, u: f64) -> f64 {
        let n = self.xs.len();
        if u <= 0.0 {
            return self.xs[0];
        }
        if u >= 1.0 {
            return self.xs[n - 1];
        }
        let i = match self.cum_mass.binary_search_by(|v| v.total_cmp(&u)) {
            Ok(i) => return self.xs[i],
            Err(i) => (i - 1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (self.fs[i + 1] - self.fs[i]) / h;
        let d = u - self.cum_mass[i];
        let f0 = self.fs[i];
        let disc = (f0 * f0 + 2.0 * s * d).max(0.0);
        let step = 2.0 * d / (f0 + disc.sqrt());
        (self.xs[i] + step.clamp(0.0, h)).min(self.xs[i + 1])
    }
    fn support(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn upper_moment(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.mean;
        }
        if x >= self.xs[n - 1] {
            return 0.0;
        }
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (self.fs[i + 1] - self.fs[i]) / h;
        let below = self.cum_moment[i] + cell_moment(self.xs[i], self.fs[i], s, x - self.xs[i]);
        self.mean - below
    }
    fn scale_hint(&self) -> (f64, f64) {
        let (l, r) = self.support();
        (0.5 * (l + r), 0.5 * (r - l))
    }
}

/// Slice `j` pushed forward by the affine map taking its support onto `[l, r]`.
#[derive(Debug, Clone)]
struct Rescaled {
    slice: Arc<PiecewiseLinearDensity>,
    scale: f64,
    shift: f64,
}

impl Rescaled {
    fn new(slice: Arc<PiecewiseLinearDensity>, l: f64, r: f64) -> Self {
        let (a, b) = slice.support();
        let scale = (r - l) / (b - a);
        Self { slice, scale, shift: l - a * scale }
    }
    #[inline]
    fn pull(&self, x: f64) -> f64 {
        (x - self.shift) / self.scale
    }
    fn cdf(&self, x: f64) -> f64 {
        self.slice.cdf(self.pull(x))
    }
    fn sf(&self, x: f64) -> f64 {
        self.slice.sf(self.pull(x))
    }
    fn pdf(&self, x: f64) -> f64 {
        self.slice.pdf(self.pull(x)) / self.scale
    }
    fn mean(&self) -> f64 {
        self.scale * self.slice.mean() + self.shift
    }
    fn upper_moment(&self, x: f64) -> f64 {
        let z = self.pull(x);
        self.scale * self.slice.upper_moment(z) + self.shift * self.slice.sf(z)
    }
}

/// The interpolated measure at a time strictly between two slices: the
/// mixture `(1 - w) A_j mu_j + w A_{j+1} mu_{j+1}`, where each `A` maps the
/// slice support affinely onto the linearly interpolated support.
#[derive(Debug, Clone)]
pub struct InterpolatedMeasure {
    a: Rescaled,
    b: Rescaled,
    w: f64,
    support: (f64, f64),
}

impl InterpolatedMeasure {
    fn new(a: &Arc<PiecewiseLinearDensity>, b: &Arc<PiecewiseLinearDensity>, w: f64) -> Self {
        let (la, ra) = a.support();
        let (lb, rb) = b.support();
        let l = (1.0 - w) * la + w * lb;
        let r = (1.0 - w) * ra + w * rb;
        Self { a: Rescaled::new(a.clone(), l, r), b: Rescaled::new(b.clone(), l, r), w, support: (l, r) }
    }
}

impl Measure for InterpolatedMeasure {
    fn cdf(&self, x: f64) -> f64 {
        (1.0 - self.w) * self.a.cdf(x) + self.w * self.b.cdf(x)
    }
    fn sf(&self, x: f64) -> f64 {
        (1.0 - self.w) * self.a.sf(x) + self.w * self.b.sf(x)
    }
    fn pdf(&self, x: f64) -> f64 {
        (1.0 - self.w) * self.a.pdf(x) + self.w * self.b.pdf(x)
    }
    fn quantile(&self, u: f64) -> f64 {
        let (l, r) = self.support;
        invert_cdf(|x| self.cdf(x), u.clamp(0.0, 1.0), l, r)
    }
    fn isf(&self, q: f64) -> f64 {
        let (l, r) = self.support;
        invert_cdf(|x| -self.sf(x), -q.clamp(0.0, 1.0), l, r)
    }
    fn support(&self) -> (f64, f64) {
        self.support
    }
    fn mean(&self) -> f64 {
        (1.0 - self.w) * self.a.mean() + self.w * self.b.mean()
    }
    fn upper_moment(&self, x: f64) -> f64 {
        (1.0 - self.w) * self.a.upper_moment(x) + self.w * self.b.upper_moment(x)
    }
    fn scale_hint(&self) -> (f64, f64) {
        let (l, r) = self.support;
        (0.5 * (l + r), 0.5 * (r - l))
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    t: f64,
    x: f64,
    f: f64,
}

/// Family built from density slices on a time grid.
///
/// Between grid times the measure is the support-rescaled mixture
/// [`InterpolatedMeasure`]; time derivatives are centred differences of the
/// interpolant with a step equal to the local grid spacing.
#[derive(Debug, Clone)]
pub struct TabulatedFamily {
    times: Vec<f64>,
    slices: Vec<Arc<PiecewiseLinearDensity>>,
}

impl TabulatedFamily {
    /// Builds from `(t, xs, fs)` slices sorted by time and checks the
    /// convex-decreasing order between consecutive slices.
    pub fn new(slices: Vec<(f64, Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if slices.len() < 2 {
            return Err(SmotError::InvalidInput(
                "a tabulated family needs at least two time slices".into(),
            ));
        }
        let times: Vec<f64> = slices.iter().map(|s| s.0).collect();
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(SmotError::InvalidInput(format!(
                "time slices must be strictly increasing (t={} then t={})",
                w[0], w[1]
            )));
        }
        let slices = slices
            .into_iter()
            .map(|(t, xs, fs)| {
                PiecewiseLinearDensity::new(xs, fs)
                    .map(Arc::new)
                    .map_err(|e| SmotError::InvalidInput(format!("slice t={t}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let fam = Self { times, slices };
        check_cd_order(&fam, &fam.times, 50, 1e-9)?;
        Ok(fam)
    }

    /// Reads a CSV file with header `t,x,f`, rows grouped by `t`.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| SmotError::Parse(e.to_string()))?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != ["t", "x", "f"] {
            return Err(SmotError::Parse(format!(
                "tabulated density needs header t,x,f; found {}",
                names.join(",")
            )));
        }
        let mut slices: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
        for rec in rdr.deserialize() {
            let row: Row = rec.map_err(|e| SmotError::Parse(e.to_string()))?;
            match slices.last_mut() {
                Some(last) if last.0 == row.t => {
                    last.1.push(row.x);
                    last.2.push(row.f);
                }
                _ => slices.push((row.t, vec![row.x], vec![row.f])),
            }
        }
        Self::new(slices)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Bracketing slice index and weight for time `t`.
    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        if t <= self.times[0] {
            return (0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 2, 1.0);
        }
        let j = match self.times.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(j) => return (j, 0.0),
            Err(j) => j - 1,
        };
        (j, (t - self.times[j]) / (self.times[j + 1] - self.times[j]))
    }

    fn eval<G: Fn(&dyn Measure) -> f64>(&self, t: f64, g: G) -> f64 {
        let (j, w) = self.locate(t);
        if w == 0.0 {
            g(self.slices[j].as_ref())
        } else if w == 1.0 {
            g(self.slices[j + 1].as_ref())
        } else {
            g(&InterpolatedMeasure::new(&self.slices[j], &self.slices[j + 1], w))
        }
    }

    /// Centred difference in time with step equal to the local grid spacing,
    /// one-sided at the ends of the grid.
    fn time_diff<G: Fn(&dyn Measure) -> f64>(&self, t: f64, g: G) -> f64 {
        let (j, _) = self.locate(t);
        let h = self.times[j + 1] - self.times[j];
        let lo = (t - h).max(self.t_min());
        let hi = (t + h).min(self.t_max());
        (self.eval(hi, &g) - self.eval(lo, &g)) / (hi - lo)
    }
}

impl MarginalFamily for TabulatedFamily {
    fn kind(&self) -> FamilyKind {
        FamilyKind::Tabulated
    }
    fn t_min(&self) -> f64 {
        self.times[0]
    }
    fn t_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
    fn at(&self, t: f64) -> Arc<dyn Measure> {
        let (j, w) = self.locate(t);
        if w == 0.0 {
            self.slices[j].clone()
        } else if w == 1.0 {
            self.slices[j + 1].clone()
        } else {
            Arc::new(InterpolatedMeasure::new(&self.slices[j], &self.slices[j + 1], w))
        }
    }
    fn cdf(&self, t: f64, x: f64) -> f64 {
        self.eval(t, |m| m.cdf(x))
    }
    fn pdf(&self, t: f64, x: f64) -> f64 {
        self.eval(t, |m| m.pdf(x))
    }
    fn support(&self, t: f64) -> (f64, f64) {
        (self.eval(t, |m| m.support().0), self.eval(t, |m| m.support().1))
    }
    fn mean(&self, t: f64) -> f64 {
        self.eval(t, |m| m.mean())
    }
    fn dt_cdf(&self, t: f64, x: f64) -> f64 {
        self.time_diff(t, |m| m.cdf(x))
    }
    fn dt_pdf(&self, t: f64, x: f64) -> f64 {
        self.time_diff(t, |m| m.pdf(x))
    }
    fn support_rate(&self, t: f64) -> (f64, f64) {
        (self.time_diff(t, |m| m.support().0), self.time_diff(t, |m| m.support().1))
    }
    fn dt_put(&self, t: f64, k: f64) -> f64 {
        self.time_diff(t, |m| m.put(k))
    }
    fn dt_mean(&self, t: f64) -> f64 {
        self.time_diff(t, |m| m.mean())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::UniformFamily;

    pub(crate) fn tabulate_uniform(nt: usize, nx: usize) -> TabulatedFamily {
        let fam = UniformFamily::new();
        let slices = (0..nt)
            .map(|j| {
                let t = j as f64 / (nt - 1) as f64;
                let (l, r) = fam.support(t);
                let xs: Vec<f64> = (0..nx).map(|i| l + (r - l) * i as f64 / (nx - 1) as f64).collect();
                let fs = vec![fam.pdf(t, 0.5 * (l + r)); nx];
                (t, xs, fs)
            })
            .collect();
        TabulatedFamily::new(slices).unwrap()
    }

    #[test]
    fn tabulated_uniform_matches_closed_form() {
        let tab = tabulate_uniform(200, 200);
        let fam = UniformFamily::new();
        let mut worst: f64 = 0.0;
        for j in 0..=50 {
            let t = j as f64 / 50.0 * 0.999;
            let (l, r) = fam.support(1.0);
            for i in 0..=200 {
                let x = l + (r - l) * i as f64 / 200.0;
                worst = worst.max((tab.cdf(t, x) - fam.cdf(t, x)).abs());
            }
        }
        assert!(worst < 1e-3, "sup-norm {worst}");
    }

    #[test]
    fn single_slice_is_rejected() {
        let err = TabulatedFamily::new(vec![(0.0, vec![0.0, 1.0], vec![1.0, 1.0])]).unwrap_err();
        assert!(matches!(err, SmotError::InvalidInput(_)));
    }

    #[test]
    fn negative_density_is_rejected() {
        let err = TabulatedFamily::new(vec![
            (0.0, vec![0.0, 0.5, 1.0], vec![1.0, -0.1, 1.0]),
            (1.0, vec![-1.0, 2.0], vec![1.0, 1.0]),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    #[test]
    fn order_violation_reports_location() {
        let err = TabulatedFamily::new(vec![
            (0.0, vec![-2.0, 2.0], vec![1.0, 1.0]),
            (1.0, vec![-1.0, 1.0], vec![1.0, 1.0]),
        ])
        .unwrap_err();
        match err {
            SmotError::OrderViolation { s, t, .. } => {
                assert_eq!((s, t), (0.0, 1.0));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn piecewise_linear_quantile_inverts_cdf() {
        let d = PiecewiseLinearDensity::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.5]).unwrap();
        for k in 1..50 {
            let u = k as f64 / 50.0;
            assert!((d.cdf(d.quantile(u)) - u).abs() < 1e-13);
        }
        let m = crate::numerics::quad::integrate(|x| x * d.pdf(x), 0.0, 3.0, 1e-13).value;
        assert!((m - d.mean()).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrip_and_header_check() {
        let text = "t,x,f\n0,-1,0.5\n0,1,0.5\n1,-3,0.2\n1,2,0.2\n";
        let fam = TabulatedFamily::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(fam.times(), &[0.0, 1.0]);
        assert!((fam.cdf(0.0, 0.0) - 0.5).abs() < 1e-15);
        let bad = "time,x,f\n0,-1,0.5\n";
        assert!(TabulatedFamily::from_csv_reader(bad.as_bytes()).is_err());
    }
}
