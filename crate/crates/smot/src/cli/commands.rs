use super::config::{CouplingKind, CurveConfig, RunConfig, SchemeName};
use super::output::{fmt_f64, num_row, write_csv, write_json, Report};
use super::CliError;
use crate::coupling1p::{compute_phase_point, DecreasingCoupling, IncreasingUniformCoupling, MeasurePair, TransitionKernel};
use crate::curve::{solve_m_curve, solve_m_generic, solve_x1_curve, solve_x1_generic, ContCharacteristics, CurveMode};
use crate::duality::{
    build_continuous_dual, integrability_proxy, optimal_value_quadrature, tol_hedge_for_step,
    verify_superhedge_on_paths, CostFunction, HedgeReport,
};
use crate::error::SmotError;
use crate::marginals::MarginalFamily;
use crate::simulate::{path_statistics, run_discrete_chain, run_increasing_uniform, run_sde, Partition, PathEnsemble};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;
use std::sync::Arc;

/// JSON block written next to `coupling.csv`.
#[derive(Debug, Clone, Serialize)]
struct CouplingSummary {
    kind: CouplingKind,
    t: f64,
    eps: f64,
    x1: f64,
    y1: f64,
    m_lower: f64,
    m_upper: f64,
}

/// Keeps the error category and prefixes the time at which it occurred.
fn at_time(t: f64, e: SmotError) -> CliError {
    match CliError::from(e) {
        CliError::Validation(m) => CliError::Validation(format!("t={t}: {m}")),
        CliError::Numerical(m) => CliError::Numerical(format!("t={t}: {m}")),
        other => other,
    }
}

/// Writes `coupling.csv` (`x,T_d,T_u,q`) and `coupling.json` (`x1, y1, m_lower, m_upper`).
pub fn cmd_dump_coupling(cfg: &RunConfig, dir: &Path, report: &mut Report) -> Result<(), CliError> {
    let c = cfg.coupling.as_ref().ok_or_else(|| CliError::Validation("coupling: block is required".into()))?;
    let family = cfg.family.build()?;
    let pair = MeasurePair::from_family(family.as_ref(), c.t, c.eps)?;
    let (m_lower, m_upper) = (pair.m_lower, pair.m_upper);
    if let Some(w) = pair.dispersion_warning() {
        report.warn(w);
    }
    let (rows, x1, y1) = match c.kind {
        CouplingKind::Decreasing => {
            let k = DecreasingCoupling::build(pair)?;
            if let Err(e) = k.verify_monotone(200) {
                report.warn(e.to_string());
            }
            let (mass, mean) = k.phase_residuals();
            report.check("phase_mass_residual", mass.abs(), 1e-8, mass.abs() < 1e-8, false);
            report.check("phase_mean_residual", mean.abs(), 1e-8, mean.abs() < 1e-8, false);
            (k.dump(c.grid), k.phase().x1, k.y1())
        }
        CouplingKind::Increasing => {
            let k = IncreasingUniformCoupling::new(c.t, c.eps)?;
            let (l, r) = k.source_support();
            let rows = (0..c.grid)
                .map(|i| {
                    let x = l + (r - l) * i as f64 / (c.grid - 1) as f64;
                    let b = k.branches(x);
                    [x, b.t_d, b.t_u, b.q]
                })
                .collect();
            (rows, k.x1(), k.y1())
        }
    };
    write_csv(dir, "coupling.csv", &["x", "T_d", "T_u", "q"], rows.iter().map(|r| num_row(*r)), report)?;
    let summary = CouplingSummary { kind: c.kind, t: c.t, eps: c.eps, x1, y1, m_lower, m_upper };
    write_json(dir, "coupling.json", &summary, report)?;
    report.result("coupling", &summary);
    Ok(())
}

/// Writes `curve.csv` with `t,x1,m,mean` and one `x1_eps_<eps>` column per
/// requested step; cells past the end of the time range are left empty.
pub fn cmd_transition_curve(cfg: &RunConfig, dir: &Path, report: &mut Report) -> Result<(), CliError> {
    let cc = cfg.curve.clone().unwrap_or(CurveConfig { n_times: 101, eps_sweep: Vec::new() });
    let family = cfg.family.build()?;
    let fam = family.as_ref();
    let (t0, t1) = (fam.t_min(), fam.t_max());
    let times: Vec<f64> = (0..cc.n_times)
        .map(|i| if i + 1 == cc.n_times { t1 } else { t0 + (t1 - t0) * i as f64 / (cc.n_times - 1) as f64 })
        .collect();
    let mode = cfg.curve_mode;
    let rows: Vec<(f64, f64, f64, f64, Vec<Option<f64>>)> = times
        .par_iter()
        .map(|&t| {
            let (x1, m) = match mode {
                CurveMode::Specialised => (solve_x1_curve(fam, t), solve_m_curve(fam, t)),
                CurveMode::Generic => (solve_x1_generic(fam, t), solve_m_generic(fam, t)),
            };
            let (x1, m) = (x1.map_err(|e| at_time(t, e))?, m.map_err(|e| at_time(t, e))?);
            let sweep = cc
                .eps_sweep
                .iter()
                .map(|&eps| {
                    if t + eps > t1 + 1e-12 {
                        return Ok(None);
                    }
                    let pair = MeasurePair::from_family(fam, t, eps.min(t1 - t)).map_err(|e| at_time(t, e))?;
                    Ok(Some(compute_phase_point(&pair).map_err(|e| at_time(t, e))?.x1))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((t, x1, m, fam.mean(t), sweep))
        })
        .collect::<Result<_, CliError>>()?;
    let eps_names: Vec<String> = cc.eps_sweep.iter().map(|e| format!("x1_eps_{e}")).collect();
    let mut header = vec!["t", "x1", "m", "mean"];
    header.extend(eps_names.iter().map(String::as_str));
    let out = rows.iter().map(|(t, x1, m, mean, sweep)| {
        let mut r = num_row([*t, *x1, *m, *mean]);
        r.extend(sweep.iter().map(|v| v.map(fmt_f64).unwrap_or_default()));
        r
    });
    write_csv(dir, "curve.csv", &header, out, report)?;
    let stride = (rows.len() - 1).div_ceil(4).max(1);
    let samples: Vec<[f64; 3]> =
        rows.iter().enumerate().filter(|(i, _)| i % stride == 0 || *i + 1 == rows.len()).map(|(_, r)| [r.0, r.1, r.2]).collect();
    report.result("x1_samples", samples);
    report.result("n_times", rows.len());
    Ok(())
}

fn default_sample_times(t0: f64) -> Vec<f64> {
    let mut times = vec![t0];
    times.extend([0.25, 0.5, 0.75, 1.0].into_iter().filter(|&t| t > t0 + 1e-12));
    times
}

fn simulate_ensemble(cfg: &RunConfig, family: Arc<dyn MarginalFamily>, times: &[f64]) -> Result<PathEnsemble, CliError> {
    let s = cfg.simulate.as_ref().expect("validated");
    Ok(match s.scheme {
        SchemeName::Sde => {
            let chars = Arc::new(ContCharacteristics::new(family, cfg.curve_mode)?);
            run_sde(chars, s.dt, s.n_paths, cfg.seed, times)?
        }
        SchemeName::Discrete => {
            let partition = Partition::for_family(family.as_ref(), s.n.expect("validated"))?;
            run_discrete_chain(family, &partition, s.n_paths, cfg.seed, times)?
        }
        SchemeName::Increasing => run_increasing_uniform(s.dt, s.n_paths, cfg.seed, times)?,
    })
}

/// Writes `paths.csv` (`path_id,time,pre,post` per jump), `stats.csv`
/// (`t,mean,var,ks`) and, when `dense_dt` is set, `dense.csv` (`path_id,time,x`).
pub fn cmd_simulate(cfg: &RunConfig, dir: &Path, report: &mut Report) -> Result<(), CliError> {
    let s = cfg.simulate.as_ref().ok_or_else(|| CliError::Validation("simulate: block is required".into()))?;
    let family = cfg.family.build()?;
    let t0 = if s.scheme == SchemeName::Increasing { 0.0 } else { family.t_min() };
    let times = s.sample_times.clone().unwrap_or_else(|| default_sample_times(t0));
    for &t in &times {
        if !(t >= t0 - 1e-12 && t <= 1.0 + 1e-12) {
            return Err(CliError::Validation(format!("simulate.sample_times: {t} lies outside [{t0}, 1]")));
        }
    }
    let ens = simulate_ensemble(cfg, family, &times)?;
    for w in &ens.warnings {
        report.warn(w.clone());
    }
    let stats = path_statistics(&ens, &times)?;
    if s.write_paths {
        let rows = ens.paths.iter().enumerate().flat_map(|(i, p)| {
            p.events.iter().map(move |e| {
                let mut r = vec![i.to_string()];
                r.extend(num_row([e.time, e.pre, e.post]));
                r
            })
        });
        write_csv(dir, "paths.csv", &["path_id", "time", "pre", "post"], rows, report)?;
    }
    let rows = stats.times.iter().map(|r| num_row([r.t, r.mean, r.var, r.ks]));
    write_csv(dir, "stats.csv", &["t", "mean", "var", "ks"], rows, report)?;
    if let Some(dd) = s.dense_dt {
        write_dense(&ens, dd, s.dense_paths, dir, report)?;
    }
    if let Some(thr) = s.ks_threshold {
        for r in stats.times.iter().filter(|r| !r.degenerate) {
            report.check(format!("ks(t={})", r.t), r.ks, thr, r.ks < thr, true);
        }
    }
    report.result("scheme", ens.scheme);
    report.result("n_paths", ens.len());
    report.result("stats", &stats.times);
    report.result("jump_histogram", &stats.jump_histogram);
    report.result("largest_jump", stats.largest_jump);
    Ok(())
}

fn write_dense(ens: &PathEnsemble, dd: f64, max_paths: usize, dir: &Path, report: &mut Report) -> Result<(), CliError> {
    let t0 = ens.t0;
    let n = ((1.0 - t0) / dd).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| if k == n { 1.0 } else { t0 + k as f64 * dd }).collect();
    let mut rows = Vec::new();
    for i in 0..ens.len().min(max_paths) {
        let tr = ens.trace(i, dd)?;
        let mut j = 0;
        for &g in &grid {
            while j + 1 < tr.times.len() && tr.times[j + 1] <= g + 1e-12 * (1.0 + g.abs()) {
                j += 1;
            }
            let mut r = vec![i.to_string()];
            r.extend(num_row([g, tr.x[j]]));
            rows.push(r);
        }
    }
    write_csv(dir, "dense.csv", &["path_id", "time", "x"], rows, report)
}

/// Optimal value by quadrature, Monte Carlo primal estimate on the SDE
/// ensemble and superhedge residuals; prints a summary table and writes
/// `residuals.csv`.
pub fn cmd_duality_gap(cfg: &RunConfig, dir: &Path, report: &mut Report) -> Result<(), CliError> {
    let d = cfg.duality.as_ref().ok_or_else(|| CliError::Validation("duality: block is required".into()))?;
    let cost = CostFunction::by_name(&d.cost).map_err(|e| CliError::Validation(format!("duality.cost: {e}")))?;
    cost.check_assumption()?;
    let family = cfg.family.build()?;
    let chars = Arc::new(ContCharacteristics::new(family.clone(), cfg.curve_mode)?);
    let value = optimal_value_quadrature(&chars, &cost)?;
    if let Some(w) = &value.warning {
        report.warn(w.clone());
    }
    let strategy = build_continuous_dual(chars.clone(), &cost)?;
    let proxy = integrability_proxy(&strategy)?;
    if let Some(w) = &proxy.warning {
        report.warn(w.clone());
    }
    let tol = d.tol_hedge.unwrap_or_else(|| tol_hedge_for_step(d.dt));
    let sde = run_sde(chars, d.dt, d.n_paths, cfg.seed, &[])?;
    let sde_report = verify_superhedge_on_paths(&strategy, &sde, tol, d.dt)?;
    let chain_report = match d.chain_n {
        Some(n) => {
            let ens = run_discrete_chain(family.clone(), &Partition::for_family(family.as_ref(), n)?, d.n_paths, cfg.seed, &[])?;
            Some(verify_superhedge_on_paths(&strategy, &ens, tol, d.dt)?)
        }
        None => None,
    };

    let gap = sde_report.payoff_mean - value.value;
    let allowance = 3.0 * sde_report.payoff_se + d.gap_tolerance;
    report.check("primal_dual_gap", gap.abs(), allowance, gap.abs() < allowance, false);
    let ensembles: Vec<(&str, &HedgeReport)> =
        std::iter::once(("sde", &sde_report)).chain(chain_report.as_ref().map(|r| ("chain", r))).collect();
    for (name, r) in &ensembles {
        let passed = r.violation_fraction <= d.max_violation_fraction;
        report.check(format!("violation_fraction({name})"), r.violation_fraction, d.max_violation_fraction, passed, true);
    }

    println!("{:<32} {:>24}", "quantity", "value");
    println!("{:<32} {:>24}", "optimal value (quadrature)", fmt_f64(value.value));
    println!("{:<32} {:>24}", "quadrature error estimate", fmt_f64(value.error_estimate));
    println!("{:<32} {:>24}", "MC primal estimate", fmt_f64(sde_report.payoff_mean));
    println!("{:<32} {:>24}", "MC standard error", fmt_f64(sde_report.payoff_se));
    for (name, r) in &ensembles {
        println!("{:<32} {:>24}", format!("min hedge residual ({name})"), fmt_f64(r.min_residual));
        println!("{:<32} {:>24}", format!("mean hedge residual ({name})"), fmt_f64(r.mean_residual));
        println!("{:<32} {:>24}", format!("violation fraction ({name})"), fmt_f64(r.violation_fraction));
    }

    if d.write_residuals {
        let rows = ensembles.iter().flat_map(|(name, r)| {
            r.paths.iter().enumerate().map(move |(i, p)| {
                let mut row = vec![name.to_string(), i.to_string()];
                row.extend(num_row([p.static_part, p.dynamic_part, p.payoff, p.residual]));
                row
            })
        });
        write_csv(dir, "residuals.csv", &["ensemble", "path_id", "static", "dynamic", "payoff", "residual"], rows, report)?;
    }
    report.result("cost", &cost.name);
    report.result("optimal_value", value.value);
    report.result("optimal_value_error", value.error_estimate);
    report.result("mc_estimate", sde_report.payoff_mean);
    report.result("mc_se", sde_report.payoff_se);
    report.result("gap", gap);
    report.result("tol_hedge", tol);
    report.result("hedge_sde", &sde_report);
    if let Some(r) = &chain_report {
        report.result("hedge_chain", r);
    }
    report.result("integrability_proxy", &proxy);
    Ok(())
}
