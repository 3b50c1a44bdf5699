use super::*;
use crate::coupling1p::{DecreasingCoupling, MeasurePair, TransitionKernel};
use crate::curve::{ContCharacteristics, CurveMode};
use crate::marginals::{make_bachelier_family, make_uniform_family, MarginalFamily};
use crate::numerics::quad::integrate;
use crate::simulate::{run_discrete_chain, run_sde, JumpPath, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn chars(f: Arc<dyn MarginalFamily>) -> Arc<ContCharacteristics> {
    Arc::new(ContCharacteristics::new(f, CurveMode::Specialised).unwrap())
}

fn one_period(f: &dyn MarginalFamily, t: f64, eps: f64) -> OnePeriodDual {
    let k = DecreasingCoupling::build(MeasurePair::from_family(f, t, eps).unwrap()).unwrap();
    build_one_period_dual(&k, &default_cost()).unwrap()
}

#[test]
fn one_period_dual_is_a_tight_superhedge() {
    let u = make_uniform_family();
    let b = make_bachelier_family(0.05).unwrap();
    for (f, t, eps) in [(u.as_ref(), 0.0, 0.25), (b.as_ref(), 0.25, 0.25)] {
        let d = one_period(f, t, eps);
        assert_eq!(d.h(d.x1()), 0.0);
        let mu = f.at(t);
        let nu = f.at(t + eps);
        let xs: Vec<f64> = (1..=100).map(|i| mu.quantile((i as f64 - 0.5) / 100.0)).collect();
        let ys: Vec<f64> = (1..=100).map(|i| nu.quantile((i as f64 - 0.5) / 100.0)).collect();
        for &x in &xs {
            assert!(d.h(x) >= 0.0, "{:?} h({x}) = {}", f.kind(), d.h(x));
        }
        let phis: Vec<f64> = xs.iter().map(|&x| d.phi(x)).collect();
        let mut worst = f64::INFINITY;
        for (i, &x) in xs.iter().enumerate() {
            for &y in &ys {
                let r = phis[i] + d.psi(y) + d.h(x) * (y - x) - default_cost().c(x, y);
                worst = worst.min(r);
            }
        }
        assert!(worst >= -1e-6, "{:?}: worst residual {worst}", f.kind());
        for &x in xs.iter().step_by(7) {
            let br = d.coupling().branches(x);
            for y in [br.t_d, br.t_u] {
                if y.is_finite() && (br.q > 0.0 || y == br.t_d) {
                    assert!(d.residual(x, y).abs() < 1e-6, "{:?} x={x} y={y}: {}", f.kind(), d.residual(x, y));
                }
            }
        }
        let ec = d.expected_cost();
        let (a, b) = d.dual_value();
        assert!(((a + b) - ec).abs() < 1e-5 * ec.abs(), "{:?}: {} vs {ec}", f.kind(), a + b);
    }
}

fn strategy(f: Arc<dyn MarginalFamily>) -> DualStrategy {
    build_continuous_dual(chars(f), &default_cost()).unwrap()
}

#[test]
fn continuous_dual_structure() {
    for f in [make_uniform_family(), make_bachelier_family(0.05).unwrap()] {
        let s = strategy(f.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let t = rng.gen_range(f.t_min()..1.0);
            let x = f.quantile(t, rng.gen_range(1e-4..1.0 - 1e-4));
            let h = s.h_star(t, x);
            assert!(h >= -1e-12, "{:?} h({t}, {x}) = {h}", f.kind());
            if x <= s.x1(t) {
                assert_eq!(h, 0.0);
            }
            let d = 1e-6;
            let fd = (s.psi_star(t, x + d) - s.psi_star(t, x - d)) / (2.0 * d);
            assert!((fd + h).abs() < 1e-6, "{:?} t={t} x={x}: {fd} vs {h}", f.kind());
        }
        for &t in &[f.t_min() + 0.013, 0.5, 0.977] {
            let (x1, m) = (s.x1(t), s.m(t));
            assert_eq!(s.h_star(t, x1), 0.0);
            assert!(s.h_star(t, x1 + 1e-9) < 1e-6);
            assert!((s.h_star(t, m + 1e-9) - s.h_star(t, m - 1e-9)).abs() < 1e-6);
        }
    }
}

#[test]
fn uniform_band_slope_matches_closed_form() {
    let s = strategy(make_uniform_family());
    let c = default_cost();
    for &t in &[0.2f64, 0.61] {
        let (x1, r) = (s.x1(t), t.exp());
        for i in 1..10 {
            let x = x1 + (r - x1) * i as f64 / 10.0;
            let d = 1e-5;
            let fd = (s.h_star(t, x + d) - s.h_star(t, x - d)) / (2.0 * d);
            let exact = (c.cx(x, r) - c.cx(x, x)) / (r - x);
            assert!((fd - exact).abs() < 1e-6, "t={t} x={x}: {fd} vs {exact}");
        }
    }
}

/// Inner integral in closed form: `int_0^L (1 - u - e^{-u}) du` with
/// `u = e^t - x`, times the constant intensity and density.
fn uniform_value_oracle() -> f64 {
    integrate(
        |t: f64| {
            let e = t.exp();
            let l = e + e / (1.0 + 2.0 * e);
            let nu = 0.5 * (1.0 + 2.0 * e) / (1.0 + e);
            nu * (l - 0.5 * l * l + (-l).exp_m1()) / (e + e * e)
        },
        0.0,
        1.0,
        1e-14,
    )
    .value
}

#[test]
fn optimal_value_examples() {
    let u = chars(make_uniform_family());
    let v = optimal_value_quadrature(&u, &default_cost()).unwrap();
    let oracle = uniform_value_oracle();
    assert!((v.value - oracle).abs() < 1e-9, "{} vs {oracle}", v.value);
    assert!(v.warning.is_none());
    assert_eq!(optimal_value_quadrature(&u, &zero_cost()).unwrap().value, 0.0);
    assert!(optimal_value_quadrature(&u, &squared_cost()).is_err() || squared_cost().check_assumption().is_err());
}

#[test]
fn static_dual_value_matches_optimal_value() {
    let f = make_uniform_family();
    let s = strategy(f);
    let v = s.dual_value_quadrature(64, 400, 1e-9).unwrap();
    let oracle = uniform_value_oracle();
    assert!((v - oracle).abs() < 1e-4 * oracle.abs().max(1e-3), "{v} vs {oracle}");
}

#[test]
fn drift_only_path_has_small_residual() {
    let f = make_uniform_family();
    let c = chars(f.clone());
    let s = build_continuous_dual(c.clone(), &default_cost()).unwrap();
    let ens = run_sde(c, 1e-3, 2, 5, &[]).unwrap();
    let engine = ens.engine().unwrap();
    for &x0 in &[-0.9, -0.5, 0.2, 0.8] {
        let path = JumpPath { x0, events: vec![], samples: vec![], x_end: f64::NAN };
        let trace = engine.replay(&path).unwrap();
        let r = hedge_path(&s, &trace, &path).unwrap();
        assert!(r.residual.abs() < 1e-4, "x0={x0}: {r:?}");
    }
}

#[test]
fn superhedge_on_sde_and_chain_paths() {
    let f = make_uniform_family();
    let c = chars(f.clone());
    let s = build_continuous_dual(c.clone(), &default_cost()).unwrap();
    let ens = run_sde(c, 1e-3, 400, 11, &[]).unwrap();
    let rep = verify_superhedge_on_paths(&s, &ens, DEFAULT_TOL_HEDGE, DEFAULT_TRACE_DT).unwrap();
    assert!(rep.violation_fraction <= 0.01, "{rep:?}");
    assert!((rep.hedge_mean - rep.payoff_mean).abs() < 3.0 * rep.payoff_se + 1e-3, "{rep:?}");
    let pinned = verify_superhedge_on_paths(&s.with_pin(1.0), &ens, DEFAULT_TOL_HEDGE, DEFAULT_TRACE_DT).unwrap();
    for (a, b) in rep.paths.iter().zip(&pinned.paths) {
        assert!((a.residual - b.residual).abs() < 1e-8);
    }
    let part = Partition::for_family(f.as_ref(), 4).unwrap();
    let chain = run_discrete_chain(f, &part, 400, 12, &[]).unwrap();
    let rep = verify_superhedge_on_paths(&s, &chain, DEFAULT_TOL_HEDGE, DEFAULT_TRACE_DT).unwrap();
    assert!(rep.violation_fraction <= 0.01, "{rep:?}");
    assert!(rep.hedge_mean >= rep.payoff_mean - 1e-3);
}

#[test]
fn zero_cost_gives_zero_dual() {
    let f = make_uniform_family();
    let c = chars(f.clone());
    let s = build_continuous_dual(c.clone(), &zero_cost()).unwrap();
    let ens = run_sde(c, 1e-3, 20, 1, &[]).unwrap();
    let rep = verify_superhedge_on_paths(&s, &ens, DEFAULT_TOL_HEDGE, DEFAULT_TRACE_DT).unwrap();
    assert!(rep.min_residual >= -1e-12, "{rep:?}");
    assert!(build_continuous_dual(chars(f), &squared_cost()).is_err());
}

#[test]
fn integrability_proxy_is_finite() {
    let s = strategy(make_uniform_family());
    let p = integrability_proxy(&s).unwrap();
    assert!(p.narrow.is_finite() && p.wide >= p.narrow - 1e-9);
}
