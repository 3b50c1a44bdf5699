use proptest::prelude::*;
use smot::coupling1p::{DecreasingCoupling, MeasurePair, TransitionKernel};
use smot::curve::{ContCharacteristics, CurveMode};
use smot::duality::{build_continuous_dual, default_cost, DualStrategy};
use smot::marginals::{make_bachelier_family, make_uniform_family, MarginalFamily};
use smot::numerics::stats::{ks_sorted, wasserstein1};
use std::sync::{Arc, OnceLock};

fn family(bachelier: bool) -> Arc<dyn MarginalFamily> {
    if bachelier {
        make_bachelier_family(0.05).unwrap()
    } else {
        make_uniform_family()
    }
}

fn coupling(bachelier: bool, t_frac: f64, eps: f64) -> DecreasingCoupling {
    let fam = family(bachelier);
    let t0 = fam.t_min();
    let eps = eps.min(1.0 - t0 - 1e-3);
    let t = t0 + (1.0 - eps - t0) * t_frac;
    DecreasingCoupling::build(MeasurePair::from_family(fam.as_ref(), t, eps).unwrap()).unwrap()
}

fn dual(bachelier: bool) -> &'static DualStrategy {
    static UNIFORM: OnceLock<DualStrategy> = OnceLock::new();
    static BACHELIER: OnceLock<DualStrategy> = OnceLock::new();
    let cell = if bachelier { &BACHELIER } else { &UNIFORM };
    cell.get_or_init(|| {
        let chars = Arc::new(ContCharacteristics::new(family(bachelier), CurveMode::Specialised).unwrap());
        build_continuous_dual(chars, &default_cost()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_is_a_supermartingale(bachelier in any::<bool>(), t_frac in 0.0..1.0f64, eps in 0.01..0.5f64, u in 0.001..0.999f64) {
        let k = coupling(bachelier, t_frac, eps);
        let x = k.pair().mu.quantile(u);
        let b = k.branches(x);
        prop_assert!((0.0..=1.0).contains(&b.q));
        prop_assert!(b.t_d <= x + 1e-12);
        let scale = 1.0 + x.abs();
        let mean = if b.q > 0.0 { b.q * b.t_u + (1.0 - b.q) * b.t_d } else { b.t_d };
        prop_assert!(mean <= x + 1e-10 * scale);
        if x > k.phase().x1 && x < k.m_upper() {
            prop_assert!(b.t_u >= x);
            prop_assert!((mean - x).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn band_maps_are_monotone(bachelier in any::<bool>(), t_frac in 0.0..1.0f64, eps in 0.01..0.5f64, a in 0.01..0.99f64, b in 0.01..0.99f64) {
        let k = coupling(bachelier, t_frac, eps);
        let (lo, hi) = (k.band_start(), k.m_upper());
        let (x, y) = (lo + (hi - lo) * a.min(b), lo + (hi - lo) * a.max(b));
        let (bx, by) = (k.branches(x), k.branches(y));
        prop_assert!(bx.t_d <= by.t_d + 1e-10);
        prop_assert!(bx.t_u >= by.t_u - 1e-10);
    }

    #[test]
    fn hedge_ratio_is_nonnegative_and_vanishes_below_x1(bachelier in any::<bool>(), t_frac in 0.0..1.0f64, u in 0.001..0.999f64) {
        let s = dual(bachelier);
        let fam = family(bachelier);
        let t = fam.t_min() + (1.0 - fam.t_min()) * t_frac;
        let x = fam.quantile(t, u);
        let h = s.h_star(t, x);
        prop_assert!(h >= 0.0);
        if x <= s.x1(t) {
            prop_assert_eq!(h, 0.0);
        }
    }

    #[test]
    fn ks_and_w1_are_well_behaved(mut v in prop::collection::vec(-5.0..5.0f64, 1..200), shift in 0.0..2.0f64) {
        v.sort_by(f64::total_cmp);
        let ks = ks_sorted(&v, |x| ((x + 5.0) / 10.0).clamp(0.0, 1.0));
        prop_assert!((0.0..=1.0).contains(&ks));
        prop_assert!(wasserstein1(&v, &v).abs() < 1e-12);
        let w: Vec<f64> = v.iter().map(|x| x + shift).collect();
        prop_assert!((wasserstein1(&v, &w) - shift).abs() < 1e-9);
        prop_assert!((wasserstein1(&w, &v) - wasserstein1(&v, &w)).abs() < 1e-12);
    }
}
