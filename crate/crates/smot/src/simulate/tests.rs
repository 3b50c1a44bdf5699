use super::*;
use crate::curve::{ContCharacteristics, CurveMode};
use crate::marginals::{make_bachelier_family, make_uniform_family};
use crate::numerics::stats::{ks_statistic, moments};

fn uniform_chars() -> Arc<ContCharacteristics> {
    Arc::new(ContCharacteristics::new(make_uniform_family(), CurveMode::Specialised).unwrap())
}

#[test]
fn partition_validation() {
    assert!(Partition::new(vec![0.0]).is_err());
    assert!(Partition::new(vec![0.0, 0.5, 0.5]).is_err());
    let p = Partition::uniform(0.0, 1.0, 4).unwrap();
    assert_eq!(p.steps(), 4);
    assert!((p.mesh() - 0.25).abs() < 1e-15);
    assert_eq!(p.times()[4], 1.0);
}

#[test]
fn same_seed_gives_identical_ensembles() {
    let fam = make_uniform_family();
    let part = Partition::for_family(fam.as_ref(), 4).unwrap();
    let a = run_discrete_chain(fam.clone(), &part, 500, 7, &[0.5]).unwrap();
    let b = run_discrete_chain(fam.clone(), &part, 500, 7, &[0.5]).unwrap();
    let c = run_discrete_chain(fam, &part, 500, 8, &[0.5]).unwrap();
    assert_eq!(a.paths, b.paths);
    assert_ne!(a.paths, c.paths);
    let chars = uniform_chars();
    let s1 = run_sde(chars.clone(), 0.01, 300, 3, &[1.0]).unwrap();
    let s2 = run_sde(chars, 0.01, 300, 3, &[1.0]).unwrap();
    assert_eq!(s1.paths, s2.paths);
}

#[test]
fn one_step_chain_matches_target_marginal() {
    let fam = make_uniform_family();
    let t1 = 2f64.ln();
    let part = Partition::new(vec![0.0, t1]).unwrap();
    let e = run_discrete_chain(fam.clone(), &part, 200_000, 11, &[t1]).unwrap();
    let v = e.values_at(t1).unwrap();
    let ks = ks_statistic(&v, |x| fam.cdf(t1, x));
    assert!(ks < 5e-3, "ks {ks}");
}

#[test]
fn chain_means_match_marginal_means() {
    let fam = make_uniform_family();
    let part = Partition::for_family(fam.as_ref(), 8).unwrap();
    let times = part.times().to_vec();
    let e = run_discrete_chain(fam.clone(), &part, 20_000, 5, &times).unwrap();
    for &t in &times {
        let m = moments(&e.values_at(t).unwrap());
        assert!((m.mean - fam.mean(t)).abs() < 3.0 * m.se + 1e-12, "t={t}: {} vs {}", m.mean, fam.mean(t));
    }
}

#[test]
fn sde_marginal_is_close_to_target() {
    let fam = make_uniform_family();
    let e = run_sde(uniform_chars(), 2e-3, 20_000, 1, &[0.5, 1.0]).unwrap();
    for &t in &[0.5, 1.0] {
        let ks = ks_statistic(&e.values_at(t).unwrap(), |x| fam.cdf(t, x));
        assert!(ks < 0.015, "t={t} ks {ks}");
    }
}

#[test]
fn drift_only_path_is_deterministic_and_decreasing() {
    let engine = SdeEngine::new(uniform_chars(), 1e-2).unwrap();
    let mut rng = path_rng(0, 0);
    let x0 = -0.99;
    let steps: Vec<usize> = (0..=engine.n_steps()).collect();
    let p = engine.simulate_path(x0, &mut rng, &steps).unwrap();
    assert!(p.events.is_empty());
    assert!(p.samples.windows(2).all(|w| w[1] < w[0]));
    let mut rng2 = path_rng(99, 3);
    assert_eq!(engine.simulate_path(x0, &mut rng2, &steps).unwrap(), p);
}

#[test]
fn replay_reproduces_sampled_values() {
    let fam = make_bachelier_family(0.05).unwrap();
    let chars = Arc::new(ContCharacteristics::new(fam, CurveMode::Specialised).unwrap());
    let e = run_sde(chars, 5e-3, 200, 9, &[0.3, 0.7, 1.0]).unwrap();
    let engine = e.engine().unwrap().clone();
    let mut jumps = 0;
    for p in &e.paths {
        let tr = engine.replay(p).unwrap();
        for (j, &s) in e.sample_times.iter().enumerate() {
            assert_eq!(tr.x[engine.step_at(s)], p.samples[j]);
        }
        assert_eq!(*tr.x.last().unwrap(), p.x_end);
        jumps += tr.x.iter().zip(&tr.x_left).filter(|(a, b)| a != b).count();
        assert_eq!(tr.x.iter().zip(&tr.x_left).filter(|(a, b)| a != b).count(), p.n_jumps());
    }
    assert!(jumps > 0);
}

#[test]
fn bachelier_sde_mean_tracks_target() {
    let fam = make_bachelier_family(0.05).unwrap();
    let chars = Arc::new(ContCharacteristics::new(fam.clone(), CurveMode::Specialised).unwrap());
    let e = run_sde(chars, 5e-3, 10_000, 2, &[0.5, 1.0]).unwrap();
    let s = path_statistics(&e, &[0.5, 1.0]).unwrap();
    for row in &s.times {
        assert!((row.mean + row.t).abs() < 3.0 * row.se + 2e-3, "t={} mean {}", row.t, row.mean);
    }
    assert!(s.times[1].mean < s.times[0].mean);
    assert_eq!(s.jump_histogram.iter().sum::<usize>(), 10_000);
}

#[test]
fn increasing_boundary_hits_land_on_lower_end() {
    let e = run_increasing_uniform(2e-3, 4000, 4, &[0.5, 1.0]).unwrap();
    let mut hits = 0;
    for p in &e.paths {
        for ev in &p.events {
            assert!(ev.post < ev.pre);
            if (ev.pre - ev.time.exp()).abs() < 1e-12 {
                hits += 1;
                assert_eq!(ev.post, -(2.0 * ev.time).exp());
            }
        }
    }
    assert!(hits > 0);
    for &t in &[0.5f64, 1.0] {
        let m = moments(&e.values_at(t).unwrap());
        let target = 0.5 * (t.exp() - (2.0 * t).exp());
        assert!((m.mean - target).abs() < 3.0 * m.se + 5e-3, "t={t}: {} vs {target}", m.mean);
    }
}

#[test]
fn degenerate_ensemble_reports_nan_ks() {
    let fam = make_uniform_family();
    let path = JumpPath { x0: 0.1, events: vec![], samples: vec![0.1], x_end: 0.1 };
    let e = PathEnsemble {
        paths: vec![path; 10],
        seed: 0,
        scheme: Scheme::DiscreteChain { n: 1 },
        t0: 0.0,
        sample_times: vec![0.5],
        family: fam,
        partition: vec![0.0, 1.0],
        warnings: vec![],
        engine: None,
    };
    let s = path_statistics(&e, &[0.5]).unwrap();
    assert!(s.times[0].degenerate && s.times[0].ks.is_nan());
    assert_eq!(s.times[0].var, 0.0);
}

#[test]
fn rejects_bad_inputs() {
    let fam = make_uniform_family();
    let part = Partition::for_family(fam.as_ref(), 2).unwrap();
    assert!(run_discrete_chain(fam, &part, 0, 1, &[]).is_err());
    assert!(run_sde(uniform_chars(), 0.5, 10, 1, &[]).is_err());
    assert!(run_sde(uniform_chars(), 0.01, 10, 1, &[1.5]).is_err());
}

