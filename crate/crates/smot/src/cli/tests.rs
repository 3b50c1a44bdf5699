use super::*;
use crate::marginals::FamilySpec;

fn base() -> RunConfig {
    RunConfig::new(FamilySpec::uniform())
}

#[test]
fn missing_family_is_named() {
    let err = RunConfig::from_json(r#"{"version": 1}"#).unwrap_err();
    assert!(matches!(err, CliError::Validation(_)));
    assert!(err.to_string().contains("family"), "{err}");
}

#[test]
fn unknown_fields_are_rejected() {
    let err = RunConfig::from_json(r#"{"version": 1, "family": {"family": "uniform"}, "colour": 3}"#).unwrap_err();
    assert!(err.to_string().contains("colour"), "{err}");
    let err = RunConfig::from_json(r#"{"version": 1, "family": {"family": "uniform", "sigma": 2}}"#).unwrap_err();
    assert!(err.to_string().contains("sigma"), "{err}");
}

#[test]
fn version_must_match() {
    let mut c = base();
    c.version = 2;
    let err = c.validate(Command::TransitionCurve).unwrap_err();
    assert!(err.to_string().contains("version"));
}

#[test]
fn simulate_block_validation_names_fields() {
    let mut c = base();
    assert!(c.validate(Command::Simulate).unwrap_err().to_string().contains("simulate"));
    let block = SimulateConfig {
        scheme: SchemeName::Sde,
        n_paths: 0,
        dt: 1e-3,
        n: None,
        sample_times: None,
        write_paths: true,
        dense_dt: None,
        dense_paths: 10,
        ks_threshold: None,
    };
    c.simulate = Some(block.clone());
    assert!(c.validate(Command::Simulate).unwrap_err().to_string().contains("simulate.n_paths"));
    c.simulate = Some(SimulateConfig { n_paths: 10, dt: 0.2, ..block.clone() });
    assert!(c.validate(Command::Simulate).unwrap_err().to_string().contains("simulate.dt"));
    c.simulate = Some(SimulateConfig { n_paths: 10, scheme: SchemeName::Discrete, ..block.clone() });
    assert!(c.validate(Command::Simulate).unwrap_err().to_string().contains("simulate.n"));
    c.simulate = Some(SimulateConfig { n_paths: 10, ks_threshold: Some(0.0), ..block.clone() });
    assert!(c.validate(Command::Simulate).unwrap_err().to_string().contains("simulate.ks_threshold"));
    c.simulate = Some(SimulateConfig { n_paths: 10, ..block });
    c.validate(Command::Simulate).unwrap();
}

#[test]
fn duality_and_family_validation() {
    let mut c = base();
    let block: DualityConfig = serde_json::from_str("{}").unwrap();
    assert_eq!(block.n_paths, 10_000);
    assert_eq!(block.cost, "default");
    c.duality = Some(DualityConfig { tol_hedge: Some(-1.0), ..block.clone() });
    assert!(c.validate(Command::DualityGap).unwrap_err().to_string().contains("duality.tol_hedge"));
    c.duality = Some(DualityConfig { max_violation_fraction: 1.5, ..block.clone() });
    assert!(c.validate(Command::DualityGap).unwrap_err().to_string().contains("duality.max_violation_fraction"));
    c.duality = Some(block);
    c.validate(Command::DualityGap).unwrap();
    c.family = FamilySpec { family: crate::marginals::FamilyKind::Tabulated, delta: None, table_path: None };
    assert!(c.validate(Command::DualityGap).unwrap_err().to_string().contains("family.table_path"));
    c.family = FamilySpec::bachelier(1.5);
    assert!(c.validate(Command::DualityGap).unwrap_err().to_string().contains("family.delta"));
}

#[test]
fn increasing_coupling_needs_uniform_family() {
    let mut c = RunConfig::new(FamilySpec::gbm(0.05));
    c.coupling = Some(CouplingConfig { t: 0.2, eps: 0.1, grid: 11, kind: CouplingKind::Increasing });
    assert!(c.validate(Command::DumpCoupling).unwrap_err().to_string().contains("coupling.kind"));
}

#[test]
fn config_round_trips_through_json() {
    let mut c = RunConfig::new(FamilySpec::bachelier(0.05));
    c.seed = 17;
    c.curve = Some(CurveConfig { n_times: 11, eps_sweep: vec![0.1, 1.0 / 3.0] });
    c.duality = Some(serde_json::from_str(r#"{"tol_hedge": 0.1234567890123456789, "chain_n": 4}"#).unwrap());
    let back = RunConfig::from_json(&c.to_json()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn floats_print_with_seventeen_digits() {
    for &v in &[0.1, -1.0 / 3.0, 1e-300, 123456.789, std::f64::consts::PI] {
        let s = fmt_f64(v);
        let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{s}");
        assert_eq!(s.parse::<f64>().unwrap(), v);
    }
    assert_eq!(fmt_f64(f64::NAN), "NaN");
}

#[test]
fn error_categories_map_to_exit_codes() {
    let e: CliError = SmotError::InvalidInput("x".into()).into();
    assert_eq!(e.exit_code(), EXIT_VALIDATION);
    let e: CliError = SmotError::Inversion { context: "x".into() }.into();
    assert_eq!(e.exit_code(), EXIT_NUMERICAL);
    let e: CliError = SmotError::CostAssumption("c_xy".into()).into();
    assert_eq!(e.exit_code(), EXIT_VALIDATION);
    assert_eq!(CliError::Acceptance("ks".into()).exit_code(), EXIT_ACCEPTANCE);
}
