use helio2d::curve::ClosedCurve;
use helio2d::forward::SolverKind;
use helio2d::inverse::{run_newton, NewtonProblem};
use helio2d::linalg::norm2;
use helio2d::manifest::RunManifest;
use helio2d::rla::{run_rla, BandlimitRule, RhoSchedule, RlaConfig};
use helio2d::synth::{synthesize, Dataset, NoiseModel};
use num_complex::Complex64;

fn small_config() -> RlaConfig {
    let mut c = RlaConfig {
        k0: 0.5,
        dk: 0.5,
        stages: 2,
        directions: 2,
        angles: 16,
        bandlimit: BandlimitRule::TwiceCeilPlusOne,
        rho: RhoSchedule::Constant { value: 0.5 },
        synthesis_factor: 30.0,
        ..RlaConfig::star_example()
    };
    c.controls.max_iters = 6;
    c
}

fn truth() -> ClosedCurve {
    ClosedCurve::star(1.2, 0.1, 3, 64).unwrap()
}

#[test]
fn noise_identity_and_seeds() {
    let config = small_config();
    let clean = synthesize(&truth(), &config, &NoiseModel::new(0.0, 3).unwrap(), SolverKind::Dense).unwrap();
    assert_eq!(clean.len(), 4);
    for r in &clean {
        assert_eq!(r.clean.values, r.noisy.values);
    }
    let noise = NoiseModel::new(0.05, 3).unwrap();
    let a = synthesize(&truth(), &config, &noise, SolverKind::Dense).unwrap();
    let b = synthesize(&truth(), &config, &noise, SolverKind::Dense).unwrap();
    let c = synthesize(&truth(), &config, &NoiseModel::new(0.05, 4).unwrap(), SolverKind::Dense).unwrap();
    for ((ra, rb), rc) in a.iter().zip(&b).zip(&c) {
        assert_eq!(ra.noisy.values, rb.noisy.values);
        assert_ne!(ra.noisy.values, rc.noisy.values);
        assert_eq!(ra.clean.values, rc.clean.values);
        let d: Vec<Complex64> = ra.noisy.values.iter().zip(&ra.clean.values).map(|(x, y)| x - y).collect();
        assert!((norm2(&d) / norm2(&ra.clean.values) - 0.05).abs() < 1e-14);
    }
}

#[test]
fn dataset_roundtrip_and_missing_records() {
    let config = small_config();
    let noise = NoiseModel::new(0.05, 1).unwrap();
    let records = synthesize(&truth(), &config, &noise, SolverKind::Dense).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = RunManifest::new("synth", &config).unwrap();
    Dataset::write(dir.path(), &records, &truth(), &noise, &mut manifest).unwrap();
    let (data, index) = Dataset::read(dir.path()).unwrap();
    assert_eq!(index.records.len(), 4);
    assert_eq!(index.delta, 0.05);
    for r in &records {
        let got = data.get(r.noisy.k, r.noisy.direction).unwrap();
        assert_eq!(got.values, r.noisy.values);
    }
    let back = Dataset::true_curve(dir.path(), &index).unwrap();
    assert_eq!(back.coeffs_x(), truth().coeffs_x());
    let err = data.get(7.0, [1.0, 0.0]).unwrap_err().to_string();
    assert!(err.contains("k=7"), "{err}");
}

#[test]
fn single_stage_is_plain_newton() {
    let config = RlaConfig { stages: 1, ..small_config() };
    let records = synthesize(&truth(), &config, &NoiseModel::new(0.0, 0).unwrap(), SolverKind::Dense).unwrap();
    let data = Dataset::from_records(&records);
    let start = config.initial_curve().unwrap();
    let state = run_rla(&config, &data, &start, SolverKind::Dense).unwrap();

    let k = config.k0;
    let waves = config.waves(k).unwrap();
    let measured: Vec<_> = waves.iter().map(|w| data.get(k, w.direction()).unwrap().clone()).collect();
    let problem = NewtonProblem::new(waves, &measured, SolverKind::Dense).unwrap();
    let controls = helio2d::inverse::NewtonControls { rho: 0.5, ..config.controls };
    let out = run_newton(&problem, &start, &config.basis(0, k).unwrap(), &controls).unwrap();
    assert_eq!(state.stages.len(), 1);
    assert_eq!(state.stages[0].history, out.history);
    assert_eq!(state.curve.coeffs_x(), out.curve.coeffs_x());
}

#[test]
fn sweep_is_deterministic_and_writes_stages() {
    let config = small_config();
    let records = synthesize(&truth(), &config, &NoiseModel::new(0.05, 5).unwrap(), SolverKind::Dense).unwrap();
    let data = Dataset::from_records(&records);
    let start = config.initial_curve().unwrap();
    let a = run_rla(&config, &data, &start, SolverKind::Dense).unwrap();
    let b = run_rla(&config, &data, &start, SolverKind::Dense).unwrap();
    assert!(a.failure.is_none());
    assert_eq!(a.stages.len(), 2);
    for (x, y) in a.stages.iter().zip(&b.stages) {
        assert_eq!(x.history, y.history);
    }
    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    for f in ["stage_00/curve.json", "stage_01/history.jsonl", "final_curve.json", "stages.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let lines = std::fs::read_to_string(dir.path().join("stage_00/history.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["iter", "residual", "step_norm", "backtracks"] {
        assert!(first.get(key).is_some());
    }
}

#[test]
fn failed_stage_stops_the_sweep() {
    let mut config = small_config();
    config.rho = RhoSchedule::Constant { value: 400.0 };
    config.controls.max_backtracks = 0;
    let records = synthesize(&truth(), &config, &NoiseModel::new(0.0, 0).unwrap(), SolverKind::Dense).unwrap();
    let data = Dataset::from_records(&records);
    let start = config.initial_curve().unwrap();
    let state = run_rla(&config, &data, &start, SolverKind::Dense).unwrap();
    let (k, _) = state.failure.clone().expect("sweep should fail");
    assert_eq!(k, config.k0);
    assert_eq!(state.stages.len(), 1);
    assert_eq!(state.curve.coeffs_x(), start.coeffs_x());
}

#[test]
fn missing_record_is_reported() {
    let config = small_config();
    let records = synthesize(&truth(), &RlaConfig { stages: 1, ..config.clone() }, &NoiseModel::new(0.0, 0).unwrap(), SolverKind::Dense)
        .unwrap();
    let data = Dataset::from_records(&records);
    let err = run_rla(&config, &data, &config.initial_curve().unwrap(), SolverKind::Dense).unwrap_err();
    assert!(err.to_string().contains("k=1"), "{err}");
}
