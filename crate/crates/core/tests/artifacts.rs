use bellmix::measurement::{counts_from_csv, counts_from_json, counts_to_csv, counts_to_json, read_counts, simulate_counts, AcquisitionConfig};
use bellmix::optics::{standard_projector_set, ProjectorSet};
use bellmix::states::{generate, NoiseParams, SourceConfig};
use bellmix::sweep::SweepSpec;
use bellmix::tomography::{mle_reconstruct, MleOptions, ReconstructionResult};
use bellmix::DensityMatrix;
use num_complex::Complex64 as C64;

fn noisy_state() -> DensityMatrix {
    generate(&SourceConfig {
        alpha: 0.35,
        phi: 0.3,
        signal_dc: 0.1,
        noise: NoiseParams {
            dephasing: 0.02,
            depolarizing: 0.01,
        },
        ..SourceConfig::default()
    })
    .unwrap()
}

#[test]
fn state_json_round_trip() {
    let rho = noisy_state();
    let text = serde_json::to_string(&rho).unwrap();
    let back: DensityMatrix = serde_json::from_str(&text).unwrap();
    assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

#[test]
fn source_config_round_trip() {
    let c = SourceConfig {
        alpha: 0.4,
        phi: 1.25,
        beta: C64::new(0.6, 0.0),
        gamma: C64::new(0.0, 0.8),
        signal_dc: 0.3,
        noise: NoiseParams {
            dephasing: 0.1,
            depolarizing: 0.2,
        },
    };
    assert_eq!(SourceConfig::from_json_str(&c.to_json_string()).unwrap(), c);
}

#[test]
fn counts_round_trip_through_files() {
    let set = standard_projector_set();
    let counts = simulate_counts(&noisy_state(), &set, &AcquisitionConfig::new(1e4, 8)).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let csv_path = dir.path().join("counts.csv");
    std::fs::write(&csv_path, counts_to_csv(&counts, &set).unwrap()).unwrap();
    let from_csv = read_counts(&csv_path, &set).unwrap();
    assert_eq!(counts_to_csv(&from_csv, &set).unwrap(), counts_to_csv(&counts, &set).unwrap());
    assert_eq!(counts_from_csv(&counts_to_csv(&counts, &set).unwrap(), &set).unwrap(), from_csv);

    let json_path = dir.path().join("counts.json");
    std::fs::write(&json_path, counts_to_json(&counts)).unwrap();
    assert_eq!(read_counts(&json_path, &set).unwrap(), counts);
    assert_eq!(counts_from_json(&counts_to_json(&counts), &set).unwrap(), counts);
}

#[test]
fn reconstruction_round_trip() {
    let set = standard_projector_set();
    let rho = noisy_state();
    let counts = simulate_counts(&rho, &set, &AcquisitionConfig::new(1e4, 8)).unwrap();
    let res = mle_reconstruct(&counts, &set, &MleOptions::default())
        .unwrap()
        .with_target(&rho, "generated");
    let text = res.to_json_string();
    let back = ReconstructionResult::from_json_str(&text).unwrap();
    assert_eq!(back.to_json_string(), text);
    assert_eq!(back.metrics, res.metrics);
    assert!(back.rho_hat.matrix().max_abs_diff(res.rho_hat.matrix()) < 1e-15);
}

#[test]
fn projector_set_round_trip() {
    let set = standard_projector_set();
    let back = ProjectorSet::from_json_str(&set.to_json_string()).unwrap();
    assert_eq!(back, set);
}

#[test]
fn sweep_spec_round_trip() {
    let mut spec = SweepSpec::new(vec![0.0, 0.25, 1.0]);
    spec.include_completely_mixed = true;
    spec.resamples = 10;
    spec.noise.dephasing = 0.027;
    spec.outputs = Some("out".into());
    assert_eq!(SweepSpec::from_json_str(&spec.to_json_string()).unwrap(), spec);
}
