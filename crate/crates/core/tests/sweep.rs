use bellmix::fixtures::{CALIBRATED_DEPHASING, FIDELITY_TABLE};
use bellmix::measurement::AcquisitionConfig;
use bellmix::metrics::theory;
use bellmix::sweep::{run_sweep, SweepSpec};

fn grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[test]
fn noiseless_grid_tracks_theory() {
    let mut spec = SweepSpec::new(grid());
    spec.acquisition = AcquisitionConfig::new(1e6, 7);
    let out = run_sweep(&spec, true).unwrap();
    for p in &out.points {
        let m = &p.result.metrics;
        assert!((m.visibility - theory::visibility(p.alpha)).abs() <= 0.01, "alpha {}", p.alpha);
        assert!(m.fidelity_to_target.unwrap() >= 0.995, "alpha {}", p.alpha);
        assert!(p.result.converged);
    }
}

#[test]
fn calibrated_dephasing_fidelity_at_alpha_zero() {
    let mut spec = SweepSpec::new(vec![0.0]);
    spec.noise.dephasing = CALIBRATED_DEPHASING;
    let out = run_sweep(&spec, false).unwrap();
    let f = out.points[0].result.metrics.fidelity_to_target.unwrap();
    assert!((0.975..=0.995).contains(&f), "{f}");
}

#[test]
fn theory_columns_are_the_closed_forms() {
    let alphas: Vec<f64> = FIDELITY_TABLE.iter().map(|r| r.0).collect();
    let mut spec = SweepSpec::new(alphas);
    spec.acquisition = AcquisitionConfig::new(1e3, 1);
    spec.include_completely_mixed = true;
    let csv = run_sweep(&spec, true).unwrap().csv();
    for line in csv.lines().skip(1).filter(|l| l.starts_with("lcr,")) {
        let cols: Vec<&str> = line.split(',').collect();
        let alpha: f64 = cols[1].parse().unwrap();
        assert_eq!(cols[10], theory::visibility(alpha).to_string());
        assert_eq!(cols[11], theory::tangle(alpha).to_string());
        assert_eq!(cols[12], theory::purity(alpha).to_string());
    }
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(&last[10..13], &["0", "0", "0.25"]);
}

#[test]
fn bootstrap_columns_filled_when_requested() {
    let mut spec = SweepSpec::new(vec![0.25]);
    spec.acquisition = AcquisitionConfig::new(1e4, 5);
    spec.resamples = 5;
    let csv = run_sweep(&spec, true).unwrap().csv();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    for col in &row[6..10] {
        assert!(col.parse::<f64>().unwrap() >= 0.0);
    }
}
