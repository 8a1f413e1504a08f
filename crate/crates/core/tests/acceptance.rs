//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use bellmix::fixtures::{alpha_quarter_checks, CALIBRATED_DEPHASING, FIDELITY_TABLE, MEASURED_VISIBILITY};
use bellmix::measurement::{simulate_counts, AcquisitionConfig};
use bellmix::metrics::{fidelity, purity, tangle, theory, visibility};
use bellmix::optics::standard_projector_set;
use bellmix::states::{generate, mix_duty_cycle, NoiseParams, SourceConfig};
use bellmix::sweep::{run_sweep, SweepSpec};
use bellmix::tomography::{mle_reconstruct, mle_reconstruct_observed, MleOptions};
use bellmix::DensityMatrix;

use common::{brute_force_diagonal_mle, diagonal_state, phase_flip_symmetrize};

struct Verdict {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, Option<Duration>, fn() -> Verdict);

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn table_alphas() -> Vec<f64> {
    FIDELITY_TABLE.iter().map(|&(a, _, _)| a).collect()
}

fn closed_forms() -> Verdict {
    let mut worst = [0.0f64; 3];
    for i in 0..=100 {
        let alpha = i as f64 / 100.0;
        let rho = mix_duty_cycle(alpha).unwrap();
        worst[0] = worst[0].max((purity(&rho) - theory::purity(alpha)).abs());
        worst[1] = worst[1].max((tangle(&rho) - theory::tangle(alpha)).abs());
        worst[2] = worst[2].max((visibility(&rho).unwrap() - theory::visibility(alpha)).abs());
    }
    verdict(
        worst.iter().all(|&w| w <= 1e-10),
        format!("max |dP| {:.1e}, |dT| {:.1e}, |dV| {:.1e}", worst[0], worst[1], worst[2]),
    )
}

fn printed_fixture() -> Verdict {
    let checks = alpha_quarter_checks().unwrap();
    let detail = checks
        .iter()
        .map(|c| format!("{} {:.4}", c.name.rsplit(' ').next().unwrap(), c.value))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(checks.iter().all(|c| c.passed), detail)
}

fn completely_mixed() -> Verdict {
    let rho = generate(&SourceConfig {
        alpha: 0.5,
        signal_dc: 0.5,
        ..SourceConfig::default()
    })
    .unwrap();
    let diff = rho.matrix().max_abs_diff(DensityMatrix::maximally_mixed().matrix());
    let (p, t) = (purity(&rho), tangle(&rho));
    verdict(
        diff <= 1e-12 && (p - 0.25).abs() <= 1e-10 && t.abs() <= 1e-10,
        format!("max |rho - I/4| {diff:.1e}, P {p}, T {t:.1e}"),
    )
}

fn round_trip() -> Verdict {
    let set = standard_projector_set();
    let mut worst = f64::INFINITY;
    let mut monotone = true;
    let mut runs = 0;
    for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let truth = mix_duty_cycle(alpha).unwrap();
        for seed in 1..=10 {
            let counts = simulate_counts(&truth, &set, &AcquisitionConfig::new(1e5, seed)).unwrap();
            let mut last = f64::NEG_INFINITY;
            let res = mle_reconstruct_observed(&counts, &set, &MleOptions::default(), |_, _, ll| {
                monotone &= ll >= last;
                last = ll;
            })
            .unwrap();
            worst = worst.min(fidelity(&res.rho_hat, &truth));
            runs += 1;
        }
    }
    verdict(
        worst >= 0.99 && monotone,
        format!("{runs} runs, min F {worst:.6}, likelihood monotone {monotone}"),
    )
}

fn noise_matched() -> Verdict {
    let noise = NoiseParams {
        dephasing: CALIBRATED_DEPHASING,
        depolarizing: 0.0,
    };
    let v0 = visibility(&generate(&SourceConfig { noise, ..SourceConfig::default() }).unwrap()).unwrap();
    let mut spec = SweepSpec::new(table_alphas());
    spec.noise = noise;
    spec.include_completely_mixed = true;
    let out = run_sweep(&spec, true).unwrap();
    let fids: Vec<f64> = out
        .points
        .iter()
        .map(|p| p.result.metrics.fidelity_to_target.unwrap())
        .collect();
    let (lo, hi) = fids.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &f| (l.min(f), h.max(f)));
    verdict(
        (v0 - MEASURED_VISIBILITY).abs() < 1e-12 && fids.iter().all(|f| (0.96..=1.0).contains(f)),
        format!("V(alpha=0) {v0:.4}, F over {} points in [{lo:.4}, {hi:.4}]", fids.len()),
    )
}

fn figure_regeneration() -> Verdict {
    let mut spec = SweepSpec::new(table_alphas());
    spec.acquisition = AcquisitionConfig::new(1e6, 42);
    let out = run_sweep(&spec, true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write(dir.path(), &standard_projector_set()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();

    let mut worst = [0.0f64; 3];
    for p in &out.points {
        let m = &p.result.metrics;
        worst[0] = worst[0].max((m.visibility - theory::visibility(p.alpha)).abs());
        worst[1] = worst[1].max((m.tangle - theory::tangle(p.alpha)).abs());
        worst[2] = worst[2].max((m.purity - theory::purity(p.alpha)).abs());
    }
    verdict(
        worst[0] <= 0.01 && worst[1] <= 0.02 && worst[2] <= 0.01 && csv.lines().count() == out.points.len() + 1,
        format!("max |dV| {:.4}, |dT| {:.4}, |dP| {:.4}, sweep.csv rows {}", worst[0], worst[1], worst[2], csv.lines().count() - 1),
    )
}

fn oracle_equivalence() -> Verdict {
    let set = standard_projector_set();
    let cases = [
        ([1.0, 0.0, 0.0, 0.0], 1e4, 11),
        ([1.0, 0.0, 0.0, 0.0], 1e3, 12),
        ([0.4, 0.3, 0.2, 0.1], 1e4, 13),
    ];
    let mut worst = 1.0f64;
    for (d, pairs, seed) in cases {
        let raw = simulate_counts(&diagonal_state(&d), &set, &AcquisitionConfig::new(pairs, seed)).unwrap();
        let counts = phase_flip_symmetrize(&raw, &set);
        let oracle = diagonal_state(&brute_force_diagonal_mle(&counts, &set));
        let res = mle_reconstruct(&counts, &set, &MleOptions::default()).unwrap();
        worst = worst.min(fidelity(&res.rho_hat, &oracle));
    }
    verdict(worst >= 1.0 - 1e-4, format!("min F(MLE, grid) {worst:.8} over {} cases", cases.len()))
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism() -> Verdict {
    let mut spec = SweepSpec::new(table_alphas());
    spec.acquisition = AcquisitionConfig::new(1e4, 2024);
    spec.include_completely_mixed = true;
    spec.resamples = 8;
    let set = standard_projector_set();
    let trees: Vec<_> = [false, true, true]
        .iter()
        .map(|&parallel| {
            let dir = tempfile::tempdir().unwrap();
            run_sweep(&spec, parallel).unwrap().write(dir.path(), &set).unwrap();
            read_tree(dir.path())
        })
        .collect();
    let identical = trees.windows(2).all(|w| w[0] == w[1]);
    verdict(
        identical && !trees[0].is_empty(),
        format!("{} files identical across serial and two parallel runs: {identical}", trees[0].len()),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("closed-form metrics", Some(Duration::from_secs(1)), closed_forms),
        ("printed alpha=0.25 fixture", Some(Duration::from_secs(1)), printed_fixture),
        ("completely mixed pipeline", Some(Duration::from_secs(1)), completely_mixed),
        ("tomography round trip", Some(Duration::from_secs(60)), round_trip),
        ("noise-matched fidelity band", Some(Duration::from_secs(120)), noise_matched),
        ("visibility/tangle/purity sweep", Some(Duration::from_secs(180)), figure_regeneration),
        ("MLE vs brute-force oracle", None, oracle_equivalence),
        ("sweep determinism", None, determinism),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let ok = v.passed && limit.is_none_or(|l| elapsed <= l);
        failures += usize::from(!ok);
        println!(
            "{} criterion {}: {name}: {} ({:.2} s, {})",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            elapsed.as_secs_f64(),
            limit.map_or("no time limit".to_string(), |l| format!("limit {} s", l.as_secs()))
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
