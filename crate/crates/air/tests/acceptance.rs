//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see every line.

use std::collections::BTreeMap;
use std::time::Instant;

use air::classifier::{fit_joint_oracle, ClassifierState, Mode, Weights};
use air::config::RunConfig;
use air::features::{read_features, write_features, LabeledFeature, SyntheticSpec};
use air::linalg::relative_frobenius_distance;
use air::metrics::{per_class_mse, phase_accuracy, sample_std, streaming_auc};
use air::run::{cmd_run, run_seed};
use air::AirError;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn check(criterion: &str, pass: bool, detail: String) {
    println!(
        "acceptance [{}] {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

/// A 10-class imbalanced feature stream split into 5 class-disjoint phases.
fn imbalanced_stream(dim: usize, seed: u64) -> (SyntheticSpec, Vec<Vec<LabeledFeature>>) {
    let spec = SyntheticSpec {
        num_classes: 10,
        raw_dim: dim,
        class_mean_radius: 8.0,
        noise_sigma: 2.0,
        seed,
    };
    // 2000 samples total, 70:1 imbalance.
    let counts = [700, 450, 300, 200, 130, 90, 60, 40, 20, 10];
    let items = spec.generate(&counts).unwrap();
    let mut phases: Vec<Vec<LabeledFeature>> = vec![Vec::new(); 5];
    for item in items {
        phases[(item.label / 2) as usize].push(item);
    }
    (spec, phases)
}

fn observe_phases(state: &mut ClassifierState, phases: &[Vec<LabeledFeature>]) -> Weights {
    let mut weights = None;
    for phase in phases {
        for item in phase {
            state.observe(item).unwrap();
        }
        weights = Some(state.fit_air().unwrap());
    }
    weights.unwrap()
}

/// Test oracle: gradient of the re-weighted loss at `w` by an explicit
/// per-sample loop, relative to ‖w‖_F.
fn weighted_gradient_relative_norm(items: &[LabeledFeature], gamma: f64, w: &Weights) -> f64 {
    let dim = w.dim();
    let cols = w.num_classes();
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for item in items {
        *counts.entry(item.label).or_insert(0.0) += 1.0;
    }
    let mut grad = vec![0.0; dim * cols];
    for item in items {
        let weight = 1.0 / counts[&item.label];
        let scores = w.scores(&item.x).unwrap();
        for i in 0..dim {
            for j in 0..cols {
                let target = if j == item.label as usize { 1.0 } else { 0.0 };
                grad[i * cols + j] += -2.0 * weight * item.x[i] * (target - scores[j]);
            }
        }
    }
    let mut norm = 0.0f64;
    for i in 0..dim {
        for j in 0..cols {
            let g = grad[i * cols + j] + 2.0 * gamma * w.matrix().get(i, j);
            norm += g * g;
        }
    }
    norm.sqrt() / w.matrix().frobenius_norm()
}

#[test]
fn criterion_01_oracle_equivalence() {
    let started = Instant::now();
    let (_, phases) = imbalanced_stream(64, 101);
    let total: usize = phases.iter().map(|p| p.len()).sum();
    assert_eq!(total, 2000);

    let mut state = ClassifierState::new(Mode::Gcil, 64, 10.0).unwrap();
    let iterative = observe_phases(&mut state, &phases);

    let buffered: Vec<LabeledFeature> = phases.iter().flatten().cloned().collect();
    let oracle = fit_joint_oracle(&buffered, 10.0, true).unwrap();

    let err = relative_frobenius_distance(iterative.matrix(), oracle.matrix());
    let elapsed = started.elapsed().as_secs_f64();
    check(
        "1 oracle equivalence",
        err <= 1e-9 && elapsed < 5.0,
        format!("relative error {err:.3e} (≤ 1e-9), runtime {elapsed:.2}s (< 5s)"),
    );
}

#[test]
fn criterion_02_weight_invariance_under_phase_permutation() {
    let (spec, phases) = imbalanced_stream(64, 102);
    let probe = spec
        .generate_with_noise_seed(&[50; 10], 555)
        .unwrap()
        .into_iter()
        .take(500)
        .collect::<Vec<_>>();
    assert_eq!(probe.len(), 500);

    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let mut fits = Vec::new();
    for _ in 0..3 {
        let mut order: Vec<usize> = (0..phases.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let permuted: Vec<Vec<LabeledFeature>> = order.iter().map(|&i| phases[i].clone()).collect();
        let mut state = ClassifierState::new(Mode::Gcil, 64, 10.0).unwrap();
        fits.push(observe_phases(&mut state, &permuted));
    }

    let mut max_err = 0.0f64;
    let mut predictions_identical = true;
    for a in 0..3 {
        for b in (a + 1)..3 {
            max_err = max_err.max(relative_frobenius_distance(
                fits[a].matrix(),
                fits[b].matrix(),
            ));
            for item in &probe {
                if fits[a].predict(&item.x).unwrap() != fits[b].predict(&item.x).unwrap() {
                    predictions_identical = false;
                }
            }
        }
    }
    check(
        "2 weight invariance",
        max_err <= 1e-10 && predictions_identical,
        format!(
            "pairwise relative error {max_err:.3e} (≤ 1e-10), probe predictions identical: {predictions_identical}"
        ),
    );
}

#[test]
fn criterion_03_duplication_neutrality() {
    let (_, phases) = imbalanced_stream(32, 103);
    let base: Vec<LabeledFeature> = phases.iter().flatten().cloned().collect();
    let mut duplicated = base.clone();
    let class_samples: Vec<LabeledFeature> = base
        .iter()
        .filter(|item| item.label == 4)
        .cloned()
        .collect();
    for _ in 0..15 {
        duplicated.extend(class_samples.iter().cloned());
    }

    let gamma = 10.0;
    let fit_pair = |items: &[LabeledFeature]| {
        let mut state = ClassifierState::new(Mode::Gcil, 32, gamma).unwrap();
        for item in items {
            state.observe(item).unwrap();
        }
        (state.fit_air().unwrap(), state.fit_baseline().unwrap())
    };
    let (air_base, baseline_base) = fit_pair(&base);
    let (air_dup, baseline_dup) = fit_pair(&duplicated);
    let air_shift = relative_frobenius_distance(air_dup.matrix(), air_base.matrix());
    let baseline_shift = relative_frobenius_distance(baseline_dup.matrix(), baseline_base.matrix());
    check(
        "3 duplication neutrality",
        air_shift <= 1e-10 && baseline_shift >= 1e-3,
        format!(
            "re-weighted shift {air_shift:.3e} (≤ 1e-10), baseline shift {baseline_shift:.3e} (≥ 1e-3)"
        ),
    );
}

#[test]
fn criterion_04_gradient_zero_at_optimum() {
    let mut rng = ChaCha12Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    for instance in 0..20 {
        let dim = rng.random_range(4..16);
        let num_classes = rng.random_range(2..6);
        let gamma = 10f64.powf(rng.random_range(-2.0..3.0));
        let mut items = Vec::new();
        for label in 0..num_classes {
            let count = rng.random_range(1..40);
            for _ in 0..count {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
                items.push(LabeledFeature::new(x, label).unwrap());
            }
        }
        let w = fit_joint_oracle(&items, gamma, true).unwrap();
        let rel = weighted_gradient_relative_norm(&items, gamma, &w);
        worst = worst.max(rel);
        assert!(rel <= 1e-8, "instance {instance}: gradient norm {rel:.3e}");
    }
    check(
        "4 gradient zero",
        worst <= 1e-8,
        format!("worst relative gradient norm over 20 instances {worst:.3e} (≤ 1e-8)"),
    );
}

#[test]
fn criterion_05_balanced_reduction() {
    let n = 50usize;
    let spec = SyntheticSpec {
        num_classes: 6,
        raw_dim: 16,
        class_mean_radius: 6.0,
        noise_sigma: 2.0,
        seed: 105,
    };
    let items = spec.generate(&[n; 6]).unwrap();
    let gamma = 2.5;

    let mut weighted = ClassifierState::new(Mode::Gcil, 16, gamma).unwrap();
    let mut unweighted = ClassifierState::new(Mode::Gcil, 16, gamma * n as f64).unwrap();
    for item in &items {
        weighted.observe(item).unwrap();
        unweighted.observe(item).unwrap();
    }
    let w_air = weighted.fit_air().unwrap();
    let w_base = unweighted.fit_baseline().unwrap();

    let mut max_abs = 0.0f64;
    for i in 0..16 {
        for j in 0..6 {
            max_abs = max_abs.max((w_air.matrix().get(i, j) - w_base.matrix().get(i, j)).abs());
        }
    }
    check(
        "5 balanced reduction",
        max_abs <= 1e-9,
        format!("max entrywise difference {max_abs:.3e} (≤ 1e-9)"),
    );
}

#[test]
fn criterion_06_cil_gcil_agreement_and_guard() {
    let (_, phases) = imbalanced_stream(32, 106);

    let mut cil = ClassifierState::new(Mode::Cil, 32, 5.0).unwrap();
    let w_cil = observe_phases(&mut cil, &phases);
    let mut gcil = ClassifierState::new(Mode::Gcil, 32, 5.0).unwrap();
    let w_gcil = observe_phases(&mut gcil, &phases);
    let err = relative_frobenius_distance(w_cil.matrix(), w_gcil.matrix());

    // A class reappearing after its phase was folded must trip the guard.
    let mut guard = ClassifierState::new(Mode::Cil, 32, 5.0).unwrap();
    for item in &phases[0] {
        guard.observe(item).unwrap();
    }
    guard.fold_phase().unwrap();
    let reappear = phases[0][0].clone();
    let guarded = matches!(
        guard.observe(&reappear),
        Err(AirError::ClassReappeared { .. })
    );

    check(
        "6 CIL/GCIL agreement",
        err <= 1e-10 && guarded,
        format!("relative error {err:.3e} (≤ 1e-10), reappearing class rejected: {guarded}"),
    );
}

#[test]
fn criterion_07_qualitative_rebalancing() {
    let started = Instant::now();
    let config_toml = |method: &str| {
        format!(
            r#"
method = "{method}"
gamma = 1000.0
seeds = [7]

[features.synthetic]
num_classes = 100
raw_dim = 48
samples_per_class = 630
class_mean_radius = 10.0
noise_sigma = 2.0

[buffer]
out_dim = 256

[scenario.longtail]
num_phases = 10
classes_per_phase = 10
imbalance_ratio = 0.01
order = "descending"
n_max = 500
"#
        )
    };
    let air_config = RunConfig::from_toml(&config_toml("air-gcil")).unwrap();
    let base_config = RunConfig::from_toml(&config_toml("baseline")).unwrap();

    let (air_report, _) = run_seed(&air_config, 7).unwrap();
    let (base_report, _) = run_seed(&base_config, 7).unwrap();

    let mse_std_air = sample_std(&air_report.per_class_mse);
    let mse_std_base = sample_std(&base_report.per_class_mse);
    let norm_std_air = sample_std(&air_report.weight_norms);
    let norm_std_base = sample_std(&base_report.weight_norms);
    let macro_gap = air_report.a_last_macro - base_report.a_last_macro;
    let elapsed = started.elapsed().as_secs_f64();

    check(
        "7 qualitative rebalancing",
        mse_std_air < mse_std_base
            && norm_std_air < norm_std_base
            && macro_gap >= 0.05
            && elapsed < 60.0,
        format!(
            "per-class MSE std {mse_std_air:.4} < {mse_std_base:.4}; weight-norm std \
             {norm_std_air:.4} < {norm_std_base:.4}; macro last-phase gap {macro_gap:.4} \
             (≥ 0.05); runtime {elapsed:.1}s (< 60s)"
        ),
    );
}

#[test]
fn criterion_08_metric_oracles() {
    // Streaming AUC against fine Riemann integration.
    let mut rng = ChaCha12Rng::seed_from_u64(108);
    let mut x = 0u64;
    let points: Vec<(u64, f64)> = (0..40)
        .map(|_| {
            x += rng.random_range(1..500);
            (x, rng.random_range(0.0..1.0))
        })
        .collect();
    let auc = streaming_auc(&points).unwrap();
    let mut riemann = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = (pair[0].0 as f64, pair[0].1);
        let (x1, y1) = (pair[1].0 as f64, pair[1].1);
        let steps = 20_000;
        let h = (x1 - x0) / steps as f64;
        for s in 0..steps {
            let v0 = y0 + (y1 - y0) * s as f64 / steps as f64;
            let v1 = y0 + (y1 - y0) * (s + 1) as f64 / steps as f64;
            riemann += h * 0.5 * (v0 + v1);
        }
    }
    riemann /= (points[points.len() - 1].0 - points[0].0) as f64;
    let auc_err = (auc - riemann).abs();

    // Loss decomposition: global loss equals the per-class sum.
    let dim = 6;
    let c = 5;
    let w = Weights::from_matrix(air::linalg::RectMatrix::from_rows(
        dim,
        c,
        (0..dim * c).map(|_| rng.random_range(-1.0..1.0)).collect(),
    ));
    let data: Vec<LabeledFeature> = (0..400)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            LabeledFeature::new(x, rng.random_range(0..c as u32)).unwrap()
        })
        .collect();
    let mut global = 0.0;
    for item in &data {
        let scores = w.scores(&item.x).unwrap();
        for (j, s) in scores.iter().enumerate() {
            let target = if j == item.label as usize { 1.0 } else { 0.0 };
            global += (s - target) * (s - target);
        }
    }
    let by_class: f64 = per_class_mse(&w, &data, false).unwrap().iter().sum();
    let decomposition_err = (global - by_class).abs() / global.max(1.0);

    // Hand cases: perfect classifier, and the 99:1 macro/micro split.
    let identity = Weights::from_matrix(air::linalg::RectMatrix::from_rows(
        2,
        2,
        vec![1.0, 0.0, 0.0, 1.0],
    ));
    let perfect_test = vec![
        LabeledFeature::new(vec![1.0, 0.0], 0).unwrap(),
        LabeledFeature::new(vec![0.0, 1.0], 1).unwrap(),
    ];
    let perfect_macro = phase_accuracy(&identity, &perfect_test, true).unwrap();

    let skew = Weights::from_matrix(air::linalg::RectMatrix::from_rows(1, 2, vec![1.0, 0.0]));
    let mut skew_test = vec![LabeledFeature::new(vec![1.0], 0).unwrap(); 99];
    skew_test.push(LabeledFeature::new(vec![1.0], 1).unwrap());
    let skew_macro = phase_accuracy(&skew, &skew_test, true).unwrap();
    let skew_micro = phase_accuracy(&skew, &skew_test, false).unwrap();

    check(
        "8 metric oracles",
        auc_err <= 1e-10
            && decomposition_err <= 1e-10
            && perfect_macro == 1.0
            && skew_macro == 0.5
            && skew_micro == 0.99,
        format!(
            "AUC vs Riemann {auc_err:.3e} (≤ 1e-10); decomposition {decomposition_err:.3e} \
             (≤ 1e-10); hand cases macro {skew_macro}, micro {skew_micro}, perfect {perfect_macro}"
        ),
    );
}

#[test]
fn criterion_09_format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(109);
    let dim = 8;
    let items: Vec<LabeledFeature> = (0..10_000)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1e6..1e6)).collect();
            LabeledFeature::new(x, rng.random_range(0..1000)).unwrap()
        })
        .collect();

    let path_a = dir.path().join("a.airf");
    let path_b = dir.path().join("b.airf");
    write_features(&path_a, dim, &items).unwrap();
    let back = read_features(&path_a).unwrap();
    let mut bit_exact = back.dim == dim && back.items.len() == items.len();
    for (x, y) in back.items.iter().zip(&items) {
        bit_exact &= x.label == y.label;
        for (a, b) in x.x.iter().zip(&y.x) {
            bit_exact &= a.to_bits() == b.to_bits();
        }
    }
    // Hash of the re-serialized payload must match the original file.
    write_features(&path_b, dim, &back.items).unwrap();
    let bytes_a = std::fs::read(&path_a).unwrap();
    let bytes_b = std::fs::read(&path_b).unwrap();
    use std::hash::{DefaultHasher, Hash, Hasher};
    let digest = |bytes: &[u8]| {
        let mut h = DefaultHasher::new();
        bytes.hash(&mut h);
        h.finish()
    };
    let payload_hash_equal = digest(&bytes_a) == digest(&bytes_b) && bytes_a == bytes_b;

    // Weight files round trip bit-exactly too.
    let w = Weights::from_matrix(air::linalg::RectMatrix::from_rows(
        16,
        625,
        (0..10_000).map(|_| rng.random_range(-1e3..1e3)).collect(),
    ));
    let weight_path = dir.path().join("w.airw");
    air::classifier::write_weights(&weight_path, &w).unwrap();
    let w_back = air::classifier::read_weights(&weight_path).unwrap();
    let weights_exact = w_back
        .matrix()
        .as_slice()
        .iter()
        .zip(w.matrix().as_slice())
        .all(|(a, b)| a.to_bits() == b.to_bits());

    // Corruption produces distinct diagnostics per failure kind.
    let mut corrupt = bytes_a.clone();
    corrupt[0] = b'Q';
    let bad_magic_path = dir.path().join("bad_magic.airf");
    std::fs::write(&bad_magic_path, &corrupt).unwrap();
    let magic_err = matches!(
        read_features(&bad_magic_path),
        Err(AirError::BadMagic { .. })
    );

    let trunc_path = dir.path().join("trunc.airf");
    std::fs::write(&trunc_path, &bytes_a[..bytes_a.len() / 2 + 3]).unwrap();
    let trunc_err = matches!(read_features(&trunc_path), Err(AirError::Truncated(_)));

    check(
        "9 format round trips",
        bit_exact && payload_hash_equal && weights_exact && magic_err && trunc_err,
        format!(
            "10,000-record AIRF bit-exact: {bit_exact}, payload hashes equal: \
             {payload_hash_equal}, AIRW bit-exact: {weights_exact}, bad magic/truncation \
             diagnostics: {magic_err}/{trunc_err}"
        ),
    );
}

#[test]
fn criterion_10_end_to_end_determinism() {
    let config = RunConfig::from_toml(
        r#"
method = "air-gcil"
gamma = 100.0
seeds = [11]

[features.synthetic]
num_classes = 12
raw_dim = 16
samples_per_class = 80
class_mean_radius = 8.0
noise_sigma = 2.0

[buffer]
out_dim = 48

[scenario.si_blurry]
num_tasks = 4
disjoint_ratio = 0.25
blurry_ratio = 0.5

[eval]
interval_samples = 100
test_split_fraction = 0.2
"#,
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("run_a");
    let out_b = dir.path().join("run_b");
    let artifacts_a = cmd_run(&config, &out_a, true).unwrap();
    let artifacts_b = cmd_run(&config, &out_b, true).unwrap();

    let mut identical = true;
    let mut compared = 0usize;
    for (a, b) in artifacts_a
        .report_paths
        .iter()
        .chain(artifacts_a.weight_paths.iter())
        .chain(std::iter::once(&artifacts_a.aggregate_path))
        .zip(
            artifacts_b
                .report_paths
                .iter()
                .chain(artifacts_b.weight_paths.iter())
                .chain(std::iter::once(&artifacts_b.aggregate_path)),
        )
    {
        identical &= std::fs::read(a).unwrap() == std::fs::read(b).unwrap();
        compared += 1;
    }
    // The streaming run must actually have produced an AUC.
    let has_auc = artifacts_a.reports[0].1.a_auc.is_some();

    check(
        "10 end-to-end determinism",
        identical && compared == 3 && has_auc,
        format!("{compared} output files byte-identical: {identical}, a_auc present: {has_auc}"),
    );
}
