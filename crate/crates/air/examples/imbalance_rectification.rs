//! The core effect: on a long-tailed stream, the unweighted analytic baseline
//! drifts toward head classes while the re-weighted fit keeps per-class loss,
//! weight norms and recall balanced.
//!
//! Run with: cargo run --example imbalance_rectification

use air::classifier::{ClassifierState, Mode};
use air::features::{BufferLayer, SyntheticSpec};
use air::metrics::{per_class_mse, phase_accuracy, sample_std, weight_norms};
use air::scenarios::{build_ltcil, LtConfig, PhaseOrder};

fn main() -> air::Result<()> {
    let num_classes = 20;
    let spec = SyntheticSpec {
        num_classes,
        raw_dim: 24,
        class_mean_radius: 10.0,
        noise_sigma: 2.0,
        seed: 29,
    };
    let train_pool = spec.generate(&vec![200; num_classes])?;
    let test = spec.generate_with_noise_seed(&vec![30; num_classes], 888)?;

    let layer = BufferLayer::new(spec.raw_dim, 96, 17);
    let train_pool = layer.project_all(&train_pool)?;
    let test = layer.project_all(&test)?;

    // 200:1 imbalance, data-rich phases first.
    let stream = build_ltcil(
        &train_pool,
        &LtConfig {
            num_phases: 5,
            classes_per_phase: 4,
            imbalance_ratio: 0.005,
            order: PhaseOrder::Descending,
            n_max: None,
            seed: 1,
        },
    )?;
    let counts: Vec<usize> = (0..num_classes as u32)
        .map(|c| stream.all_items().filter(|i| i.label == c).count())
        .collect();
    println!("training counts per class: {counts:?}\n");

    let gamma = 1000.0;
    let mut rectified = ClassifierState::new(Mode::Gcil, 96, gamma)?;
    let mut baseline = ClassifierState::new(Mode::Gcil, 96, gamma)?;
    for phase in &stream.phases {
        for item in phase {
            rectified.observe(item)?;
            baseline.observe(item)?;
        }
    }
    let w_air = rectified.fit_air()?;
    let w_base = baseline.fit_baseline()?;

    let report = |name: &str, w: &air::Weights| -> air::Result<()> {
        let macro_acc = phase_accuracy(w, &test, true)?;
        let micro_acc = phase_accuracy(w, &test, false)?;
        let norms = weight_norms(w);
        let mse = per_class_mse(w, &test, true)?;
        println!("{name}:");
        println!("  macro accuracy {macro_acc:.4}   micro accuracy {micro_acc:.4}");
        println!(
            "  weight-norm head/tail: {:.4} / {:.4}   std {:.4}",
            norms[0],
            norms[num_classes - 1],
            sample_std(&norms)
        );
        println!(
            "  per-class MSE head/tail: {:.4} / {:.4}   std {:.4}",
            mse[0],
            mse[num_classes - 1],
            sample_std(&mse)
        );
        Ok(())
    };
    report("unweighted baseline", &w_base)?;
    report("re-weighted classifier", &w_air)?;
    Ok(())
}
