//! The closed-form trainers are exactly order-free: phase-by-phase training
//! matches one joint batch solve, phase permutations change nothing, and
//! duplicating a class's samples cancels out of the re-weighted fit.
//!
//! Run with: cargo run --example joint_equivalence

use air::classifier::{fit_joint_oracle, ClassifierState, Mode};
use air::features::{LabeledFeature, SyntheticSpec};
use air::linalg::relative_frobenius_distance;

fn main() -> air::Result<()> {
    let spec = SyntheticSpec {
        num_classes: 6,
        raw_dim: 16,
        class_mean_radius: 8.0,
        noise_sigma: 2.0,
        seed: 3,
    };
    // 60:1 imbalance across six classes.
    let items = spec.generate(&[300, 150, 60, 25, 10, 5])?;
    let gamma = 10.0;

    // Iterative phase-by-phase training vs one batch solve.
    let phases: Vec<Vec<LabeledFeature>> = (0..3)
        .map(|p| {
            items
                .iter()
                .filter(|i| i.label as usize / 2 == p)
                .cloned()
                .collect()
        })
        .collect();
    let mut state = ClassifierState::new(Mode::Gcil, 16, gamma)?;
    let mut w_stream = None;
    for phase in &phases {
        for item in phase {
            state.observe(item)?;
        }
        w_stream = Some(state.fit_air()?);
    }
    let w_stream = w_stream.unwrap();
    let w_joint = fit_joint_oracle(&items, gamma, true)?;
    println!(
        "stream fit vs joint batch fit: relative error {:.3e}",
        relative_frobenius_distance(w_stream.matrix(), w_joint.matrix())
    );

    // Reversed phase order.
    let mut reversed = ClassifierState::new(Mode::Gcil, 16, gamma)?;
    for phase in phases.iter().rev() {
        for item in phase {
            reversed.observe(item)?;
        }
    }
    let w_reversed = reversed.fit_air()?;
    println!(
        "reversed phase order:          relative error {:.3e}",
        relative_frobenius_distance(w_reversed.matrix(), w_stream.matrix())
    );

    // Folded CIL accumulators agree with per-class GCIL statistics.
    let mut folded = ClassifierState::new(Mode::Cil, 16, gamma)?;
    let mut w_folded = None;
    for phase in &phases {
        for item in phase {
            folded.observe(item)?;
        }
        w_folded = Some(folded.fit_air()?);
    }
    println!(
        "CIL fold path vs GCIL path:    relative error {:.3e}",
        relative_frobenius_distance(w_folded.unwrap().matrix(), w_stream.matrix())
    );

    // Duplication neutrality: 8 copies of the rarest class.
    let rare: Vec<LabeledFeature> = items.iter().filter(|i| i.label == 5).cloned().collect();
    let mut duplicated = items.clone();
    for _ in 0..7 {
        duplicated.extend(rare.iter().cloned());
    }
    let w_dup = fit_joint_oracle(&duplicated, gamma, true)?;
    let w_dup_base = fit_joint_oracle(&duplicated, gamma, false)?;
    let w_base = fit_joint_oracle(&items, gamma, false)?;
    println!(
        "8x duplication of one class:   re-weighted shift {:.3e}, baseline shift {:.3e}",
        relative_frobenius_distance(w_dup.matrix(), w_joint.matrix()),
        relative_frobenius_distance(w_dup_base.matrix(), w_base.matrix())
    );
    Ok(())
}
