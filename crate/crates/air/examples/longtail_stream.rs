//! Long-tailed class-incremental streams: the exponential count profile and
//! the three phase orders built from one balanced pool.
//!
//! Run with: cargo run --example longtail_stream

use air::features::SyntheticSpec;
use air::scenarios::{build_ltcil, longtail_counts, LtConfig, PhaseOrder};

fn main() -> air::Result<()> {
    let num_classes = 10;
    let counts = longtail_counts(num_classes, 100, 0.02)?;
    println!("per-class counts at imbalance ratio 1/50: {counts:?}");

    let spec = SyntheticSpec {
        num_classes,
        raw_dim: 8,
        class_mean_radius: 8.0,
        noise_sigma: 1.0,
        seed: 11,
    };
    let pool = spec.generate(&vec![100; num_classes])?;

    for order in [
        PhaseOrder::Ascending,
        PhaseOrder::Descending,
        PhaseOrder::Shuffled,
    ] {
        let stream = build_ltcil(
            &pool,
            &LtConfig {
                num_phases: 5,
                classes_per_phase: 2,
                imbalance_ratio: 0.02,
                order,
                n_max: None,
                seed: 3,
            },
        )?;
        println!("\n{order:?}:");
        for (k, phase) in stream.phases.iter().enumerate() {
            let mut labels: Vec<u32> = phase.iter().map(|i| i.label).collect();
            labels.sort_unstable();
            labels.dedup();
            println!(
                "  phase {k}: classes {labels:?}, {:>3} samples",
                phase.len()
            );
        }
    }
    Ok(())
}
