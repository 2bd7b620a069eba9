//! Si-blurry generalized streams: disjoint classes stay in one task, blurry
//! classes leak a configured fraction of their samples into other tasks.
//!
//! Run with: cargo run --example si_blurry_stream

use std::collections::BTreeMap;

use air::features::SyntheticSpec;
use air::scenarios::{build_siblurry, ScenarioMeta, SiBlurryConfig};

fn main() -> air::Result<()> {
    let spec = SyntheticSpec {
        num_classes: 10,
        raw_dim: 8,
        class_mean_radius: 8.0,
        noise_sigma: 1.0,
        seed: 5,
    };
    let pool = spec.generate(&[80; 10])?;

    let cfg = SiBlurryConfig {
        num_tasks: 4,
        disjoint_ratio: 0.2,
        blurry_ratio: 0.5,
        seed: 13,
    };
    let stream = build_siblurry(&pool, &cfg)?;

    let (disjoint, homes) = match &stream.meta {
        ScenarioMeta::SiBlurry {
            disjoint_classes,
            blurry_homes,
            ..
        } => (disjoint_classes.clone(), blurry_homes.clone()),
        _ => unreachable!(),
    };
    println!("disjoint classes: {disjoint:?}");
    println!("blurry class home tasks: {homes:?}");

    for (t, task) in stream.phases.iter().enumerate() {
        let mut per_class: BTreeMap<u32, usize> = BTreeMap::new();
        for item in task {
            *per_class.entry(item.label).or_insert(0) += 1;
        }
        println!(
            "task {t}: {:>3} samples, class mix {per_class:?}",
            task.len()
        );
    }

    let home_map: BTreeMap<u32, usize> = homes.into_iter().collect();
    let mut away = 0usize;
    let mut total = 0usize;
    for (t, task) in stream.phases.iter().enumerate() {
        for item in task {
            if let Some(&home) = home_map.get(&item.label) {
                total += 1;
                if t != home {
                    away += 1;
                }
            }
        }
    }
    println!(
        "blurry samples relocated away from home: {away}/{total} ({:.1}%, configured {:.1}%)",
        100.0 * away as f64 / total as f64,
        100.0 * cfg.blurry_ratio
    );
    Ok(())
}
