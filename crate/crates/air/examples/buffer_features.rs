//! Feature production: generate a synthetic class-conditional pool, expand it
//! through the frozen random buffer layer, and round-trip it through an AIRF
//! feature file.
//!
//! Run with: cargo run --example buffer_features

use air::features::{read_features, write_features, BufferLayer, SyntheticSpec};

fn main() -> air::Result<()> {
    let spec = SyntheticSpec {
        num_classes: 4,
        raw_dim: 16,
        class_mean_radius: 10.0,
        noise_sigma: 1.5,
        seed: 7,
    };
    let pool = spec.generate(&[25, 25, 25, 25])?;
    println!(
        "generated {} samples, {} classes, raw dimension {}",
        pool.len(),
        spec.num_classes,
        spec.raw_dim
    );

    let layer = BufferLayer::new(spec.raw_dim, 64, 42);
    let expanded = layer.project_all(&pool)?;
    let active = expanded[0].x.iter().filter(|&&v| v > 0.0).count();
    println!(
        "buffer layer {} -> {}: first sample has {active}/64 active units after ReLU",
        layer.in_dim(),
        layer.out_dim()
    );

    let dir = std::env::temp_dir().join("air_buffer_features");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("expanded.airf");
    write_features(&path, layer.out_dim(), &expanded)?;
    let back = read_features(&path)?;
    let bit_exact = back.items.iter().zip(&expanded).all(|(a, b)| {
        a.label == b.label
            && a.x
                .iter()
                .zip(&b.x)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    });
    println!(
        "wrote {} records to {} and read them back bit-exact: {bit_exact}",
        back.items.len(),
        path.display()
    );
    Ok(())
}
