//! Feature production: the frozen random buffer layer, a synthetic
//! class-conditional generator standing in for a backbone network, and the
//! binary AIRF feature-file format.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{AirError, Result};
use crate::seeding::derive_seed;

const AIRF_MAGIC: [u8; 4] = *b"AIRF";
const AIRF_VERSION: u32 = 1;

/// One element of a feature stream: an extracted feature vector and its
/// integer class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeature {
    pub x: Vec<f64>,
    pub label: u32,
}

impl LabeledFeature {
    /// Validates that the vector is non-empty and finite.
    pub fn new(x: Vec<f64>, label: u32) -> Result<Self> {
        if x.is_empty() {
            return Err(AirError::ZeroDimension);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(AirError::NonFinite("LabeledFeature"));
        }
        Ok(LabeledFeature { x, label })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Frozen random projection followed by ReLU, expanding `in_dim` raw features
/// to `out_dim`. The projection entries are drawn once from the seeded
/// generator and never mutated afterwards.
#[derive(Debug, Clone)]
pub struct BufferLayer {
    in_dim: usize,
    out_dim: usize,
    seed: u64,
    projection: Vec<f64>, // in_dim × out_dim, row-major
}

impl BufferLayer {
    /// Draws the projection as iid standard normal entries.
    pub fn new(in_dim: usize, out_dim: usize, seed: u64) -> Self {
        assert!(
            in_dim > 0 && out_dim > 0,
            "buffer dimensions must be positive"
        );
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let projection = (0..in_dim * out_dim)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        BufferLayer {
            in_dim,
            out_dim,
            seed,
            projection,
        }
    }

    #[cfg(test)]
    pub(crate) fn with_projection(in_dim: usize, out_dim: usize, projection: Vec<f64>) -> Self {
        assert_eq!(projection.len(), in_dim * out_dim);
        BufferLayer {
            in_dim,
            out_dim,
            seed: 0,
            projection,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    /// `max(0, raw · projection)` elementwise.
    pub fn project(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.in_dim {
            return Err(AirError::DimensionMismatch {
                context: "buffer projection",
                expected: self.in_dim,
                found: raw.len(),
            });
        }
        let mut out = vec![0.0; self.out_dim];
        for (i, &r) in raw.iter().enumerate() {
            let row = &self.projection[i * self.out_dim..(i + 1) * self.out_dim];
            for (o, &p) in out.iter_mut().zip(row) {
                *o += r * p;
            }
        }
        for o in out.iter_mut() {
            if *o < 0.0 {
                *o = 0.0;
            }
        }
        Ok(out)
    }

    /// Projects an item, keeping its label.
    pub fn project_item(&self, item: &LabeledFeature) -> Result<LabeledFeature> {
        Ok(LabeledFeature {
            x: self.project(&item.x)?,
            label: item.label,
        })
    }

    pub fn project_all(&self, items: &[LabeledFeature]) -> Result<Vec<LabeledFeature>> {
        items.iter().map(|it| self.project_item(it)).collect()
    }
}

/// Parameters of the synthetic class-conditional generator. Class `y` draws
/// samples `mean_y + σ·ε` with `ε` iid standard normal and `mean_y` placed
/// uniformly on the sphere of radius `class_mean_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub raw_dim: usize,
    pub class_mean_radius: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(AirError::InvalidParameter(format!(
                "num_classes must be at least 2, got {}",
                self.num_classes
            )));
        }
        if self.raw_dim == 0 {
            return Err(AirError::ZeroDimension);
        }
        if !(self.class_mean_radius.is_finite() && self.class_mean_radius > 0.0) {
            return Err(AirError::InvalidParameter(format!(
                "class_mean_radius must be positive, got {}",
                self.class_mean_radius
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return Err(AirError::InvalidParameter(format!(
                "noise_sigma must be positive, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Class means, a pure function of these parameters (counts do not
    /// influence them). Directions are normalized standard-normal draws.
    pub fn class_means(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(self.seed, 0));
        let mut means = Vec::with_capacity(self.num_classes);
        for _ in 0..self.num_classes {
            let mean = loop {
                let dir: Vec<f64> = (0..self.raw_dim)
                    .map(|_| rng.sample(StandardNormal))
                    .collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break dir
                        .into_iter()
                        .map(|v| v / norm * self.class_mean_radius)
                        .collect::<Vec<f64>>();
                }
            };
            means.push(mean);
        }
        Ok(means)
    }

    /// Generates `counts[y]` samples for each class `y`, grouped by class in
    /// label order. Deterministic given the same parameters.
    pub fn generate(&self, counts: &[usize]) -> Result<Vec<LabeledFeature>> {
        self.generate_with_noise_seed(counts, self.seed)
    }

    /// Same class means as [`generate`](Self::generate), independent noise
    /// stream. Useful for held-out draws from the same population.
    pub fn generate_with_noise_seed(
        &self,
        counts: &[usize],
        noise_seed: u64,
    ) -> Result<Vec<LabeledFeature>> {
        self.validate()?;
        if counts.len() != self.num_classes {
            return Err(AirError::DimensionMismatch {
                context: "per-class counts",
                expected: self.num_classes,
                found: counts.len(),
            });
        }
        let means = self.class_means()?;
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(noise_seed, 1));
        let mut items = Vec::with_capacity(counts.iter().sum());
        for (label, (&count, mean)) in counts.iter().zip(&means).enumerate() {
            for _ in 0..count {
                let x: Vec<f64> = mean
                    .iter()
                    .map(|&m| m + self.noise_sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                items.push(LabeledFeature {
                    x,
                    label: label as u32,
                });
            }
        }
        Ok(items)
    }
}

/// A feature list together with its common dimension, as stored on disk.
/// The dimension is kept separately so empty files stay well-formed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub dim: usize,
    pub items: Vec<LabeledFeature>,
}

/// Writes items to the AIRF binary format: magic `AIRF`, u32 version, u64
/// count, u32 dim, then per record `dim` little-endian f64 values and a u32
/// label. Round trips are bit-exact.
pub fn write_features(path: &Path, dim: usize, items: &[LabeledFeature]) -> Result<()> {
    if dim == 0 {
        return Err(AirError::ZeroDimension);
    }
    for item in items {
        if item.dim() != dim {
            return Err(AirError::DimensionMismatch {
                context: "feature file record",
                expected: dim,
                found: item.dim(),
            });
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&AIRF_MAGIC)?;
    w.write_all(&AIRF_VERSION.to_le_bytes())?;
    w.write_all(&(items.len() as u64).to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    for item in items {
        for v in &item.x {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&item.label.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an AIRF file written by [`write_features`].
pub fn read_features(path: &Path) -> Result<FeatureSet> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic, "header magic")?;
    if magic != AIRF_MAGIC {
        return Err(AirError::BadMagic {
            expected: AIRF_MAGIC,
            found: magic,
        });
    }
    let version = read_u32(&mut r, "header version")?;
    if version != AIRF_VERSION {
        return Err(AirError::BadVersion {
            found: version,
            supported: AIRF_VERSION,
        });
    }
    let count = read_u64(&mut r, "header count")?;
    let dim = read_u32(&mut r, "header dimension")? as usize;
    if dim == 0 {
        return Err(AirError::ZeroDimension);
    }

    let mut items = Vec::with_capacity(count as usize);
    let mut buf = vec![0u8; dim * 8];
    for _ in 0..count {
        read_exact_or_truncated(&mut r, &mut buf, "feature record")?;
        let x: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(AirError::NonFinite("feature file record"));
        }
        let label = read_u32(&mut r, "record label")?;
        items.push(LabeledFeature { x, label });
    }
    Ok(FeatureSet { dim, items })
}

pub(crate) fn read_exact_or_truncated<R: Read>(
    r: &mut R,
    buf: &mut [u8],
    what: &'static str,
) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            AirError::Truncated(what)
        } else {
            AirError::Io(e)
        }
    })
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R, what: &'static str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_truncated(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn relu_clips_negatives() {
        // Identity projection, d = f = 2.
        let layer = BufferLayer::with_projection(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(layer.project(&[1.0, -3.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn zero_vector_projects_to_zero() {
        let layer = BufferLayer::new(4, 8, 99);
        assert_eq!(layer.project(&[0.0; 4]).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn projection_matches_direct_computation_oracle() {
        let layer = BufferLayer::new(4, 8, 123);
        let raw = [0.3, -1.2, 2.5, 0.7];
        let got = layer.project(&raw).unwrap();

        let p = layer.projection();
        for j in 0..8 {
            let mut s = 0.0;
            for (i, &r) in raw.iter().enumerate() {
                s += r * p[i * 8 + j];
            }
            let expected = s.max(0.0);
            assert_eq!(got[j].to_bits(), expected.to_bits());
        }
    }

    #[test]
    fn buffer_is_frozen_and_seed_deterministic() {
        let a = BufferLayer::new(6, 12, 5);
        let b = BufferLayer::new(6, 12, 5);
        assert_eq!(a.projection(), b.projection());
        let raw = [1.0, -2.0, 0.5, 3.0, -0.1, 2.2];
        let out1 = a.project(&raw).unwrap();
        let out2 = a.project(&raw).unwrap();
        assert_eq!(out1, out2);
        assert!(out1.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn projection_rejects_wrong_dimension() {
        let layer = BufferLayer::new(4, 8, 1);
        assert!(matches!(
            layer.project(&[1.0, 2.0]),
            Err(AirError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_noise_reproduces_class_means() {
        let spec = SyntheticSpec {
            num_classes: 2,
            raw_dim: 8,
            class_mean_radius: 5.0,
            noise_sigma: 1e-12,
            seed: 3,
        };
        let items = spec.generate(&[1, 1]).unwrap();
        let means = spec.class_means().unwrap();
        assert!(dist(&items[0].x, &means[0]) < 1e-9);
        assert!(dist(&items[1].x, &means[1]) < 1e-9);
        let sample_gap = dist(&items[0].x, &items[1].x);
        let mean_gap = dist(&means[0], &means[1]);
        assert!((sample_gap - mean_gap).abs() < 1e-9);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec {
            num_classes: 3,
            raw_dim: 4,
            class_mean_radius: 2.0,
            noise_sigma: 0.5,
            seed: 42,
        };
        let a = spec.generate(&[5, 0, 2]).unwrap();
        let b = spec.generate(&[5, 0, 2]).unwrap();
        assert_eq!(a.len(), 7);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            for (u, v) in x.x.iter().zip(&y.x) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
        // Grouped by class in label order.
        let labels: Vec<u32> = a.iter().map(|i| i.label).collect();
        assert_eq!(labels, vec![0, 0, 0, 0, 0, 2, 2]);
    }

    #[test]
    fn nearest_mean_oracle_on_fresh_draw() {
        let spec = SyntheticSpec {
            num_classes: 2,
            raw_dim: 16,
            class_mean_radius: 10.0,
            noise_sigma: 1.0,
            seed: 11,
        };
        let train = spec.generate(&[500, 5]).unwrap();

        // Empirical class means from the training draw.
        let mut sums = vec![vec![0.0; 16]; 2];
        let mut counts = vec![0usize; 2];
        for item in &train {
            counts[item.label as usize] += 1;
            for (s, v) in sums[item.label as usize].iter_mut().zip(&item.x) {
                *s += v;
            }
        }
        let emp_means: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();

        let held_out = spec.generate_with_noise_seed(&[200, 200], 777).unwrap();
        let correct = held_out
            .iter()
            .filter(|item| {
                let pred = if dist(&item.x, &emp_means[0]) <= dist(&item.x, &emp_means[1]) {
                    0
                } else {
                    1
                };
                pred == item.label
            })
            .count();
        assert!(correct as f64 / held_out.len() as f64 >= 0.99);
    }

    #[test]
    fn counts_must_match_num_classes() {
        let spec = SyntheticSpec {
            num_classes: 3,
            raw_dim: 4,
            class_mean_radius: 1.0,
            noise_sigma: 1.0,
            seed: 0,
        };
        assert!(matches!(
            spec.generate(&[1, 1]),
            Err(AirError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn airf_round_trip_single_item() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.airf");
        let items = vec![LabeledFeature::new(vec![1.5, -2.0], 3).unwrap()];
        write_features(&path, 2, &items).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back.dim, 2);
        assert_eq!(back.items.len(), 1);
        assert_eq!(back.items[0].label, 3);
        for (a, b) in back.items[0].x.iter().zip(&items[0].x) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn airf_rejects_zero_dimension_on_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.airf");
        assert!(matches!(
            write_features(&path, 0, &[]),
            Err(AirError::ZeroDimension)
        ));
    }

    #[test]
    fn airf_empty_list_with_positive_dim_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.airf");
        write_features(&path, 7, &[]).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back.dim, 7);
        assert!(back.items.is_empty());
    }

    #[test]
    fn airf_distinct_error_diagnostics() {
        let dir = tempfile::tempdir().unwrap();

        let items = vec![LabeledFeature::new(vec![1.0, 2.0], 0).unwrap()];
        let good = dir.path().join("good.airf");
        write_features(&good, 2, &items).unwrap();
        let bytes = std::fs::read(&good).unwrap();

        // Bad magic.
        let mut corrupted = bytes.clone();
        corrupted[0] = b'X';
        let bad_magic = dir.path().join("magic.airf");
        std::fs::write(&bad_magic, &corrupted).unwrap();
        assert!(matches!(
            read_features(&bad_magic),
            Err(AirError::BadMagic { .. })
        ));

        // Version mismatch.
        let mut corrupted = bytes.clone();
        corrupted[4] = 9;
        let bad_version = dir.path().join("version.airf");
        std::fs::write(&bad_version, &corrupted).unwrap();
        assert!(matches!(
            read_features(&bad_version),
            Err(AirError::BadVersion { found: 9, .. })
        ));

        // Truncated payload.
        let truncated = dir.path().join("trunc.airf");
        std::fs::write(&truncated, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(
            read_features(&truncated),
            Err(AirError::Truncated(_))
        ));

        // Zero dimension in the header.
        let mut corrupted = bytes.clone();
        corrupted[16..20].copy_from_slice(&0u32.to_le_bytes());
        let zero_dim = dir.path().join("zerodim.airf");
        std::fs::write(&zero_dim, &corrupted).unwrap();
        assert!(matches!(
            read_features(&zero_dim),
            Err(AirError::ZeroDimension)
        ));
    }
}
