//! The analytic classifiers: per-class statistic accumulation, the
//! class-re-weighted closed-form fit, the memory-folded CIL trainer, the
//! per-class GCIL trainer, the unweighted baseline and the joint oracle.
//!
//! Every trainer reduces the stream to Gram statistics and solves one
//! regularized least-squares system, so the fitted weights depend only on the
//! multiset of (feature, label) pairs, never on arrival order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{AirError, Result};
use crate::features::{read_exact_or_truncated, read_u32, LabeledFeature};
use crate::linalg::{regularized_spd_solve, RectMatrix, SymMatrix};

const AIRW_MAGIC: [u8; 4] = *b"AIRW";
const AIRW_VERSION: u32 = 1;

/// Training mode: CIL folds phase statistics into running accumulators and
/// requires phase-disjoint classes; GCIL keeps per-class statistics so
/// classes may recur with changing counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Cil,
    Gcil,
}

/// Per-class sufficient statistics: the Gram matrix of the class's features,
/// their sum, and the sample count. The feature sum is the only nonzero
/// column of the class's cross-correlation matrix, since every target row is
/// the same one-hot vector.
#[derive(Debug, Clone)]
pub struct ClassStats {
    gram: SymMatrix,
    feature_sum: Vec<f64>,
    count: u64,
}

impl ClassStats {
    fn new(dim: usize) -> Self {
        ClassStats {
            gram: SymMatrix::zeros(dim),
            feature_sum: vec![0.0; dim],
            count: 0,
        }
    }

    fn observe(&mut self, x: &[f64]) -> Result<()> {
        self.gram.rank_one_update(x, 1.0)?;
        for (s, v) in self.feature_sum.iter_mut().zip(x) {
            *s += v;
        }
        self.count += 1;
        Ok(())
    }

    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    pub fn feature_sum(&self) -> &[f64] {
        &self.feature_sum
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Streaming classifier state. Single-writer: observe/fold/fit must be
/// serialized externally. Fitted [`Weights`] are immutable snapshots.
#[derive(Debug, Clone)]
pub struct ClassifierState {
    mode: Mode,
    dim: usize,
    gamma: f64,
    /// GCIL: lifetime statistics per class. CIL: the phase in progress.
    class_stats: BTreeMap<u32, ClassStats>,
    /// CIL accumulators over folded phases, already re-weighted.
    folded_gram: Option<SymMatrix>,
    folded_columns: BTreeMap<u32, Vec<f64>>,
    folded_labels: BTreeSet<u32>,
    num_classes: usize,
}

impl ClassifierState {
    pub fn new(mode: Mode, dim: usize, gamma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(AirError::ZeroDimension);
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(AirError::InvalidParameter(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        Ok(ClassifierState {
            mode,
            dim,
            gamma,
            class_stats: BTreeMap::new(),
            folded_gram: match mode {
                Mode::Cil => Some(SymMatrix::zeros(dim)),
                Mode::Gcil => None,
            },
            folded_columns: BTreeMap::new(),
            folded_labels: BTreeSet::new(),
            num_classes: 0,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// One plus the largest label observed so far.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Labels with at least one observed sample, folded or pending.
    pub fn observed_labels(&self) -> BTreeSet<u32> {
        let mut labels = self.folded_labels.clone();
        labels.extend(self.class_stats.keys().copied());
        labels
    }

    pub fn class_stats(&self, label: u32) -> Option<&ClassStats> {
        self.class_stats.get(&label)
    }

    /// Adds one sample to its class's statistics. Online: no other sample is
    /// revisited, and the cost is one rank-one update.
    pub fn observe(&mut self, item: &LabeledFeature) -> Result<()> {
        if item.dim() != self.dim {
            return Err(AirError::DimensionMismatch {
                context: "observe",
                expected: self.dim,
                found: item.dim(),
            });
        }
        if item.x.iter().any(|v| !v.is_finite()) {
            return Err(AirError::NonFinite("observe"));
        }
        if self.mode == Mode::Cil && self.folded_labels.contains(&item.label) {
            return Err(AirError::ClassReappeared { label: item.label });
        }
        self.class_stats
            .entry(item.label)
            .or_insert_with(|| ClassStats::new(self.dim))
            .observe(&item.x)?;
        self.num_classes = self.num_classes.max(item.label as usize + 1);
        Ok(())
    }

    /// Folds the phase in progress into the running accumulators, weighting
    /// each class by the reciprocal of its sample count, then drops the
    /// per-phase statistics. Memory afterwards is one Gram matrix plus one
    /// column per folded class. Folding an empty phase is a no-op.
    pub fn fold_phase(&mut self) -> Result<()> {
        if self.mode != Mode::Cil {
            return Err(AirError::WrongMode {
                op: "fold_phase",
                required: "CIL",
            });
        }
        let folded_gram = self
            .folded_gram
            .as_mut()
            .expect("CIL state has accumulators");
        for (label, stats) in std::mem::take(&mut self.class_stats) {
            let weight = 1.0 / stats.count as f64;
            folded_gram.add_scaled(&stats.gram, weight);
            let column = stats.feature_sum.iter().map(|v| v * weight).collect();
            self.folded_columns.insert(label, column);
            self.folded_labels.insert(label);
        }
        Ok(())
    }

    /// Closed-form fit of the re-weighted classifier: each class's statistics
    /// enter the normal equations scaled by the reciprocal of its sample
    /// count, so every class contributes equally to the loss regardless of
    /// size. In CIL mode the phase in progress is folded first.
    pub fn fit_air(&mut self) -> Result<Weights> {
        match self.mode {
            Mode::Cil => {
                self.fold_phase()?;
                if self.folded_labels.is_empty() {
                    return Err(AirError::EmptyInput("fit on a state with no observations"));
                }
                let gram = self
                    .folded_gram
                    .as_ref()
                    .expect("CIL state has accumulators");
                let mut targets = RectMatrix::zeros(self.dim, self.num_classes);
                for (&label, column) in &self.folded_columns {
                    targets.add_scaled_column(label as usize, column, 1.0);
                }
                self.solve(gram, &targets)
            }
            Mode::Gcil => self.fit_weighted(|stats| 1.0 / stats.count as f64),
        }
    }

    /// Closed-form fit of the unweighted classifier, the conventional
    /// analytic baseline: every sample contributes equally, so head classes
    /// dominate the loss on imbalanced data. Requires GCIL mode because CIL
    /// folds bake the re-weighting into the accumulators.
    pub fn fit_baseline(&self) -> Result<Weights> {
        if self.mode != Mode::Gcil {
            return Err(AirError::WrongMode {
                op: "fit_baseline",
                required: "GCIL",
            });
        }
        self.fit_weighted(|_| 1.0)
    }

    fn fit_weighted(&self, class_weight: impl Fn(&ClassStats) -> f64) -> Result<Weights> {
        if self.class_stats.is_empty() {
            return Err(AirError::EmptyInput("fit on a state with no observations"));
        }
        let mut gram = SymMatrix::zeros(self.dim);
        let mut targets = RectMatrix::zeros(self.dim, self.num_classes);
        for (&label, stats) in &self.class_stats {
            let weight = class_weight(stats);
            gram.add_scaled(&stats.gram, weight);
            targets.add_scaled_column(label as usize, &stats.feature_sum, weight);
        }
        self.solve(&gram, &targets)
    }

    fn solve(&self, gram: &SymMatrix, targets: &RectMatrix) -> Result<Weights> {
        let matrix = regularized_spd_solve(gram, targets, self.gamma)?;
        Ok(Weights { matrix })
    }
}

/// Direct batch fit over a buffered dataset: builds the normal equations in
/// one pass and solves once. This is the reference route the iterative
/// trainers are checked against.
pub fn fit_joint_oracle(items: &[LabeledFeature], gamma: f64, weighted: bool) -> Result<Weights> {
    if items.is_empty() {
        return Err(AirError::EmptyInput("joint fit on an empty dataset"));
    }
    let dim = items[0].dim();
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut num_classes = 0usize;
    for item in items {
        if item.dim() != dim {
            return Err(AirError::DimensionMismatch {
                context: "joint fit",
                expected: dim,
                found: item.dim(),
            });
        }
        *counts.entry(item.label).or_insert(0) += 1;
        num_classes = num_classes.max(item.label as usize + 1);
    }

    let mut gram = SymMatrix::zeros(dim);
    let mut targets = RectMatrix::zeros(dim, num_classes);
    for item in items {
        let weight = if weighted {
            1.0 / counts[&item.label] as f64
        } else {
            1.0
        };
        gram.rank_one_update(&item.x, weight)?;
        targets.add_scaled_column(item.label as usize, &item.x, weight);
    }
    let matrix = regularized_spd_solve(&gram, &targets, gamma)?;
    Ok(Weights { matrix })
}

/// A fitted classifier: the `f × C` weight matrix. Immutable, cheap to clone
/// and safe to share across threads for concurrent prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    matrix: RectMatrix,
}

impl Weights {
    pub fn from_matrix(matrix: RectMatrix) -> Self {
        Weights { matrix }
    }

    pub fn matrix(&self) -> &RectMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.matrix.cols()
    }

    /// The score row `x · W`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(AirError::DimensionMismatch {
                context: "predict",
                expected: self.dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(AirError::NonFinite("predict"));
        }
        let cols = self.num_classes();
        let mut scores = vec![0.0; cols];
        for (i, &v) in x.iter().enumerate() {
            let row = &self.matrix.as_slice()[i * cols..(i + 1) * cols];
            for (s, &w) in scores.iter_mut().zip(row) {
                *s += v * w;
            }
        }
        Ok(scores)
    }

    /// Argmax over class scores; ties break to the smallest label.
    pub fn predict(&self, x: &[f64]) -> Result<u32> {
        let scores = self.scores(x)?;
        let mut best = 0usize;
        for (j, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = j;
            }
        }
        Ok(best as u32)
    }
}

/// Writes weights in the AIRW binary format: magic `AIRW`, u32 version,
/// u32 rows, u32 cols, then row-major little-endian f64 entries.
pub fn write_weights(path: &Path, weights: &Weights) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&AIRW_MAGIC)?;
    w.write_all(&AIRW_VERSION.to_le_bytes())?;
    w.write_all(&(weights.dim() as u32).to_le_bytes())?;
    w.write_all(&(weights.num_classes() as u32).to_le_bytes())?;
    for v in weights.matrix.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an AIRW file written by [`write_weights`].
pub fn read_weights(path: &Path) -> Result<Weights> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic, "header magic")?;
    if magic != AIRW_MAGIC {
        return Err(AirError::BadMagic {
            expected: AIRW_MAGIC,
            found: magic,
        });
    }
    let version = read_u32(&mut r, "header version")?;
    if version != AIRW_VERSION {
        return Err(AirError::BadVersion {
            found: version,
            supported: AIRW_VERSION,
        });
    }
    let rows = read_u32(&mut r, "header rows")? as usize;
    let cols = read_u32(&mut r, "header cols")? as usize;
    if rows == 0 || cols == 0 {
        return Err(AirError::ZeroDimension);
    }
    let mut buf = vec![0u8; 8];
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        read_exact_or_truncated(&mut r, &mut buf, "weight entry")?;
        data.push(f64::from_le_bytes(buf[..8].try_into().unwrap()));
    }
    Ok(Weights {
        matrix: RectMatrix::from_rows(rows, cols, data),
    })
}
