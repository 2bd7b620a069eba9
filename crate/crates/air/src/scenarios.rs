//! Phase-ordered stream builders for the two experimental protocols:
//! long-tailed class-incremental splits and Si-blurry generalized splits.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{AirError, Result};
use crate::features::{write_features, LabeledFeature};

/// Order in which the long-tailed phases arrive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseOrder {
    /// Data-scarce phases first.
    Ascending,
    /// Data-rich phases first.
    Descending,
    /// Seeded random class-to-phase assignment.
    Shuffled,
}

/// Long-tailed CIL scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LtConfig {
    pub num_phases: usize,
    pub classes_per_phase: usize,
    /// Ratio between the least and the most frequent class, in `(0, 1]`.
    pub imbalance_ratio: f64,
    pub order: PhaseOrder,
    /// Head-class sample count. `None` infers it from the richest class in
    /// the dataset.
    pub n_max: Option<usize>,
    pub seed: u64,
}

/// Si-blurry scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SiBlurryConfig {
    pub num_tasks: usize,
    /// Fraction of classes marked disjoint (never repeat across tasks).
    pub disjoint_ratio: f64,
    /// Fraction of blurry samples extracted and reassigned to other tasks.
    pub blurry_ratio: f64,
    pub seed: u64,
}

/// Scenario parameters a stream was built with, kept for auditing.
#[derive(Debug, Clone)]
pub enum ScenarioMeta {
    LongTail {
        config: LtConfig,
        /// Per-class sample counts actually used, indexed by class label.
        class_counts: Vec<usize>,
    },
    SiBlurry {
        config: SiBlurryConfig,
        disjoint_classes: Vec<u32>,
        /// Home task of each blurry class, sorted by class label.
        blurry_homes: Vec<(u32, usize)>,
    },
}

/// An ordered sequence of phases, each an ordered list of labeled features.
#[derive(Debug, Clone)]
pub struct PhaseStream {
    pub phases: Vec<Vec<LabeledFeature>>,
    pub meta: ScenarioMeta,
}

impl PhaseStream {
    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn total_samples(&self) -> usize {
        self.phases.iter().map(|p| p.len()).sum()
    }

    pub fn all_items(&self) -> impl Iterator<Item = &LabeledFeature> {
        self.phases.iter().flatten()
    }

    /// Dumps one AIRF file per phase, `<base>.phase<K>`.
    pub fn dump(&self, base: &Path) -> Result<Vec<PathBuf>> {
        let dim = self
            .all_items()
            .next()
            .ok_or(AirError::EmptyInput("cannot dump an empty stream"))?
            .dim();
        let mut paths = Vec::with_capacity(self.phases.len());
        for (k, phase) in self.phases.iter().enumerate() {
            let path = PathBuf::from(format!("{}.phase{k}", base.display()));
            write_features(&path, dim, phase)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Per-class sample counts of an exponential long-tail profile:
/// `counts[i] = max(1, round(n_max · ρ^(i / (num_classes − 1))))`.
pub fn longtail_counts(num_classes: usize, n_max: usize, rho: f64) -> Result<Vec<usize>> {
    if num_classes < 2 {
        return Err(AirError::InvalidParameter(format!(
            "long-tail profile needs at least 2 classes, got {num_classes}"
        )));
    }
    if n_max == 0 {
        return Err(AirError::InvalidParameter("n_max must be positive".into()));
    }
    if !(rho.is_finite() && rho > 0.0 && rho <= 1.0) {
        return Err(AirError::InvalidParameter(format!(
            "imbalance ratio must lie in (0, 1], got {rho}"
        )));
    }
    let span = (num_classes - 1) as f64;
    Ok((0..num_classes)
        .map(|i| {
            let count = (n_max as f64 * rho.powf(i as f64 / span)).round() as usize;
            count.max(1)
        })
        .collect())
}

fn group_by_label(dataset: &[LabeledFeature]) -> BTreeMap<u32, Vec<usize>> {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (idx, item) in dataset.iter().enumerate() {
        groups.entry(item.label).or_default().push(idx);
    }
    groups
}

/// Splits a dataset into a long-tailed class-incremental stream. Classes are
/// partitioned into `num_phases` groups of `classes_per_phase`; class `i`
/// keeps `longtail_counts(..)[i]` samples, so lower labels are data-rich.
pub fn build_ltcil(dataset: &[LabeledFeature], cfg: &LtConfig) -> Result<PhaseStream> {
    if cfg.num_phases == 0 || cfg.classes_per_phase == 0 {
        return Err(AirError::InvalidParameter(
            "num_phases and classes_per_phase must be positive".into(),
        ));
    }
    let num_classes = cfg.num_phases * cfg.classes_per_phase;
    let groups = group_by_label(dataset);
    if let Some((&label, _)) = groups.iter().next_back() {
        if (label as usize) >= num_classes {
            return Err(AirError::InvalidParameter(format!(
                "dataset contains label {label} but the scenario declares {num_classes} classes"
            )));
        }
    }

    let n_max = match cfg.n_max {
        Some(n) => n,
        None => groups.values().map(|g| g.len()).max().unwrap_or(0),
    };
    let counts = longtail_counts(num_classes, n_max, cfg.imbalance_ratio)?;

    // Per-class selection: the first counts[label] samples in dataset order.
    let mut selected: Vec<Vec<LabeledFeature>> = Vec::with_capacity(num_classes);
    for (label, &needed) in counts.iter().enumerate() {
        let available = groups
            .get(&(label as u32))
            .map(|g| g.as_slice())
            .unwrap_or(&[]);
        if available.len() < needed {
            return Err(AirError::InsufficientSamples {
                class: label as u32,
                needed,
                available: available.len(),
            });
        }
        selected.push(
            available[..needed]
                .iter()
                .map(|&idx| dataset[idx].clone())
                .collect(),
        );
    }

    // Class-to-phase assignment. Lower labels are richer, so descending order
    // is the identity chunking and ascending reverses the phase order.
    let class_order: Vec<usize> = match cfg.order {
        PhaseOrder::Descending => (0..num_classes).collect(),
        PhaseOrder::Ascending => (0..cfg.num_phases)
            .rev()
            .flat_map(|p| p * cfg.classes_per_phase..(p + 1) * cfg.classes_per_phase)
            .collect(),
        PhaseOrder::Shuffled => {
            let mut order: Vec<usize> = (0..num_classes).collect();
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            order.shuffle(&mut rng);
            order
        }
    };

    let mut phases = Vec::with_capacity(cfg.num_phases);
    for chunk in class_order.chunks(cfg.classes_per_phase) {
        let mut phase = Vec::new();
        for &class in chunk {
            phase.extend(selected[class].iter().cloned());
        }
        phases.push(phase);
    }

    Ok(PhaseStream {
        phases,
        meta: ScenarioMeta::LongTail {
            config: cfg.clone(),
            class_counts: counts,
        },
    })
}

/// Splits a dataset into a Si-blurry stream: `⌈r_D·C⌉` classes are disjoint
/// (all samples in one task); the remaining blurry classes get a home task,
/// then an `r_B` fraction of all blurry samples is extracted and reassigned
/// uniformly at random to other tasks.
pub fn build_siblurry(dataset: &[LabeledFeature], cfg: &SiBlurryConfig) -> Result<PhaseStream> {
    if dataset.is_empty() {
        return Err(AirError::EmptyInput("si-blurry dataset"));
    }
    if cfg.num_tasks < 2 {
        return Err(AirError::InvalidParameter(format!(
            "si-blurry needs at least 2 tasks, got {}",
            cfg.num_tasks
        )));
    }
    for (name, v) in [
        ("disjoint_ratio", cfg.disjoint_ratio),
        ("blurry_ratio", cfg.blurry_ratio),
    ] {
        if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
            return Err(AirError::InvalidParameter(format!(
                "{name} must lie in [0, 1], got {v}"
            )));
        }
    }

    let classes: Vec<u32> = dataset
        .iter()
        .map(|i| i.label)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let num_classes = classes.len();
    // Guard the ceil against representation noise in r_D · C.
    let num_disjoint = (((cfg.disjoint_ratio * num_classes as f64) - 1e-9)
        .ceil()
        .max(0.0) as usize)
        .min(num_classes);
    if num_disjoint == num_classes && cfg.blurry_ratio > 0.0 {
        return Err(AirError::InvalidParameter(
            "all classes are disjoint, so there are no blurry samples to redistribute".into(),
        ));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut shuffled = classes.clone();
    shuffled.shuffle(&mut rng);
    let disjoint: BTreeSet<u32> = shuffled[..num_disjoint].iter().copied().collect();
    let blurry: Vec<u32> = shuffled[num_disjoint..].to_vec();

    // Disjoint classes spread round-robin; blurry classes get a random home.
    let mut task_of_class: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, &c) in shuffled[..num_disjoint].iter().enumerate() {
        task_of_class.insert(c, i % cfg.num_tasks);
    }
    for &c in &blurry {
        task_of_class.insert(c, rng.random_range(0..cfg.num_tasks));
    }

    let mut phases: Vec<Vec<LabeledFeature>> = vec![Vec::new(); cfg.num_tasks];
    let mut blurry_pool: Vec<(LabeledFeature, usize)> = Vec::new();
    for item in dataset {
        let home = task_of_class[&item.label];
        if disjoint.contains(&item.label) {
            phases[home].push(item.clone());
        } else {
            blurry_pool.push((item.clone(), home));
        }
    }

    // Extract an r_B fraction of all blurry samples and send each to a
    // uniformly random task other than its home.
    let num_extract = (cfg.blurry_ratio * blurry_pool.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..blurry_pool.len()).collect();
    order.shuffle(&mut rng);
    let extracted: BTreeSet<usize> = order[..num_extract].iter().copied().collect();
    for (idx, (item, home)) in blurry_pool.into_iter().enumerate() {
        if extracted.contains(&idx) {
            let mut dest = rng.random_range(0..cfg.num_tasks - 1);
            if dest >= home {
                dest += 1;
            }
            phases[dest].push(item);
        } else {
            phases[home].push(item);
        }
    }

    for phase in phases.iter_mut() {
        phase.shuffle(&mut rng);
    }

    let blurry_homes: Vec<(u32, usize)> = {
        let mut homes: Vec<(u32, usize)> = blurry.iter().map(|&c| (c, task_of_class[&c])).collect();
        homes.sort_unstable();
        homes
    };
    Ok(PhaseStream {
        phases,
        meta: ScenarioMeta::SiBlurry {
            config: cfg.clone(),
            disjoint_classes: disjoint.into_iter().collect(),
            blurry_homes,
        },
    })
}
