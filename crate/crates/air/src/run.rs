//! End-to-end experiment orchestration: build features, split train/test,
//! build the phase stream, train phase by phase, evaluate continuously and
//! emit JSON reports. Everything is a pure function of (config, seed), so a
//! replayed run reproduces every emitted byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{write_weights, ClassifierState, Mode, Weights};
use crate::config::{Method, RunConfig};
use crate::error::{AirError, Result};
use crate::features::{read_features, write_features, BufferLayer, LabeledFeature, SyntheticSpec};
use crate::metrics::{
    confusion_matrix, mean, per_class_mse, phase_accuracy, standard_error, streaming_auc,
    weight_norms, EvalReport,
};
use crate::scenarios::{build_ltcil, build_siblurry, longtail_counts, LtConfig, SiBlurryConfig};
use crate::seeding::derive_seed;

// Independent random streams derived from one run seed.
const STREAM_FEATURES: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_SCENARIO: u64 = 3;
const STREAM_BUFFER: u64 = 4;

/// Mean and standard error of one metric across seeds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub standard_error: f64,
}

impl MetricSummary {
    fn of(values: &[f64]) -> Self {
        MetricSummary {
            mean: mean(values),
            standard_error: standard_error(values),
        }
    }
}

/// Cross-seed aggregate written next to the per-seed reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AggregateReport {
    pub seeds: Vec<u64>,
    pub a_avg: MetricSummary,
    pub a_last_macro: MetricSummary,
    pub a_last_micro: MetricSummary,
    pub a_auc: Option<MetricSummary>,
}

impl AggregateReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Files and reports produced by one `run` invocation.
#[derive(Debug)]
pub struct RunArtifacts {
    pub reports: Vec<(u64, EvalReport)>,
    pub report_paths: Vec<PathBuf>,
    pub weight_paths: Vec<PathBuf>,
    pub aggregate: AggregateReport,
    pub aggregate_path: PathBuf,
}

/// Runs every configured seed, writing `seed_<s>.json`, `seed_<s>.airw` and
/// `aggregate.json` under `out_dir`.
pub fn cmd_run(config: &RunConfig, out_dir: &Path, quiet: bool) -> Result<RunArtifacts> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;

    let mut reports = Vec::new();
    let mut report_paths = Vec::new();
    let mut weight_paths = Vec::new();
    for &seed in &config.seeds {
        let (report, weights) = run_seed(config, seed)?;
        if !quiet {
            println!(
                "seed {seed}: a_avg {:.4}  a_last_macro {:.4}  a_last_micro {:.4}{}",
                report.a_avg,
                report.a_last_macro,
                report.a_last_micro,
                match report.a_auc {
                    Some(auc) => format!("  a_auc {auc:.4}"),
                    None => String::new(),
                }
            );
        }
        let report_path = out_dir.join(format!("seed_{seed}.json"));
        fs::write(&report_path, report.to_json()?)?;
        let weight_path = out_dir.join(format!("seed_{seed}.airw"));
        write_weights(&weight_path, &weights)?;
        reports.push((seed, report));
        report_paths.push(report_path);
        weight_paths.push(weight_path);
    }

    let collect =
        |f: fn(&EvalReport) -> f64| -> Vec<f64> { reports.iter().map(|(_, r)| f(r)).collect() };
    let auc_values: Option<Vec<f64>> = reports.iter().map(|(_, r)| r.a_auc).collect();
    let aggregate = AggregateReport {
        seeds: config.seeds.clone(),
        a_avg: MetricSummary::of(&collect(|r| r.a_avg)),
        a_last_macro: MetricSummary::of(&collect(|r| r.a_last_macro)),
        a_last_micro: MetricSummary::of(&collect(|r| r.a_last_micro)),
        a_auc: auc_values.map(|vs| MetricSummary::of(&vs)),
    };
    let aggregate_path = out_dir.join("aggregate.json");
    fs::write(&aggregate_path, aggregate.to_json()?)?;
    if !quiet {
        println!(
            "aggregate over {} seed(s): a_last_macro {:.4} ± {:.4}",
            config.seeds.len(),
            aggregate.a_last_macro.mean,
            aggregate.a_last_macro.standard_error
        );
    }

    Ok(RunArtifacts {
        reports,
        report_paths,
        weight_paths,
        aggregate,
        aggregate_path,
    })
}

/// Trains and evaluates one seed; returns its report and final weights.
pub fn run_seed(config: &RunConfig, seed: u64) -> Result<(EvalReport, Weights)> {
    let pool = build_pool(config, seed)?;
    if pool.is_empty() {
        return Err(AirError::EmptyInput("feature pool"));
    }

    let (train_pool, test_pool) = stratified_split(
        &pool,
        config.eval.test_split_fraction,
        derive_seed(seed, STREAM_SPLIT),
    );

    let (train_pool, test_pool) = match &config.buffer {
        Some(buffer) => {
            let raw_dim = pool[0].dim();
            let buffer_seed = buffer
                .seed
                .unwrap_or_else(|| derive_seed(seed, STREAM_BUFFER));
            let layer = BufferLayer::new(raw_dim, buffer.out_dim, buffer_seed);
            (
                layer.project_all(&train_pool)?,
                layer.project_all(&test_pool)?,
            )
        }
        None => (train_pool, test_pool),
    };

    let scenario_seed = derive_seed(seed, STREAM_SCENARIO);
    let stream = match (&config.scenario.longtail, &config.scenario.si_blurry) {
        (Some(lt), None) => build_ltcil(
            &train_pool,
            &LtConfig {
                num_phases: lt.num_phases,
                classes_per_phase: lt.classes_per_phase,
                imbalance_ratio: lt.imbalance_ratio,
                order: lt.order,
                n_max: lt.n_max,
                seed: scenario_seed,
            },
        )?,
        (None, Some(sb)) => build_siblurry(
            &train_pool,
            &SiBlurryConfig {
                num_tasks: sb.num_tasks,
                disjoint_ratio: sb.disjoint_ratio,
                blurry_ratio: sb.blurry_ratio,
                seed: scenario_seed,
            },
        )?,
        _ => unreachable!("config validation enforces exactly one scenario"),
    };

    train_and_evaluate(config, &stream.phases, &test_pool)
}

fn build_pool(config: &RunConfig, seed: u64) -> Result<Vec<LabeledFeature>> {
    match (&config.features.synthetic, &config.features.file) {
        (Some(synth), None) => {
            let spec = SyntheticSpec {
                num_classes: synth.num_classes,
                raw_dim: synth.raw_dim,
                class_mean_radius: synth.class_mean_radius,
                noise_sigma: synth.noise_sigma,
                seed: derive_seed(seed, STREAM_FEATURES),
            };
            spec.generate(&vec![synth.samples_per_class; synth.num_classes])
        }
        (None, Some(file)) => Ok(read_features(&file.path)?.items),
        _ => unreachable!("config validation enforces exactly one feature source"),
    }
}

/// Per-class split: each class contributes `ceil(fraction · n)` test samples,
/// chosen by a seeded shuffle, so test sets stay balanced even when training
/// is later subsampled to a long tail.
fn stratified_split(
    pool: &[LabeledFeature],
    test_fraction: f64,
    seed: u64,
) -> (Vec<LabeledFeature>, Vec<LabeledFeature>) {
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (idx, item) in pool.iter().enumerate() {
        by_class.entry(item.label).or_default().push(idx);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for indices in by_class.values() {
        let mut indices = indices.clone();
        indices.shuffle(&mut rng);
        let test_count =
            ((test_fraction * indices.len() as f64).ceil() as usize).min(indices.len());
        for (i, &idx) in indices.iter().enumerate() {
            if i < test_count {
                test.push(pool[idx].clone());
            } else {
                train.push(pool[idx].clone());
            }
        }
    }
    (train, test)
}

fn fit(state: &mut ClassifierState, method: Method) -> Result<Weights> {
    match method {
        Method::AirCil | Method::AirGcil => state.fit_air(),
        Method::Baseline => state.fit_baseline(),
    }
}

/// Test items whose class the state has observed so far. Evaluation is
/// restricted to seen classes so early phases are not charged for classes
/// that do not exist yet.
fn seen_subset(state: &ClassifierState, test: &[LabeledFeature]) -> Vec<LabeledFeature> {
    let observed = state.observed_labels();
    test.iter()
        .filter(|item| observed.contains(&item.label))
        .cloned()
        .collect()
}

fn train_and_evaluate(
    config: &RunConfig,
    phases: &[Vec<LabeledFeature>],
    test: &[LabeledFeature],
) -> Result<(EvalReport, Weights)> {
    let dim = phases
        .iter()
        .flatten()
        .next()
        .ok_or(AirError::EmptyInput("training stream"))?
        .dim();
    let mode = match config.method {
        Method::AirCil => Mode::Cil,
        Method::AirGcil | Method::Baseline => Mode::Gcil,
    };
    let mut state = ClassifierState::new(mode, dim, config.gamma)?;
    let streaming_eval = config.scenario.si_blurry.is_some();
    let interval = config.eval.interval_samples as u64;

    let mut samples_seen = 0u64;
    let mut auc_points: Vec<(u64, f64)> = Vec::new();
    let mut per_phase_acc = Vec::new();
    let mut last = None;

    for (phase_idx, phase) in phases.iter().enumerate() {
        let in_phase = |e: AirError| AirError::InPhase {
            phase: phase_idx,
            source: Box::new(e),
        };
        for item in phase {
            state.observe(item).map_err(in_phase)?;
            samples_seen += 1;
            if streaming_eval && samples_seen.is_multiple_of(interval) {
                let weights = fit(&mut state, config.method).map_err(in_phase)?;
                let seen_test = seen_subset(&state, test);
                if !seen_test.is_empty() {
                    auc_points.push((samples_seen, phase_accuracy(&weights, &seen_test, false)?));
                }
            }
        }
        let weights = fit(&mut state, config.method).map_err(in_phase)?;
        let seen_test = seen_subset(&state, test);
        if seen_test.is_empty() {
            return Err(in_phase(AirError::EmptyInput(
                "no test samples for any observed class",
            )));
        }
        per_phase_acc.push(phase_accuracy(&weights, &seen_test, true)?);
        last = Some((weights, seen_test));
    }
    let (weights, seen_test) = last.expect("streams have at least one phase");

    if streaming_eval
        && !seen_test.is_empty()
        && auc_points.last().map(|&(x, _)| x) != Some(samples_seen)
    {
        auc_points.push((samples_seen, phase_accuracy(&weights, &seen_test, false)?));
    }
    let a_auc = if auc_points.len() >= 2 {
        Some(streaming_auc(&auc_points)?)
    } else {
        None
    };

    let report = EvalReport {
        a_avg: mean(&per_phase_acc),
        a_last_macro: *per_phase_acc.last().expect("at least one phase"),
        a_last_micro: phase_accuracy(&weights, &seen_test, false)?,
        a_auc,
        confusion: confusion_matrix(&weights, &seen_test)?,
        weight_norms: weight_norms(&weights),
        per_class_mse: per_class_mse(&weights, &seen_test, true)?,
        per_phase_acc,
    };
    Ok((report, weights))
}

/// Writes the configured synthetic pool to an AIRF file. When the config has
/// a long-tail scenario the per-class counts follow its profile, so the dump
/// matches what a run would train on before splitting.
pub fn cmd_gen_features(
    config: &RunConfig,
    out_path: &Path,
    seed_override: Option<u64>,
) -> Result<(PathBuf, usize)> {
    config.validate()?;
    let synth = config.features.synthetic.as_ref().ok_or_else(|| {
        AirError::Config("gen-features requires a synthetic feature source".into())
    })?;
    let seed = seed_override.unwrap_or(config.seeds[0]);
    let spec = SyntheticSpec {
        num_classes: synth.num_classes,
        raw_dim: synth.raw_dim,
        class_mean_radius: synth.class_mean_radius,
        noise_sigma: synth.noise_sigma,
        seed: derive_seed(seed, STREAM_FEATURES),
    };
    let counts = match &config.scenario.longtail {
        Some(lt) => longtail_counts(
            synth.num_classes,
            lt.n_max.unwrap_or(synth.samples_per_class),
            lt.imbalance_ratio,
        )?,
        None => vec![synth.samples_per_class; synth.num_classes],
    };
    let items = spec.generate(&counts)?;
    write_features(out_path, synth.raw_dim, &items)?;
    Ok((out_path.to_path_buf(), items.len()))
}

/// Renders a tabulated summary of a JSON evaluation report.
pub fn cmd_inspect(report_path: &Path) -> Result<String> {
    let text = fs::read_to_string(report_path)?;
    let report = EvalReport::from_json(&text)?;

    let mut out = String::new();
    out.push_str(&format!("report: {}\n", report_path.display()));
    out.push_str(&format!("{:<16} {:.4}\n", "a_avg", report.a_avg));
    out.push_str(&format!(
        "{:<16} {:.4}\n",
        "a_last_macro", report.a_last_macro
    ));
    out.push_str(&format!(
        "{:<16} {:.4}\n",
        "a_last_micro", report.a_last_micro
    ));
    match report.a_auc {
        Some(auc) => out.push_str(&format!("{:<16} {:.4}\n", "a_auc", auc)),
        None => out.push_str(&format!("{:<16} n/a\n", "a_auc")),
    }
    out.push_str("per-phase accuracy:");
    for acc in &report.per_phase_acc {
        out.push_str(&format!(" {acc:.4}"));
    }
    out.push('\n');

    let mut offdiag: Vec<(u64, usize, usize)> = Vec::new();
    for (i, row) in report.confusion.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if i != j && count > 0 {
                offdiag.push((count, i, j));
            }
        }
    }
    offdiag.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    if offdiag.is_empty() {
        out.push_str("top confusions: none\n");
    } else {
        out.push_str("top confusions (true -> predicted, count):\n");
        for (count, i, j) in offdiag.into_iter().take(5) {
            out.push_str(&format!("  {i:>4} -> {j:<4} {count}\n"));
        }
    }
    Ok(out)
}
