//! The two experiment protocols and the synthetic-data command.
//!
//! Seed fan-out, for an experiment seed `b`:
//!
//! * partition `i` (or ensemble repeat `i`): `SeedSpec(b, 1000 + i)`;
//! * ensemble member `m` on partition `p`: subset stream `p.child(m)`, SJE
//!   shuffle stream `p.child(m).child(0)`;
//! * single model `j` (config order) on partition `p`: SJE shuffle stream
//!   `p.child(2^32 + j)`.
//!
//! Jobs only read their own streams and results are gathered in job order,
//! so every output file is identical for any worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use zsc_core::ensemble::train_member;
use zsc_core::evaluation::MIN_PAIRS;
use zsc_core::{
    l2_normalize, mean_std, per_class_accuracy, predict, restrict_to_classes, sample_partition, top1_accuracy,
    wilcoxon_signed_rank, ClassPartition, ClassSet, Dataset, Ensemble, EvalRecord, SeedSpec, TestResult,
};

use crate::config::{DataSource, EnsembleSettings, ExperimentConfig, Metric, ModelConfig, SynthConfig};
use crate::error::{BenchError, Result};
use crate::io::{fmt_f64, load_dataset, save_dataset, save_model};

/// Offset of partition streams under the experiment seed.
pub const PARTITION_STREAM_OFFSET: u64 = 1000;
/// Offset of single-model streams under a partition stream.
pub const SINGLE_MODEL_STREAM: u64 = 1 << 32;

/// Seed of partition (or repeat) `i`.
pub fn partition_seed(base_seed: u64, i: usize) -> SeedSpec {
    SeedSpec::new(base_seed, PARTITION_STREAM_OFFSET + i as u64)
}

/// Runs `f` on a pool of `workers` threads (0 = one per core).
fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Loads or generates the dataset and scales all rows to unit norm.
pub fn prepare_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let raw = match cfg.data_source()? {
        DataSource::Directory(p) => load_dataset(p)?,
        DataSource::Synthetic(spec) => {
            zsc_core::generate(&spec).map_err(|e| BenchError::core("synthetic dataset", e))?
        }
    };
    l2_normalize(&raw).map_err(|e| BenchError::core("normalization", e))
}

fn check_test_count(d: &Dataset, test_count: usize) -> Result<()> {
    if test_count < 2 || test_count + 2 > d.num_classes() {
        return Err(BenchError::Config(format!(
            "test_class_count {test_count} must lie in [2, {}] for {} classes",
            d.num_classes().saturating_sub(2),
            d.num_classes()
        )));
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

fn metric_value(metric: Metric, preds: &[usize], truth: &[usize]) -> zsc_core::Result<f64> {
    match metric {
        Metric::Accuracy => top1_accuracy(preds, truth),
        Metric::PerClassAccuracy => per_class_accuracy(preds, truth),
    }
}

/// Mean and standard deviation of one metric of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
}

/// Signed-rank comparison of two models on one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTest {
    pub model_a: String,
    pub model_b: String,
    pub metric: Metric,
    pub result: TestResult,
}

/// Everything `variability` produced.
#[derive(Debug, Clone)]
pub struct VariabilityReport {
    pub partitions: Vec<ClassPartition>,
    pub records: Vec<EvalRecord>,
    pub summary: Vec<SummaryRow>,
    /// `None` when fewer than two models were configured.
    pub tests: Option<Vec<PairTest>>,
    pub table: String,
}

const METRICS: [Metric; 2] = [Metric::Accuracy, Metric::PerClassAccuracy];

fn record_metric(r: &EvalRecord, m: Metric) -> f64 {
    match m {
        Metric::Accuracy => r.accuracy,
        Metric::PerClassAccuracy => r.per_class_accuracy,
    }
}

fn evaluate_partition(
    d: &Dataset,
    index: usize,
    partition: &ClassPartition,
    models: &[ModelConfig],
    seed: SeedSpec,
    save_dir: Option<&Path>,
) -> Result<Vec<EvalRecord>> {
    let ctx = |label: &str| format!("partition {index}, model {label}");
    let train = restrict_to_classes(d, partition.train_classes()).map_err(|e| BenchError::core(ctx("-"), e))?;
    let test = restrict_to_classes(d, partition.test_classes()).map_err(|e| BenchError::core(ctx("-"), e))?;
    let test_features = test.features();
    let truth: Vec<usize> = test.labels().collect();
    let mut out = Vec::with_capacity(models.len());
    for (j, cfg) in models.iter().enumerate() {
        let label = cfg.label();
        let trainer = cfg.trainer(seed.child(SINGLE_MODEL_STREAM + j as u64));
        let model = trainer.train(&train).map_err(|e| BenchError::core(ctx(label), e))?;
        let preds = predict(&model, &test_features, d.attributes(), partition.test_classes())
            .map_err(|e| BenchError::core(ctx(label), e))?;
        let accuracy = top1_accuracy(&preds, &truth).map_err(|e| BenchError::core(ctx(label), e))?;
        let per_class = per_class_accuracy(&preds, &truth).map_err(|e| BenchError::core(ctx(label), e))?;
        if let Some(dir) = save_dir {
            save_model(&model, cfg.params_json(), &dir.join(format!("partition_{index:03}")).join(label))?;
        }
        out.push(EvalRecord { partition_index: index, model_name: label.to_string(), accuracy, per_class_accuracy: per_class });
    }
    Ok(out)
}

/// Every configured model on `k` random partitions, then summary statistics
/// and pairwise signed-rank tests.
pub fn run_variability(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<VariabilityReport> {
    let (k, test_count) = cfg.variability()?;
    let d = prepare_dataset(cfg)?;
    check_test_count(&d, test_count)?;
    create_dir(out)?;
    let save_dir = cfg.save_models.then(|| out.join("models"));

    let partitions: Vec<ClassPartition> = (0..k)
        .map(|i| sample_partition(d.num_classes(), test_count, partition_seed(cfg.base_seed, i)))
        .collect::<zsc_core::Result<_>>()
        .map_err(|e| BenchError::core("partition sampling", e))?;
    info!("variability: {k} partitions, {} models, {} classes", cfg.models.len(), d.num_classes());

    let per_partition: Vec<Result<Vec<EvalRecord>>> = with_pool(workers, || {
        partitions
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                evaluate_partition(&d, i, p, &cfg.models, partition_seed(cfg.base_seed, i), save_dir.as_deref())
            })
            .collect()
    })?;
    let mut records = Vec::with_capacity(k * cfg.models.len());
    for r in per_partition {
        records.extend(r?);
    }

    let mut summary = Vec::new();
    for m in &cfg.models {
        for metric in METRICS {
            let values: Vec<f64> =
                records.iter().filter(|r| r.model_name == m.label()).map(|r| record_metric(r, metric)).collect();
            let (mean, std) = mean_std(&values).map_err(|e| BenchError::core(format!("summary of {}", m.label()), e))?;
            summary.push(SummaryRow { model: m.label().to_string(), metric, mean, std });
        }
    }

    let tests = (cfg.models.len() >= 2).then(|| pairwise_tests(cfg, &records, k));

    write_file(&out.join("records.csv"), &records_csv(&records))?;
    write_file(&out.join("summary.csv"), &summary_csv(&summary))?;
    match &tests {
        Some(t) if k >= MIN_PAIRS => write_file(&out.join("tests.csv"), &tests_csv(t))?,
        Some(_) => warn!("{k} partitions are too few for the signed-rank test (need {MIN_PAIRS}); tests.csv not written"),
        None => {}
    }
    let table = variability_table(cfg, k, &summary, tests.as_deref());
    Ok(VariabilityReport { partitions, records, summary, tests, table })
}

fn pairwise_tests(cfg: &ExperimentConfig, records: &[EvalRecord], k: usize) -> Vec<PairTest> {
    let mut tests = Vec::new();
    if k < MIN_PAIRS {
        return tests;
    }
    let series = |label: &str, metric: Metric| -> Vec<f64> {
        records.iter().filter(|r| r.model_name == label).map(|r| record_metric(r, metric)).collect()
    };
    for (i, a) in cfg.models.iter().enumerate() {
        for b in &cfg.models[i + 1..] {
            for metric in METRICS {
                match wilcoxon_signed_rank(&series(a.label(), metric), &series(b.label(), metric)) {
                    Ok(result) => tests.push(PairTest {
                        model_a: a.label().to_string(),
                        model_b: b.label().to_string(),
                        metric,
                        result,
                    }),
                    Err(e) => warn!("skipping test {} vs {} on {}: {e}", a.label(), b.label(), metric.as_str()),
                }
            }
        }
    }
    tests
}

/// `records.csv` contents.
pub fn records_csv(records: &[EvalRecord]) -> String {
    let mut s = String::from("partition_index,model,accuracy,per_class_accuracy\n");
    for r in records {
        writeln!(s, "{},{},{},{}", r.partition_index, r.model_name, fmt_f64(r.accuracy), fmt_f64(r.per_class_accuracy))
            .unwrap();
    }
    s
}

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("model,metric,mean,std\n");
    for r in rows {
        writeln!(s, "{},{},{},{}", r.model, r.metric.as_str(), fmt_f64(r.mean), fmt_f64(r.std)).unwrap();
    }
    s
}

fn tests_csv(tests: &[PairTest]) -> String {
    let mut s = String::from("model_a,model_b,metric,statistic_w,p_two_sided,n_effective,method\n");
    for t in tests {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            t.model_a,
            t.model_b,
            t.metric.as_str(),
            fmt_f64(t.result.statistic_w),
            fmt_f64(t.result.p_two_sided),
            t.result.n_effective,
            t.result.method.as_str()
        )
        .unwrap();
    }
    s
}

fn pct(mean: f64, std: f64) -> String {
    format!("{:.2} ({:.2})", 100.0 * mean, 100.0 * std)
}

fn variability_table(cfg: &ExperimentConfig, k: usize, summary: &[SummaryRow], tests: Option<&[PairTest]>) -> String {
    let mut s = String::new();
    writeln!(s, "Top-1 accuracy over {k} random class partitions: mean (std), %").unwrap();
    write!(s, "{:<22}", "").unwrap();
    for m in &cfg.models {
        write!(s, "{:>18}", m.label()).unwrap();
    }
    s.push('\n');
    for metric in METRICS {
        let name = match metric {
            Metric::Accuracy => "Avg. acc.",
            Metric::PerClassAccuracy => "Avg. per-class acc.",
        };
        write!(s, "{name:<22}").unwrap();
        for m in &cfg.models {
            let row = summary.iter().find(|r| r.model == m.label() && r.metric == metric).expect("summary row");
            write!(s, "{:>18}", pct(row.mean, row.std)).unwrap();
        }
        s.push('\n');
        for t in tests.unwrap_or_default().iter().filter(|t| t.metric == metric) {
            writeln!(
                s,
                "  p-value {} vs {}: {:.7} ({}, n={})",
                t.model_a,
                t.model_b,
                t.result.p_two_sided,
                t.result.method.as_str(),
                t.result.n_effective
            )
            .unwrap();
        }
    }
    s
}

/// One `(n, s, repeat)` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRow {
    pub n: usize,
    pub s: f64,
    pub repeat: usize,
    pub ensemble_metric: f64,
    pub baseline_metric: f64,
}

/// Mean and std of the ensemble metric over repeats for one `(n, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleCell {
    pub n: usize,
    pub s: f64,
    pub mean: f64,
    pub std: f64,
}

/// Everything `ensemble` produced.
#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub rows: Vec<EnsembleRow>,
    pub cells: Vec<EnsembleCell>,
    /// Mean and std of the single-model baseline over repeats.
    pub baseline: (f64, f64),
    pub table: String,
}

struct RepeatSetup<'d> {
    partition: ClassPartition,
    seed: SeedSpec,
    train: zsc_core::DatasetView<'d>,
    test_features: zsc_core::Matrix,
    truth: Vec<usize>,
    baseline: f64,
}

fn setup_repeat<'d>(d: &'d Dataset, settings: &EnsembleSettings<'_>, base_seed: u64, r: usize) -> Result<RepeatSetup<'d>> {
    let ctx = format!("repeat {r}, baseline");
    let seed = partition_seed(base_seed, r);
    let partition =
        sample_partition(d.num_classes(), settings.test_class_count, seed).map_err(|e| BenchError::core(&ctx, e))?;
    let train = restrict_to_classes(d, partition.train_classes()).map_err(|e| BenchError::core(&ctx, e))?;
    let test = restrict_to_classes(d, partition.test_classes()).map_err(|e| BenchError::core(&ctx, e))?;
    let test_features = test.features();
    let truth: Vec<usize> = test.labels().collect();
    let model = settings
        .base_model
        .trainer(seed.child(SINGLE_MODEL_STREAM))
        .train(&train)
        .map_err(|e| BenchError::core(&ctx, e))?;
    let preds = predict(&model, &test_features, d.attributes(), partition.test_classes())
        .map_err(|e| BenchError::core(&ctx, e))?;
    let baseline = metric_value(settings.metric, &preds, &truth).map_err(|e| BenchError::core(&ctx, e))?;
    Ok(RepeatSetup { partition, seed, train, test_features, truth, baseline })
}

fn run_cell(d: &Dataset, settings: &EnsembleSettings<'_>, setup: &RepeatSetup<'_>, n: usize, s: f64, r: usize) -> Result<f64> {
    let ctx = format!("n={n}, s={s}, repeat {r}");
    let trainer = settings.base_model.trainer(SeedSpec::new(0, 0));
    let train_classes: &ClassSet = setup.partition.train_classes();
    let member_base = setup.seed.stream_seed();
    let members = (0..n as u64)
        .into_par_iter()
        .map(|m| train_member(&setup.train, train_classes, s, &trainer, member_base, m))
        .collect::<zsc_core::Result<Vec<_>>>()
        .map_err(|e| BenchError::core(&ctx, e))?;
    let ensemble = Ensemble::new(members, settings.voting).map_err(|e| BenchError::core(&ctx, e))?;
    let preds = ensemble
        .predict(&setup.test_features, d.attributes(), setup.partition.test_classes())
        .map_err(|e| BenchError::core(&ctx, e))?;
    metric_value(settings.metric, &preds, &setup.truth).map_err(|e| BenchError::core(&ctx, e))
}

/// Bagged ensembles for every `(n, s)` pair against the single-model baseline,
/// `repeats` partitions each.
pub fn run_ensemble(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<EnsembleReport> {
    let settings = cfg.ensemble()?;
    let d = prepare_dataset(cfg)?;
    check_test_count(&d, settings.test_class_count)?;
    create_dir(out)?;
    info!(
        "ensemble: n={:?} s={:?} repeats={} voting={:?} metric={}",
        settings.n_list,
        settings.s_list,
        settings.repeats,
        settings.voting,
        settings.metric.as_str()
    );

    let jobs: Vec<(usize, f64, usize)> = settings
        .n_list
        .iter()
        .flat_map(|&n| settings.s_list.iter().flat_map(move |&s| (0..settings.repeats).map(move |r| (n, s, r))))
        .collect();

    let rows: Vec<EnsembleRow> = with_pool(workers, || -> Result<Vec<EnsembleRow>> {
        let setups = (0..settings.repeats)
            .into_par_iter()
            .map(|r| setup_repeat(&d, &settings, cfg.base_seed, r))
            .collect::<Result<Vec<_>>>()?;
        jobs.par_iter()
            .map(|&(n, s, r)| {
                let ensemble_metric = run_cell(&d, &settings, &setups[r], n, s, r)?;
                Ok(EnsembleRow { n, s, repeat: r, ensemble_metric, baseline_metric: setups[r].baseline })
            })
            .collect()
    })??;

    let mut cells = Vec::new();
    for &n in settings.n_list {
        for &s in settings.s_list {
            let values: Vec<f64> = rows.iter().filter(|r| r.n == n && r.s == s).map(|r| r.ensemble_metric).collect();
            let (mean, std) = mean_std(&values).map_err(|e| BenchError::core(format!("summary n={n}, s={s}"), e))?;
            cells.push(EnsembleCell { n, s, mean, std });
        }
    }
    let baselines: Vec<f64> = rows.iter().filter(|r| r.n == settings.n_list[0] && r.s == settings.s_list[0]).map(|r| r.baseline_metric).collect();
    let baseline = mean_std(&baselines).map_err(|e| BenchError::core("baseline summary", e))?;

    write_file(&out.join("ensemble.csv"), &ensemble_csv(&rows))?;
    write_file(&out.join("ensemble_summary.csv"), &ensemble_summary_csv(&cells))?;
    let table = ensemble_table(&settings, &cells, baseline);
    Ok(EnsembleReport { rows, cells, baseline, table })
}

fn ensemble_csv(rows: &[EnsembleRow]) -> String {
    let mut s = String::from("n,s,repeat,ensemble_metric,baseline_metric\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{}", r.n, fmt_f64(r.s), r.repeat, fmt_f64(r.ensemble_metric), fmt_f64(r.baseline_metric))
            .unwrap();
    }
    s
}

fn ensemble_summary_csv(cells: &[EnsembleCell]) -> String {
    let mut s = String::from("n,s,mean,std\n");
    for c in cells {
        writeln!(s, "{},{},{},{}", c.n, fmt_f64(c.s), fmt_f64(c.mean), fmt_f64(c.std)).unwrap();
    }
    s
}

fn ensemble_table(settings: &EnsembleSettings<'_>, cells: &[EnsembleCell], baseline: (f64, f64)) -> String {
    let voting = match settings.voting {
        zsc_core::Voting::Hard => "Hard",
        zsc_core::Voting::Soft => "Soft",
    };
    let mut s = String::new();
    writeln!(
        s,
        "{voting} ensemble, {} over {} repeats: mean (std), %",
        settings.metric.as_str(),
        settings.repeats
    )
    .unwrap();
    write!(s, "{:<8}", "n \\ s").unwrap();
    for v in settings.s_list {
        write!(s, "{:>16}", format!("{v}")).unwrap();
    }
    s.push('\n');
    for &n in settings.n_list {
        write!(s, "{n:<8}").unwrap();
        for &v in settings.s_list {
            let c = cells.iter().find(|c| c.n == n && c.s == v).expect("cell");
            write!(s, "{:>16}", pct(c.mean, c.std)).unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "baseline ({}): {}", settings.base_model.label(), pct(baseline.0, baseline.1)).unwrap();
    s
}

/// Generates a synthetic dataset and writes it as a dataset directory.
pub fn run_synth(cfg: &SynthConfig, seed_override: Option<u64>, out: &Path) -> Result<Dataset> {
    let mut spec = cfg.synth_spec.to_spec(cfg.base_seed);
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    spec.validate().map_err(|e| BenchError::Config(e.to_string()))?;
    let d = zsc_core::generate(&spec).map_err(|e| BenchError::core("synthetic dataset", e))?;
    save_dataset(&d, out)?;
    Ok(d)
}
