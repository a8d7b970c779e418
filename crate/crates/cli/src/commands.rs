use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sqlforecast_core::eval::{evaluate, Breakdown, Grouping};
use sqlforecast_core::learn::bundle::{bundle_paths, ModelBundle};
use sqlforecast_core::learn::train::{train, EpochLog, Hyperparameters, ModelKind, TrainConfig};
use sqlforecast_core::sqltext::{parse_syntactic_profile, profiles_to_csv, property_correlation_matrix, property_summaries};
use sqlforecast_core::workload::{
    build_dataset, label_stats, parse_workload_file, DatasetSplit, Fractions, FormatSpec, LabelStats, LabeledQuery, PipelineStats,
    Setting, SkipReport, Task,
};

use crate::args::{EvaluateArgs, IngestArgs, Part, PredictArgs, ProfileArgs, TrainArgs};
use crate::manifest::{write_bytes, write_json, write_manifest};
use crate::predictor::{PredictRequest, PredictResponse, Predictor};

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn ingest_workload(path: &Path, format: FormatSpec, setting: Setting, seed: u64) -> Result<(DatasetSplit, PipelineStats, SkipReport)> {
    let parsed = parse_workload_file(path, format).with_context(|| format!("ingesting {}", path.display()))?;
    let (split, stats) = build_dataset(parsed.entries, setting, Fractions::default(), seed)?;
    Ok((split, stats, parsed.report))
}

#[derive(Serialize)]
struct DatasetStats {
    pipeline: PipelineStats,
    split_sizes: BTreeMap<&'static str, usize>,
    /// Per part, per task; tasks without labels are absent.
    labels: BTreeMap<&'static str, BTreeMap<&'static str, LabelStats>>,
}

fn dataset_stats(split: &DatasetSplit, pipeline: PipelineStats) -> DatasetStats {
    let parts: [(&'static str, &[LabeledQuery]); 3] =
        [("train", &split.train), ("validation", &split.validation), ("test", &split.test)];
    let mut labels = BTreeMap::new();
    let mut split_sizes = BTreeMap::new();
    for (name, rows) in parts {
        split_sizes.insert(name, rows.len());
        let per_task: BTreeMap<_, _> = Task::ALL
            .iter()
            .filter_map(|&t| label_stats(rows, t).ok().map(|s| (t.name(), s)))
            .collect();
        labels.insert(name, per_task);
    }
    DatasetStats {
        pipeline,
        split_sizes,
        labels,
    }
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let (split, stats, report) = ingest_workload(&args.input.workload, args.input.format, args.input.setting, args.seed)?;
    let outputs = vec![
        write_json(&args.out.join("dataset.json"), &split)?,
        write_json(&args.out.join("label_stats.json"), &dataset_stats(&split, stats))?,
        write_json(&args.out.join("skip_report.json"), &report)?,
    ];
    write_manifest(&args.out, "ingest", args, &[&args.input.workload], &outputs)?;
    eprintln!(
        "{} rows, {} unique statements ({} train / {} validation / {} test)",
        report.rows_total,
        split.len(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<DatasetSplit> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing dataset {}", path.display()))
}

pub fn profile(args: &ProfileArgs) -> Result<()> {
    let split = load_dataset(&args.dataset)?;
    let profiles: Vec<_> = split
        .all()
        .map(|q| q.profile.unwrap_or_else(|| parse_syntactic_profile(&q.statement)))
        .collect();
    if profiles.is_empty() {
        bail!("dataset {} is empty", args.dataset.display());
    }
    ensure_dir(&args.out)?;
    let summaries: BTreeMap<String, _> = property_summaries(&profiles).into_iter().collect();
    let outputs = vec![
        write_bytes(&args.out.join("profiles.csv"), profiles_to_csv(&profiles)?.as_bytes())?,
        write_bytes(&args.out.join("correlation.csv"), property_correlation_matrix(&profiles)?.to_csv()?.as_bytes())?,
        write_json(&args.out.join("property_summary.json"), &summaries)?,
    ];
    write_manifest(&args.out, "profile", args, &[&args.dataset], &outputs)
}

const GRID_EMBED: [usize; 1] = [100];
const GRID_KERNELS: [usize; 2] = [100, 250];
const GRID_DROPOUT: [f64; 2] = [0.5, 0.0];
const GRID_HIDDEN: [usize; 2] = [150, 300];
const GRID_CLIP: [f64; 2] = [0.25, 0.0];

fn check_values<T: PartialEq + std::fmt::Debug + Copy>(name: &str, given: &[T], allowed: &[T]) -> Result<()> {
    if let Some(v) = given.iter().find(|v| !allowed.contains(v)) {
        bail!("--{name} {v:?} is outside the published grid {allowed:?}; pass --allow-custom to use it");
    }
    Ok(())
}

/// Grid points in a fixed nesting order. Axes a model kind ignores collapse
/// to one value; unspecified relevant axes span the published grid.
pub fn hyperparameter_grid(args: &TrainArgs) -> Result<Vec<Hyperparameters>> {
    if !args.allow_custom {
        check_values("embed-dim", &args.embed_dim, &GRID_EMBED)?;
        check_values("kernels", &args.kernels, &GRID_KERNELS)?;
        check_values("dropout", &args.dropout, &GRID_DROPOUT)?;
        check_values("hidden", &args.hidden, &GRID_HIDDEN)?;
        check_values("clip", &args.clip, &GRID_CLIP)?;
        check_values("layers", &[args.layers], &[3])?;
    }
    let kind = args.model;
    let cnn = matches!(kind, ModelKind::Ccnn | ModelKind::Wcnn);
    let lstm = matches!(kind, ModelKind::Clstm | ModelKind::Wlstm);
    fn axis<T: Copy>(given: &[T], relevant: bool, published: &[T]) -> Vec<T> {
        match (given.is_empty(), relevant) {
            (false, true) => given.to_vec(),
            (false, false) => vec![given[0]],
            (true, true) => published.to_vec(),
            (true, false) => vec![published[0]],
        }
    }
    let defaults = Hyperparameters::default();
    let embed = axis(&args.embed_dim, cnn || lstm, &[defaults.embed_dim]);
    let kernels = axis(&args.kernels, cnn, &GRID_KERNELS);
    let dropout = axis(&args.dropout, cnn, &GRID_DROPOUT);
    let hidden = axis(&args.hidden, lstm, &GRID_HIDDEN);
    let clip = axis(&args.clip, kind.is_iterative(), &GRID_CLIP);

    let mut grid = Vec::new();
    for &embed_dim in &embed {
        for &k in &kernels {
            for &p in &dropout {
                for &h in &hidden {
                    for &c in &clip {
                        grid.push(Hyperparameters {
                            embed_dim,
                            kernels: k,
                            dropout: p,
                            hidden: h,
                            layers: args.layers,
                            clip_norm: c,
                            vocab_size: args.vocab_size,
                            max_len: args.max_len,
                        });
                    }
                }
            }
        }
    }
    Ok(grid)
}

#[derive(Debug, Serialize)]
pub struct GridEntry {
    pub index: usize,
    pub hyperparameters: Hyperparameters,
    pub parameter_count: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub best_epoch: usize,
    pub epochs: Vec<EpochLog>,
}

#[derive(Debug, Serialize)]
pub struct TrainingTrace {
    pub model: ModelKind,
    pub task: Task,
    pub selected: usize,
    pub bundle_hash: String,
    pub validation_fallback: bool,
    pub grid: Vec<GridEntry>,
}

pub fn train_cmd(args: &TrainArgs) -> Result<()> {
    let (split, input): (DatasetSplit, &Path) = match (&args.dataset, &args.workload) {
        (Some(d), _) => (load_dataset(d)?, d),
        (None, Some(w)) => (ingest_workload(w, args.format, args.setting, args.seed)?.0, w),
        (None, None) => bail!("either --dataset or --workload is required"),
    };
    let grid = hyperparameter_grid(args)?;
    let config = TrainConfig {
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        max_epochs: args.epochs,
        patience: args.patience,
        seed: args.seed,
    };

    let mut best: Option<(usize, ModelBundle)> = None;
    let mut entries = Vec::new();
    for (index, hyper) in grid.into_iter().enumerate() {
        let bundle = train(args.model, args.task, &split, &hyper, &config)
            .with_context(|| format!("training {} for {} (grid point {index})", args.model, args.task))?;
        eprintln!(
            "grid {index}: validation loss {:.6} at epoch {}",
            bundle.log.validation_loss, bundle.log.best_epoch
        );
        entries.push(GridEntry {
            index,
            hyperparameters: hyper,
            parameter_count: bundle.parameter_count(),
            train_loss: bundle.log.train_loss,
            validation_loss: bundle.log.validation_loss,
            best_epoch: bundle.log.best_epoch,
            epochs: bundle.log.epochs.clone(),
        });
        // strict improvement keeps the earlier grid point on ties
        if best.as_ref().is_none_or(|(_, b)| bundle.log.validation_loss < b.log.validation_loss) {
            best = Some((index, bundle));
        }
    }
    let (selected, bundle) = best.expect("grid has at least one point");

    ensure_dir(&args.out)?;
    let base = args.out.join("model");
    let bundle_hash = bundle.save(&base)?;
    let trace = TrainingTrace {
        model: args.model,
        task: args.task,
        selected,
        bundle_hash,
        validation_fallback: bundle.log.validation_fallback,
        grid: entries,
    };
    let (json, bin) = bundle_paths(&base);
    let outputs = vec![json, bin, write_json(&args.out.join("training_log.json"), &trace)?];
    write_manifest(&args.out, "train", args, &[input], &outputs)?;
    eprintln!("selected grid point {selected}, bundle {}", trace.bundle_hash);
    Ok(())
}

fn breakdown_csv(b: &Breakdown) -> String {
    let mut s = format!("group,size,{},low_confidence\n", b.metric);
    for g in &b.groups {
        let group = if g.group.contains(',') { format!("\"{}\"", g.group) } else { g.group.clone() };
        s.push_str(&format!("{group},{},{},{}\n", g.size, g.metric, g.low_confidence));
    }
    s
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let bundle = ModelBundle::load(&args.bundle).with_context(|| format!("loading bundle {}", args.bundle.display()))?;
    let split = load_dataset(&args.dataset)?;
    let rows = match args.part {
        Part::Train => &split.train,
        Part::Validation => &split.validation,
        Part::Test => &split.test,
    };
    let groupings = args.breakdown.iter().map(|g| Grouping::parse(g)).collect::<Result<Vec<_>, _>>()?;
    let report = evaluate(&bundle, rows, &args.percentiles, &groupings)?;

    ensure_dir(&args.out)?;
    let mut outputs = vec![
        write_json(&args.out.join("report.json"), &report)?,
        write_bytes(&args.out.join("report.csv"), report.to_csv()?.as_bytes())?,
    ];
    for b in &report.breakdowns {
        let path = args.out.join(format!("breakdown_{}.csv", b.grouping.name()));
        outputs.push(write_bytes(&path, breakdown_csv(b).as_bytes())?);
    }
    let (bundle_json, bundle_bin) = bundle_paths(&args.bundle);
    write_manifest(&args.out, "evaluate", args, &[&bundle_json, &bundle_bin, &args.dataset], &outputs)
}

pub fn predict_response(bundles: &[PathBuf], statement: String, opt_cost: Option<f64>) -> Result<PredictResponse> {
    Predictor::load(bundles)?.predict(&PredictRequest { statement, opt_cost })
}

pub fn predict_cmd(args: &PredictArgs) -> Result<()> {
    let statement = match &args.statement {
        Some(s) => s.clone(),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).context("reading statement from stdin")?;
            s
        }
    };
    let resp = predict_response(&args.bundle, statement, args.opt_cost)?;
    println!("{}", serde_json::to_string_pretty(&resp)?);
    Ok(())
}
