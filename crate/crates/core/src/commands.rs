//! Command-line workflows. Every command writes its artifacts into files
//! and returns a typed report, so the binary is just argument parsing plus
//! printing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{
    self, generate_classification, generate_xor, load_csv, load_csv_with_labels, split,
    LabeledDataset, NormalizationTransform,
};
use crate::error::{Result, SimapError};
use crate::explain::{explain, Explanation};
use crate::layer::Init;
use crate::persist::SavedModel;
use crate::subdivision::subdivision_census;
use crate::train::{
    self, vc_dimension, BatchMode, Evaluation, MetricsRecord, OptimizerKind, TrainConfig,
    TrainOutcome,
};

#[derive(Debug, Parser)]
#[command(
    name = "simap",
    version,
    about = "Simplicial-map classification layers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train levels 0..=L and write models, metrics and provenance to --out.
    Train(TrainArgs),
    /// Loss and accuracy of a saved model on a dataset.
    Evaluate(EvaluateArgs),
    /// Predicted labels on a square lattice over [0,1]^2.
    Boundary(BoundaryArgs),
    /// Interpretability report for a single point.
    Explain(ExplainArgs),
    /// Subdivision sizes and VC dimension.
    Census(CensusArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Xor,
    Synth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn is_on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BatchArg {
    PerSample,
    FullBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Uniform,
    Zeros,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub data: Option<PathBuf>,
    /// Built-in generator.
    #[arg(long, value_enum)]
    pub gen: Option<Generator>,
    #[arg(long, default_value = data::DEFAULT_LABEL_COLUMN)]
    pub label_column: String,
    /// synth: number of points.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// synth: ambient dimension.
    #[arg(long, default_value_t = 2)]
    pub features: usize,
    /// synth: cluster offset along informative features.
    #[arg(long, default_value_t = 1.0)]
    pub class_sep: f64,
    /// xor: copies of each anchor.
    #[arg(long, default_value_t = 1)]
    pub per_cluster: usize,
    /// xor: jitter standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Generator seed; defaults to --seed.
    #[arg(long)]
    pub data_seed: Option<u64>,
}

impl DataArgs {
    fn load(&self, seed: u64, known_labels: Option<&[i64]>) -> Result<LabeledDataset> {
        let seed = self.data_seed.unwrap_or(seed);
        match (&self.data, self.gen) {
            (Some(path), _) => match known_labels {
                Some(labels) => load_csv_with_labels(path, &self.label_column, Some(labels)),
                None => load_csv(path, &self.label_column),
            },
            (None, Some(Generator::Xor)) => generate_xor(self.per_cluster, self.noise, seed),
            (None, Some(Generator::Synth)) => {
                generate_classification(self.samples, self.features, self.class_sep, seed)
            }
            (None, None) => Err(SimapError::InvalidConfig(
                "one of --data or --gen is required".into(),
            )),
        }
    }

    fn describe(&self, seed: u64) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        match (&self.data, self.gen) {
            (Some(path), _) => {
                out.push(("data", path.display().to_string()));
                out.push(("label_column", self.label_column.clone()));
            }
            (None, Some(g)) => {
                out.push(("gen", format!("{g:?}").to_lowercase()));
                out.push(("data_seed", self.data_seed.unwrap_or(seed).to_string()));
                match g {
                    Generator::Xor => {
                        out.push(("per_cluster", self.per_cluster.to_string()));
                        out.push(("noise", self.noise.to_string()));
                    }
                    Generator::Synth => {
                        out.push(("samples", self.samples.to_string()));
                        out.push(("features", self.features.to_string()));
                        out.push(("class_sep", self.class_sep.to_string()));
                    }
                }
            }
            (None, None) => {}
        }
        out
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of barycentric subdivisions L.
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, value_enum, default_value = "adam")]
    pub optimizer: OptimizerArg,
    #[arg(long, value_enum, default_value = "per-sample")]
    pub batch: BatchArg,
    #[arg(long, value_enum, default_value = "uniform")]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hold out a test set: fraction of points used for training.
    #[arg(long)]
    pub split: Option<f64>,
    /// Stop a level once the epoch train loss drops to this value.
    #[arg(long)]
    pub loss_threshold: Option<f64>,
    /// Clamp normalized test points into [0,1]^n.
    #[arg(long, value_enum, default_value = "on")]
    pub clamp: Switch,
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            epochs: self.epochs,
            optimizer: match self.optimizer {
                OptimizerArg::Sgd => OptimizerKind::Sgd,
                OptimizerArg::Adam => OptimizerKind::adam(),
            },
            batch_mode: match self.batch {
                BatchArg::PerSample => BatchMode::PerSample,
                BatchArg::FullBatch => BatchMode::FullBatch,
            },
            seed: self.seed,
            init: match self.init {
                InitArg::Uniform => Init::default(),
                InitArg::Zeros => Init::Zeros,
            },
            loss_threshold: self.loss_threshold,
        }
    }

    fn config_echo(&self) -> String {
        let mut entries = self.data.describe(self.seed);
        entries.extend([
            ("levels", self.levels.to_string()),
            ("epochs", self.epochs.to_string()),
            ("lr", self.lr.to_string()),
            ("optimizer", format!("{:?}", self.optimizer).to_lowercase()),
            ("batch", format!("{:?}", self.batch)),
            ("init", format!("{:?}", self.init).to_lowercase()),
            ("seed", self.seed.to_string()),
            ("split", self.split.map_or("none".into(), |s| s.to_string())),
            (
                "loss_threshold",
                self.loss_threshold.map_or("none".into(), |s| s.to_string()),
            ),
            ("clamp", format!("{:?}", self.clamp).to_lowercase()),
        ]);
        entries.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k} = {v}");
            s
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    pub clamp: Switch,
    /// Directory for evaluation.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    /// Write lattice coordinates in the original (unnormalized) axes.
    #[arg(long)]
    pub raw_axes: bool,
    /// Directory for boundary.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated coordinates, normalized unless --raw is given.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub point: Vec<f64>,
    /// The point is in original units; apply the stored normalizer.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, value_enum, default_value = "on")]
    pub clamp: Switch,
    /// Directory for explanation.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

pub const METRICS_HEADER: &str = "level,epoch,train_loss,train_acc,test_loss,test_acc";

pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.level,
            r.epoch,
            r.train_loss,
            r.train_accuracy,
            fmt_opt(r.test_loss),
            fmt_opt(r.test_accuracy)
        );
    }
    s
}

/// Final loss and accuracy per subdivision level.
pub fn summary_csv(outcome: &TrainOutcome) -> String {
    let mut s = String::from("subdivisions,train_loss,train_acc,test_loss,test_acc\n");
    for r in outcome.final_metrics() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.level,
            r.train_loss,
            r.train_accuracy,
            fmt_opt(r.test_loss),
            fmt_opt(r.test_accuracy)
        );
    }
    s
}

pub fn summary_table(outcome: &TrainOutcome) -> String {
    let mut s = format!(
        "{:>12} | {:>10} {:>10} | {:>10} {:>10}\n",
        "subdivisions", "train loss", "train acc", "test loss", "test acc"
    );
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    for r in outcome.final_metrics() {
        let _ = writeln!(
            s,
            "{:>12} | {:>10.4} {:>10.4} | {:>10} {:>10}",
            r.level,
            r.train_loss,
            r.train_accuracy,
            cell(r.test_loss),
            cell(r.test_accuracy)
        );
    }
    s
}

pub fn model_file_name(level: usize) -> String {
    format!("model_level{level}.json")
}

#[derive(Debug)]
pub struct TrainReport {
    pub outcome: TrainOutcome,
    pub normalizer: NormalizationTransform,
    pub out_dir: PathBuf,
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainReport> {
    let config = args.config();
    config.validate()?;
    let raw = args.data.load(args.seed, None)?;
    let (raw_train, raw_test) = match args.split {
        Some(f) => {
            let (a, b) = split(&raw, f, args.seed)?;
            (a, Some(b))
        }
        None => (raw, None),
    };
    let normalizer = NormalizationTransform::fit(&raw_train)?;
    let (train_set, _) = normalizer.apply_dataset(&raw_train, true)?;
    let test_set = raw_test
        .as_ref()
        .map(|t| {
            normalizer
                .apply_dataset(t, args.clamp.is_on())
                .map(|(d, _)| d)
        })
        .transpose()?;

    let outcome = train::train(&train_set, args.levels, &config, test_set.as_ref())?;

    let out = &args.out;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), args.config_echo())?;
    fs::write(
        out.join("normalizer.json"),
        serde_json::to_string_pretty(&normalizer)? + "\n",
    )?;
    let mut labels = String::from("index,label\n");
    for (i, v) in raw_train.label_values().iter().enumerate() {
        let _ = writeln!(labels, "{i},{v}");
    }
    fs::write(out.join("labels.csv"), labels)?;
    data::write_csv(&raw_train, out.join("train.csv"), &args.data.label_column)?;
    if let Some(t) = &raw_test {
        data::write_csv(t, out.join("test.csv"), &args.data.label_column)?;
    }
    fs::write(out.join("metrics.csv"), metrics_csv(&outcome.metrics))?;
    fs::write(out.join("summary.csv"), summary_csv(&outcome))?;
    for model in &outcome.models {
        let saved = SavedModel {
            model: model.clone(),
            normalizer: Some(normalizer.clone()),
            label_values: Some(raw_train.label_values().to_vec()),
        };
        saved.save(out.join(model_file_name(model.level())))?;
    }
    Ok(TrainReport {
        outcome,
        normalizer,
        out_dir: out.clone(),
    })
}

fn normalize_for(
    saved: &SavedModel,
    dataset: &LabeledDataset,
    clamp: bool,
) -> Result<LabeledDataset> {
    if dataset.dim() != saved.model.dim() {
        return Err(SimapError::DimensionMismatch {
            expected: saved.model.dim(),
            found: dataset.dim(),
        });
    }
    if dataset.class_count() > saved.model.classes() {
        return Err(SimapError::InvalidConfig(format!(
            "dataset has {} classes, model {}",
            dataset.class_count(),
            saved.model.classes()
        )));
    }
    let dataset = if dataset.class_count() < saved.model.classes() {
        // generated data: widen the one-hot encoding to the model's classes
        LabeledDataset::new(
            dataset.points().to_vec(),
            dataset.labels().to_vec(),
            saved.model.classes(),
        )?
    } else {
        dataset.clone()
    };
    match &saved.normalizer {
        Some(n) => Ok(n.apply_dataset(&dataset, clamp)?.0),
        None => Ok(dataset),
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Evaluation> {
    let saved = SavedModel::load(&args.model)?;
    let dataset = args.data.load(args.seed, saved.label_values.as_deref())?;
    let dataset = normalize_for(&saved, &dataset, args.clamp.is_on())?;
    let eval = train::evaluate(&saved.model, &dataset)?;
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        fs::write(
            out.join("evaluation.csv"),
            format!(
                "points,loss,accuracy\n{},{},{}\n",
                dataset.len(),
                eval.loss,
                eval.accuracy
            ),
        )?;
    }
    Ok(eval)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub label: usize,
    pub max_prob: f64,
}

/// Lattice rows, `y` outer and `x` inner, both running over
/// `i / (resolution - 1)`.
pub fn boundary_grid(
    saved: &SavedModel,
    resolution: usize,
    raw_axes: bool,
) -> Result<Vec<GridRow>> {
    if saved.model.dim() != 2 {
        return Err(SimapError::InvalidConfig(format!(
            "decision boundaries need a 2-dimensional model, this one has n={}",
            saved.model.dim()
        )));
    }
    if resolution < 2 {
        return Err(SimapError::InvalidConfig(
            "resolution must be at least 2".into(),
        ));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let mut rows = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution {
            let p = [i as f64 * step, j as f64 * step];
            let pred = saved.model.predict(&p)?;
            let shown = match (&saved.normalizer, raw_axes) {
                (Some(n), true) => n.invert_point(&p),
                _ => p.to_vec(),
            };
            rows.push(GridRow {
                x: shown[0],
                y: shown[1],
                label: pred.label,
                max_prob: pred.max_prob(),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_boundary(args: &BoundaryArgs) -> Result<Vec<GridRow>> {
    let saved = SavedModel::load(&args.model)?;
    let rows = boundary_grid(&saved, args.resolution, args.raw_axes)?;
    let mut s = String::from("x,y,predicted_label,max_prob\n");
    for r in &rows {
        let _ = writeln!(s, "{},{},{},{}", r.x, r.y, r.label, r.max_prob);
    }
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("boundary.csv"), s)?;
    Ok(rows)
}

pub fn cmd_explain(args: &ExplainArgs) -> Result<Explanation> {
    let saved = SavedModel::load(&args.model)?;
    let model = &saved.model;
    if args.point.len() != model.dim() {
        return Err(SimapError::DimensionMismatch {
            expected: model.dim(),
            found: args.point.len(),
        });
    }
    let mut x = match (&saved.normalizer, args.raw) {
        (Some(n), true) => n.apply_point(&args.point)?,
        _ => args.point.clone(),
    };
    if args.clamp.is_on() {
        x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    }
    let report = explain(model, &x)?;
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        fs::write(
            out.join("explanation.json"),
            serde_json::to_string_pretty(&report)? + "\n",
        )?;
    }
    Ok(report)
}

#[derive(Debug)]
pub struct CensusReport {
    pub n: usize,
    pub k: usize,
    pub maximal_simplices: Result<u128>,
    pub level_one_vertices: Result<u128>,
    pub vc_dimension: Result<u128>,
}

impl CensusReport {
    pub fn render(&self) -> String {
        let show = |r: &Result<u128>| match r {
            Ok(v) => v.to_string(),
            Err(e) => format!("overflow ({e})"),
        };
        format!(
            "n = {}, k = {}\nmaximal simplices: {}\nlevel-1 vertices: {}\nVC dimension: {}\n",
            self.n,
            self.k,
            show(&self.maximal_simplices),
            show(&self.level_one_vertices),
            show(&self.vc_dimension)
        )
    }
}

pub fn cmd_census(args: &CensusArgs) -> Result<CensusReport> {
    if args.n == 0 {
        return Err(SimapError::ZeroDimension);
    }
    let maximal = subdivision_census(args.n, args.k).map(|c| c.maximal_simplices);
    let vertices = subdivision_census(args.n, 0).map(|c| c.level_one_vertices);
    Ok(CensusReport {
        n: args.n,
        k: args.k,
        maximal_simplices: maximal,
        level_one_vertices: vertices,
        vc_dimension: vc_dimension(args.n, args.k),
    })
}

/// Runs a parsed command line, returning what should go to stdout.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Train(args) => {
            let report = cmd_train(args)?;
            Ok(format!(
                "{}wrote run to {}\n",
                summary_table(&report.outcome),
                display(&report.out_dir)
            ))
        }
        Command::Evaluate(args) => {
            let e = cmd_evaluate(args)?;
            Ok(format!("loss = {}\naccuracy = {}\n", e.loss, e.accuracy))
        }
        Command::Boundary(args) => {
            let rows = cmd_boundary(args)?;
            Ok(format!(
                "wrote {} lattice points to {}\n",
                rows.len(),
                display(&args.out.join("boundary.csv"))
            ))
        }
        Command::Explain(args) => {
            let report = cmd_explain(args)?;
            Ok(serde_json::to_string_pretty(&report)? + "\n")
        }
        Command::Census(args) => Ok(cmd_census(args)?.render()),
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_render() {
        let r = cmd_census(&CensusArgs { n: 2, k: 1 }).unwrap();
        assert_eq!(
            r.render(),
            "n = 2, k = 1\nmaximal simplices: 6\nlevel-1 vertices: 7\nVC dimension: 18\n"
        );
        let r = cmd_census(&CensusArgs { n: 2, k: 0 }).unwrap();
        assert_eq!(*r.maximal_simplices.as_ref().unwrap(), 1);
        assert_eq!(*r.vc_dimension.as_ref().unwrap(), 3);
        let big = cmd_census(&CensusArgs { n: 10, k: 5 }).unwrap();
        // 11!^5 still fits in 128 bits, times 11 does not
        assert!(big.maximal_simplices.is_ok());
        assert!(big.vc_dimension.is_err());
        assert!(big.render().contains("VC dimension: overflow"));
    }

    #[test]
    fn metrics_csv_layout() {
        let rec = MetricsRecord {
            level: 1,
            epoch: 3,
            train_loss: 0.5,
            train_accuracy: 0.75,
            test_loss: None,
            test_accuracy: None,
        };
        assert_eq!(
            metrics_csv(&[rec]),
            format!("{METRICS_HEADER}\n1,3,0.5,0.75,,\n")
        );
    }

    #[test]
    fn cli_parses_documented_flags() {
        let cli = Cli::try_parse_from([
            "simap",
            "train",
            "--gen",
            "xor",
            "--levels",
            "2",
            "--epochs",
            "10",
            "--lr",
            "0.05",
            "--optimizer",
            "sgd",
            "--seed",
            "3",
            "--out",
            "/tmp/x",
            "--clamp",
            "off",
        ])
        .unwrap();
        let Command::Train(t) = cli.command else {
            panic!()
        };
        assert_eq!(t.config().optimizer, OptimizerKind::Sgd);
        assert_eq!(t.clamp, Switch::Off);
        assert!(Cli::try_parse_from(["simap", "train", "--out", "x"]).is_err());
        assert!(Cli::try_parse_from([
            "simap", "train", "--gen", "xor", "--data", "f.csv", "--out", "x"
        ])
        .is_err());
        let cli = Cli::try_parse_from([
            "simap",
            "explain",
            "--model",
            "m.json",
            "--point",
            "-0.5,0.25",
        ])
        .unwrap();
        let Command::Explain(e) = cli.command else {
            panic!()
        };
        assert_eq!(e.point, vec![-0.5, 0.25]);
    }
}
