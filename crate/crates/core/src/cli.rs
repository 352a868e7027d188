//! The `sdkit` command line: reproduce the worked example, train, classify,
//! evaluate and inspect ensembles.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 usage or data error,
//! 3 I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::engine::{self, Exhaustion, TrainConfig};
use crate::ensemble::{
    read_ensemble, write_ensemble, BalanceReport, Decision, DecisionRule, Ensemble, Precision, UndecidedPolicy,
};
use crate::error::{Result, SdError};
use crate::geometry::{write_points_csv, LabeledDataset, Point, PointTable};
use crate::ratings::Pair;
use crate::repro;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sdkit", version, about = "Stochastic discrimination ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recompute the 252-model worked example and check it against the
    /// shipped reference tables.
    Reproduce { outdir: PathBuf },
    /// Train an ensemble on a labeled CSV dataset.
    Train(Box<TrainArgs>),
    /// Print discriminants and decisions for every point of a CSV file.
    Classify {
        model: PathBuf,
        points: PathBuf,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Classify a labeled CSV file and report accuracy.
    Evaluate {
        model: PathBuf,
        data: PathBuf,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Summarize an ensemble file.
    Inspect { model: PathBuf },
    /// Write the worked example's geometric ensemble and point sets.
    Fixture { outdir: PathBuf },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub data: PathBuf,
    pub out: PathBuf,
    /// Flat key = value training config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "SDKIT_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub target_size: Option<usize>,
    /// Candidate budget per accepted model.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, conflicts_with = "enrich_best_of")]
    pub enrich_threshold: Option<f64>,
    /// Keep the most enriched of T candidates.
    #[arg(long, value_name = "T")]
    pub enrich_best_of: Option<usize>,
    /// off, threshold:x, best-of:T or biased.
    #[arg(long)]
    pub uniformity: Option<String>,
    /// Comma-separated model kinds, or `all`.
    #[arg(long)]
    pub kinds: Option<String>,
    #[arg(long)]
    pub min_size: Option<f64>,
    #[arg(long)]
    pub max_size: Option<f64>,
    #[arg(long)]
    pub restrict_bbox: Option<bool>,
    #[arg(long)]
    pub components: Option<usize>,
    /// `i,j` or `round-robin`.
    #[arg(long)]
    pub pair: Option<String>,
    #[command(flatten)]
    pub rule: RuleArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleKind {
    /// Threshold on `Y` of one pair (default for two classes).
    Threshold,
    /// Pairwise threshold votes (default for more classes).
    Vote,
    /// Largest average posterior rating.
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Undecided,
    Prior,
}

#[derive(Debug, Clone, Args)]
pub struct RuleArgs {
    #[arg(long, value_enum)]
    pub rule: Option<RuleKind>,
    /// Pair for the threshold rule, `i,j`.
    #[arg(long = "rule-pair")]
    pub rule_pair: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, value_enum, default_value = "undecided")]
    pub undecided_policy: PolicyArg,
    /// Track exact rational discriminants (small ensembles only).
    #[arg(long)]
    pub exact: bool,
}

impl RuleArgs {
    fn resolve(&self, n_classes: usize) -> Result<(DecisionRule, UndecidedPolicy)> {
        let kind = self.rule.unwrap_or(if n_classes == 2 { RuleKind::Threshold } else { RuleKind::Vote });
        let rule = match kind {
            RuleKind::Threshold => {
                let pair = match &self.rule_pair {
                    Some(text) => parse_pair(text)?,
                    None => Pair::new(1, 2)?,
                };
                if pair.i > n_classes || pair.j > n_classes {
                    return Err(SdError::ClassOutOfRange { class: pair.i.max(pair.j), n_classes });
                }
                DecisionRule::Threshold { pair, theta: self.theta }
            }
            RuleKind::Vote => DecisionRule::PairwiseVote { theta: self.theta },
            RuleKind::W => DecisionRule::ArgmaxW,
        };
        let policy = match self.undecided_policy {
            PolicyArg::Undecided => UndecidedPolicy::Undecided,
            PolicyArg::Prior => UndecidedPolicy::Prior,
        };
        Ok((rule, policy))
    }

    fn precision(&self) -> Precision {
        if self.exact {
            Precision::Exact
        } else {
            Precision::Float
        }
    }
}

fn parse_pair(text: &str) -> Result<Pair> {
    let (i, j) = text
        .split_once([',', '_'])
        .ok_or_else(|| SdError::InvalidConfig(format!("pair must look like 1,2, got '{text}'")))?;
    let num =
        |s: &str| s.trim().parse::<usize>().map_err(|_| SdError::InvalidConfig(format!("bad class '{s}' in pair")));
    Pair::new(num(i)?, num(j)?)
}

/// Machine-readable summary printed by `train`, `evaluate` and `inspect`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub ensemble: EnsembleSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub size: usize,
    pub models_per_pair: BTreeMap<String, usize>,
    /// Per class `c`: model counts indexed by the number of class-`c`
    /// training points captured.
    pub stratum_counts: BTreeMap<String, Vec<usize>>,
    pub max_imbalance: usize,
    pub balance: BalanceReport,
}

impl EnsembleSummary {
    pub fn of(ens: &Ensemble) -> Result<Self> {
        let mut models_per_pair = BTreeMap::new();
        for r in ens.models() {
            *models_per_pair.entry(r.pair.to_string()).or_insert(0) += 1;
        }
        let mut stratum_counts = BTreeMap::new();
        for c in 1..=ens.training().n_classes {
            stratum_counts.insert(format!("class_{c}"), ens.stratum_counts(c)?);
        }
        let balance = ens.balance();
        Ok(EnsembleSummary {
            size: ens.len(),
            models_per_pair,
            stratum_counts,
            max_imbalance: balance.max_imbalance(),
            balance,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingSummary {
    pub requested: usize,
    pub draws: u64,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustion: Option<Exhaustion>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassAccuracy {
    pub class: usize,
    pub size: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub dataset: String,
    pub size: usize,
    pub decided: usize,
    pub undecided: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassAccuracy>,
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Classifies `ds` with `ens` and tallies accuracy per class. Undecided
/// points count as errors.
pub fn evaluate(ens: &Ensemble, ds: &LabeledDataset, rule: &RuleArgs) -> Result<Evaluation> {
    check_dim(ens, ds.dim())?;
    let n_classes = ens.training().n_classes;
    if ds.n_classes() > n_classes {
        return Err(SdError::InvalidDataset(format!(
            "{}: labels go up to {} but the ensemble knows {n_classes} classes",
            ds.name(),
            ds.n_classes()
        )));
    }
    let (decision_rule, policy) = rule.resolve(n_classes)?;
    let state = ens.evaluate(ds.points(), rule.precision())?;
    let mut per_class: Vec<ClassAccuracy> =
        (1..=n_classes).map(|class| ClassAccuracy { class, size: 0, correct: 0, accuracy: 0.0 }).collect();
    let mut undecided = 0;
    for q in 0..ds.len() {
        let row = &mut per_class[ds.label(q) - 1];
        row.size += 1;
        match state.decide(q, decision_rule, policy) {
            Decision::Undecided => undecided += 1,
            Decision::Class(c) if c == ds.label(q) => row.correct += 1,
            Decision::Class(_) => {}
        }
    }
    for row in &mut per_class {
        row.accuracy = ratio_or_zero(row.correct, row.size);
    }
    let correct = per_class.iter().map(|r| r.correct).sum();
    Ok(Evaluation {
        dataset: ds.name().to_string(),
        size: ds.len(),
        decided: ds.len() - undecided,
        undecided,
        correct,
        accuracy: ratio_or_zero(correct, ds.len()),
        per_class,
    })
}

fn check_dim(ens: &Ensemble, dim: usize) -> Result<()> {
    let expected = ens.training().dim;
    if dim != expected {
        return Err(SdError::DimensionMismatch { expected, actual: dim });
    }
    Ok(())
}

fn exit_code(e: &SdError) -> i32 {
    match e {
        SdError::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn io_context(path: &Path, e: std::io::Error) -> SdError {
    SdError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn load_ensemble(path: &Path) -> Result<Ensemble> {
    let file = File::open(path).map_err(|e| io_context(path, e))?;
    read_ensemble(BufReader::new(file))
}

fn save_ensemble(ens: &Ensemble, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_context(path, e))?;
    let mut w = BufWriter::new(file);
    write_ensemble(ens, &mut w)?;
    w.flush().map_err(|e| io_context(path, e))?;
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_context(path, e))
}

fn load_table(path: &Path) -> Result<PointTable> {
    if !path.exists() {
        return Err(io_context(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    PointTable::read(path)
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let echo: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli, echo, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, echo: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    match cli.command {
        Command::Reproduce { outdir } => cmd_reproduce(&outdir, out, err),
        Command::Train(args) => cmd_train(&args, echo, started, out, err),
        Command::Classify { model, points, rule } => cmd_classify(&model, &points, &rule, out),
        Command::Evaluate { model, data, rule } => {
            let ens = load_ensemble(&model)?;
            let ds = load_table(&data)?.into_labeled(&data.display().to_string())?;
            let evaluation = evaluate(&ens, &ds, &rule)?;
            let report = RunReport {
                command: echo,
                seed: ens.training().seed,
                ensemble: EnsembleSummary::of(&ens)?,
                training: None,
                evaluation: Some(evaluation),
                warnings: Vec::new(),
                wall_clock_seconds: started.elapsed().as_secs_f64(),
            };
            print_json(out, &report)?;
            Ok(EXIT_OK)
        }
        Command::Inspect { model } => {
            let ens = load_ensemble(&model)?;
            let report = RunReport {
                command: echo,
                seed: ens.training().seed,
                ensemble: EnsembleSummary::of(&ens)?,
                training: None,
                evaluation: None,
                warnings: Vec::new(),
                wall_clock_seconds: started.elapsed().as_secs_f64(),
            };
            print_json(out, &report)?;
            Ok(EXIT_OK)
        }
        Command::Fixture { outdir } => cmd_fixture(&outdir, out),
    }
}

/// Writes the reproduction artifacts; exit 1 when any cell differs from
/// the reference tables.
pub fn cmd_reproduce(outdir: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    fs::create_dir_all(outdir).map_err(|e| io_context(outdir, e))?;
    let t2 = repro::emit_table2()?;
    let t3 = repro::emit_table3()?;
    let profiles = repro::emit_profiles()?;
    write_file(&outdir.join("table2.csv"), &repro::table2_csv(&t2))?;
    write_file(&outdir.join("table3.csv"), &repro::table3_csv(&t3))?;
    write_file(&outdir.join("profiles.csv"), &repro::profiles_csv(&profiles))?;
    write_file(&outdir.join("figure1.dat"), &repro::figure1_series(&t2))?;
    write_file(&outdir.join("figure2.dat"), &repro::figure2_series(&t3))?;

    let mut mismatches = repro::compare_table2(&t2);
    mismatches.extend(repro::compare_table3(&t3));
    for m in &mismatches {
        writeln!(
            err,
            "{} row {} column {}: reference {} computed {}",
            m.table, m.row, m.column, m.published, m.computed
        )?;
    }
    writeln!(out, "wrote 5 files to {}", outdir.display())?;
    writeln!(out, "table2: {} rows, table3: {} rows, mismatched cells: {}", t2.len(), t3.len(), mismatches.len())?;
    Ok(if mismatches.is_empty() { EXIT_OK } else { EXIT_MISMATCH })
}

fn train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(path) => TrainConfig::parse(&fs::read_to_string(path).map_err(|e| io_context(path, e))?)?,
        None => TrainConfig::default(),
    };
    let mut set = |key: &str, value: Option<String>| -> Result<()> {
        match value {
            Some(v) => cfg.set(key, &v),
            None => Ok(()),
        }
    };
    set("seed", args.seed.map(|v| v.to_string()))?;
    set("target_size", args.target_size.map(|v| v.to_string()))?;
    set("kinds", args.kinds.clone())?;
    set("min_size", args.min_size.map(|v| v.to_string()))?;
    set("max_size", args.max_size.map(|v| v.to_string()))?;
    set("restrict_bbox", args.restrict_bbox.map(|v| v.to_string()))?;
    set("components", args.components.map(|v| v.to_string()))?;
    set("pair", args.pair.clone())?;
    set("enrich_threshold", args.enrich_threshold.map(|v| v.to_string()))?;
    set("enrich_best_of", args.enrich_best_of.map(|v| v.to_string()))?;
    set("uniformity", args.uniformity.clone())?;
    set("trials", args.trials.map(|v| v.to_string()))?;
    Ok(cfg)
}

pub fn cmd_train(
    args: &TrainArgs,
    echo: Vec<String>,
    started: Instant,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let cfg = train_config(args)?;
    let name = args.data.display().to_string();
    let ds = load_table(&args.data)?.into_labeled(&name)?;
    cfg.validate(ds.n_classes())?;
    let outcome = engine::train(&ds, &cfg.generator, &cfg.enrichment, &cfg.uniformity, cfg.target_size)?;
    save_ensemble(&outcome.ensemble, &args.out)?;

    let mut warnings = Vec::new();
    if let Some(ex) = &outcome.exhausted {
        let msg = format!(
            "partial ensemble: {} of {} models accepted after {} draws ({})",
            ex.accepted, ex.requested, ex.draws, ex.reason
        );
        writeln!(err, "warning: {msg}")?;
        warnings.push(msg);
    }
    let report = RunReport {
        command: echo,
        seed: Some(cfg.generator.seed),
        ensemble: EnsembleSummary::of(&outcome.ensemble)?,
        training: Some(TrainingSummary {
            requested: cfg.target_size,
            draws: outcome.draws,
            complete: outcome.is_complete(),
            exhaustion: outcome.exhausted.clone(),
        }),
        evaluation: Some(evaluate(&outcome.ensemble, &ds, &args.rule)?),
        warnings,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    print_json(out, &report)?;
    Ok(EXIT_OK)
}

/// CSV rows `id, Y_i_j..., W_1..W_n, decision`, full precision. `W` cells
/// are empty for points no model covers.
pub fn cmd_classify(model: &Path, points: &Path, rule: &RuleArgs, out: &mut dyn Write) -> Result<i32> {
    let ens = load_ensemble(model)?;
    let table = load_table(points)?;
    if table.points.is_empty() {
        return Ok(EXIT_OK);
    }
    check_dim(&ens, table.dim())?;
    let n_classes = ens.training().n_classes;
    let (decision_rule, policy) = rule.resolve(n_classes)?;
    let state = ens.evaluate(&table.points, rule.precision())?;
    let pairs: Vec<Pair> = Pair::all(n_classes).into_iter().filter(|p| state.t_pair(*p) > 0).collect();

    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend(pairs.iter().map(|p| format!("Y_{p}")));
    header.extend((1..=n_classes).map(|c| format!("W_{c}")));
    header.push("decision".into());
    w.write_record(&header).map_err(csv_err)?;
    for (q, p) in table.points.iter().enumerate() {
        let mut row = vec![p.id().unwrap_or(q).to_string()];
        for pair in &pairs {
            row.push(state.y(q, *pair)?.to_string());
        }
        for c in 1..=n_classes {
            row.push(if state.covering_count(q) == 0 { String::new() } else { state.w(q, c)?.to_string() });
        }
        row.push(state.decide(q, decision_rule, policy).to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn csv_err(e: csv::Error) -> SdError {
    SdError::Io(std::io::Error::other(e.to_string()))
}

/// Writes `fixture.sdm` (the 252 geometric models), `train.csv` and
/// `test.csv`.
pub fn cmd_fixture(outdir: &Path, out: &mut dyn Write) -> Result<i32> {
    fs::create_dir_all(outdir).map_err(|e| io_context(outdir, e))?;
    let ens = repro::fixture_ensemble(true)?;
    save_ensemble(&ens, &outdir.join("fixture.sdm"))?;
    let tr = repro::training_set();
    write_csv(&outdir.join("train.csv"), tr.points(), Some(tr.labels()))?;
    let te: Vec<Point> = repro::test_points();
    write_csv(&outdir.join("test.csv"), &te, Some(&repro::LABELS))?;
    writeln!(out, "wrote fixture.sdm, train.csv and test.csv to {}", outdir.display())?;
    Ok(EXIT_OK)
}

fn write_csv(path: &Path, points: &[Point], labels: Option<&[usize]>) -> Result<()> {
    let file = File::create(path).map_err(|e| io_context(path, e))?;
    write_points_csv(BufWriter::new(file), points, labels)
}
