//! The `goldrank` command line. Every subcommand reads and writes the same
//! file formats as the library, so outputs chain: `postprocess` feeds `score`,
//! `score --out` feeds `matrix`, `ensemble` feeds `score` again.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::consolidated::{consolidated_report, ReportOptions};
use super::figures::{
    gr_histogram_svg, load_training_log, meanstd_scatter_svg, metric_scatter_svg, training_curves_svg, Coloring,
};
use super::{FigureKind, FigureSpec};
use crate::corpus::{load_dataset, Dataset};
use crate::ensemble::{evaluate_ensemble, majority_vote, select_members, Criterion, EnsembleSpec, GrimDirection, TieBreak};
use crate::error::{Error, Result};
use crate::fleet::{
    build_matrix, cluster_difficulty, example_stats, never_correct, BirchParams, DifficultyLabel, FeatureSpace,
    GrMatrix,
};
use crate::rank::{
    load_records, score_experiment, write_records_csv, write_records_jsonl, AggregateReport, MedianConvention, Metric,
    ScoreOptions,
};
use crate::spanex::{
    load_logit_file, load_prediction_file, postprocess, write_prediction_file, PredictionSet, SpanConfig, SpanWeights,
    DEFAULT_K, DEFAULT_MAX_ANSWER_LEN,
};

pub const SEED_ENV: &str = "GOLDRANK_SEED";

#[derive(Debug, Parser)]
#[command(name = "goldrank", version, about = "Golden Rank evaluation for extractive QA experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn start/end logits into top-K prediction lists.
    Postprocess(PostprocessArgs),
    /// Golden Ranks and aggregate metrics for one or more runs.
    Score(ScoreArgs),
    /// Join GR records of several runs into the examples x experiments matrix.
    Matrix(MatrixArgs),
    /// Cluster examples into difficulty classes.
    Cluster(ClusterArgs),
    /// Majority-vote ensemble of the best runs.
    Ensemble(EnsembleArgs),
    /// Render one figure as SVG.
    Plot(PlotArgs),
    /// Every table in one JSON document.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Scoring {
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value = "grim")]
    median_convention: MedianConvention,
}

impl Scoring {
    fn options(&self) -> Result<ScoreOptions> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("--k must be at least 1".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidArgument("--gamma must be positive".into()));
        }
        Ok(ScoreOptions {
            k: self.k,
            gamma: self.gamma,
            median_convention: self.median_convention,
        })
    }
}

#[derive(Debug, Args)]
struct Clustering {
    #[arg(long, default_value = "vector")]
    features: FeatureSpace,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    /// CF subcluster radius threshold.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 50)]
    branching: usize,
}

impl Clustering {
    fn params(&self) -> BirchParams {
        BirchParams {
            n_clusters: self.clusters,
            threshold: self.threshold,
            branching: self.branching,
        }
    }
}

#[derive(Debug, Args)]
struct PostprocessArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    logits: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ANSWER_LEN)]
    max_answer_len: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    null_threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    start_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    end_weight: f64,
    /// Prediction JSONL; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// `name=path` of a top-K prediction file; repeatable.
    #[arg(long, required = true)]
    preds: Vec<String>,
    #[command(flatten)]
    scoring: Scoring,
    /// Directory for `<name>.gr.csv`, `<name>.gr.jsonl` and `<name>.report.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Human-readable tables instead of JSON on stdout.
    #[arg(long)]
    table: bool,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// `name=path` of a GR record file (CSV or JSONL); repeatable.
    #[arg(long)]
    records: Vec<String>,
    /// Score these prediction files instead of reading records.
    #[arg(long, requires = "dataset")]
    preds: Vec<String>,
    /// Needed with `--preds` and for per-example statistics.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    scoring: Scoring,
    /// Matrix CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-example mean/std CSV (requires `--dataset`).
    #[arg(long, requires = "dataset")]
    stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    clustering: Clustering,
    /// Difficulty report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, required = true)]
    preds: Vec<String>,
    #[arg(long, default_value = "f1")]
    criterion: Criterion,
    /// Number of members.
    #[arg(long, default_value_t = 3)]
    top: usize,
    #[arg(long, default_value = "lower")]
    grim_direction: GrimDirection,
    #[command(flatten)]
    scoring: Scoring,
    /// Ensemble prediction JSONL.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ColoringArg {
    Answerability,
    EverCorrect,
    Cluster,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    kind: FigureKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    preds: Vec<String>,
    /// GR matrix CSV for `meanstd_scatter`, instead of `--preds`.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Validation log (CSV or JSONL) for `training_curves`.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "answerability")]
    coloring: ColoringArg,
    #[arg(long, default_value = "em")]
    x: Metric,
    #[arg(long, default_value = "f1")]
    y: Metric,
    #[arg(long)]
    no_fit: bool,
    #[command(flatten)]
    scoring: Scoring,
    #[command(flatten)]
    clustering: Clustering,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, required = true)]
    preds: Vec<String>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    scoring: Scoring,
    #[command(flatten)]
    clustering: Clustering,
    /// Ensemble criteria; all three when omitted.
    #[arg(long)]
    criterion: Vec<Criterion>,
    /// Ensemble sizes; 3 and 5 when omitted.
    #[arg(long)]
    top: Vec<usize>,
    #[arg(long, default_value = "lower")]
    grim_direction: GrimDirection,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every figure into this directory.
    #[arg(long)]
    figures: Option<PathBuf>,
}

/// Run with the process's stdout and stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Exit code 0 on success, 1 when inputs fail to load or validate, 2 on
/// usage errors.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let tie_break = match seed_from_env() {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    match dispatch(cli.command, tie_break, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn seed_from_env() -> std::result::Result<TieBreak, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(TieBreak::Seeded)
            .map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got {v:?}")),
        _ => Ok(TieBreak::Lexicographic),
    }
}

fn dispatch(cmd: Command, tie_break: TieBreak, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Postprocess(a) => cmd_postprocess(a, out),
        Command::Score(a) => cmd_score(a, out),
        Command::Matrix(a) => cmd_matrix(a, out),
        Command::Cluster(a) => cmd_cluster(a, out),
        Command::Ensemble(a) => cmd_ensemble(a, tie_break, out),
        Command::Plot(a) => cmd_plot(a, out),
        Command::Report(a) => cmd_report(a, tie_break, out),
    }
}

/// `name=path`, or a bare path named after its file stem.
pub fn parse_named_path(arg: &str) -> (String, PathBuf) {
    if let Some((name, path)) = arg.split_once('=') {
        if !name.is_empty() && !name.contains(['/', '\\']) {
            return (name.to_string(), PathBuf::from(path));
        }
    }
    let path = PathBuf::from(arg);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| arg.to_string());
    (name, path)
}

fn load_runs(args: &[String]) -> Result<Vec<(String, Vec<PredictionSet>)>> {
    args.iter()
        .map(|a| {
            let (name, path) = parse_named_path(a);
            Ok((name, load_prediction_file(path)?))
        })
        .collect()
}

fn score_runs(
    dataset: &Dataset,
    runs: &[(String, Vec<PredictionSet>)],
    opts: &ScoreOptions,
) -> Result<Vec<(String, Vec<crate::rank::GoldenRankRecord>, AggregateReport)>> {
    runs.iter()
        .map(|(name, preds)| {
            let (records, report) = score_experiment(name, dataset, preds, opts)?;
            Ok((name.clone(), records, report))
        })
        .collect()
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn write_json_file(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_postprocess(a: PostprocessArgs, out: &mut dyn Write) -> Result<()> {
    if a.k == 0 {
        return Err(Error::InvalidArgument("--k must be at least 1".into()));
    }
    let dataset = load_dataset(&a.dataset)?;
    let records = load_logit_file(&a.logits)?;
    let contexts: HashMap<&str, &str> = dataset
        .examples
        .iter()
        .map(|e| (e.id.as_str(), e.context.as_str()))
        .collect();
    let cfg = SpanConfig {
        k: a.k,
        max_answer_len: a.max_answer_len,
        weights: SpanWeights {
            start: a.start_weight,
            end: a.end_weight,
        },
        null_threshold: a.null_threshold,
    };
    let sets = postprocess(&records, &contexts, &cfg)?;
    match a.out {
        Some(path) => write_prediction_file(path, &sets),
        None => {
            for s in &sets {
                serde_json::to_writer(&mut *out, s)?;
                writeln!(out).map_err(|e| Error::io("<stdout>", e))?;
            }
            Ok(())
        }
    }
}

fn cmd_score(a: ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let opts = a.scoring.options()?;
    let dataset = load_dataset(&a.dataset)?;
    let runs = load_runs(&a.preds)?;
    let scored = score_runs(&dataset, &runs, &opts)?;
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        for (name, records, report) in &scored {
            write_records_csv(dir.join(format!("{name}.gr.csv")), records)?;
            write_records_jsonl(dir.join(format!("{name}.gr.jsonl")), records)?;
            write_json_file(&dir.join(format!("{name}.report.json")), report)?;
        }
    }
    if a.table {
        for (_, _, report) in &scored {
            writeln!(out, "{}", report.to_table()).map_err(|e| Error::io("<stdout>", e))?;
        }
        return Ok(());
    }
    let reports: Vec<&AggregateReport> = scored.iter().map(|(_, _, r)| r).collect();
    match reports.as_slice() {
        [one] => write_json(out, one),
        many => write_json(out, &many),
    }
}

#[derive(Serialize)]
struct MatrixOutput<'a> {
    n_examples: usize,
    experiments: &'a [String],
    excluded: &'a [String],
    never_correct: Vec<String>,
}

fn cmd_matrix(a: MatrixArgs, out: &mut dyn Write) -> Result<()> {
    if a.records.is_empty() && a.preds.is_empty() {
        return Err(Error::InvalidArgument("give --records or --preds".into()));
    }
    let dataset = a.dataset.as_ref().map(load_dataset).transpose()?;
    let mut runs = Vec::new();
    for r in &a.records {
        let (name, path) = parse_named_path(r);
        runs.push((name, load_records(path)?));
    }
    if !a.preds.is_empty() {
        let dataset = dataset.as_ref().expect("clap enforces --dataset");
        let opts = a.scoring.options()?;
        for (name, records, _) in score_runs(dataset, &load_runs(&a.preds)?, &opts)? {
            runs.push((name, records));
        }
    }
    let built = build_matrix(&runs)?;
    if let Some(path) = &a.stats {
        let stats = example_stats(&built.matrix, dataset.as_ref().expect("clap enforces --dataset"))?;
        let mut w = csv::Writer::from_path(path)?;
        for s in &stats {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    match &a.out {
        Some(path) => {
            built.matrix.write_csv(path)?;
            write_json(
                out,
                &MatrixOutput {
                    n_examples: built.matrix.n_examples(),
                    experiments: &built.matrix.experiments,
                    excluded: &built.excluded,
                    never_correct: never_correct(&built.matrix),
                },
            )
        }
        None => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(std::iter::once("id").chain(built.matrix.experiments.iter().map(String::as_str)))?;
            for (id, row) in built.matrix.rows() {
                let mut rec = vec![id.to_string()];
                rec.extend(row.iter().map(u32::to_string));
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn cmd_cluster(a: ClusterArgs, out: &mut dyn Write) -> Result<()> {
    let dataset = load_dataset(&a.dataset)?;
    let matrix = GrMatrix::load_csv(&a.matrix)?;
    let stats = example_stats(&matrix, &dataset)?;
    let report = cluster_difficulty(&matrix, &stats, a.clustering.features, &a.clustering.params())?;
    match &a.out {
        Some(path) => write_json_file(path, &report),
        None => write_json(out, &report),
    }
}

#[derive(Serialize)]
struct EnsembleOutput<'a> {
    criterion: Criterion,
    size: usize,
    members: &'a [String],
    em: f64,
    f1: f64,
    output: String,
}

fn cmd_ensemble(a: EnsembleArgs, tie_break: TieBreak, out: &mut dyn Write) -> Result<()> {
    let opts = a.scoring.options()?;
    let dataset = load_dataset(&a.dataset)?;
    let runs = load_runs(&a.preds)?;
    let reports: Vec<AggregateReport> = score_runs(&dataset, &runs, &opts)?
        .into_iter()
        .map(|(_, _, r)| r)
        .collect();
    let spec = EnsembleSpec {
        criterion: a.criterion,
        size: a.top,
        grim_direction: a.grim_direction,
    };
    let members = select_members(&reports, &spec)?;
    let votes = majority_vote(&runs, &members, tie_break)?;
    let (em, f1) = evaluate_ensemble(&votes, &dataset)?;
    let sets: Vec<PredictionSet> = votes.iter().map(|v| v.to_prediction_set(members.len())).collect();
    write_prediction_file(&a.out, &sets)?;
    write_json(
        out,
        &EnsembleOutput {
            criterion: a.criterion,
            size: a.top,
            members: &members,
            em,
            f1,
            output: a.out.display().to_string(),
        },
    )
}

fn need<'a, T>(v: &'a Option<T>, flag: &str, kind: FigureKind) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("{kind} needs {flag}")))
}

fn cmd_plot(a: PlotArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = FigureSpec::new(a.kind, &a.out);
    if let Some(t) = &a.title {
        spec.title = t.clone();
    }
    let scored_reports = |a: &PlotArgs| -> Result<Vec<AggregateReport>> {
        let dataset = load_dataset(need(&a.dataset, "--dataset", a.kind)?)?;
        if a.preds.is_empty() {
            return Err(Error::InvalidArgument(format!("{} needs --preds", a.kind)));
        }
        Ok(score_runs(&dataset, &load_runs(&a.preds)?, &a.scoring.options()?)?
            .into_iter()
            .map(|(_, _, r)| r)
            .collect())
    };
    let svg = match a.kind {
        FigureKind::GrHistogram => gr_histogram_svg(&scored_reports(&a)?, &spec.title)?,
        FigureKind::MetricScatter => {
            metric_scatter_svg(&scored_reports(&a)?, a.x, a.y, !a.no_fit, &spec.title)?.0
        }
        FigureKind::TrainingCurves => {
            let log = load_training_log(need(&a.log, "--log", a.kind)?)?;
            training_curves_svg(&log, &spec.title)?
        }
        FigureKind::MeanstdScatter => {
            let opts = a.scoring.options()?;
            let dataset = load_dataset(need(&a.dataset, "--dataset", a.kind)?)?;
            let matrix = match &a.matrix {
                Some(path) => GrMatrix::load_csv(path)?,
                None => {
                    if a.preds.is_empty() {
                        return Err(Error::InvalidArgument("meanstd_scatter needs --matrix or --preds".into()));
                    }
                    let runs: Vec<_> = score_runs(&dataset, &load_runs(&a.preds)?, &opts)?
                        .into_iter()
                        .map(|(n, rec, _)| (n, rec))
                        .collect();
                    build_matrix(&runs)?.matrix
                }
            };
            let stats = example_stats(&matrix, &dataset)?;
            let coloring = coloring_for(a.coloring, &matrix, &stats, &a.clustering)?;
            meanstd_scatter_svg(&stats, &coloring, opts.k as u32, &spec.title)?
        }
    };
    spec.write(&svg)?;
    writeln!(out, "{}", spec.output.display()).map_err(|e| Error::io("<stdout>", e))
}

fn coloring_for(
    arg: ColoringArg,
    matrix: &GrMatrix,
    stats: &[crate::fleet::ExampleStats],
    clustering: &Clustering,
) -> Result<Coloring> {
    Ok(match arg {
        ColoringArg::Answerability => Coloring::Answerability,
        ColoringArg::EverCorrect => Coloring::EverCorrect((0..matrix.n_examples()).map(|i| matrix.row(i).contains(&0)).collect()),
        ColoringArg::Cluster => {
            let report = cluster_difficulty(matrix, stats, clustering.features, &clustering.params())?;
            let by_id: HashMap<&str, DifficultyLabel> = report
                .tables
                .iter()
                .flat_map(|t| t.assignments.iter().map(|c| (c.example_id.as_str(), c.label)))
                .collect();
            Coloring::Cluster(stats.iter().map(|s| by_id[s.example_id.as_str()]).collect())
        }
    })
}

fn cmd_report(a: ReportArgs, tie_break: TieBreak, out: &mut dyn Write) -> Result<()> {
    let dataset = load_dataset(&a.dataset)?;
    let runs = load_runs(&a.preds)?;
    let log = a.log.as_ref().map(load_training_log).transpose()?;
    let defaults = ReportOptions::default();
    let opts = ReportOptions {
        score: a.scoring.options()?,
        features: a.clustering.features,
        birch: a.clustering.params(),
        criteria: if a.criterion.is_empty() { defaults.criteria } else { a.criterion.clone() },
        ensemble_sizes: if a.top.is_empty() { defaults.ensemble_sizes } else { a.top.clone() },
        grim_direction: a.grim_direction,
        tie_break,
    };
    let report = consolidated_report(&dataset, &runs, log.as_deref(), &opts)?;

    if let Some(dir) = &a.figures {
        ensure_dir(dir)?;
        let k = opts.score.k as u32;
        let fig = |kind: FigureKind, file: &str, svg: String| FigureSpec::new(kind, dir.join(file)).write(&svg);
        let title = |kind| FigureSpec::new(kind, "").title;
        fig(FigureKind::GrHistogram, "gr_histogram.svg", gr_histogram_svg(&report.experiments, &title(FigureKind::GrHistogram))?)?;
        if report.experiments.len() >= 2 {
            let (svg, _) = metric_scatter_svg(&report.experiments, Metric::Em, Metric::F1, true, "EM vs. F1")
                .or_else(|_| metric_scatter_svg(&report.experiments, Metric::Em, Metric::F1, false, "EM vs. F1"))?;
            fig(FigureKind::MetricScatter, "metric_scatter_em_f1.svg", svg)?;
        }
        let records: Vec<_> = score_runs(&dataset, &runs, &opts.score)?
            .into_iter()
            .map(|(n, r, _)| (n, r))
            .collect();
        let matrix = build_matrix(&records)?.matrix;
        let stats = example_stats(&matrix, &dataset)?;
        for (arg, file) in [
            (ColoringArg::Answerability, "meanstd_answerability.svg"),
            (ColoringArg::EverCorrect, "meanstd_ever_correct.svg"),
            (ColoringArg::Cluster, "meanstd_clusters.svg"),
        ] {
            let coloring = coloring_for(arg, &matrix, &stats, &a.clustering)?;
            fig(FigureKind::MeanstdScatter, file, meanstd_scatter_svg(&stats, &coloring, k, &title(FigureKind::MeanstdScatter))?)?;
        }
        if let Some(log) = log.as_deref().filter(|l| l.len() >= 2) {
            fig(FigureKind::TrainingCurves, "training_curves.svg", training_curves_svg(log, &title(FigureKind::TrainingCurves))?)?;
        }
    }

    match &a.out {
        Some(path) => write_json_file(path, &report),
        None => write_json(out, &report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_paths() {
        assert_eq!(parse_named_path("bert=runs/a.jsonl"), ("bert".into(), PathBuf::from("runs/a.jsonl")));
        assert_eq!(parse_named_path("runs/xlnet-001.jsonl"), ("xlnet-001".into(), PathBuf::from("runs/xlnet-001.jsonl")));
        assert_eq!(parse_named_path("dir/a=b.jsonl"), ("a=b".into(), PathBuf::from("dir/a=b.jsonl")));
    }

    #[test]
    fn usage_errors_exit_two() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_cli_with(["goldrank", "score", "--bogus"], &mut o, &mut e), 2);
        assert!(!e.is_empty());
        assert_eq!(run_cli_with(["goldrank"], &mut o, &mut e), 2);
        let mut help = Vec::new();
        assert_eq!(run_cli_with(["goldrank", "--help"], &mut help, &mut e), 0);
        assert!(String::from_utf8(help).unwrap().contains("postprocess"));
    }

    #[test]
    fn missing_file_exits_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_cli_with(
            ["goldrank", "score", "--dataset", "/nonexistent/dev.json", "--preds", "x=/nonexistent/p.jsonl"],
            &mut o,
            &mut e,
        );
        assert_eq!(code, 1);
        assert!(String::from_utf8(e).unwrap().starts_with("error:"));
    }
}
