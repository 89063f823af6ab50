//! Command-line entry point.
//!
//! Every failure is reported on stderr as a single line
//! `analogy-error[<code>]: <message>` with a nonzero exit status.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, Sampling, DEFAULT_FLOOR, DEFAULT_GRID_POINTS};
use crate::data::{self, LabeledDataset, NormalizationParams, PreferenceDataset, SynthSpec, Table};
use crate::error::{Error, Result};
use crate::explain::{self, ExplainOptions, PairQuery, ReportFormat};
use crate::kernels::Kernel;
use crate::predict::{self, ClassPrediction, Ranking};
use crate::search::{Direction, TripletIndex, TripletQuery};

#[derive(Debug, Parser)]
#[command(
    name = "analogy",
    version,
    about = "Analogy-based prediction and explanation for tabular data"
)]
pub struct Cli {
    /// Worker threads (0 = one per core). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify query rows by analogical label transfer.
    PredictClass(PredictClassArgs),
    /// Rank query rows by pairwise analogical preference prediction.
    PredictRank(PredictRankArgs),
    /// Explain a class label for one query row with analogies.
    ExplainClass(ExplainClassArgs),
    /// Explain a preference between two rows with analogies.
    ExplainPref(ExplainPrefArgs),
    /// Decumulative analogy and similarity curves as CSV.
    Curves(CurvesArgs),
    /// Generate a synthetic labeled dataset and preferences.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Arithmetic,
    Geometric,
    Boolean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    #[value(name = "c>d")]
    Forward,
    #[value(name = "d>c")]
    Reverse,
}

#[derive(Debug, Args)]
pub struct KernelOpts {
    #[arg(long, value_enum, default_value_t = KernelArg::Arithmetic)]
    pub kernel: KernelArg,
    /// Sign tolerance of the arithmetic kernel.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct LabeledInput {
    /// Training CSV (header row, comma separated).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "class")]
    pub label_column: String,
    /// Comma-separated class names from lowest to highest.
    #[arg(long, value_delimiter = ',')]
    pub class_order: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct PreferenceInput {
    /// Instance CSV; rows are referenced by the preference file.
    #[arg(long)]
    pub data: PathBuf,
    /// CSV with columns `better,worse` holding row indices of `--data`.
    #[arg(long)]
    pub prefs: PathBuf,
    /// Column of `--data` to ignore if present.
    #[arg(long, default_value = "class")]
    pub label_column: String,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictClassArgs {
    #[command(flatten)]
    pub input: LabeledInput,
    /// Query CSV with the training columns; rows are normalized with the training scales.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Query rows (of `--queries`, or of `--data` where the row is left out of training).
    #[arg(long, value_delimiter = ',')]
    pub query_row: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PredictRankArgs {
    #[command(flatten)]
    pub input: PreferenceInput,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Rows to rank (of `--queries` or `--data`); all query-file rows when absent.
    #[arg(long, value_delimiter = ',')]
    pub query_row: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ExplainClassArgs {
    #[command(flatten)]
    pub input: LabeledInput,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub query_row: usize,
    /// Class to explain; defaults to the analogical prediction.
    #[arg(long)]
    pub label: Option<String>,
    /// Explain why the query is not in this class instead.
    #[arg(long)]
    pub contrast: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Analogies used to predict the label when `--label` is absent.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0.0)]
    pub min_degree: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ExplainPrefArgs {
    #[command(flatten)]
    pub input: PreferenceInput,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Rows `c,d` of `--queries` or `--data`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub pair: Vec<usize>,
    /// Direction to explain; defaults to the analogical prediction.
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0.0)]
    pub min_degree: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Column to ignore if present.
    #[arg(long, default_value = "class")]
    pub label_column: String,
    /// Share of rows held out as queries.
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    /// Sampled triplets per query; exact enumeration when absent.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    pub floor: f64,
    /// Also write the curve comparison as JSON here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub classes: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Latent score weights, one per feature (default all ones).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<f64>>,
    /// Number of sampled preferences.
    #[arg(long)]
    pub preferences: Option<usize>,
    /// Dataset CSV (features plus a `class` column); standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Preference CSV (`better,worse`).
    #[arg(long)]
    pub prefs_out: Option<PathBuf>,
}

/// Validated run parameters shared by the subcommands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kernel: Kernel,
    pub k: usize,
    pub m: usize,
    pub min_degree: f64,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

impl RunConfig {
    fn new(kernel: &KernelOpts, k: usize) -> Result<Self> {
        let kernel = match kernel.kernel {
            KernelArg::Arithmetic => Kernel::arithmetic(kernel.epsilon)?,
            _ if kernel.epsilon != 0.0 => {
                return Err(Error::InvalidParameter(
                    "--epsilon applies to the arithmetic kernel only".into(),
                ))
            }
            KernelArg::Geometric => Kernel::Geometric,
            KernelArg::Boolean => Kernel::Boolean,
        };
        if k == 0 {
            return Err(Error::InvalidParameter("--k must be at least 1".into()));
        }
        Ok(Self {
            kernel,
            k,
            m: 3,
            min_degree: 0.0,
            seed: None,
            samples: None,
        })
    }

    fn with_explanation(mut self, m: usize, min_degree: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("--m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&min_degree) {
            return Err(Error::InvalidParameter(
                "--min-degree must lie in [0, 1]".into(),
            ));
        }
        self.m = m;
        self.min_degree = min_degree;
        Ok(self)
    }

    fn explain_options(&self) -> ExplainOptions {
        ExplainOptions {
            m: self.m,
            min_degree: self.min_degree,
        }
    }
}

/// Parse `args` (including the program name) and run. Returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty())
                .unwrap_or("invalid usage")
                .trim_start_matches("error: ");
            eprintln!("analogy-error[usage]: {first}");
            return 2;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("analogy-error[{}]: {msg}", e.code());
            1
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| {
            Error::InvalidParameter(format!("cannot start {} workers: {e}", cli.workers))
        })?;
    pool.install(|| match cli.command {
        Command::PredictClass(args) => predict_class(args),
        Command::PredictRank(args) => predict_rank(args),
        Command::ExplainClass(args) => explain_class(args),
        Command::ExplainPref(args) => explain_pref(args),
        Command::Curves(args) => curves(args),
        Command::Synth(args) => synth(args),
    })
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Column names of a CSV header.
fn header(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => Error::Csv {
                path: path.to_path_buf(),
                message: format!("{other:?}"),
            },
        })?;
    let headers = reader.headers().map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(headers.iter().map(str::to_string).collect())
}

/// Load a CSV, dropping `skip_column` if the file has it.
fn load_features(path: &Path, skip_column: &str) -> Result<Table> {
    if header(path)?.iter().any(|h| h == skip_column) {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        let keep: Vec<usize> = (0..headers.len())
            .filter(|&c| headers[c] != skip_column)
            .collect();
        let mut rows = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            let values = keep
                .iter()
                .map(|&c| {
                    record[c]
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::NonNumeric {
                            path: path.to_path_buf(),
                            row,
                            column: headers[c].clone(),
                            value: record[c].to_string(),
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(values);
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Table {
            feature_names: keep.iter().map(|&c| headers[c].clone()).collect(),
            rows,
            labels: None,
        })
    } else {
        data::load_csv(path, None, None)
    }
}

struct LoadedLabeled {
    train: LabeledDataset,
    params: NormalizationParams,
}

fn load_labeled(input: &LabeledInput) -> Result<LoadedLabeled> {
    let table = data::load_csv(
        &input.data,
        Some(&input.label_column),
        input.class_order.as_deref(),
    )?;
    let (normalized, params) = data::normalize(&table)?;
    Ok(LoadedLabeled {
        train: normalized.into_labeled()?,
        params,
    })
}

/// Query vectors plus, for rows of the training file, the row to leave out.
struct Queries {
    rows: Vec<usize>,
    vectors: Vec<Vec<f64>>,
    from_training: bool,
}

impl Queries {
    fn query(&self, i: usize) -> TripletQuery<'_> {
        TripletQuery {
            vector: &self.vectors[i],
            exclude: self.from_training.then_some(self.rows[i]),
        }
    }
}

fn select_queries(
    train_rows: &[Vec<f64>],
    queries: Option<&Path>,
    rows: &[usize],
    params: &NormalizationParams,
    skip_column: &str,
) -> Result<Queries> {
    let (vectors, from_training): (Vec<Vec<f64>>, bool) = match queries {
        Some(path) => (
            params.apply(&load_features(path, skip_column)?)?.rows,
            false,
        ),
        None => (train_rows.to_vec(), true),
    };
    let rows: Vec<usize> = if rows.is_empty() {
        if from_training {
            return Err(Error::InvalidParameter(
                "--query-row is required without --queries".into(),
            ));
        }
        (0..vectors.len()).collect()
    } else {
        rows.to_vec()
    };
    if let Some(&bad) = rows.iter().find(|&&r| r >= vectors.len()) {
        return Err(Error::InvalidParameter(format!(
            "query row {bad} out of range ({} rows)",
            vectors.len()
        )));
    }
    Ok(Queries {
        vectors: rows.iter().map(|&r| vectors[r].clone()).collect(),
        rows,
        from_training,
    })
}

#[derive(Serialize)]
struct ClassPredictionRecord {
    query_row: usize,
    label: Option<String>,
    #[serde(flatten)]
    prediction: ClassPrediction,
}

#[derive(Serialize)]
struct ClassPredictionReport {
    config: RunConfig,
    class_names: Vec<String>,
    predictions: Vec<ClassPredictionRecord>,
}

fn predict_class(args: PredictClassArgs) -> Result<()> {
    let config = RunConfig::new(&args.kernel, args.k)?;
    let LoadedLabeled { train, params } = load_labeled(&args.input)?;
    let queries = select_queries(
        train.instances(),
        args.queries.as_deref(),
        &args.query_row,
        &params,
        &args.input.label_column,
    )?;
    let index = TripletIndex::new(&train, config.kernel);
    let predictions = (0..queries.rows.len())
        .map(|i| {
            let prediction = predict::predict_class(&index, queries.query(i), config.k)?;
            Ok(ClassPredictionRecord {
                query_row: queries.rows[i],
                label: prediction.label().map(|y| train.class_name(y).to_string()),
                prediction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = ClassPredictionReport {
        config,
        class_names: train.class_names().to_vec(),
        predictions,
    };
    emit(&args.output.out, &to_json(&report))
}

fn load_preferences(input: &PreferenceInput) -> Result<(PreferenceDataset, NormalizationParams)> {
    let table = load_features(&input.data, &input.label_column)?;
    let (normalized, params) = data::normalize(&table)?;
    let prefs = data::load_preferences(&input.prefs)?;
    let train = PreferenceDataset::new(normalized.rows, prefs, normalized.feature_names)?;
    Ok((train, params))
}

#[derive(Serialize)]
struct RankingReport {
    config: RunConfig,
    query_rows: Vec<usize>,
    /// Query rows, best first.
    ranked_rows: Vec<usize>,
    ranking: Ranking,
}

fn predict_rank(args: PredictRankArgs) -> Result<()> {
    let config = RunConfig::new(&args.kernel, args.k)?;
    let (train, params) = load_preferences(&args.input)?;
    let queries = select_queries(
        train.instances(),
        args.queries.as_deref(),
        &args.query_row,
        &params,
        &args.input.label_column,
    )?;
    let ranking = predict::predict_ranking(&train, &queries.vectors, config.k, &config.kernel)?;
    let report = RankingReport {
        config,
        ranked_rows: ranking.order.iter().map(|&i| queries.rows[i]).collect(),
        query_rows: queries.rows,
        ranking,
    };
    emit(&args.output.out, &to_json(&report))
}

fn class_by_name(train: &LabeledDataset, name: &str) -> Result<usize> {
    train.class_index(name).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "unknown class '{name}'; known classes: {:?}",
            train.class_names()
        ))
    })
}

fn report_format(f: FormatArg) -> ReportFormat {
    match f {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Text => ReportFormat::Text,
    }
}

fn explain_class(args: ExplainClassArgs) -> Result<()> {
    let config = RunConfig::new(&args.kernel, args.k)?.with_explanation(args.m, args.min_degree)?;
    let LoadedLabeled { train, params } = load_labeled(&args.input)?;
    let queries = select_queries(
        train.instances(),
        args.queries.as_deref(),
        &[args.query_row],
        &params,
        &args.input.label_column,
    )?;
    let query = queries.query(0);
    let index = TripletIndex::new(&train, config.kernel);
    let label = match &args.label {
        Some(name) => class_by_name(&train, name)?,
        None => predict::predict_class(&index, query, config.k)?
            .label()
            .ok_or_else(|| Error::InvalidParameter("no analogy votes; pass --label".into()))?,
    };
    let contrast = args
        .contrast
        .as_deref()
        .map(|c| class_by_name(&train, c))
        .transpose()?;
    let mut explanation =
        explain::explain_class(&index, query, label, contrast, config.explain_options())?;
    explanation.query_index = Some(args.query_row);
    emit(
        &args.output.out,
        &explain::render_report(&explanation, report_format(args.format)),
    )
}

fn explain_pref(args: ExplainPrefArgs) -> Result<()> {
    let config = RunConfig::new(&args.kernel, args.k)?.with_explanation(args.m, args.min_degree)?;
    if args.pair.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "--pair takes two rows c,d; got {}",
            args.pair.len()
        )));
    }
    let (train, params) = load_preferences(&args.input)?;
    let queries = select_queries(
        train.instances(),
        args.queries.as_deref(),
        &args.pair,
        &params,
        &args.input.label_column,
    )?;
    let (c, d) = (&queries.vectors[0], &queries.vectors[1]);
    let direction = match args.direction {
        Some(DirectionArg::Forward) => Direction::Forward,
        Some(DirectionArg::Reverse) => Direction::Reverse,
        None => predict::predict_preference(&train, c, d, config.k, &config.kernel)?
            .direction()
            .unwrap_or(Direction::Forward),
    };
    let query = PairQuery {
        c: c.clone(),
        d: d.clone(),
        c_index: Some(queries.rows[0]),
        d_index: Some(queries.rows[1]),
    };
    let explanation = explain::explain_preference(
        &train,
        query,
        direction,
        &config.kernel,
        config.explain_options(),
    )?;
    emit(
        &args.output.out,
        &explain::render_report(&explanation, report_format(args.format)),
    )
}

fn curves(args: CurvesArgs) -> Result<()> {
    let mut config = RunConfig::new(&args.kernel, 1)?;
    if (args.samples.is_some() || args.holdout > 0.0) && args.seed.is_none() {
        return Err(Error::InvalidParameter(
            "--seed is required with --samples or a holdout split".into(),
        ));
    }
    config.seed = args.seed;
    config.samples = args.samples;
    let table = load_features(&args.data, &args.label_column)?;
    let (normalized, _) = data::normalize(&table)?;
    let rows = normalized.rows;
    let (train_idx, test_idx) = if args.holdout > 0.0 {
        data::holdout_split(rows.len(), args.holdout, args.seed.unwrap_or_default())?
    } else {
        ((0..rows.len()).collect(), (0..rows.len()).collect())
    };
    if test_idx.is_empty() {
        return Err(Error::InvalidParameter(
            "holdout split leaves no queries".into(),
        ));
    }
    let train: Vec<Vec<f64>> = train_idx.iter().map(|&i| rows[i].clone()).collect();
    let queries: Vec<Vec<f64>> = test_idx.iter().map(|&i| rows[i].clone()).collect();
    let grid = analysis::threshold_grid(args.grid)?;
    let sampling = match args.samples {
        Some(num_samples) => Sampling::Sampled {
            num_samples,
            seed: args.seed.unwrap_or_default(),
        },
        None => Sampling::Exact,
    };
    let analogy = analysis::analogy_curve(&train, &queries, &grid, &config.kernel, sampling)?;
    let similarity = analysis::similarity_curve(&train, &queries, &grid)?;
    let mut csv = Vec::new();
    analysis::write_curves_csv(&analogy, &similarity, &mut csv)?;
    emit(
        &args.output.out,
        &String::from_utf8(csv).expect("csv is utf-8"),
    )?;
    if let Some(path) = &args.summary {
        let comparison = analysis::compare_curves(&analogy, &similarity, args.floor)?;
        write_file(path, &to_json(&comparison))?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n: args.n,
        d: args.d,
        num_classes: args.classes,
        weights: args.weights,
        noise: args.noise,
        num_preferences: args.preferences,
    };
    let generated = data::synth_generate(&spec, args.seed)?;
    match &args.out {
        Some(path) => data::write_table_csv(&generated.labeled.to_table(), "class", path)?,
        None => data::write_table(
            &generated.labeled.to_table(),
            "class",
            std::io::stdout().lock(),
            Path::new("<stdout>"),
        )?,
    }
    if let Some(path) = &args.prefs_out {
        data::write_preferences_csv(generated.preferences.preferences(), path)?;
    }
    Ok(())
}
