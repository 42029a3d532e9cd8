use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairaudit::engine::{evaluate, named_measure, AssessmentResult};
use fairaudit::report::{self, combine, explain, multireport, unireport, Format, ReportConfig};
use fairaudit::{load_table, ColumnSpec, Dataset, Error, GroupSet, Report};

#[derive(Parser)]
#[command(
    name = "fairaudit",
    version,
    about = "Compositional bias audits of classifier outputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a bias report over every applicable base measure.
    Audit {
        #[command(flatten)]
        io: InputArgs,
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Output file, or `-` for standard output.
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Show how one report cell was computed.
    Explain {
        #[command(flatten)]
        io: InputArgs,
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long)]
        row: String,
        #[arg(long)]
        col: String,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Evaluate one named measure.
    Measure {
        #[command(flatten)]
        io: InputArgs,
        /// Registry name, or `wcb:BASE`.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        intersectional: bool,
        /// `text` prints the value; `json` adds the trace.
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long, default_value = "-")]
        output: String,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    predictions: String,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    scores: Option<String>,
    /// Columns starting with this prefix form the feature vector.
    #[arg(long)]
    features: Option<String>,
    #[arg(long, value_delimiter = ',')]
    sensitive: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    intersectional: bool,
    #[arg(long = "report", value_enum, default_value = "multi")]
    kind: ReportKind,
    /// Tolerated deviation in comparison columns.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// K for the ranking rows.
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Uni,
    Multi,
    Combined,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Text => Format::Text,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Audit {
            io,
            report,
            format,
            output,
        } => {
            let (ds, gs) = load(&io)?;
            let r = build_report(&ds, &gs, &report)?;
            write_output(&output, &report::serialize(&r, format.into()))
        }
        Command::Explain {
            io,
            report,
            row,
            col,
            output,
        } => {
            let (ds, gs) = load(&io)?;
            let r = build_report(&ds, &gs, &report)?;
            let text = explain(&r, &row, &col).map_err(|e| format!("--row/--col: {e}"))?;
            write_output(&output, &text)
        }
        Command::Measure {
            io,
            name,
            epsilon,
            intersectional,
            format,
            output,
        } => {
            let spec = named_measure(&name)
                .map_err(|e| format!("--name: {e}"))?
                .intersectional(intersectional);
            let spec = if epsilon > 0.0 {
                spec.with_epsilon(epsilon)
                    .map_err(|e| format!("--epsilon: {e}"))?
            } else if epsilon < 0.0 {
                return Err(format!("--epsilon: must be nonnegative, got {epsilon}"));
            } else {
                spec
            };
            let (ds, gs) = load(&io)?;
            let result = evaluate(&spec, &ds, &gs).map_err(|e| flag_context(e, &io))?;
            let text = match format {
                FormatArg::Json => measure_json(&name, &ds, &result),
                FormatArg::Text | FormatArg::Csv => measure_text(&result),
            };
            write_output(&output, &text)
        }
    }
}

fn load(io: &InputArgs) -> Result<(Dataset, GroupSet), String> {
    let file = File::open(&io.input).map_err(|e| format!("--input {}: {e}", io.input.display()))?;
    let spec = ColumnSpec {
        predictions: io.predictions.clone(),
        labels: io.labels.clone(),
        scores: io.scores.clone(),
        feature_prefix: io.features.clone(),
        sensitive: io.sensitive.clone(),
    };
    let (ds, categories) = load_table(file, &spec).map_err(|e| flag_context(e, io))?;
    let gs = if categories.is_empty() {
        GroupSet::empty(ds.len())
    } else {
        GroupSet::from_categories(&categories).map_err(|e| format!("--sensitive: {e}"))?
    };
    Ok((ds, gs))
}

/// Prefix an error with the flag that introduced the offending column.
fn flag_context(err: Error, io: &InputArgs) -> String {
    let flag = match &err {
        Error::MissingColumn(c) | Error::InvalidCell { column: c, .. } => {
            if *c == io.predictions {
                Some("--predictions")
            } else if Some(c) == io.labels.as_ref() {
                Some("--labels")
            } else if Some(c) == io.scores.as_ref() {
                Some("--scores")
            } else if io.sensitive.contains(c) {
                Some("--sensitive")
            } else {
                Some("--features")
            }
        }
        Error::MissingFeatures | Error::FeatureDimension { .. } => Some("--features"),
        Error::Csv(_) | Error::Io(_) | Error::EmptyDataset => Some("--input"),
        Error::NothingToReport => Some("--labels/--scores"),
        _ => None,
    };
    match flag {
        Some(flag) => format!("{flag}: {err}"),
        None => err.to_string(),
    }
}

fn build_report(ds: &Dataset, gs: &GroupSet, args: &ReportArgs) -> Result<Report, String> {
    if args.epsilon < 0.0 {
        return Err(format!(
            "--epsilon: must be nonnegative, got {}",
            args.epsilon
        ));
    }
    let config = ReportConfig {
        intersectional: args.intersectional,
        epsilon: args.epsilon,
        top_k: args.top_k,
        ..ReportConfig::default()
    };
    let context = |e: Error| match e {
        Error::Parameter(m) if m.starts_with("top-k") => format!("--top-k: {m}"),
        Error::NothingToReport => format!("--labels/--scores: {e}"),
        e => e.to_string(),
    };
    match args.kind {
        ReportKind::Multi => multireport(ds, gs, &config).map_err(context),
        ReportKind::Uni => unireport(ds, gs, &config).map_err(context),
        ReportKind::Combined => {
            let multi = multireport(ds, gs, &config).map_err(context)?;
            let uni = unireport(ds, gs, &config).map_err(context)?;
            combine(&[multi, uni]).map_err(context)
        }
    }
}

fn measure_text(result: &AssessmentResult) -> String {
    let mut text = format!("{}\n", result.value);
    if let Some(reason) = result.value.na_reason() {
        text.push_str(&format!("NA: {reason}\n"));
    }
    for warning in &result.trace.warnings {
        text.push_str(&format!("warning: {warning}\n"));
    }
    text
}

fn measure_json(name: &str, ds: &Dataset, result: &AssessmentResult) -> String {
    // A one-cell report reuses the report serializer for the trace.
    let r = Report {
        kind: "measure".into(),
        rows: vec![name.to_owned()],
        columns: vec![result.trace.spec.to_string()],
        cells: vec![vec![Some(result.clone())]],
        metadata: report::Metadata {
            n: ds.len(),
            dataset_columns: ds.column_names().to_vec(),
            groups: result.trace.groups.iter().map(|g| g.name.clone()).collect(),
            selector: result.trace.spec.selector.strategy.to_string(),
            intersectional: result.trace.spec.selector.intersectional,
            tool_version: report::TOOL_VERSION.to_owned(),
        },
    };
    report::serialize(&r, Format::Json)
}

fn write_output(path: &str, text: &str) -> Result<(), String> {
    if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(text.as_bytes())
            .map_err(|e| format!("--output: {e}"))
    } else {
        std::fs::write(path, text).map_err(|e| format!("--output {path}: {e}"))
    }
}
