use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ehsense::acquisition::{quantize, AdcConfig, DigitTrace};
use ehsense::dataset::{cycle_conditions, generate_benchmark, load_traces, write_digit_traces, write_voltage_traces, BenchmarkSpec, TraceSet};
use ehsense::element::parse_selection;
use ehsense::evaluation::{ablate_channels, loco_cv, report};
use ehsense::features::{featurize_digit_traces, featurize_traces, FeatureMatrix};
use ehsense::forest::{load_model, save_model, train, FeaturesPerSplit, ForestConfig};
use ehsense::profiles::ProfileConfig;
use ehsense::{ElementKind, Error, Result};

#[derive(Parser)]
#[command(name = "ehsense", version, about = "Place recognition from energy-harvester voltages")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the nine-place benchmark and write a trace CSV.
    Gen(GenArgs),
    /// Turn a trace CSV into a feature CSV.
    Featurize(FeaturizeArgs),
    /// Train a forest on a feature CSV and save the model.
    Train(TrainArgs),
    /// Predict labels for a feature CSV with a saved model.
    Predict(PredictArgs),
    /// Leave-one-case-out evaluation.
    Eval(EvalArgs),
    /// Evaluate every non-empty subset of the selected channels.
    Ablate(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Units {
    Mv,
    Digit,
}

#[derive(Args)]
struct AdcArgs {
    #[arg(long, default_value_t = 10)]
    bits: u32,
    #[arg(long, default_value_t = 3600.0)]
    full_scale_mv: f64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    /// Number of cases; defaults to the configured conditions (ten).
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long, value_enum, default_value_t = Units::Mv)]
    units: Units,
    /// Sample rate in Hz, overriding the profile settings.
    #[arg(long)]
    rate: Option<f64>,
    #[command(flatten)]
    adc: AdcArgs,
    /// Profile configuration to simulate instead of the built-in one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: Option<PathBuf>,
    #[arg(long, short, required_unless_present = "dump_config")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    window_s: f64,
    /// Comma-separated channels, e.g. SC1,SC2,PIEZO (default: all in the file).
    #[arg(long)]
    channels: Option<String>,
    /// Only used for millivolt traces; digit traces carry their resolution.
    #[command(flatten)]
    adc: AdcArgs,
}

#[derive(Args)]
struct ForestArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    /// `sqrt` or a feature count.
    #[arg(long, default_value = "sqrt")]
    features_per_split: String,
}

impl ForestArgs {
    fn config(&self) -> Result<ForestConfig> {
        let cfg = ForestConfig {
            n_trees: self.trees,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            features_per_split: self.features_per_split.parse::<FeaturesPerSplit>()?,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    channels: Option<String>,
    #[command(flatten)]
    forest: ForestArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[arg(long, short)]
    input: PathBuf,
    /// Prediction CSV; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    channels: Option<String>,
    #[command(flatten)]
    forest: ForestArgs,
    /// Directory for the report files; only the text table goes to stdout
    /// when omitted.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Featurize(a) => featurize(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
    }
}

fn adc_config(adc: &AdcArgs, sample_rate_hz: f64) -> Result<AdcConfig> {
    let cfg = AdcConfig {
        resolution_bits: adc.bits,
        full_scale_mv: adc.full_scale_mv,
        sample_rate_hz,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        Error::Parse { line, message } => Error::Validation(format!("{}: line {line}: {message}", path.display())),
        other => other,
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| with_path(path, e.into()))
}

fn selection(list: &Option<String>) -> Result<Option<Vec<ElementKind>>> {
    list.as_deref().map(parse_selection).transpose()
}

fn load_matrix(path: &Path, channels: &Option<String>) -> Result<FeatureMatrix> {
    let file = fs::File::open(path).map_err(|e| with_path(path, e.into()))?;
    let matrix = FeatureMatrix::read_csv(io::BufReader::new(file)).map_err(|e| with_path(path, e))?;
    match selection(channels)? {
        Some(sel) => matrix.select_channels(&sel),
        None => Ok(matrix),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(path) => ProfileConfig::load(path)?.to_spec(a.seed)?,
        None => BenchmarkSpec::with_cases(10, a.seed),
    };
    if let Some(rate) = a.rate {
        spec.sample_rate_hz = rate;
    }
    if let Some(n) = a.cases {
        if n == 0 {
            return Err(Error::Config("--cases must be >= 1".into()));
        }
        spec.conditions = cycle_conditions(&spec.conditions, n);
    }
    spec.validate()?;
    if let Some(path) = &a.dump_config {
        let mut out = create(path)?;
        out.write_all(ProfileConfig::from_spec(&spec).to_toml()?.as_bytes())?;
        out.flush()?;
        if a.out.is_none() {
            return Ok(());
        }
    }
    let traces = generate_benchmark(&spec)?;
    let path = a.out.as_deref().expect("clap requires --out");
    let mut out = create(path)?;
    match a.units {
        Units::Mv => write_voltage_traces(&traces, &mut out)?,
        Units::Digit => {
            let adc = adc_config(&a.adc, spec.sample_rate_hz)?;
            let digits = traces.iter().map(|t| quantize(t, &adc)).collect::<Result<Vec<DigitTrace>>>()?;
            write_digit_traces(&digits, adc.resolution_bits, &mut out)?;
        }
    }
    out.flush()?;
    let samples: usize = traces.iter().map(|t| t.len()).sum();
    eprintln!("wrote {} cases, {samples} samples to {}", traces.len(), path.display());
    Ok(())
}

fn featurize(a: FeaturizeArgs) -> Result<()> {
    let traces = load_traces(&a.input).map_err(|e| with_path(&a.input, e))?;
    let file_channels = |kinds: Vec<ElementKind>| -> Result<Vec<ElementKind>> {
        match selection(&a.channels)? {
            Some(sel) => {
                if let Some(k) = sel.iter().find(|k| !kinds.contains(k)) {
                    return Err(Error::MissingChannel(*k));
                }
                Ok(sel)
            }
            None => Ok(kinds),
        }
    };
    let matrix = match &traces {
        TraceSet::Millivolts(ts) => {
            let sel = file_channels(ts[0].channels.keys().copied().collect())?;
            let adc = adc_config(&a.adc, ts[0].sample_rate_hz)?;
            featurize_traces(ts, &adc, a.window_s, &sel)?
        }
        TraceSet::Digits { traces: ts, .. } => {
            let sel = file_channels(ts[0].channels.keys().copied().collect())?;
            featurize_digit_traces(ts, a.window_s, &sel)?
        }
    };
    let mut out = create(&a.out)?;
    matrix.write_csv(&mut out)?;
    out.flush()?;
    eprintln!(
        "wrote {} windows x {} features to {}",
        matrix.len(),
        matrix.n_features(),
        a.out.display()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let cfg = a.forest.config()?;
    let matrix = load_matrix(&a.input, &a.channels)?;
    let model = train(&matrix, &cfg)?;
    save_model(&model, &a.out).map_err(|e| with_path(&a.out, e))?;
    eprintln!(
        "trained {} trees on {} rows, {} classes",
        model.trees.len(),
        matrix.len(),
        model.class_labels.len()
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model).map_err(|e| with_path(&a.model, e))?;
    let matrix = load_matrix(&a.input, &None)?.select_channels(&model.channel_selection)?;
    let mut text = String::from("row,case_id,truth,predicted\n");
    let mut correct = 0usize;
    for (i, row) in matrix.rows.iter().enumerate() {
        let p = model.predict(&row.values)?;
        if p == row.label {
            correct += 1;
        }
        text.push_str(&format!("{i},{},{},{p}\n", row.case_id, row.label));
    }
    match &a.out {
        Some(path) => {
            let mut out = create(path)?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    if !matrix.is_empty() {
        eprintln!("accuracy {:.3} on {} rows", correct as f64 / matrix.len() as f64, matrix.len());
    }
    Ok(())
}

fn write_reports(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| with_path(dir, e.into()))?;
    for (name, body) in files {
        let path = dir.join(name);
        let mut out = create(&path)?;
        out.write_all(body.as_bytes())?;
        out.flush()?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let cfg = a.forest.config()?;
    let matrix = load_matrix(&a.input, &a.channels)?;
    let r = loco_cv(&matrix, &cfg)?;
    let text = report::evaluation_text(&r);
    if let Some(dir) = &a.out_dir {
        write_reports(
            dir,
            &[
                ("evaluation.txt", text.clone()),
                ("evaluation.csv", report::evaluation_csv(&r)),
                ("folds.csv", report::folds_csv(&r)),
            ],
        )?;
    }
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn ablate(a: EvalArgs) -> Result<()> {
    let cfg = a.forest.config()?;
    let matrix = load_matrix(&a.input, &None)?;
    let channels = selection(&a.channels)?.unwrap_or_else(|| matrix.channel_selection.clone());
    let r = ablate_channels(&matrix, &channels, &cfg)?;
    let text = report::ablation_text(&r);
    if let Some(dir) = &a.out_dir {
        write_reports(
            dir,
            &[("ablation.txt", text.clone()), ("ablation.csv", report::ablation_csv(&r))],
        )?;
    }
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}
