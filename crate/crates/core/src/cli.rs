//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on data errors, 2 on usage errors. Every
//! analysis command writes its outputs and a `run_manifest.json` under the
//! output directory (`--out`, or `KERNEL_PRICING_OUT`, or `./out`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data_io::{
    excess_returns, generate_synthetic, load_panel, write_panel, Dgp, LoadOptions, ReturnPanel,
    SyntheticSpec, Units,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::linearity::{BootstrapWeights, LinearityTestConfig, PValueRule, DEFAULT_REPLICATIONS};
use crate::pricing::{
    characteristic_lines, ff3_lines, linearity_for, regression_curves, security_market_line,
    CharacteristicLineRow, PricingConfig, ALL_COMPANIES, DEFAULT_MIN_OBS,
};
use crate::reporting::{emit_curves, emit_table, CurveSeries, OutputFormat, TableFormat, TableRow};
use crate::semiparam::DEFAULT_GRID_POINTS;
use crate::stats;

pub const OUT_DIR_ENV: &str = "KERNEL_PRICING_OUT";
pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "kernel-pricing",
    version,
    about = "Kernel and semi-parametric asset pricing"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Characteristic lines of every asset.
    FitCl(FitCl),
    /// Security market lines from characteristic-line output.
    FitSml(FitSml),
    /// Three-factor kernel and linear regressions.
    FitFf3(FitFf3),
    /// Bootstrap linearity test for one asset.
    TestLinearity(TestLinearity),
    /// Write a synthetic panel with known ground truth.
    Synth(Synth),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum UnitsArg {
    Percent,
    Decimal,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Percent => Units::Percent,
            UnitsArg::Decimal => Units::Decimal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum WeightsArg {
    Mammen,
    Rademacher,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    Capm,
    Ff3,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Input {
    /// Returns CSV (`date,ticker,ret`), optionally gzip-compressed.
    #[arg(long)]
    returns: PathBuf,
    /// Factors CSV (`date,mkt_rf,smb,hml,rf`), optionally gzip-compressed.
    #[arg(long)]
    factors: PathBuf,
    /// Scale of the input values; decimal inputs are converted to percent.
    #[arg(long, value_enum, default_value = "percent")]
    units: UnitsArg,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    out: PathBuf,
    /// Bootstrap replications.
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    bootstrap: usize,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bootstrap multiplier distribution.
    #[arg(long, value_enum, default_value = "mammen")]
    weights: WeightsArg,
    /// Use `(1 + count) / (B + 1)` p-values.
    #[arg(long)]
    plus_one: bool,
    /// Minimum observations per asset.
    #[arg(long, default_value_t = DEFAULT_MIN_OBS)]
    min_obs: usize,
}

impl Common {
    fn pricing(&self) -> PricingConfig {
        PricingConfig {
            min_obs: self.min_obs,
            test: LinearityTestConfig {
                replications: self.bootstrap,
                seed: self.seed,
                weights: match self.weights {
                    WeightsArg::Mammen => BootstrapWeights::Mammen,
                    WeightsArg::Rademacher => BootstrapWeights::Rademacher,
                },
                p_value: if self.plus_one {
                    PValueRule::PlusOne
                } else {
                    PValueRule::Plain
                },
            },
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct Curves {
    /// Points per curve.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_size: usize,
    /// Confidence band level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Skip curve files.
    #[arg(long)]
    no_curves: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FitCl {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    curves: Curves,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FitSml {
    /// `fit-cl` output (`characteristic_lines.json` or `.csv`).
    #[arg(long)]
    input: PathBuf,
    /// Optional `ticker,segment` CSV; one row per segment plus all companies.
    #[arg(long)]
    segments: Option<PathBuf>,
    #[command(flatten)]
    curves: Curves,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FitFf3 {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct TestLinearity {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    ticker: String,
    #[arg(long, value_enum, default_value = "capm")]
    model: ModelArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Synth {
    /// linear, quadratic, cubic, threshold, ff3-linear or custom-coefficients.
    #[arg(long)]
    dgp: String,
    /// Observations per asset.
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Returns CSV to write; factors go to `<stem>_factors.csv` unless
    /// `--factors-out` is given.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    factors_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    assets: usize,
    /// Standard deviation of the Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Intercept of the regression function.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Comma-separated coefficients (powers of x, or factor loadings).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coefficients: Option<Vec<f64>>,
    /// Kink location of the threshold process (default: market median).
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    /// Constant risk-free rate per period.
    #[arg(long, default_value_t = 0.0)]
    risk_free: f64,
    /// Standard deviation of the market excess return.
    #[arg(long, default_value_t = 1.0)]
    market_sigma: f64,
}

#[derive(Debug, Serialize)]
struct Skipped {
    asset: String,
    reason: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    threads: Option<usize>,
    outputs: Vec<String>,
    skipped: Vec<Skipped>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return 2;
    }
    let threads = cli.threads;
    match exec::with_threads(threads, move || dispatch(cli.command, threads)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::UnknownDgp(_) => 2,
        _ => 1,
    }
}

fn dispatch(command: Command, threads: Option<usize>) -> Result<()> {
    match command {
        Command::FitCl(a) => fit_cl(&a, threads),
        Command::FitSml(a) => fit_sml(&a, threads),
        Command::FitFf3(a) => fit_ff3(&a, threads),
        Command::TestLinearity(a) => test_linearity(&a, threads),
        Command::Synth(a) => synth(&a),
    }
}

fn check_curves(c: &Curves) -> Result<()> {
    if c.grid_size < 2 {
        return Err(Error::Config(format!("--grid-size {} < 2", c.grid_size)));
    }
    if !(c.level > 0.0 && c.level < 1.0) {
        return Err(Error::Config(format!("--level {} outside (0, 1)", c.level)));
    }
    Ok(())
}

fn check_common(c: &Common) -> Result<()> {
    if c.bootstrap == 0 {
        return Err(Error::Config("--bootstrap must be at least 1".into()));
    }
    Ok(())
}

fn load(input: &Input) -> Result<ReturnPanel> {
    load_panel(
        &input.returns,
        &input.factors,
        &LoadOptions {
            units: input.units.into(),
        },
    )
}

fn write_tables<R: TableRow>(
    rows: &[R],
    out: &Path,
    stem: &str,
    format: &TableFormat,
    outputs: &mut Vec<String>,
) -> Result<()> {
    for (ext, kind) in [("csv", OutputFormat::Csv), ("json", OutputFormat::Json)] {
        let name = format!("{stem}.{ext}");
        emit_table(rows, kind, format, &out.join(&name))?;
        outputs.push(name);
    }
    Ok(())
}

fn write_curves(curves: &[CurveSeries], out: &Path, outputs: &mut Vec<String>) -> Result<()> {
    let paths = emit_curves(curves, &out.join("curves"))?;
    for p in paths {
        let name = p.file_name().expect("curve file").to_string_lossy();
        outputs.push(format!("curves/{name}"));
    }
    outputs.push("curves/manifest.json".into());
    Ok(())
}

fn write_manifest<C: Serialize>(
    out: &Path,
    command: &'static str,
    config: &C,
    threads: Option<usize>,
    outputs: Vec<String>,
    skipped: Vec<Skipped>,
) -> Result<()> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        threads,
        outputs,
        skipped,
    };
    let path = out.join(RUN_MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn split_results<R>(results: Vec<(String, Result<R>)>) -> (Vec<R>, Vec<Skipped>) {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (asset, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                eprintln!("warning: skipping {asset}: {e}");
                skipped.push(Skipped {
                    asset,
                    reason: e.to_string(),
                });
            }
        }
    }
    (rows, skipped)
}

fn fit_cl(args: &FitCl, threads: Option<usize>) -> Result<()> {
    check_curves(&args.curves)?;
    check_common(&args.common)?;
    let panel = load(&args.input)?;
    let config = args.common.pricing();
    let (rows, skipped) = split_results(characteristic_lines(&panel, &config));
    let out = &args.common.out;
    let mut outputs = Vec::new();
    write_tables(
        &rows,
        out,
        "characteristic_lines",
        &TableFormat::CHARACTERISTIC_LINE,
        &mut outputs,
    )?;
    if !args.curves.no_curves {
        let per_asset = exec::map_indexed(rows.len(), |i| {
            let row = &rows[i];
            let s = excess_returns(&panel, &row.ticker)?;
            regression_curves(
                &row.ticker,
                &s.market,
                &s.asset,
                row.h,
                args.curves.level,
                args.curves.grid_size,
            )
        });
        let curves: Vec<CurveSeries> = per_asset
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        write_curves(&curves, out, &mut outputs)?;
    }
    write_manifest(out, "fit-cl", args, threads, outputs, skipped)
}

#[derive(Debug, Deserialize)]
struct SmlInput {
    ticker: String,
    mean_return: f64,
    beta_kr: f64,
}

#[derive(Debug, Deserialize)]
struct SegmentEntry {
    ticker: String,
    segment: String,
}

fn read_sml_input(path: &Path) -> Result<Vec<SmlInput>> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows: Vec<CharacteristicLineRow> = serde_json::from_str(&text)?;
        return Ok(rows
            .into_iter()
            .map(|r| SmlInput {
                ticker: r.ticker,
                mean_return: r.mean_return,
                beta_kr: r.beta_kr,
            })
            .collect());
    }
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn read_segments(path: &Path) -> Result<Vec<SegmentEntry>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn fit_sml(args: &FitSml, threads: Option<usize>) -> Result<()> {
    check_curves(&args.curves)?;
    check_common(&args.common)?;
    let input = read_sml_input(&args.input)?;
    let config = args.common.pricing();

    let mut groups: Vec<(String, Vec<&SmlInput>)> = Vec::new();
    if let Some(path) = &args.segments {
        for entry in read_segments(path)? {
            let Some(row) = input.iter().find(|r| r.ticker == entry.ticker) else {
                eprintln!("warning: segment entry {} has no fitted row", entry.ticker);
                continue;
            };
            match groups.iter_mut().find(|(s, _)| *s == entry.segment) {
                Some((_, members)) => members.push(row),
                None => groups.push((entry.segment, vec![row])),
            }
        }
    }
    groups.push((ALL_COMPANIES.to_string(), input.iter().collect()));

    let results = exec::map_indexed(groups.len(), |g| {
        let (segment, members) = &groups[g];
        let betas: Vec<f64> = members.iter().map(|r| r.beta_kr).collect();
        let means: Vec<f64> = members.iter().map(|r| r.mean_return).collect();
        security_market_line(segment, &betas, &means, &config)
    });
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let last = results.len() - 1;
    for (g, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if g != last => {
                eprintln!("warning: skipping segment {}: {e}", groups[g].0);
                skipped.push(Skipped {
                    asset: groups[g].0.clone(),
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }

    let out = &args.common.out;
    let mut outputs = Vec::new();
    write_tables(
        &rows,
        out,
        "security_market_lines",
        &TableFormat::SECURITY_MARKET_LINE,
        &mut outputs,
    )?;
    if !args.curves.no_curves {
        let all = rows.last().expect("all-companies row");
        let betas: Vec<f64> = input.iter().map(|r| r.beta_kr).collect();
        let means: Vec<f64> = input.iter().map(|r| r.mean_return).collect();
        let curves = regression_curves(
            &all.segment,
            &betas,
            &means,
            all.h,
            args.curves.level,
            args.curves.grid_size,
        )?;
        write_curves(&curves, out, &mut outputs)?;
    }
    write_manifest(out, "fit-sml", args, threads, outputs, skipped)
}

fn fit_ff3(args: &FitFf3, threads: Option<usize>) -> Result<()> {
    check_common(&args.common)?;
    let panel = load(&args.input)?;
    let (rows, skipped) = split_results(ff3_lines(&panel, &args.common.pricing()));
    let out = &args.common.out;
    let mut outputs = Vec::new();
    write_tables(
        &rows,
        out,
        "three_factor",
        &TableFormat::THREE_FACTOR,
        &mut outputs,
    )?;
    write_manifest(out, "fit-ff3", args, threads, outputs, skipped)
}

#[derive(Debug, Serialize)]
struct LinearityReport<'a> {
    ticker: &'a str,
    model: ModelArg,
    bandwidths: &'a [f64],
    t_observed: f64,
    p_value: f64,
    replications: usize,
    invalid_replications: usize,
    seed: u64,
    weights: BootstrapWeights,
    bootstrap_mean: f64,
    bootstrap_quantiles: [(f64, f64); 3],
}

fn test_linearity(args: &TestLinearity, threads: Option<usize>) -> Result<()> {
    check_common(&args.common)?;
    let panel = load(&args.input)?;
    let three_factor = matches!(args.model, ModelArg::Ff3);
    let (bw, result) = linearity_for(&panel, &args.ticker, three_factor, &args.common.pricing())?;
    let sorted = stats::sorted_copy(&result.bootstrap_t);
    let report = LinearityReport {
        ticker: &args.ticker,
        model: args.model,
        bandwidths: bw.diag(),
        t_observed: result.t_observed,
        p_value: result.p_value,
        replications: result.replications,
        invalid_replications: result.invalid_replications,
        seed: result.seed,
        weights: result.weights,
        bootstrap_mean: stats::mean(&result.bootstrap_t),
        bootstrap_quantiles: [0.90, 0.95, 0.99].map(|q| (q, stats::quantile_sorted(&sorted, q))),
    };
    let out = &args.common.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let name = format!("linearity_{}.json", args.ticker);
    let path = out.join(&name);
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    println!(
        "{} T = {:.6e} p = {:.4} (B = {})",
        args.ticker, result.t_observed, result.p_value, result.replications
    );
    write_manifest(out, "test-linearity", args, threads, vec![name], Vec::new())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = stem
        .strip_suffix(".csv.gz")
        .or_else(|| stem.strip_suffix(".csv"))
        .unwrap_or(&stem);
    path.with_file_name(format!("{stem}{suffix}"))
}

fn synth(args: &Synth) -> Result<()> {
    let dgp: Dgp = args.dgp.parse()?;
    let mut spec = SyntheticSpec::new(dgp, args.n, args.seed);
    spec.n_assets = args.assets;
    spec.noise_sigma = args.noise;
    spec.risk_free = args.risk_free;
    spec.market_sigma = args.market_sigma;
    if let Some(a) = args.alpha {
        spec.true_params.alpha = a;
    }
    if let Some(c) = &args.coefficients {
        spec.true_params.coefficients = c.clone();
    }
    spec.true_params.threshold = args.threshold;
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    let (panel, truth) = generate_synthetic(&spec)?;
    let factors = args
        .factors_out
        .clone()
        .unwrap_or_else(|| sibling(&args.out, "_factors.csv"));
    write_panel(&panel, &args.out, &factors)?;
    let truth_path = sibling(&args.out, "_truth.json");
    let mut text = serde_json::to_string_pretty(&serde_json::json!({
        "spec": spec,
        "truth": truth,
    }))?;
    text.push('\n');
    std::fs::write(&truth_path, text).map_err(|e| Error::io(&truth_path, e))
}
