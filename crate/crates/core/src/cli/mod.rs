//! Command-line front end: `simulate`, `smooth`, `regress`, `sensitivity`.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::auction_data::{
    filter_outliers, parse_bid_history, parse_lot_catalog, BidHistory, CovariateOptions, Lot,
    PrevPriceTransform,
};
use crate::curve_prep::{prepare_response, Grid, InterpolationSpace, PrepOptions, ResponseKind};
use crate::funcreg::{
    coefficient_curves, column_names, CurveSamples, RegressionResult, ResponseComponent,
};
use crate::pipeline::{regression_units, smooth_lots, AnalysisOptions};
use crate::pspline::{
    default_lambda_values, lambda_sensitivity, SplineConfig, DEFAULT_SENSITIVITY_DEGREES,
};
use crate::report::{
    coefficient_svg, curves_svg, read_curves_csv, write_coefficients_csv, write_curves_csv,
    write_sensitivity_csv, RunHeader, SvgPanel,
};
use crate::synthgen::{gen_dataset, write_dataset, TruthSpec, RNG_NAME};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "AUCTIONFDA_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "auctionfda",
    version,
    about = "Price curves and functional regression for auction bid histories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic catalog, bid histories and the truth record.
    Simulate(SimulateArgs),
    /// Fit a penalized spline to every lot and write curves.csv and curves.svg.
    Smooth(SmoothArgs),
    /// Regress curves on lot covariates at each grid point.
    Regress(RegressArgs),
    /// Sweep spline degree and smoothing parameter.
    Sensitivity(SensitivityArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON truth spec; built-in defaults when omitted.
    pub spec: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the spec's lot count.
    #[arg(long)]
    pub n_lots: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub lots: PathBuf,
    #[arg(long)]
    pub bids: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResponseArg {
    Fraction,
    Logprice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpArg {
    Log,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrevPriceArg {
    Log,
    Log1p,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    #[arg(long, default_value_t = 10)]
    pub knots: usize,
    #[arg(long, default_value_t = 2)]
    pub penalty_order: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = ResponseArg::Fraction)]
    pub response: ResponseArg,
    /// Interpolate log bids or raw amounts between bids.
    #[arg(long, value_enum, default_value_t = InterpArg::Log)]
    pub interp: InterpArg,
    /// Constrain fitted curves to be non-decreasing.
    #[arg(long)]
    pub monotone: bool,
    #[arg(long, value_enum, default_value_t = PrevPriceArg::Log)]
    pub prev_price_transform: PrevPriceArg,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Previously written curves.csv; smoothing is skipped when given.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Drop lots more than this many SDs out on log opening bid, size or prior price.
    #[arg(long)]
    pub outlier_sd: Option<f64>,
    /// Also regress acceleration curves.
    #[arg(long)]
    pub acceleration: bool,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Comma-separated spline degrees; 4,5,6 when omitted. Replaces --degree.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
    /// Comma-separated smoothing parameters; 14 log-spaced values from 0.001
    /// to 100 when omitted. Replaces --lambda.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs, unwritable output.
    #[error("{0}")]
    Invalid(String),
    /// Outputs were written but some lots or cells failed.
    #[error("{0}")]
    Partial(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Partial(_) => 1,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            invalid(format!(
                "{THREADS_ENV} must be a positive integer, got {value:?}"
            ))
        })?;
    // A pool may already exist when called twice in one process (tests).
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Smooth(a) => cmd_smooth(a),
        Command::Regress(a) => cmd_regress(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
    }
}

impl CurveArgs {
    fn options(&self) -> Result<AnalysisOptions, CliError> {
        let grid = Grid::uniform(self.grid).map_err(invalid)?;
        let spline = SplineConfig::new(self.degree, self.knots, self.penalty_order, self.lambda)
            .map_err(invalid)?;
        Ok(AnalysisOptions {
            grid,
            prep: PrepOptions {
                response: match self.response {
                    ResponseArg::Fraction => ResponseKind::FractionOfFinal,
                    ResponseArg::Logprice => ResponseKind::LogPrice,
                },
                interpolation: match self.interp {
                    InterpArg::Log => InterpolationSpace::Log,
                    InterpArg::Raw => InterpolationSpace::Raw,
                },
            },
            spline,
            monotone: self.monotone,
            covariates: CovariateOptions {
                prev_price: match self.prev_price_transform {
                    PrevPriceArg::Log => PrevPriceTransform::Log,
                    PrevPriceArg::Log1p => PrevPriceTransform::Log1p,
                },
            },
        })
    }

    fn record(&self, h: RunHeader) -> RunHeader {
        let h = h
            .flag("grid", self.grid)
            .flag("degree", self.degree)
            .flag("knots", self.knots)
            .flag("penalty-order", self.penalty_order)
            .flag("lambda", self.lambda)
            .flag("response", value_name(self.response))
            .flag("interp", value_name(self.interp));
        let h = if self.monotone {
            h.flag("monotone", "true")
        } else {
            h
        };
        h.flag(
            "prev-price-transform",
            value_name(self.prev_price_transform),
        )
    }
}

fn value_name<V: ValueEnum>(v: V) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

struct Inputs {
    lots: Vec<Lot>,
    bids: BidHistory,
}

impl InputArgs {
    fn load(&self) -> Result<Inputs, CliError> {
        let lots = parse_lot_catalog(&self.lots).map_err(invalid)?;
        let bids = parse_bid_history(&self.bids, Some(&lots)).map_err(invalid)?;
        log::info!("{} lots, {} bids", lots.len(), bids.total_bids());
        Ok(Inputs { lots, bids })
    }

    fn record(&self, h: RunHeader) -> Result<RunHeader, CliError> {
        h.input(&self.lots)
            .and_then(|h| h.input(&self.bids))
            .map_err(invalid)
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        ensure_dir(&self.out)
    }
}

fn ensure_dir(dir: &Path) -> Result<&Path, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| {
        invalid(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut header = RunHeader::new("simulate");
    let mut spec = match &a.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            header = header.input(path).map_err(invalid)?;
            serde_json::from_str::<TruthSpec>(&text)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
        None => TruthSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(n) = a.n_lots {
        spec.n_lots = n;
    }
    let header = header
        .flag("seed", spec.seed)
        .flag("n-lots", spec.n_lots)
        .note("rng", RNG_NAME);
    let ds = gen_dataset(&spec).map_err(invalid)?;
    let out = ensure_dir(&a.out)?;
    let mut preamble = Vec::new();
    header.write_to(&mut preamble).map_err(invalid)?;
    let preamble = String::from_utf8(preamble).map_err(invalid)?;
    write_dataset(&ds, out, &preamble).map_err(invalid)?;
    log::info!(
        "wrote {} lots and {} bids to {}",
        ds.lots.len(),
        ds.bids.total_bids(),
        out.display()
    );
    Ok(())
}

fn cmd_smooth(a: &SmoothArgs) -> Result<(), CliError> {
    let opts = a.curve.options()?;
    let header = a.input.record(a.curve.record(RunHeader::new("smooth")))?;
    let inputs = a.input.load()?;
    let out = a.input.out_dir()?;
    let smoothed = smooth_lots(&inputs.lots, &inputs.bids, &opts).map_err(invalid)?;

    let mut header = header.note("lots", smoothed.curves.len());
    if !smoothed.skipped.is_empty() {
        header = header.note("skipped", smoothed.skipped.join(" "));
    }
    for f in &smoothed.failures {
        header = header.note("failed", format!("{} ({})", f.lot_id, f.reason));
    }
    write_curves_csv(create(&out.join("curves.csv"))?, &header, &smoothed.curves)
        .map_err(invalid)?;

    let series: Vec<(&str, &[f64])> = smoothed
        .curves
        .iter()
        .map(|c| (c.lot_id.as_str(), c.values.as_slice()))
        .collect();
    let title = format!("Smoothed price curves of {} lots", smoothed.curves.len());
    let label = match opts.prep.response {
        ResponseKind::FractionOfFinal => "fraction of final log price",
        ResponseKind::LogPrice => "log price",
    };
    write_text(
        &out.join("curves.svg"),
        &curves_svg(&title, label, opts.grid.points(), &series),
    )?;

    if smoothed.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Partial(format!(
            "{} of {} lots could not be smoothed",
            smoothed.failures.len(),
            inputs.lots.len()
        )))
    }
}

fn cmd_regress(a: &RegressArgs) -> Result<(), CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(invalid(format!(
            "--alpha must lie in (0, 1), got {}",
            a.alpha
        )));
    }
    let opts = a.curve.options()?;
    let mut header = a.input.record(a.curve.record(RunHeader::new("regress")))?;
    header = header.flag("alpha", a.alpha);
    if let Some(k) = a.outlier_sd {
        header = header.flag("outlier-sd", k);
    }
    if a.acceleration {
        header = header.flag("acceleration", "true");
    }
    if let Some(path) = &a.curves {
        header = header
            .flag("curves", file_name(path))
            .input(path)
            .map_err(invalid)?;
    }
    let inputs = a.input.load()?;
    let out = a.input.out_dir()?;

    let lots = match a.outlier_sd {
        Some(k) => {
            let report = filter_outliers(&inputs.lots, k).map_err(invalid)?;
            header = header.note("outliers_removed", report.removed_ids().join(" "));
            log::info!("outlier screen removed {} lots", report.removed.len());
            report.retained
        }
        None => inputs.lots.clone(),
    };

    let mut partial = Vec::new();
    let curves: Vec<CurveSamples> = match &a.curves {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            read_curves_csv(file)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?
                .into_iter()
                .filter(|c| lots.iter().any(|l| l.lot_id == c.lot_id))
                .collect()
        }
        None => {
            let smoothed = smooth_lots(&lots, &inputs.bids, &opts).map_err(invalid)?;
            for f in &smoothed.failures {
                header = header.note("failed", format!("{} ({})", f.lot_id, f.reason));
                partial.push(f.lot_id.clone());
            }
            smoothed.curves.iter().map(CurveSamples::from).collect()
        }
    };

    let units = regression_units(&lots, &inputs.bids, &curves, &opts).map_err(invalid)?;
    let mut components = vec![ResponseComponent::Level, ResponseComponent::Velocity];
    if a.acceleration {
        components.push(ResponseComponent::Acceleration);
    }
    let results: Vec<RegressionResult> = components
        .iter()
        .map(|&c| coefficient_curves(&units, c, a.alpha))
        .collect::<Result<_, _>>()
        .map_err(invalid)?;

    header = header.note("N", units.len());
    let dropped: Vec<usize> = results[0]
        .diagnostics
        .iter()
        .filter(|d| !d.dropped.is_empty())
        .map(|d| d.t_index)
        .collect();
    if !dropped.is_empty() {
        header = header.note("bidders_dropped_at_t_index", compress_ranges(&dropped));
    }
    write_coefficients_csv(create(&out.join("coefficients.csv"))?, &header, &results)
        .map_err(invalid)?;

    for name in column_names() {
        let panels: Vec<SvgPanel> = results
            .iter()
            .filter_map(|r| {
                r.curve(name).map(|c| SvgPanel {
                    title: r.response.as_str(),
                    beta: &c.beta,
                    ci_lo: &c.ci_lo,
                    ci_hi: &c.ci_hi,
                })
            })
            .collect();
        write_text(
            &out.join(format!("coef_{name}.svg")),
            &coefficient_svg(name, opts.grid.points(), &panels),
        )?;
    }

    if partial.is_empty() {
        Ok(())
    } else {
        Err(CliError::Partial(format!(
            "{} lots could not be smoothed: {}",
            partial.len(),
            partial.join(" ")
        )))
    }
}

fn cmd_sensitivity(a: &SensitivityArgs) -> Result<(), CliError> {
    let opts = a.curve.options()?;
    let degrees = a
        .degrees
        .clone()
        .unwrap_or_else(|| DEFAULT_SENSITIVITY_DEGREES.to_vec());
    let lambdas = a.lambdas.clone().unwrap_or_else(default_lambda_values);
    let join = |v: Vec<String>| v.join(",");
    let header = a
        .curve
        .record(RunHeader::new("sensitivity"))
        .flag(
            "degrees",
            join(degrees.iter().map(|d| d.to_string()).collect()),
        )
        .flag(
            "lambdas",
            join(lambdas.iter().map(|l| l.to_string()).collect()),
        );
    let mut header = a.input.record(header)?;
    let inputs = a.input.load()?;
    let out = a.input.out_dir()?;

    let mut responses = Vec::new();
    let mut failed = Vec::new();
    for lot in &inputs.lots {
        let bids = inputs.bids.lot(&lot.lot_id);
        if bids.is_empty() {
            log::warn!("lot {} has no bids; skipped", lot.lot_id);
            continue;
        }
        match prepare_response(
            &lot.lot_id,
            bids,
            lot.auction_open,
            lot.auction_close,
            &opts.grid,
            &opts.prep,
        ) {
            Ok(r) => responses.push(r.values),
            Err(e) => {
                log::warn!("lot {}: {e}", lot.lot_id);
                failed.push(lot.lot_id.clone());
            }
        }
    }
    let table = lambda_sensitivity(
        &responses,
        &opts.grid,
        &degrees,
        &lambdas,
        opts.spline.knots.len(),
        opts.spline.penalty_order,
    )
    .map_err(invalid)?;

    header = header.note("lots", responses.len());
    if let Some(m) = table.minimum() {
        header = header.note("minimum", format!("p={} lambda={}", m.degree, m.lambda));
    }
    write_sensitivity_csv(create(&out.join("sensitivity.csv"))?, &header, &table)
        .map_err(invalid)?;

    let failed_cells = table.cells.iter().filter(|c| c.rmse.is_none()).count();
    if failed.is_empty() && failed_cells == 0 {
        Ok(())
    } else {
        Err(CliError::Partial(format!(
            "{} lots could not be prepared, {failed_cells} cells failed",
            failed.len()
        )))
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// `[1, 2, 3, 7, 9, 10]` to `1-3,7,9-10`.
fn compress_ranges(idx: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let start = idx[i];
        while i + 1 < idx.len() && idx[i + 1] == idx[i] + 1 {
            i += 1;
        }
        parts.push(if idx[i] == start {
            start.to_string()
        } else {
            format!("{start}-{}", idx[i])
        });
        i += 1;
    }
    parts.join(",")
}
