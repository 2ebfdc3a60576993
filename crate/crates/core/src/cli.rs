//! The `lqreg` command-line frontend.
//!
//! Every subcommand writes one table (CSV or JSON) to the output stream and
//! diagnostics to the error stream. Exit codes: 0 success, 1 input or
//! configuration error, 2 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::capm::{analyze_asset, build_report, AnalysisOptions, AssetResult, Criterion, RankingTable, Report};
use crate::error::{Error, Result};
use crate::moments::compute_moments;
use crate::sample::{load_panel, make_pairs, PricePanel, Transform, DEFAULT_DROP_THRESHOLD};
use crate::solver::quartic_loss;
use crate::synth::{generate_raw, GeneratorKind, GeneratorSpec};
use crate::table::{Cell, Format, Table};

#[derive(Debug, Parser)]
#[command(name = "lqreg", version, about = "Least-quartic systematic risk analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics for every series
    Summary(PanelArgs),
    /// Standardized co-moments of each asset against the market
    Comoments(AssetArgs),
    /// LS, LQ and Theil–Sen slopes for one asset or all
    Fit(AssetArgs),
    /// Assets ranked by slope
    Rank(RankArgs),
    /// Quartic loss over a grid of slopes for one asset
    LossCurve(LossCurveArgs),
    /// Draw pairs from a synthetic generator
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Levels,
    #[value(name = "log_returns")]
    LogReturns,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Levels => Transform::Levels,
            TransformArg::LogReturns => Transform::LogReturns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Ls,
    Lq,
    Ts,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Ls => Criterion::Ls,
            CriterionArg::Lq => Criterion::Lq,
            CriterionArg::Ts => Criterion::Ts,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PanelArgs {
    /// Price panel CSV: a date column followed by one column per series
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the market column
    #[arg(long)]
    pub market: String,
    #[arg(long, value_enum, default_value = "levels")]
    pub transform: TransformArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Columns missing more than this fraction of cells are dropped
    #[arg(long, default_value_t = DEFAULT_DROP_THRESHOLD)]
    pub drop_threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct AssetArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Restrict to one asset column
    #[arg(long)]
    pub asset: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long = "top", default_value_t = 10)]
    pub top_n: usize,
    #[arg(long, value_enum, default_value = "lq")]
    pub by: CriterionArg,
}

#[derive(Debug, Clone, Args)]
pub struct LossCurveArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub asset: String,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: GeneratorKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
    pub rho: f64,
    /// Mixture weight; defaults to the generator's own
    #[arg(long)]
    pub contamination: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

fn parse_kind(s: &str) -> std::result::Result<GeneratorKind, String> {
    GeneratorKind::parse(s).ok_or_else(|| {
        let names: Vec<_> = GeneratorKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("unknown generator `{s}`; expected one of {}", names.join(", "))
    })
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{e}");
                1
            } else {
                let _ = write!(out, "{e}");
                0
            };
            return code;
        }
    };
    match execute(&cli.command, err) {
        Ok((table, format)) => match table.write(format, out) {
            Ok(()) => 0,
            Err(e) => report_error(err, &e),
        },
        Err(e) => report_error(err, &e),
    }
}

fn report_error(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Runs a parsed command and returns its table.
pub fn execute(command: &Command, err: &mut dyn Write) -> Result<(Table, Format)> {
    match command {
        Command::Summary(a) => {
            let panel = open(a, err)?;
            let report = build_report(&panel, &options(a));
            Ok((summary_table(&report)?, a.format.into()))
        }
        Command::Comoments(a) => {
            let panel = open(&a.panel, err)?;
            let rows = asset_rows(&panel, a, err)?;
            Ok((comoment_table(&rows), a.panel.format.into()))
        }
        Command::Fit(a) => {
            let panel = open(&a.panel, err)?;
            let rows = asset_rows(&panel, a, err)?;
            Ok((fit_table(&rows), a.panel.format.into()))
        }
        Command::Rank(a) => {
            let panel = open(&a.panel, err)?;
            let report = build_report(&panel, &options(&a.panel));
            warn_failures(&report.rows, err);
            let ranking = report.ranking(a.by.into(), a.top_n)?;
            Ok((rank_table(&ranking), a.panel.format.into()))
        }
        Command::LossCurve(a) => {
            let grid = loss_grid(a.from, a.to, a.step)?;
            let panel = open(&a.panel, err)?;
            let pairs = make_pairs(&panel, &a.asset, a.panel.transform.into())?;
            let ms = compute_moments(&pairs);
            if ms.is_degenerate() {
                return Err(Error::Degenerate("zero standard deviation"));
            }
            let mut table = Table::new(&["b", "loss"]);
            for b in grid {
                table.push(vec![b.into(), quartic_loss(&ms, b).into()]);
            }
            Ok((table, a.panel.format.into()))
        }
        Command::Simulate(a) => {
            let mut spec = GeneratorSpec::new(a.kind, a.n, a.seed).with_rho(a.rho);
            if let Some(c) = a.contamination {
                spec = spec.with_contamination(c);
            }
            let (x, y) = generate_raw(&spec)?;
            let mut table = Table::new(&["x", "y"]);
            for (x, y) in x.into_iter().zip(y) {
                table.push(vec![x.into(), y.into()]);
            }
            Ok((table, a.format.into()))
        }
    }
}

fn options(a: &PanelArgs) -> AnalysisOptions {
    AnalysisOptions {
        transform: a.transform.into(),
    }
}

fn open(a: &PanelArgs, err: &mut dyn Write) -> Result<PricePanel> {
    if !(0.0..=1.0).contains(&a.drop_threshold) {
        return Err(Error::InvalidArgument(format!(
            "--drop-threshold must lie in [0, 1], got {}",
            a.drop_threshold
        )));
    }
    let panel = load_panel(&a.input, &a.market, a.drop_threshold)?;
    for d in panel.dropped() {
        let _ = writeln!(
            err,
            "warning: dropped column `{}` ({:.1}% missing)",
            d.name,
            100.0 * d.missing_fraction
        );
    }
    if panel.rows_removed() > 0 {
        let _ = writeln!(err, "warning: removed {} incomplete rows", panel.rows_removed());
    }
    Ok(panel)
}

fn warn_failures(rows: &[AssetResult], err: &mut dyn Write) {
    for r in rows {
        if let Err(e) = r {
            let _ = writeln!(err, "warning: asset `{}` skipped: {}", e.asset_name, e.error);
        }
    }
}

/// One asset (errors propagate) or all assets (failures kept as flagged rows).
fn asset_rows(panel: &PricePanel, a: &AssetArgs, err: &mut dyn Write) -> Result<Vec<AssetResult>> {
    let opts = options(&a.panel);
    match &a.asset {
        Some(name) => {
            let row = analyze_asset(panel, name, &opts).map_err(|e| e.error)?;
            Ok(vec![Ok(row)])
        }
        None => {
            let rows = build_report(panel, &opts).rows;
            warn_failures(&rows, err);
            Ok(rows)
        }
    }
}

/// Grid `from, from + step, …` up to `to`; the endpoint is kept when the
/// span is a whole number of steps up to rounding.
pub fn loss_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || from >= to || step <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "loss-curve grid needs from < to and step > 0, got from={from} to={to} step={step}"
        )));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

pub const SUMMARY_COLUMNS: [&str; 12] = [
    "series",
    "role",
    "n",
    "mean",
    "variance",
    "st_dev",
    "cv",
    "negative_mean",
    "skewness",
    "excess_kurtosis",
    "z_skew",
    "z_kurt",
];

pub fn summary_table(report: &Report) -> Result<Table> {
    let mut table = Table::new(&SUMMARY_COLUMNS);
    let series = std::iter::once((&report.market, "market"))
        .chain(report.assets.iter().map(|s| (s, "asset")));
    for (s, role) in series {
        let mut row: Vec<Cell> = vec![s.name.as_str().into(), role.into()];
        match &s.stats {
            Ok(st) => row.extend([
                st.n.into(),
                st.mean.into(),
                st.variance.into(),
                st.st_dev.into(),
                st.cv.into(),
                st.negative_mean.into(),
                st.skewness.into(),
                st.excess_kurtosis.into(),
                st.z_skew.into(),
                st.z_kurt.into(),
            ]),
            Err(e) if e.is_numerical() => {
                row.extend(std::iter::repeat_n(Cell::Float(None), SUMMARY_COLUMNS.len() - 2));
            }
            Err(e) => return Err(Error::InvalidArgument(format!("series `{}`: {e}", s.name))),
        }
        table.push(row);
    }
    Ok(table)
}

pub const COMOMENT_COLUMNS: [&str; 14] = [
    "asset_name",
    "n",
    "rho",
    "lambda21",
    "lambda12",
    "lambda31",
    "lambda13",
    "lambda22",
    "sys_coskew",
    "sys_cokurt",
    "kappa13",
    "kappa31",
    "kappa22",
    "flags",
];

pub fn comoment_table(rows: &[AssetResult]) -> Table {
    let mut table = Table::new(&COMOMENT_COLUMNS);
    for r in rows {
        match r {
            Ok(row) => {
                let c = &row.comoments;
                table.push(vec![
                    row.asset_name.as_str().into(),
                    row.n.into(),
                    c.rho.into(),
                    c.lambda21.into(),
                    c.lambda12.into(),
                    c.lambda31.into(),
                    c.lambda13.into(),
                    c.lambda22.into(),
                    c.sys_coskew_defined.then_some(c.sys_coskew).into(),
                    c.sys_cokurt_defined.then_some(c.sys_cokurt).into(),
                    c.kappa13.into(),
                    c.kappa31.into(),
                    c.kappa22.into(),
                    flag_text(&row.flags).into(),
                ]);
            }
            Err(e) => table.push(error_row(&e.asset_name, &e.flags, COMOMENT_COLUMNS.len())),
        }
    }
    table
}

pub const FIT_COLUMNS: [&str; 15] = [
    "asset_name",
    "n",
    "corr",
    "lambda12",
    "lambda21",
    "lambda13",
    "lambda22",
    "lambda31",
    "b_ls",
    "b_lq",
    "b_ts",
    "delta_pct",
    "n_real_roots",
    "solver_path",
    "flags",
];

pub fn fit_table(rows: &[AssetResult]) -> Table {
    let mut table = Table::new(&FIT_COLUMNS);
    for r in rows {
        match r {
            Ok(row) => table.push(vec![
                row.asset_name.as_str().into(),
                row.n.into(),
                row.corr.into(),
                row.lambda12.into(),
                row.lambda21.into(),
                row.lambda13.into(),
                row.lambda22.into(),
                row.lambda31.into(),
                row.b_ls.into(),
                row.b_lq.into(),
                row.b_ts.into(),
                row.delta_defined.then_some(row.delta_pct).into(),
                row.n_real_roots.into(),
                row.solver_path.as_str().into(),
                flag_text(&row.flags).into(),
            ]),
            Err(e) => table.push(error_row(&e.asset_name, &e.flags, FIT_COLUMNS.len())),
        }
    }
    table
}

pub fn rank_table(ranking: &RankingTable) -> Table {
    let mut table = Table::new(&["rank", "asset_name", "criterion", "slope"]);
    for e in &ranking.entries {
        table.push(vec![
            e.rank.into(),
            e.asset_name.as_str().into(),
            ranking.criterion.as_str().into(),
            e.slope.into(),
        ]);
    }
    table
}

fn flag_text(flags: &[crate::capm::RowFlag]) -> String {
    flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(";")
}

/// Name, empty numeric cells, then the flags column.
fn error_row(name: &str, flags: &[crate::capm::RowFlag], width: usize) -> Vec<Cell> {
    let mut row = vec![Cell::from(name)];
    row.extend(std::iter::repeat_n(Cell::Float(None), width - 2));
    let text = if flags.is_empty() { "error".to_string() } else { flag_text(flags) };
    row.push(text.into());
    row
}
