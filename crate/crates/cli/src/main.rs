//! Command-line front end. Subcommands parse the flat-file inputs,
//! run the library, and write reports; per-record ingest problems go
//! to stderr and are counted, fatal format problems abort.
//!
//! Exit codes: 0 success, 1 fatal format error, 2 domain error,
//! 64 usage error.

use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use venuebench::clmm::{self, PoolRef};
use venuebench::costs::{tc_panel, PanelInputs};
use venuebench::cpmm::{impermanent_loss, IlMode};
use venuebench::domain::Price;
use venuebench::equilibrium::predict_and_fit;
use venuebench::io::{
    emit_deviation_csv, emit_eq_csv, emit_panel_csv, parse_eq_panel_csv, parse_gas_csv,
    parse_lob_csv, parse_pool_v2_csv, parse_pool_v3_json, parse_quotes_csv,
    parse_withdraw_fees_csv, Config, FormatError, IngestError,
};
use venuebench::lob::LobSnapshot;
use venuebench::triarb::{deviation_series, min_abs_combine, rolling_top_decile, PriceSource};

#[derive(Parser)]
#[command(name = "venuebench", version, about = "Venue execution-cost comparison toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the per-venue cost panel over hours, pairs, and trade sizes.
    TcTable(TcTableArgs),
    /// Emit cycle deviations, their combined series, and rolling bands.
    ArbScan(ArbScanArgs),
    /// Print impermanent loss components for a gross price change.
    Il(IlArgs),
    /// Print the cheapest pool for a dollar-sized trade.
    Route(RouteArgs),
    /// Fit predicted equilibrium liquidity against observations.
    EqFit(EqFitArgs),
}

#[derive(clap::Args)]
struct TcTableArgs {
    /// Constant-product pool snapshot CSV.
    #[arg(long = "pools-v2")]
    pools_v2: PathBuf,
    /// Concentrated pool snapshot JSON.
    #[arg(long = "pools-v3")]
    pools_v3: PathBuf,
    /// Order-book ladder CSV; repeatable, the file stem names the venue.
    #[arg(long = "lob", required = true)]
    lob: Vec<PathBuf>,
    /// Hourly gas price and native token dollar price CSV.
    #[arg(long)]
    gas: PathBuf,
    /// Withdrawal fee schedule CSV.
    #[arg(long)]
    wfees: PathBuf,
    /// Trade notionals in dollars, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<f64>,
    /// Drop order-book settlement costs (amortized transfers).
    #[arg(long = "no-dw")]
    no_dw: bool,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ArbScanArgs {
    /// Cycle quote CSV, three legs per exchange.
    #[arg(long)]
    quotes: PathBuf,
    /// Trailing window for the top-decile band, in hours.
    #[arg(long = "window-hours")]
    window_hours: u32,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct IlArgs {
    /// Gross price change P1 / P0.
    #[arg(long = "delta-p", allow_negative_numbers = true)]
    delta_p: f64,
    /// Use a concentrated position instead of full range.
    #[arg(long, requires = "p", requires = "pa")]
    v3: bool,
    /// Current price of the position (with --v3).
    #[arg(long)]
    p: Option<f64>,
    /// Lower range bound of the position (with --v3).
    #[arg(long)]
    pa: Option<f64>,
}

#[derive(clap::Args)]
struct RouteArgs {
    /// Concentrated pool snapshot JSON; the latest hour is routed.
    #[arg(long = "pools-v3")]
    pools_v3: PathBuf,
    /// Trade notional in dollars.
    #[arg(long)]
    size: f64,
    /// Swap gas cost in dollars.
    #[arg(long = "gas-usd")]
    gas_usd: f64,
}

#[derive(clap::Args)]
struct EqFitArgs {
    /// Daily pair panel CSV.
    #[arg(long)]
    panel: PathBuf,
    /// Trailing expectation window in days.
    #[arg(long = "window-days", value_parser = parse_window_days)]
    window_days: usize,
    /// Pool fee rate in basis points.
    #[arg(long = "fee-bps")]
    fee_bps: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn parse_window_days(raw: &str) -> Result<usize, String> {
    let days: usize = raw.parse().map_err(|_| format!("`{raw}` is not an integer"))?;
    if ![5, 14, 20].contains(&days) {
        return Err(format!("window must be 5, 14, or 20 days, got {days}"));
    }
    Ok(days)
}

enum AppError {
    Format(FormatError),
    Domain(String),
}

impl From<FormatError> for AppError {
    fn from(e: FormatError) -> Self {
        AppError::Format(e)
    }
}

fn domain(e: impl std::fmt::Display) -> AppError {
    AppError::Domain(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = !matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if usage { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::TcTable(args) => tc_table(args),
        Command::ArbScan(args) => arb_scan(args),
        Command::Il(args) => il(args),
        Command::Route(args) => route(args),
        Command::EqFit(args) => eq_fit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Format(e)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(AppError::Domain(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn open(path: &Path) -> Result<(BufReader<File>, String), AppError> {
    let label = path.display().to_string();
    let file = File::open(path)
        .map_err(|source| FormatError::Read { file: label.clone(), source })?;
    Ok((BufReader::new(file), label))
}

fn create(path: &Path) -> Result<(BufWriter<File>, String), AppError> {
    let label = path.display().to_string();
    let file = File::create(path)
        .map_err(|source| FormatError::Read { file: label.clone(), source })?;
    Ok((BufWriter::new(file), label))
}

/// Prints each skipped record and returns how many there were.
fn report_ingest(errors: &[IngestError]) -> usize {
    for e in errors {
        eprintln!("{e}");
    }
    errors.len()
}

fn report_ingest_total(total: usize) {
    if total > 0 {
        eprintln!("{total} malformed rows skipped");
    }
}

fn venue_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn tc_table(args: TcTableArgs) -> Result<(), AppError> {
    let config = Config::default();
    for size in &args.sizes {
        if !(size.is_finite() && *size > 0.0) {
            return Err(AppError::Domain(format!("trade size must be positive, got {size}")));
        }
    }
    let mut skipped = 0;

    let (reader, label) = open(&args.pools_v2)?;
    let (pools_v2, errors) = parse_pool_v2_csv(reader, &label)?;
    skipped += report_ingest(&errors);

    let (reader, label) = open(&args.pools_v3)?;
    let (pools_v3, errors) = parse_pool_v3_json(reader, &label)?;
    skipped += report_ingest(&errors);

    let mut books: Vec<(String, Vec<LobSnapshot>)> = Vec::new();
    for path in &args.lob {
        let (reader, label) = open(path)?;
        let (snapshots, errors) = parse_lob_csv(reader, &label)?;
        skipped += report_ingest(&errors);
        books.push((venue_name(path), snapshots));
    }

    let (reader, label) = open(&args.gas)?;
    let (gas, errors) = parse_gas_csv(reader, &label)?;
    skipped += report_ingest(&errors);

    let (reader, label) = open(&args.wfees)?;
    let (withdraw_fees, errors) = parse_withdraw_fees_csv(reader, &label)?;
    skipped += report_ingest(&errors);
    report_ingest_total(skipped);

    // Every pair any input quotes, in label order.
    let mut pairs = std::collections::BTreeMap::new();
    for (_, pool) in &pools_v2 {
        pairs.insert(pool.pair.label(), pool.pair.clone());
    }
    for (_, pool) in &pools_v3 {
        pairs.insert(pool.pair.label(), pool.pair.clone());
    }
    for (_, snapshots) in &books {
        for snapshot in snapshots {
            pairs.insert(snapshot.pair.label(), snapshot.pair.clone());
        }
    }
    let pairs: Vec<_> = pairs.into_values().collect();

    let inputs = PanelInputs {
        pools_v2: &pools_v2,
        pools_v3: &pools_v3,
        books: &books,
        gas: &gas,
        withdraw_fees: &withdraw_fees,
    };
    let rows = tc_panel(&inputs, &args.sizes, &pairs, &config, !args.no_dw);
    let (mut writer, label) = create(&args.out)?;
    emit_panel_csv(&mut writer, &label, &rows)?;
    writer.flush().map_err(|source| FormatError::Read { file: label, source })?;
    Ok(())
}

fn arb_scan(args: ArbScanArgs) -> Result<(), AppError> {
    let (reader, label) = open(&args.quotes)?;
    let (series, errors) = parse_quotes_csv(reader, &label)?;
    report_ingest_total(report_ingest(&errors));

    let deviations: Vec<_> =
        series.iter().map(|s| deviation_series(s, PriceSource::LobMid)).collect();
    let combined = min_abs_combine(&deviations).map_err(domain)?;
    let combined_points: Vec<_> = combined.iter().map(|p| (p.ts_hour, p.theta)).collect();
    let bands = rolling_top_decile(&combined_points, args.window_hours);

    let (mut writer, label) = create(&args.out)?;
    emit_deviation_csv(&mut writer, &label, &deviations, &combined, &bands)?;
    writer.flush().map_err(|source| FormatError::Read { file: label, source })?;
    Ok(())
}

fn il(args: IlArgs) -> Result<(), AppError> {
    if args.v3 {
        let p = Price::new(args.p.expect("clap requires --p")).map_err(domain)?;
        let pa = Price::new(args.pa.expect("clap requires --pa")).map_err(domain)?;
        let breakdown = clmm::leveraged_impermanent_loss(args.delta_p, p, pa).map_err(domain)?;
        println!("lambda = {:.6}", breakdown.lambda);
        println!("base_il = {:.6}", breakdown.base_il);
        println!("il = {:.6}", breakdown.il);
    } else {
        let breakdown = impermanent_loss(args.delta_p, IlMode::Difference).map_err(domain)?;
        println!("r_lp = {:.6}", breakdown.r_lp);
        println!("r_h = {:.6}", breakdown.r_h);
        println!("il = {:.6}", breakdown.il);
    }
    Ok(())
}

fn route(args: RouteArgs) -> Result<(), AppError> {
    let (reader, label) = open(&args.pools_v3)?;
    let (pools, errors) = parse_pool_v3_json(reader, &label)?;
    report_ingest_total(report_ingest(&errors));
    let Some((latest, _)) = pools.last() else {
        return Err(AppError::Domain(format!("{label} holds no pool snapshots")));
    };
    let latest = *latest;
    // Candidates: every fee tier of the first pair listed at the latest hour.
    let at_latest: Vec<_> = pools.iter().filter(|(h, _)| *h == latest).map(|(_, p)| p).collect();
    let pair = at_latest[0].pair.clone();
    let candidates: Vec<_> = at_latest.into_iter().filter(|p| p.pair == pair).collect();
    let refs: Vec<PoolRef> = candidates.iter().map(|p| PoolRef::Concentrated(p)).collect();
    let choice = clmm::best_pool(&refs, args.size, args.gas_usd).map_err(domain)?;
    let chosen = candidates[choice.index];
    println!("pool = {} @ {} bps", chosen.pair.label(), chosen.fee_tier.bps());
    println!("spread_bps = {:.6}", choice.cost.spread.value());
    println!("fee_bps = {:.6}", choice.cost.exchange_fee.value());
    println!("settlement_bps = {:.6}", choice.cost.settlement.value());
    println!("total_bps = {:.6}", choice.cost.total.value());
    Ok(())
}

fn eq_fit(args: EqFitArgs) -> Result<(), AppError> {
    let (reader, label) = open(&args.panel)?;
    let (series, errors) = parse_eq_panel_csv(reader, &label)?;
    report_ingest_total(report_ingest(&errors));

    let (rows, fit) =
        predict_and_fit(&series, args.window_days, args.fee_bps * 1e-4).map_err(domain)?;
    let (mut writer, label) = create(&args.out)?;
    emit_eq_csv(&mut writer, &label, &rows)?;
    writer.flush().map_err(|source| FormatError::Read { file: label, source })?;
    println!("slope = {:.6}", fit.slope);
    println!("intercept = {:.6}", fit.intercept);
    println!("r_squared = {:.6}", fit.r_squared);
    println!("n = {}", fit.n_observations);
    Ok(())
}
