//! Command-line driver: collection, resumption, reports, CSV export, and
//! identity verification.
//!
//! Exit codes: 0 success, 1 usage, 2 runtime failure, 3 verification
//! failure. Results go to standard output; progress goes to standard error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis;
use crate::collector::Checkpoint;
use crate::pipeline::{self, RunConfig};
use crate::store::{self, CheckpointGrid, ExportData};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_RUNTIME: i32 = 2;
const EXIT_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "gaplab",
    version,
    about = "Prime gap statistics laboratory",
    long_about = "Streams a bit-packed segmented sieve through a statistics collector, \
checkpoints the results, and compares them against the closed-form gap models."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sieve up to a limit, collecting statistics and writing checkpoints.
    Collect(CollectArgs),
    /// Continue an interrupted run to its recorded limit.
    Resume(ResumeArgs),
    /// Print a result table from a stored run (or, for andrica, on the fly).
    Report(ReportArgs),
    /// Export results as CSV.
    Export(ExportArgs),
    /// Replay the exact identities over every stored checkpoint.
    Verify(VerifyArgs),
}

/// Accepts plain integers or the power notation "2^N".
fn parse_limit(s: &str) -> Result<u64, String> {
    if let Some(exp) = s.strip_prefix("2^") {
        let k: u32 = exp.parse().map_err(|e| format!("bad exponent: {e}"))?;
        if k >= 63 {
            return Err("2^63 and beyond do not fit the sieve".into());
        }
        Ok(1u64 << k)
    } else {
        s.parse().map_err(|e| format!("bad integer: {e}"))
    }
}

/// Even pair distances only, capped at the window the collector supports.
fn parse_pair_window(s: &str) -> Result<u64, String> {
    let v: u64 = s.parse().map_err(|e| format!("bad integer: {e}"))?;
    if !v.is_multiple_of(2) {
        return Err(format!("pair distance must be even, got {v}"));
    }
    if v > crate::collector::MAX_PAIR_WINDOW {
        return Err(format!(
            "pair distance cap is {}",
            crate::collector::MAX_PAIR_WINDOW
        ));
    }
    Ok(v)
}

/// "pow2" or "geom:BASE:RATIO".
fn parse_grid(s: &str) -> Result<CheckpointGrid, String> {
    if s == "pow2" {
        return Ok(CheckpointGrid::PowersOfTwo);
    }
    if let Some(rest) = s.strip_prefix("geom:") {
        let (base, ratio) = rest
            .split_once(':')
            .ok_or_else(|| "geom grid needs geom:BASE:RATIO".to_string())?;
        let base: f64 = base.parse().map_err(|e| format!("bad base: {e}"))?;
        let ratio: f64 = ratio.parse().map_err(|e| format!("bad ratio: {e}"))?;
        if base.is_nan() || ratio.is_nan() || base < 3.0 || ratio <= 1.0 {
            return Err("geom grid needs base >= 3 and ratio > 1".into());
        }
        return Ok(CheckpointGrid::Geometric { base, ratio });
    }
    Err(format!("unknown grid {s:?} (try pow2 or geom:1000:1.03)"))
}

#[derive(Args, Debug)]
struct CollectArgs {
    /// Inclusive upper bound, e.g. 2^26 or 1000000.
    #[arg(long, value_parser = parse_limit)]
    limit: u64,
    /// Run directory.
    #[arg(long, env = "GAPLAB_OUT")]
    out: PathBuf,
    /// Checkpoint grid: pow2, or geom:BASE:RATIO.
    #[arg(long, default_value = "pow2", value_parser = parse_grid)]
    grid: CheckpointGrid,
    /// Odd numbers per sieve segment (power of two).
    #[arg(long, value_parser = parse_limit, default_value = "2^23")]
    segment_bits: u64,
    /// Largest pair distance to count; 0 disables pair counting.
    #[arg(long, default_value_t = 512, value_parser = parse_pair_window)]
    pair_dmax: u64,
    /// Sieving worker threads.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct ResumeArgs {
    /// Run directory.
    #[arg(long, env = "GAPLAB_OUT")]
    out: PathBuf,
    /// Sieving worker threads.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Table1,
    #[value(alias = "table2")]
    Andrica,
    Maxgaps,
    Brun,
    Firstocc,
    Mertens,
    ScalingSlopes,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(value_enum)]
    kind: ReportKind,
    /// Run directory (not needed for andrica).
    #[arg(long, env = "GAPLAB_OUT")]
    out: Option<PathBuf>,
    /// Rows to print for ranked tables.
    #[arg(long, default_value_t = 10)]
    limit_rows: usize,
    /// Sieve bound for the on-the-fly andrica report.
    #[arg(long, value_parser = parse_limit, default_value = "1000000")]
    limit: u64,
    /// Count threshold for scaling-slope fits.
    #[arg(long, default_value_t = 1000)]
    tau_min: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    Tau,
    Pairs,
    Brun,
    Maxgap,
    Firstocc,
    Table1,
    Table2,
    Scaling,
    Mertens,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(value_enum)]
    kind: ExportKind,
    /// Run directory (not needed for table2).
    #[arg(long, env = "GAPLAB_OUT")]
    out: Option<PathBuf>,
    /// Destination CSV path.
    #[arg(long)]
    csv: PathBuf,
    /// Sieve bound for the table2 export.
    #[arg(long, value_parser = parse_limit, default_value = "1000000")]
    limit: u64,
    /// Rows for the table2 export.
    #[arg(long, default_value_t = 10)]
    limit_rows: usize,
    /// Count threshold for the scaling export.
    #[arg(long, default_value_t = 1000)]
    tau_min: u64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Run directory.
    #[arg(long, env = "GAPLAB_OUT")]
    out: PathBuf,
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too and must exit 0.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gaplab: error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Collect(a) => {
            let mut cfg = RunConfig::new(a.limit);
            cfg.grid = a.grid;
            cfg.segment_bits = a.segment_bits;
            cfg.pair_window = a.pair_dmax;
            cfg.workers = a.threads.max(1);
            cfg.progress = !a.quiet;
            let summary = pipeline::collect(&cfg, &a.out)
                .with_context(|| format!("collect into {}", a.out.display()))?;
            emit(&format!(
                "collected up to {} ({} checkpoints written, pi = {})\n",
                summary.completed_up_to, summary.checkpoints_written, summary.pi
            ))?;
            Ok(EXIT_OK)
        }
        Command::Resume(a) => {
            let summary = pipeline::resume(&a.out, a.threads.max(1), !a.quiet)
                .with_context(|| format!("resume {}", a.out.display()))?;
            emit(&format!(
                "resumed to {} ({} checkpoints written)\n",
                summary.completed_up_to, summary.checkpoints_written
            ))?;
            Ok(EXIT_OK)
        }
        Command::Report(a) => {
            report(&a)?;
            Ok(EXIT_OK)
        }
        Command::Export(a) => {
            export(&a)?;
            Ok(EXIT_OK)
        }
        Command::Verify(a) => {
            let report = pipeline::verify_dir(&a.out)
                .with_context(|| format!("verify {}", a.out.display()))?;
            let mut out = String::new();
            for ck in &report.checkpoints {
                if ck.failures.is_empty() {
                    let _ = writeln!(out, "x={} ok", ck.x);
                } else {
                    for f in &ck.failures {
                        let _ = writeln!(out, "x={} FAIL: {}", ck.x, f);
                    }
                }
            }
            let _ = writeln!(
                out,
                "identities hold at {}/{} checkpoints",
                report.passed(),
                report.total()
            );
            emit(&out)?;
            Ok(if report.all_ok() && report.total() > 0 {
                EXIT_OK
            } else {
                EXIT_VERIFY
            })
        }
    }
}

fn load_run(dir: &Option<PathBuf>) -> Result<Vec<Checkpoint>> {
    let dir = dir
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs --out (or GAPLAB_OUT)"))?;
    let cks = store::load_checkpoints(dir)
        .with_context(|| format!("load checkpoints from {}", dir.display()))?;
    if cks.is_empty() {
        bail!("no checkpoints in {}", dir.display());
    }
    Ok(cks)
}

/// Format a threshold as 2^k when it is a power of two.
fn fmt_x(x: u64) -> String {
    if x.is_power_of_two() {
        format!("2^{}", x.trailing_zeros())
    } else {
        x.to_string()
    }
}

/// Print to stdout, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) -> Result<()> {
    match io::stdout().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(e.into()),
    }
}

fn report(a: &ReportArgs) -> Result<()> {
    let mut out = String::new();
    match a.kind {
        ReportKind::Table1 => {
            let cks = load_run(&a.out)?;
            let rows = analysis::table1(&cks)?;
            let _ = writeln!(
                out,
                "{:>6} {:>20} {:>20} {:>9} {:>20} {:>9}",
                "x", "sum_sq_gaps", "hb_model", "ratio_hb", "c5_model", "ratio_c5"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>6} {:>20} {:>20} {:>9.4} {:>20} {:>9.4}",
                    fmt_x(r.x),
                    r.sum_sq_gaps,
                    r.hb_model,
                    r.ratio_hb,
                    r.c5_model,
                    r.ratio_c5
                );
            }
        }
        ReportKind::Andrica => {
            let rows = analysis::andrica_table(a.limit, a.limit_rows)?;
            let _ = writeln!(
                out,
                "{:>6} {:>10} {:>10} {:>5} {:>10}",
                "n", "p_n", "p_next", "d_n", "a_n"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>6} {:>10} {:>10} {:>5} {:>10.7}",
                    r.n, r.p, r.p_next, r.gap, r.a
                );
            }
        }
        ReportKind::Maxgaps => {
            let cks = load_run(&a.out)?;
            let rows = analysis::maxgap_rows(cks.last().unwrap())?;
            let _ = writeln!(
                out,
                "{:>5} {:>12} {:>12} {:>10} {:>10} {:>7}",
                "gap", "lower", "upper", "g_model", "cramer", "G/g"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>5} {:>12} {:>12} {:>10.3} {:>10.3} {:>7.3}",
                    r.gap,
                    r.lower,
                    r.upper,
                    r.g_model,
                    r.cramer,
                    r.gap as f64 / r.g_model
                );
            }
        }
        ReportKind::Brun => {
            let cks = load_run(&a.out)?;
            let last = cks.last().unwrap();
            let rows = analysis::brun_rows(last)?;
            let _ = writeln!(
                out,
                "partial sums at x = {}; extrapolation completes the tail",
                fmt_x(last.x)
            );
            let _ = writeln!(
                out,
                "{:>5} {:>12} {:>14} {:>12} {:>9}",
                "d", "partial", "extrapolated", "c6_limit", "extr/c6"
            );
            for r in rows.iter().take(a.limit_rows.max(1)) {
                let _ = writeln!(
                    out,
                    "{:>5} {:>12.8} {:>14.8} {:>12.8} {:>9.4}",
                    r.d,
                    r.partial,
                    r.extrapolated,
                    r.c6,
                    r.extrapolated / r.c6
                );
            }
        }
        ReportKind::Firstocc => {
            let cks = load_run(&a.out)?;
            let rows = analysis::firstocc_rows(cks.last().unwrap())?;
            let _ = writeln!(
                out,
                "{:>5} {:>14} {:>14} {:>14}",
                "d", "p_f", "c7_model", "shanks"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>5} {:>14} {:>14.1} {:>14.1}",
                    r.d, r.p_f, r.c7, r.shanks
                );
            }
        }
        ReportKind::Mertens => {
            let cks = load_run(&a.out)?;
            let rows = analysis::mertens_rows(&cks)?;
            let _ = writeln!(
                out,
                "{:>10} {:>18} {:>18} {:>12}",
                "x", "sum_1_over_p", "loglog_x_plus_M", "diff"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>10} {:>18.12} {:>18.12} {:>12.3e}",
                    fmt_x(r.x),
                    r.sum,
                    r.model,
                    r.diff
                );
            }
        }
        ReportKind::ScalingSlopes => {
            let cks = load_run(&a.out)?;
            let _ = writeln!(
                out,
                "{:>10} {:>9} {:>9} {:>7} {:>10}",
                "x", "slope", "a", "points", "rms_log"
            );
            for ck in &cks {
                match analysis::scaling_slope(ck, a.tau_min) {
                    Ok(fit) => {
                        let _ = writeln!(
                            out,
                            "{:>10} {:>9.4} {:>9.4} {:>7} {:>10.3e}",
                            fmt_x(ck.x),
                            fit.b,
                            fit.a,
                            fit.points_used,
                            fit.residual_rms
                        );
                    }
                    Err(analysis::AnalysisError::InsufficientData { .. }) => {
                        let _ = writeln!(
                            out,
                            "{:>10} (not enough points in the linear region)",
                            fmt_x(ck.x)
                        );
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    emit(&out)?;
    Ok(())
}

fn export(a: &ExportArgs) -> Result<()> {
    match a.kind {
        ExportKind::Table2 => {
            let rows = analysis::andrica_table(a.limit, a.limit_rows)?;
            store::export_csv(&ExportData::Table2(&rows), &a.csv)?;
        }
        ExportKind::Tau => {
            let cks = load_run(&a.out)?;
            let rows = analysis::tau_rows(&cks)?;
            store::export_csv(&ExportData::Tau(&rows), &a.csv)?;
        }
        ExportKind::Pairs => {
            let cks = load_run(&a.out)?;
            let rows = analysis::pairs_rows(&cks)?;
            store::export_csv(&ExportData::Pairs(&rows), &a.csv)?;
        }
        ExportKind::Brun => {
            let cks = load_run(&a.out)?;
            let rows = analysis::brun_rows(cks.last().unwrap())?;
            store::export_csv(&ExportData::Brun(&rows), &a.csv)?;
        }
        ExportKind::Maxgap => {
            let cks = load_run(&a.out)?;
            let rows = analysis::maxgap_rows(cks.last().unwrap())?;
            store::export_csv(&ExportData::Maxgap(&rows), &a.csv)?;
        }
        ExportKind::Firstocc => {
            let cks = load_run(&a.out)?;
            let rows = analysis::firstocc_rows(cks.last().unwrap())?;
            store::export_csv(&ExportData::Firstocc(&rows), &a.csv)?;
        }
        ExportKind::Table1 => {
            let cks = load_run(&a.out)?;
            let rows = analysis::table1(&cks)?;
            store::export_csv(&ExportData::Table1(&rows), &a.csv)?;
        }
        ExportKind::Scaling => {
            let cks = load_run(&a.out)?;
            let rows = analysis::scaling_rows(&cks, a.tau_min);
            store::export_csv(&ExportData::Scaling(&rows), &a.csv)?;
        }
        ExportKind::Mertens => {
            let cks = load_run(&a.out)?;
            let rows = analysis::mertens_rows(&cks)?;
            store::export_csv(&ExportData::Mertens(&rows), &a.csv)?;
        }
    }
    emit(&format!("wrote {}\n", a.csv.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_parser() {
        assert_eq!(parse_limit("2^24").unwrap(), 1 << 24);
        assert_eq!(parse_limit("1000000").unwrap(), 1_000_000);
        assert!(parse_limit("2^63").is_err());
        assert!(parse_limit("2^x").is_err());
        assert!(parse_limit("ten").is_err());
    }

    #[test]
    fn pair_window_parser() {
        assert_eq!(parse_pair_window("512").unwrap(), 512);
        assert_eq!(parse_pair_window("0").unwrap(), 0);
        assert!(parse_pair_window("7").is_err());
        assert!(parse_pair_window("131072").is_err());
    }

    #[test]
    fn grid_parser() {
        assert_eq!(parse_grid("pow2").unwrap(), CheckpointGrid::PowersOfTwo);
        match parse_grid("geom:1000:1.03").unwrap() {
            CheckpointGrid::Geometric { base, ratio } => {
                assert_eq!(base, 1000.0);
                assert_eq!(ratio, 1.03);
            }
            g => panic!("unexpected grid {g:?}"),
        }
        assert!(parse_grid("geom:2:0.9").is_err());
        assert!(parse_grid("linear").is_err());
    }
}
