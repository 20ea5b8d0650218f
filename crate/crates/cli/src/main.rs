//! `laver`: command-line front end for Laver table computations.
//!
//! Exit codes: 0 success, 1 domain or usage error, 2 verification
//! counterexample, 3 I/O or file format error.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use laver::ld::{write_points_csv, DEFAULT_DENSE_LIMIT};
use laver::maximal::{self, BinaryPartition};
use laver::store::{DEFAULT_CACHE_BYTES, MIN_CACHE_BYTES};
use laver::term::LdTerm;
use laver::verify::{self, SuiteResult};
use laver::{stats, Convention, Laver, PlotKind, ThresholdStore};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "laver", version, about = "Laver table computations")]
struct Cli {
    /// Threshold store (LVRT file) to start from.
    #[arg(long, global = true, value_name = "FILE")]
    store: Option<PathBuf>,

    /// Row cache budget in bytes.
    #[arg(long, global = true, default_value_t = DEFAULT_CACHE_BYTES as u64,
          value_parser = clap::value_parser!(u64).range(MIN_CACHE_BYTES as u64..))]
    cache_bytes: u64,

    /// Output format; plain by default, json for `verify`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Seed for sampled verification.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Plain,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Conv {
    Back,
    Star,
}

#[derive(Subcommand)]
enum Command {
    /// Compute thresholds up to --max and write them to an LVRT file.
    Scan {
        #[arg(long)]
        max: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Continue from the prefix already in --out.
        #[arg(long)]
        resume: bool,
    },
    /// Product of two elements.
    Prod {
        p: u64,
        q: u64,
        #[arg(long, value_enum)]
        conv: Option<Conv>,
        /// Order exponent n for the star convention.
        #[arg(long)]
        order: Option<u32>,
    },
    /// The row p*0, ..., p*(π(p)-1).
    Row {
        p: u64,
    },
    Period {
        p: u64,
    },
    Threshold {
        p: u64,
    },
    /// Full table of order 2^n.
    Table {
        #[arg(long)]
        order: u32,
        #[arg(long, value_enum, default_value_t = Conv::Star)]
        conv: Conv,
    },
    /// Period frequencies on [1, 2^n].
    Freq {
        #[arg(long)]
        n: u32,
    },
    /// Doubling counts per period exponent.
    Doubling {
        #[arg(long)]
        n: u32,
    },
    /// Joint threshold by period histogram on [2, max].
    Joint {
        #[arg(long)]
        max: u64,
    },
    /// Period of 2^n - 1 for n up to --max-n.
    Growth {
        #[arg(long)]
        max_n: u32,
    },
    #[command(subcommand)]
    Maximal(MaximalCmd),
    /// Evaluate a parenthesized term in the table of order 2^n.
    Eval {
        expr: String,
        #[arg(long)]
        order: u32,
    },
    /// Run a verification suite, or `all` at default bounds.
    Verify {
        suite: String,
        #[arg(long)]
        max: Option<u64>,
    },
    /// Dump point sets as x,y lines.
    Plot {
        #[arg(value_enum)]
        kind: PlotArg,
        #[arg(long)]
        max: u64,
    },
}

#[derive(Subcommand)]
enum MaximalCmd {
    Check {
        p: u64,
    },
    List {
        lo: u64,
        hi: u64,
    },
    Prod {
        p: u64,
        q: u64,
    },
    Partition {
        p: u64,
    },
    /// Element for a partition written like "2^0 x 2 + 2^1 x 1".
    FromPartition {
        partition: String,
        #[arg(long, default_value_t = 0)]
        b0: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotArg {
    SubsetOrder,
    Table,
}

struct Ctx {
    format: Format,
    seed: u64,
    verbose: u8,
    engine: Laver,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<laver::Error>() {
            return match err {
                laver::Error::Format(_)
                | laver::Error::Io(_)
                | laver::Error::Csv(_)
                | laver::Error::Json(_) => 3,
                _ => 1,
            };
        }
        if cause.is::<io::Error>() || cause.is::<serde_json::Error>() {
            return 3;
        }
    }
    1
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cache = cli.cache_bytes as usize;
    let store = match &cli.store {
        Some(path) => {
            ThresholdStore::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => ThresholdStore::new(),
    };
    let default = match cli.command {
        Command::Verify { .. } => Format::Json,
        _ => Format::Plain,
    };
    let ctx = Ctx {
        format: cli.format.unwrap_or(default),
        seed: cli.seed,
        verbose: cli.verbose,
        engine: Laver::with_store(store, DEFAULT_DENSE_LIMIT, cache),
    };
    let mut out = io::stdout().lock();
    let code = match cli.command {
        Command::Scan {
            max,
            out: path,
            resume,
        } => scan(&ctx, max, &path, resume, &mut out)?,
        Command::Prod { p, q, conv, order } => prod(&ctx, p, q, conv, order, &mut out)?,
        Command::Row { p } => row(&ctx, p, &mut out)?,
        Command::Period { p } => scalar(
            &ctx,
            &mut out,
            &["p", "period"],
            &[p, ctx.engine.period(p)?],
        )?,
        Command::Threshold { p } => scalar(
            &ctx,
            &mut out,
            &["p", "threshold"],
            &[p, ctx.engine.threshold(p)?],
        )?,
        Command::Table { order, conv } => table(&ctx, order, conv, &mut out)?,
        Command::Freq { n } => {
            let view = ctx.engine.table(pow2(n)?)?;
            let report = stats::frequency_table(&view, n)?;
            report_out(&ctx, &mut out, &report, |w| report.write_csv(w))?
        }
        Command::Doubling { n } => {
            let view = ctx.engine.table(pow2(n.saturating_add(2))?)?;
            let report = stats::doubling_counts(&view, n)?;
            report_out(&ctx, &mut out, &report, |w| report.write_csv(w))?
        }
        Command::Joint { max } => {
            let view = ctx.engine.table(max)?;
            let report = stats::joint_table(&view, max)?;
            report_out(&ctx, &mut out, &report, |w| report.write_csv(w))?
        }
        Command::Growth { max_n } => {
            let report = stats::pi_of_one_growth(&ctx.engine, max_n)?;
            report_out(&ctx, &mut out, &report, |w| report.write_csv(w))?
        }
        Command::Maximal(cmd) => maximal_cmd(&ctx, cmd, &mut out)?,
        Command::Eval { expr, order } => {
            let term = LdTerm::parse(&expr)?;
            let value = term.eval(&ctx.engine, order)?;
            match ctx.format {
                Format::Json => writeln!(
                    out,
                    "{}",
                    json!({"expr": term.unparse(), "order": order, "value": value})
                )?,
                Format::Csv => write!(out, "order,value\n{order},{value}\n")?,
                Format::Plain => writeln!(out, "{value}")?,
            }
            ExitCode::SUCCESS
        }
        Command::Verify { suite, max } => verify_cmd(&ctx, &suite, max, &mut out)?,
        Command::Plot { kind, max } => {
            let kind = match kind {
                PlotArg::SubsetOrder => PlotKind::SubsetOrder,
                PlotArg::Table => PlotKind::Table,
            };
            write_points_csv(&ctx.engine.plot_points(kind, max)?, &mut out)?;
            ExitCode::SUCCESS
        }
    };
    out.flush()?;
    Ok(code)
}

fn pow2(n: u32) -> Result<u64> {
    if n > 62 {
        bail!(laver::Error::Domain(format!("exponent {n} too large")));
    }
    Ok(1u64 << n)
}

/// Removes the lock file when dropped.
struct ScanLock(PathBuf);

impl ScanLock {
    fn acquire(store: &Path) -> Result<Self> {
        let mut name = store.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .with_context(|| format!("acquiring scan lock {}", path.display()))?;
        Ok(Self(path))
    }
}

impl Drop for ScanLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Writes through a temporary file so a crash never leaves a torn store.
fn save_atomic(store: &ThresholdStore, path: &Path) -> laver::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    store.save(&tmp)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn scan(ctx: &Ctx, max: u64, path: &Path, resume: bool, out: &mut impl Write) -> Result<ExitCode> {
    let _lock = ScanLock::acquire(path)?;
    let start_from = if resume && path.exists() {
        let s =
            ThresholdStore::load(path).with_context(|| format!("resuming {}", path.display()))?;
        eprintln!("resuming from max_p = {}", s.max_p());
        Some(s)
    } else {
        if resume {
            eprintln!("{} does not exist; starting from scratch", path.display());
        }
        None
    };
    let started = Instant::now();
    let store = ThresholdStore::scan_with(max, start_from, |s| {
        save_atomic(s, path)?;
        eprintln!(
            "checkpoint {} / {max} ({:.1} s)",
            s.max_p(),
            started.elapsed().as_secs_f64()
        );
        Ok(())
    })?;
    match ctx.format {
        Format::Json => writeln!(
            out,
            "{}",
            json!({"path": path.display().to_string(), "max_p": store.max_p()})
        )?,
        Format::Csv => write!(out, "path,max_p\n{},{}\n", path.display(), store.max_p())?,
        Format::Plain => writeln!(out, "{}", store.max_p())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn prod(
    ctx: &Ctx,
    p: u64,
    q: u64,
    conv: Option<Conv>,
    order: Option<u32>,
    out: &mut impl Write,
) -> Result<ExitCode> {
    let conv = match (conv, order) {
        (None | Some(Conv::Back), None) => Convention::Back,
        (None | Some(Conv::Star), Some(n)) => Convention::star(n)?,
        (Some(Conv::Star), None) => bail!(laver::Error::Domain("--conv star needs --order".into())),
        (Some(Conv::Back), Some(_)) => {
            bail!(laver::Error::Domain(
                "--order only applies to --conv star".into()
            ))
        }
    };
    let value = ctx.engine.prod(conv, p, q)?;
    scalar(ctx, out, &["p", "q", "value"], &[p, q, value])
}

/// One record; plain output shows only the last field.
fn scalar(ctx: &Ctx, out: &mut impl Write, names: &[&str], values: &[u64]) -> Result<ExitCode> {
    match ctx.format {
        Format::Json => {
            let obj: serde_json::Map<String, Value> = names
                .iter()
                .zip(values)
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            writeln!(out, "{}", Value::Object(obj))?;
        }
        Format::Csv => {
            writeln!(out, "{}", names.join(","))?;
            writeln!(out, "{}", join(values))?;
        }
        Format::Plain => writeln!(out, "{}", values[values.len() - 1])?,
    }
    Ok(ExitCode::SUCCESS)
}

fn join(values: &[u64]) -> String {
    values
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn row(ctx: &Ctx, p: u64, out: &mut impl Write) -> Result<ExitCode> {
    let row = ctx.engine.compute_row(p)?;
    let values = row.values();
    match ctx.format {
        Format::Json => writeln!(
            out,
            "{}",
            json!({"p": p, "period": row.period(), "values": values})
        )?,
        Format::Csv => {
            writeln!(out, "q,value")?;
            for (q, v) in values.iter().enumerate() {
                writeln!(out, "{q},{v}")?;
            }
        }
        Format::Plain => {
            let text: Vec<String> = values.iter().map(u64::to_string).collect();
            writeln!(out, "{}", text.join(" "))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

const MAX_TABLE_ORDER: u32 = 10;

fn table(ctx: &Ctx, order: u32, conv: Conv, out: &mut impl Write) -> Result<ExitCode> {
    if !(1..=MAX_TABLE_ORDER).contains(&order) {
        bail!(laver::Error::Domain(format!(
            "table order {order} outside 1..={MAX_TABLE_ORDER}"
        )));
    }
    let size = 1u64 << order;
    let view = ctx.engine.table(size)?;
    let (corner, range) = match conv {
        Conv::Star => ("⋆", 1..=size),
        Conv::Back => ("*", 0..=size - 1),
    };
    let cell = |p: u64, q: u64| match conv {
        Conv::Star => view.star_product(order, p, q),
        Conv::Back => view.product(p, q),
    };
    let rows: Vec<Vec<u64>> = range
        .clone()
        .map(|p| range.clone().map(|q| cell(p, q)).collect())
        .collect();
    match ctx.format {
        Format::Json => {
            let labels: Vec<u64> = range.collect();
            writeln!(
                out,
                "{}",
                json!({"order": order, "convention": corner, "labels": labels, "rows": rows})
            )?;
        }
        Format::Csv | Format::Plain => {
            let mut lines = vec![std::iter::once(corner.to_string())
                .chain(range.clone().map(|q| q.to_string()))
                .collect::<Vec<_>>()];
            for (p, r) in range.zip(&rows) {
                lines.push(
                    std::iter::once(p.to_string())
                        .chain(r.iter().map(u64::to_string))
                        .collect(),
                );
            }
            if ctx.format == Format::Csv {
                for l in lines {
                    writeln!(out, "{}", l.join(","))?;
                }
            } else {
                write_aligned(out, &lines)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Right-aligned whitespace-separated columns.
fn write_aligned(out: &mut impl Write, lines: &[Vec<String>]) -> io::Result<()> {
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0; cols];
    for l in lines {
        for (i, c) in l.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    for l in lines {
        let cells: Vec<String> = l
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:>w$}", w = widths[i]))
            .collect();
        writeln!(out, "{}", cells.join("  "))?;
    }
    Ok(())
}

fn report_out<T, F>(ctx: &Ctx, out: &mut impl Write, report: &T, csv: F) -> Result<ExitCode>
where
    T: serde::Serialize,
    F: FnOnce(&mut Vec<u8>) -> laver::Result<()>,
{
    match ctx.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string(report)?)?,
        Format::Csv | Format::Plain => {
            let mut buf = Vec::new();
            csv(&mut buf)?;
            if ctx.format == Format::Csv {
                out.write_all(&buf)?;
            } else {
                let text = String::from_utf8(buf)?;
                let lines: Vec<Vec<String>> = text
                    .lines()
                    .map(|l| l.split(',').map(str::to_string).collect())
                    .collect();
                write_aligned(out, &lines)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn maximal_cmd(ctx: &Ctx, cmd: MaximalCmd, out: &mut impl Write) -> Result<ExitCode> {
    match cmd {
        MaximalCmd::Check { p } => {
            laver::element::check(p)?;
            let yes = p >= 1 && maximal::is_maximal(p);
            match ctx.format {
                Format::Json => writeln!(out, "{}", json!({"p": p, "maximal": yes}))?,
                Format::Csv => write!(out, "p,maximal\n{p},{yes}\n")?,
                Format::Plain => writeln!(out, "{yes}")?,
            }
        }
        MaximalCmd::List { lo, hi } => {
            let list = maximal::list_maximal(lo, hi)?;
            match ctx.format {
                Format::Json => writeln!(out, "{}", json!(list))?,
                Format::Csv | Format::Plain => {
                    if ctx.format == Format::Csv {
                        writeln!(out, "p")?;
                    }
                    for p in list {
                        writeln!(out, "{p}")?;
                    }
                }
            }
        }
        MaximalCmd::Prod { p, q } => {
            let value = maximal::maximal_prod(p, q)?;
            return scalar(ctx, out, &["p", "q", "value"], &[p, q, value]);
        }
        MaximalCmd::Partition { p } => {
            let (partition, b0) = maximal::maximal_to_partition_with_gap(p)?;
            match ctx.format {
                Format::Json => writeln!(
                    out,
                    "{}",
                    json!({"p": p, "partition": partition.to_string(), "b0": b0})
                )?,
                Format::Csv => write!(out, "p,partition,b0\n{p},{partition},{b0}\n")?,
                Format::Plain if b0 == 0 => writeln!(out, "{partition}")?,
                Format::Plain => writeln!(out, "{partition} (b0 = {b0})")?,
            }
        }
        MaximalCmd::FromPartition { partition, b0 } => {
            let parsed: BinaryPartition = partition.parse()?;
            let p = maximal::partition_to_maximal(&parsed, b0)?.get();
            match ctx.format {
                Format::Json => writeln!(
                    out,
                    "{}",
                    json!({"partition": parsed.to_string(), "b0": b0, "p": p})
                )?,
                Format::Csv => write!(out, "partition,b0,p\n{parsed},{b0},{p}\n")?,
                Format::Plain => writeln!(out, "{p}")?,
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Timing is kept off the output stream so results stay byte-deterministic.
fn result_json(r: &SuiteResult) -> Result<Value> {
    let mut v = serde_json::to_value(r)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("millis");
    }
    Ok(v)
}

fn verify_cmd(ctx: &Ctx, suite: &str, max: Option<u64>, out: &mut impl Write) -> Result<ExitCode> {
    let results = if suite == "all" {
        if max.is_some() {
            bail!(laver::Error::Domain(
                "--max does not apply to `verify all`".into()
            ));
        }
        verify::run_all(&ctx.engine, ctx.seed)?
    } else {
        vec![verify::run_suite(&ctx.engine, suite, max, ctx.seed)?]
    };
    for r in &results {
        if ctx.verbose > 0 || !r.passed() {
            eprintln!(
                "{}: {} counterexample(s) in {} instances, {} ms",
                r.suite, r.counterexample_count, r.instances, r.millis
            );
        }
    }
    match ctx.format {
        Format::Json => {
            let values = results
                .iter()
                .map(result_json)
                .collect::<Result<Vec<_>>>()?;
            let doc = if values.len() == 1 && suite != "all" {
                values.into_iter().next().unwrap_or(Value::Null)
            } else {
                Value::Array(values)
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Format::Csv => {
            writeln!(out, "suite,bound,seed,instances,counterexamples,passed")?;
            for r in &results {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.suite,
                    r.bound,
                    r.seed,
                    r.instances,
                    r.counterexample_count,
                    r.passed()
                )?;
            }
        }
        Format::Plain => {
            for r in &results {
                let status = if r.passed() { "PASS" } else { "FAIL" };
                writeln!(
                    out,
                    "{status} {} bound={} instances={} counterexamples={}",
                    r.suite, r.bound, r.instances, r.counterexample_count
                )?;
                for c in &r.counterexamples {
                    writeln!(out, "  {} {:?}", c.rule, c.input)?;
                }
                for f in &r.findings {
                    writeln!(out, "  finding: {} {:?}", f.rule, f.input)?;
                }
                for n in &r.notes {
                    writeln!(out, "  note: {n}")?;
                }
            }
        }
    }
    Ok(if results.iter().all(SuiteResult::passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
