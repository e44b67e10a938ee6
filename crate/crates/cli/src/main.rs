use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;

use mddmine::constraints::{resolve_all, scenario};
use mddmine::mdd::{build_mdd, export_dot};
use mddmine::mpp_miner::{mine_resolved, Counters};
use mddmine::oracle::{mine_bruteforce, mine_ppcc};
use mddmine::seqdb::{
    attach_attributes, default_generation_columns, generate_attributes, parse_spmf, stats, AttributeTable,
    GenerationProfile,
};
use mddmine::{AttributedDatabase, ConstraintSpec, MedianMode, MineOptions, PatternSet};

#[derive(Parser)]
#[command(name = "mddmine", version, about = "Constrained sequential pattern mining over an MDD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine frequent patterns that satisfy the given constraints.
    Mine(MineArgs),
    /// Generate a synthetic attribute table for a sequence database.
    GenAttrs(GenAttrsArgs),
    /// Print summary statistics of a sequence database.
    Stats(DbArgs),
    /// Write the MDD of a database as Graphviz DOT.
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
struct DbArgs {
    /// Sequence database in SPMF format.
    #[arg(long)]
    db: PathBuf,
    /// Attribute table (TSV with header `sid pos <attr>...`).
    #[arg(long)]
    attrs: Option<PathBuf>,
    /// Attribute that must be strictly increasing along each sequence.
    #[arg(long)]
    ordering: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Miner {
    Mpp,
    Ppcc,
    Brute,
}

#[derive(Args)]
struct MineArgs {
    #[command(flatten)]
    input: DbArgs,
    /// Absolute count (`25`), fraction of sequences (`0.04`) or percentage (`4%`).
    #[arg(long)]
    min_sup: String,
    /// Constraint such as `gap(time)<=900` or `itemset{1,2}`; repeatable.
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    /// Add a preset constraint set over time, price and quality.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    scenario: Option<u8>,
    #[arg(long, value_enum, default_value = "mpp")]
    miner: Miner,
    /// Pattern output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write a run report (phase times and counters).
    #[arg(long)]
    emit_stats: bool,
    /// Report file; standard error when omitted.
    #[arg(long, requires = "emit_stats")]
    report: Option<PathBuf>,
    #[arg(long)]
    disable_prop5: bool,
    /// Keep every non-dominated median triple instead of one.
    #[arg(long)]
    median_pareto: bool,
    /// Worker threads for top-level subtree mining.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct GenAttrsArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Column as `name:profile` with profile `time` or `uniform`; repeatable.
    /// Defaults to time, price and quality.
    #[arg(long = "column")]
    columns: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportDotArgs {
    #[command(flatten)]
    input: DbArgs,
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mine(args) => mine(args),
        Command::GenAttrs(args) => gen_attrs(args),
        Command::Stats(args) => {
            let db = load(&args)?;
            let s = stats(&db);
            let avg = *s.avg_len.numer() as f64 / *s.avg_len.denom() as f64;
            let text = format!(
                "sequences\t{}\nitems\t{}\nmax_len\t{}\navg_len\t{}\navg_len_decimal\t{avg:.4}\n",
                s.n_sequences, s.n_items, s.max_len, s.avg_len
            );
            write_out(None, &text)
        }
        Command::ExportDot(args) => {
            let db = load(&args.input)?;
            let specs = resolve_all(&parse_constraints(&args.constraints)?, &db)?;
            write_out(args.output.as_deref(), &export_dot(&build_mdd(&db, &specs)))
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(args: &DbArgs) -> Result<AttributedDatabase> {
    let db = parse_spmf(&read(&args.db)?).with_context(|| format!("parsing {}", args.db.display()))?;
    match &args.attrs {
        Some(path) => {
            let table =
                AttributeTable::parse_tsv(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            Ok(attach_attributes(db, &table, args.ordering.as_deref())?)
        }
        None if args.ordering.is_some() => bail!("--ordering needs --attrs"),
        None => Ok(db),
    }
}

fn parse_constraints(texts: &[String]) -> Result<Vec<ConstraintSpec>> {
    texts.iter().map(|t| t.parse().map_err(anyhow::Error::from)).collect()
}

/// Converts a support argument to an absolute count over `n` sequences.
/// Fractions round up so the count never falls below the stated share.
fn min_support(text: &str, n: usize) -> Result<usize> {
    let t = text.trim();
    let (number, percent) = match t.strip_suffix('%') {
        Some(rest) => (rest.trim(), true),
        None => (t, false),
    };
    if !percent && !number.contains('.') {
        let count: usize = number.parse().with_context(|| format!("invalid minimum support `{text}`"))?;
        if count == 0 {
            bail!("minimum support must be at least 1");
        }
        return Ok(count);
    }
    let mut frac = parse_decimal(number).with_context(|| format!("invalid minimum support `{text}`"))?;
    if percent {
        frac /= 100;
    }
    if frac <= Ratio::from_integer(0) || frac > Ratio::from_integer(1) {
        bail!("fractional minimum support must lie in (0, 1], got `{text}`");
    }
    let count = (frac * Ratio::from_integer(n as u128)).ceil().to_integer() as usize;
    Ok(count.max(1))
}

fn parse_decimal(s: &str) -> Result<Ratio<u128>> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        bail!("not a decimal number");
    }
    if frac.len() > 30 {
        bail!("too many decimal places");
    }
    let digits: u128 = format!("{int}{frac}").parse().context("number too large")?;
    Ok(Ratio::new(digits, 10u128.pow(frac.len() as u32)))
}

struct Report {
    miner: &'static str,
    theta: usize,
    sequences: usize,
    mdd_build: Duration,
    info_propagation: Duration,
    mining: Duration,
    counters: Option<Counters>,
    patterns: usize,
    mdd: Option<(usize, usize, u64)>,
}

impl Report {
    fn to_tsv(&self) -> String {
        let ms = |d: Duration| format!("{:.3}", d.as_secs_f64() * 1e3);
        let mut out = String::from("key\tvalue\n");
        let mut row = |k: &str, v: String| {
            let _ = writeln!(out, "{k}\t{v}");
        };
        row("miner", self.miner.into());
        row("min_support", self.theta.to_string());
        row("sequences", self.sequences.to_string());
        row("mdd_build_ms", ms(self.mdd_build));
        row("info_propagation_ms", ms(self.info_propagation));
        row("mining_ms", ms(self.mining));
        row("total_ms", ms(self.mdd_build + self.info_propagation + self.mining));
        row("patterns", self.patterns.to_string());
        if let Some((nodes, labels, checks)) = self.mdd {
            row("mdd_nodes", nodes.to_string());
            row("mdd_arc_labels", labels.to_string());
            row("mdd_build_checks", checks.to_string());
        }
        if let Some(c) = self.counters {
            row("sequences_scanned", c.sequences_scanned.to_string());
            row("scans_aborted", c.scans_aborted.to_string());
            row("arcs_followed", c.arcs_followed.to_string());
            row("entries_created", c.entries_created.to_string());
            row("constraint_checks", c.constraint_checks.to_string());
            row("nodes_visited", c.nodes_visited.to_string());
            row("peak_entries", c.peak_entries.to_string());
        }
        out
    }
}

fn mine(args: MineArgs) -> Result<()> {
    let db = load(&args.input)?;
    let theta = min_support(&args.min_sup, db.len())?;
    let mut specs = match args.scenario {
        Some(n) => scenario(n)?,
        None => Vec::new(),
    };
    specs.extend(parse_constraints(&args.constraints)?);
    let resolved = resolve_all(&specs, &db)?;
    if args.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build()?;
    let options = MineOptions {
        prop5: !args.disable_prop5,
        median_mode: if args.median_pareto { MedianMode::Pareto } else { MedianMode::Single },
        max_len: None,
        parallel: args.threads > 1,
    };

    let (patterns, report): (PatternSet, Report) = pool.install(|| -> Result<_> {
        let base = Report {
            miner: "",
            theta,
            sequences: db.len(),
            mdd_build: Duration::ZERO,
            info_propagation: Duration::ZERO,
            mining: Duration::ZERO,
            counters: None,
            patterns: 0,
            mdd: None,
        };
        Ok(match args.miner {
            Miner::Mpp => {
                let run = mine_resolved(&db, &resolved, theta, options)?;
                let report = Report {
                    miner: "mpp",
                    mdd_build: run.times.mdd_build,
                    info_propagation: run.times.info_propagation,
                    mining: run.times.mining,
                    counters: Some(run.counters),
                    patterns: run.patterns.len(),
                    mdd: Some((run.mdd_nodes, run.mdd_arc_labels, run.build_checks)),
                    ..base
                };
                (run.patterns, report)
            }
            Miner::Ppcc => {
                let t = Instant::now();
                let (out, counters) = mine_ppcc(&db, &resolved, theta)?;
                let report = Report {
                    miner: "ppcc",
                    mining: t.elapsed(),
                    counters: Some(counters),
                    patterns: out.len(),
                    ..base
                };
                (out, report)
            }
            Miner::Brute => {
                let t = Instant::now();
                let out = mine_bruteforce(&db, &resolved, theta, None)?;
                let report = Report { miner: "brute", mining: t.elapsed(), patterns: out.len(), ..base };
                (out, report)
            }
        })
    })?;

    write_out(args.output.as_deref(), &patterns.to_output())?;
    if args.emit_stats {
        let tsv = report.to_tsv();
        match &args.report {
            Some(p) => fs::write(p, tsv).with_context(|| format!("writing {}", p.display()))?,
            None => eprint!("{tsv}"),
        }
    }
    Ok(())
}

fn gen_attrs(args: GenAttrsArgs) -> Result<()> {
    let db = parse_spmf(&read(&args.db)?).with_context(|| format!("parsing {}", args.db.display()))?;
    let columns = if args.columns.is_empty() {
        default_generation_columns()
    } else {
        args.columns
            .iter()
            .map(|c| {
                let (name, profile) = c.split_once(':').with_context(|| format!("expected name:profile, got `{c}`"))?;
                Ok((name.to_string(), GenerationProfile::parse(profile)?))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let table = generate_attributes(&db, args.seed, &columns);
    write_out(args.output.as_deref(), &table.to_tsv())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_forms() {
        assert_eq!(min_support("2", 3).unwrap(), 2);
        assert_eq!(min_support("0.5", 3).unwrap(), 2);
        assert_eq!(min_support("4%", 50_000).unwrap(), 2_000);
        assert_eq!(min_support("1%", 150).unwrap(), 2);
        assert_eq!(min_support("1.0", 7).unwrap(), 7);
        assert_eq!(min_support("0.001", 10).unwrap(), 1);
        assert!(min_support("0", 3).is_err());
        assert!(min_support("0.0", 3).is_err());
        assert!(min_support("150%", 3).is_err());
        assert!(min_support("abc", 3).is_err());
    }
}
