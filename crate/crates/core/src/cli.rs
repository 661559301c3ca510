//! The `spe` command line.
//!
//! Exit codes: 0 success with no findings, 1 findings, 2 configuration or
//! parse error, 3 threshold refusal.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::combinat::{count_plan, CountReport, Mode};
use crate::enumerator::{canonical_signature, enumerate, realize, variant_name, RealizeError};
use crate::harness::{self, CampaignOptions, CompileStatus, InterpVerdict, Limit, ToolchainConfig};
use crate::minilang::{self, Program};
use crate::skeleton::{extract, ExtractOptions, Granularity, Skeleton};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FINDINGS: u8 = 1;
pub const EXIT_ERROR: u8 = 2;
pub const EXIT_THRESHOLD: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "spe", version, about = "Skeletal program enumeration for compiler testing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Naive and enumerated variant counts per file, with corpus totals.
    Count {
        #[command(flatten)]
        space: SpaceArgs,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
        paths: Vec<PathBuf>,
    },
    /// Dump the skeleton of one file as JSON.
    Skeleton {
        #[arg(long)]
        decl_holes: bool,
        path: PathBuf,
    },
    /// Write every enumerated variant plus a manifest.
    Enumerate {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        limit: LimitArgs,
        #[arg(long)]
        out: PathBuf,
        paths: Vec<PathBuf>,
    },
    /// Run a compiler campaign over the enumerated variants.
    Test {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        limit: LimitArgs,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        paths: Vec<PathBuf>,
    },
    /// Summarize the outcome log of a campaign directory.
    Stats {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SpaceArgs {
    #[arg(long, value_enum, default_value_t = Mode::Complete)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Granularity::Intra)]
    pub granularity: Granularity,
    /// Treat local and parameter declaration names as holes.
    #[arg(long)]
    pub decl_holes: bool,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct LimitArgs {
    /// Refuse files whose variant count exceeds N.
    #[arg(long, default_value_t = 10_000, conflicts_with = "cap")]
    pub threshold: u64,
    /// Take only the first N variants of each file.
    #[arg(long)]
    pub cap: Option<u64>,
}

impl LimitArgs {
    fn limit(self) -> Limit {
        self.cap.map_or(Limit::Threshold(self.threshold), Limit::Cap)
    }
}

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    ExitCode::from(dispatch(cli))
}

pub fn dispatch(cli: Cli) -> u8 {
    let r = match cli.command {
        Command::Count { space, json, paths } => cmd_count(&paths, space, json),
        Command::Skeleton { decl_holes, path } => cmd_skeleton(&path, decl_holes),
        Command::Enumerate {
            space,
            limit,
            out,
            paths,
        } => cmd_enumerate(&paths, space, limit.limit(), &out),
        Command::Test {
            space,
            limit,
            config,
            out,
            paths,
        } => cmd_test(&paths, space, limit.limit(), &config, &out),
        Command::Stats { out, json } => cmd_stats(&out, json),
    };
    r.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_ERROR
    })
}

fn load(path: &Path) -> Result<Program> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    minilang::parse(&src).with_context(|| format!("{}", path.display()))
}

/// Parse everything up front so a bad file fails the command before it
/// writes anything.
fn load_all(paths: &[PathBuf]) -> Result<Vec<Program>> {
    let mut progs = Vec::new();
    let mut failed = 0;
    for p in paths {
        match load(p) {
            Ok(prog) => progs.push(prog),
            Err(e) => {
                eprintln!("error: {e:#}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} files failed to parse", paths.len());
    }
    Ok(progs)
}

fn ratio(a: &BigUint, b: &BigUint) -> Option<f64> {
    (!b.is_zero()).then(|| a.to_f64().unwrap_or(f64::INFINITY) / b.to_f64().unwrap_or(f64::INFINITY))
}

#[derive(Serialize)]
struct CountRow {
    file: String,
    #[serde(flatten)]
    report: CountReport,
    selected: Option<String>,
    reduction: Option<f64>,
}

#[derive(Serialize)]
struct CountDoc {
    schema: u32,
    mode: Mode,
    granularity: Granularity,
    decl_holes: bool,
    files: Vec<CountRow>,
    total_naive: String,
    total_selected: String,
    reduction: Option<f64>,
    average_reduction: Option<f64>,
}

fn cmd_count(paths: &[PathBuf], space: SpaceArgs, json: bool) -> Result<u8> {
    let progs = load_all(paths)?;
    let mut rows = Vec::new();
    let (mut naive, mut selected) = (BigUint::zero(), BigUint::zero());
    let mut ratios = Vec::new();
    for (path, prog) in paths.iter().zip(&progs) {
        let s = extract(
            prog,
            ExtractOptions {
                decl_holes: space.decl_holes,
            },
        );
        let report = count_plan(&s, space.granularity);
        let sel = report.selected(space.mode).cloned();
        let reduction = sel.as_ref().and_then(|c| ratio(&report.naive, c));
        if let Some(c) = &sel {
            naive += &report.naive;
            selected += c;
            ratios.extend(reduction);
        }
        rows.push(CountRow {
            file: path.display().to_string(),
            selected: sel.map(|c| c.to_string()),
            reduction,
            report,
        });
    }
    let doc = CountDoc {
        schema: harness::SCHEMA_VERSION,
        mode: space.mode,
        granularity: space.granularity,
        decl_holes: space.decl_holes,
        reduction: ratio(&naive, &selected),
        average_reduction: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        total_naive: naive.to_string(),
        total_selected: selected.to_string(),
        files: rows,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        print_count_table(&doc);
    }
    Ok(EXIT_OK)
}

fn fmt_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| "-".into(), |r| format!("{r:.1}x"))
}

fn print_count_table(doc: &CountDoc) {
    let dash = || "-".to_string();
    let mut lines = vec![[
        "file".to_string(),
        "holes".into(),
        "naive".into(),
        "paper".into(),
        "complete".into(),
        "reduction".into(),
    ]];
    for r in &doc.files {
        lines.push([
            r.file.clone(),
            r.report.holes.to_string(),
            r.report.naive.to_string(),
            r.report.paper.as_ref().map_or_else(dash, |c| c.to_string()),
            r.report.complete.to_string(),
            fmt_ratio(r.reduction),
        ]);
    }
    lines.push([
        "total".into(),
        String::new(),
        doc.total_naive.clone(),
        String::new(),
        String::new(),
        fmt_ratio(doc.reduction),
    ]);
    let mut width = [0; 6];
    for l in &lines {
        for (w, c) in width.iter_mut().zip(l) {
            *w = (*w).max(c.len());
        }
    }
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(width)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        println!("{}", cells.join("  ").trim_end());
    }
    println!(
        "mode {:?}, total enumerated {}, average reduction {}",
        doc.mode,
        doc.total_selected,
        fmt_ratio(doc.average_reduction)
    );
}

fn cmd_skeleton(path: &Path, decl_holes: bool) -> Result<u8> {
    let prog = load(path)?;
    let s = extract(&prog, ExtractOptions { decl_holes });
    println!("{}", serde_json::to_string_pretty(&s.to_json())?);
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ManifestEntry {
    seq: usize,
    file: String,
    signature: String,
}

#[derive(Serialize)]
struct ManifestFile {
    source: String,
    count: String,
    invalid: usize,
    variants: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct Manifest {
    schema: u32,
    mode: Mode,
    granularity: Granularity,
    decl_holes: bool,
    files: Vec<ManifestFile>,
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "variant".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_enumerate(paths: &[PathBuf], space: SpaceArgs, limit: Limit, out: &Path) -> Result<u8> {
    let progs = load_all(paths)?;
    let mut stems = HashSet::new();
    let mut plans: Vec<(Skeleton, usize, BigUint)> = Vec::new();
    let mut refused = false;
    for (path, prog) in paths.iter().zip(&progs) {
        if !stems.insert(stem_of(path)) {
            bail!("two inputs share the file stem `{}`", stem_of(path));
        }
        let s = extract(
            prog,
            ExtractOptions {
                decl_holes: space.decl_holes,
            },
        );
        let report = count_plan(&s, space.granularity);
        let Some(count) = report.selected(space.mode).cloned() else {
            bail!("{}: paper mode does not support nested local scopes", path.display());
        };
        let all = count.to_usize().unwrap_or(usize::MAX);
        let take = match limit {
            Limit::Threshold(t) if count > BigUint::from(t) => {
                eprintln!(
                    "{}: {count} variants exceed the threshold of {t}; use --cap to take a prefix",
                    path.display()
                );
                refused = true;
                0
            }
            Limit::Threshold(_) => all,
            Limit::Cap(c) => all.min(usize::try_from(c).unwrap_or(usize::MAX)),
        };
        plans.push((s, take, count));
    }
    if refused {
        return Ok(EXIT_THRESHOLD);
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut manifest = Manifest {
        schema: harness::SCHEMA_VERSION,
        mode: space.mode,
        granularity: space.granularity,
        decl_holes: space.decl_holes,
        files: Vec::new(),
    };
    for (path, (s, take, count)) in paths.iter().zip(&plans) {
        let stem = stem_of(path);
        let mut entry = ManifestFile {
            source: path.display().to_string(),
            count: count.to_string(),
            invalid: 0,
            variants: Vec::new(),
        };
        for (seq, a) in enumerate(s, space.mode, space.granularity)?.take(*take).enumerate() {
            let prog = match realize(s, &a) {
                Ok(p) => p,
                Err(RealizeError::Invalid(_)) => {
                    entry.invalid += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let name = format!("{}.c", variant_name(&stem, seq, *take));
            let dest = out.join(&name);
            fs::write(&dest, minilang::render(&prog)).with_context(|| format!("writing {}", dest.display()))?;
            entry.variants.push(ManifestEntry {
                seq,
                file: name,
                signature: canonical_signature(s, &a, space.granularity)?.to_string(),
            });
        }
        println!(
            "{}: {} variants written, {} invalid",
            path.display(),
            entry.variants.len(),
            entry.invalid
        );
        manifest.files.push(entry);
    }
    let mp = out.join("manifest.json");
    fs::write(&mp, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", mp.display()))?;
    Ok(EXIT_OK)
}

fn cmd_test(paths: &[PathBuf], space: SpaceArgs, limit: Limit, config: &Path, out: &Path) -> Result<u8> {
    let cfg = ToolchainConfig::load(config)?;
    let opts = CampaignOptions {
        mode: space.mode,
        granularity: space.granularity,
        decl_holes: space.decl_holes,
        limit,
        ..CampaignOptions::new(out)
    };
    let summary = harness::run_campaign(paths, &cfg, &opts)?;
    for f in &summary.files {
        let status = serde_json::to_value(f.status)?;
        let note = f.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default();
        println!(
            "{}: {} {} variants, {} new rows{note}",
            f.file,
            status.as_str().unwrap_or("?"),
            f.variants,
            f.new_rows
        );
    }
    println!(
        "naive {} / enumerated {} (reduction {}), {} rows added",
        summary.total_naive,
        summary.total_enumerated,
        fmt_ratio(summary.reduction),
        summary.rows_added
    );
    for r in &summary.reports {
        println!("report {}", out.join("reports").join(r).display());
    }
    Ok(if summary.reports.is_empty() {
        EXIT_OK
    } else {
        EXIT_FINDINGS
    })
}

#[derive(Serialize, Default)]
struct CellStats {
    ok: usize,
    crash: usize,
    timeout: usize,
    reject: usize,
}

#[derive(Serialize)]
struct StatsDoc {
    rows: usize,
    variants: usize,
    interp: BTreeMap<String, usize>,
    cells: BTreeMap<String, CellStats>,
    crash_reports: usize,
    wrong_code_reports: usize,
}

fn cmd_stats(out: &Path, json: bool) -> Result<u8> {
    let rows = harness::load_log(&out.join(harness::LOG_FILE))?;
    let mut cells: BTreeMap<String, CellStats> = BTreeMap::new();
    let mut interp: BTreeMap<String, usize> = BTreeMap::new();
    let mut variants = BTreeMap::new();
    for r in &rows {
        let c = cells
            .entry(format!("{} {}", r.compiler, r.flags.join(" ")))
            .or_default();
        match r.compile {
            CompileStatus::Ok => c.ok += 1,
            CompileStatus::Crash { .. } => c.crash += 1,
            CompileStatus::Timeout => c.timeout += 1,
            CompileStatus::Reject { .. } => c.reject += 1,
        }
        variants.entry(r.variant.as_str()).or_insert(&r.interp);
    }
    for v in variants.values() {
        let k = match v {
            InterpVerdict::Ok { .. } => "ok".to_string(),
            InterpVerdict::Ub { kind } => format!("ub:{}", serde_json::to_value(kind)?.as_str().unwrap_or("?")),
            InterpVerdict::Budget => "budget".to_string(),
        };
        *interp.entry(k).or_default() += 1;
    }
    let reports = harness::derive_reports(&rows);
    let doc = StatsDoc {
        rows: rows.len(),
        variants: variants.len(),
        interp,
        cells,
        crash_reports: reports.iter().filter(|r| r.kind == harness::BugKind::Crash).count(),
        wrong_code_reports: reports.iter().filter(|r| r.kind == harness::BugKind::WrongCode).count(),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!("{} rows over {} variants", doc.rows, doc.variants);
        for (k, n) in &doc.interp {
            println!("  interpreter {k}: {n}");
        }
        for (k, c) in &doc.cells {
            println!(
                "  {k}: ok {} crash {} timeout {} reject {}",
                c.ok, c.crash, c.timeout, c.reject
            );
        }
        println!(
            "{} crash reports, {} wrong-code reports",
            doc.crash_reports, doc.wrong_code_reports
        );
    }
    Ok(EXIT_OK)
}
