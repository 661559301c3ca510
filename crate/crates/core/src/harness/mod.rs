//! Differential compiler testing over enumerated variants.
//!
//! Every variant is compiled under each (compiler, flags) cell, compiled
//! binaries are run, and the interpreter's verdict decides which output
//! disagreements count as wrong code. Outcomes go to a JSON-lines log that
//! later runs extend; reports are always rebuilt from the whole log.

pub mod exec;
mod report;
mod signature;

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::combinat::{count_plan, Mode};
use crate::enumerator::{canonical_signature, enumerate, realize, variant_name, Granularity, RealizeError};
use crate::minilang::{self, ExecResult, ExecStatus, UbKind, DEFAULT_STEP_BUDGET};
use crate::skeleton::{extract, ExtractOptions};

pub use exec::Exit;
pub use report::{derive_reports, differential_verdict, BugKind, BugReport, Cell, Verdict};
pub use signature::{is_crash, normalize_signature, ICE_MARKERS};

pub const SCHEMA_VERSION: u32 = 1;
pub const LOG_FILE: &str = "outcomes.jsonl";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: malformed outcome record: {source}")]
    Log {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerEntry {
    pub name: String,
    /// Command template; `{input}` once, optionally `{output}` and `{flags}`.
    pub cmd: String,
}

fn default_flags() -> Vec<Vec<String>> {
    vec![vec!["-O0".into()], vec!["-O3".into()]]
}

fn default_timeout() -> u64 {
    10
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolchainConfig {
    pub compilers: Vec<CompilerEntry>,
    #[serde(default = "default_flags")]
    pub flags: Vec<Vec<String>>,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

/// A compiler entry whose program was found on disk.
#[derive(Clone, Debug)]
pub struct ResolvedCompiler {
    pub name: String,
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ResolvedCompiler {
    pub fn argv(&self, flags: &[String], input: &str, output: &str) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.args {
            if a == "{flags}" {
                out.extend(flags.iter().cloned());
            } else {
                out.push(a.replace("{input}", input).replace("{output}", output));
            }
        }
        out
    }
}

impl ToolchainConfig {
    pub fn load(path: &Path) -> Result<ToolchainConfig, HarnessError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Check the invariants and locate every compiler binary.
    pub fn resolve(&self) -> Result<Vec<ResolvedCompiler>, HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.compilers.is_empty() {
            return bad("no compilers configured".into());
        }
        if self.flags.is_empty() {
            return bad("empty flag matrix".into());
        }
        if self.timeout_s < 1 {
            return bad("timeout_s must be at least 1".into());
        }
        if self.workers < 1 {
            return bad("workers must be at least 1".into());
        }
        let mut names = HashSet::new();
        let mut out = Vec::new();
        for c in &self.compilers {
            if !names.insert(&c.name) {
                return bad(format!("duplicate compiler name `{}`", c.name));
            }
            if c.cmd.matches("{input}").count() != 1 {
                return bad(format!("command of `{}` must contain {{input}} exactly once", c.name));
            }
            let Some(words) = shlex::split(&c.cmd).filter(|w| !w.is_empty()) else {
                return bad(format!("cannot parse command of `{}`", c.name));
            };
            let Some(program) = find_program(&words[0]) else {
                return bad(format!("compiler `{}`: `{}` not found", c.name, words[0]));
            };
            out.push(ResolvedCompiler {
                name: c.name.clone(),
                program,
                args: words[1..].to_vec(),
            });
        }
        Ok(out)
    }
}

fn find_program(name: &str) -> Option<PathBuf> {
    let is_file = |p: &Path| p.is_file();
    if name.contains('/') {
        let p = PathBuf::from(name);
        return is_file(&p).then(|| fs::canonicalize(&p).unwrap_or(p));
    }
    std::env::split_paths(&std::env::var_os("PATH")?)
        .map(|d| d.join(name))
        .find(|p| is_file(p))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CompileStatus {
    Ok,
    Crash { signature: String },
    Timeout,
    Reject { exit_code: i32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStatus {
    /// Exit code, or 128 + signal number.
    pub exit_code: Option<i32>,
    pub stdout_sha256: String,
    pub timeout: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum InterpVerdict {
    Ok { exit_code: i32, stdout_sha256: String },
    Ub { kind: UbKind },
    Budget,
}

impl From<&ExecResult> for InterpVerdict {
    fn from(r: &ExecResult) -> InterpVerdict {
        match r.status {
            ExecStatus::Ok => InterpVerdict::Ok {
                exit_code: r.exit_code,
                stdout_sha256: sha256_hex(&r.stdout),
            },
            ExecStatus::UndefinedBehavior(kind) => InterpVerdict::Ub { kind },
            ExecStatus::StepBudgetExhausted => InterpVerdict::Budget,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One row of the outcome log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub schema: u32,
    pub variant: String,
    pub file: String,
    pub seq: usize,
    pub signature: String,
    pub compiler: String,
    pub flags: Vec<String>,
    pub compile: CompileStatus,
    pub run: Option<RunStatus>,
    pub interp: InterpVerdict,
    pub timestamp: String,
}

impl TestOutcome {
    pub fn key(&self) -> (String, String, Vec<String>) {
        (self.variant.clone(), self.compiler.clone(), self.flags.clone())
    }
}

pub fn load_log(path: &Path) -> Result<Vec<TestOutcome>, HarnessError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| HarnessError::Log {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    /// Skip files whose variant count exceeds the threshold.
    Threshold(u64),
    /// Take the first N variants of every file.
    Cap(u64),
}

#[derive(Clone, Debug)]
pub struct CampaignOptions {
    pub mode: Mode,
    pub granularity: Granularity,
    pub decl_holes: bool,
    pub limit: Limit,
    pub out: PathBuf,
    pub step_budget: u64,
}

impl CampaignOptions {
    pub fn new(out: impl Into<PathBuf>) -> CampaignOptions {
        CampaignOptions {
            mode: Mode::Complete,
            granularity: Granularity::Intra,
            decl_holes: false,
            limit: Limit::Threshold(10_000),
            out: out.into(),
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileStatus {
    Tested,
    Skipped,
    ParseError,
    Unsupported,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSummary {
    pub file: String,
    pub status: FileStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
    pub naive: Option<String>,
    pub selected: Option<String>,
    /// Valid variants evaluated.
    pub variants: usize,
    /// Stream positions whose realization was not a valid program.
    pub invalid: usize,
    pub new_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub schema: u32,
    pub files: Vec<FileSummary>,
    pub total_naive: String,
    pub total_enumerated: String,
    /// Naive over enumerated, over tested files.
    pub reduction: Option<f64>,
    pub rows_added: usize,
    pub reports: Vec<String>,
}

impl CampaignSummary {
    pub fn crash_reports(&self) -> usize {
        self.reports.iter().filter(|r| r.starts_with("crash-")).count()
    }
}

struct Variant {
    id: String,
    file: String,
    seq: usize,
    signature: String,
    source: String,
    interp: InterpVerdict,
}

struct Task<'a> {
    variant: &'a Variant,
    compiler: &'a ResolvedCompiler,
    flags: &'a [String],
}

pub fn run_campaign(
    corpus: &[PathBuf],
    cfg: &ToolchainConfig,
    opts: &CampaignOptions,
) -> Result<CampaignSummary, HarnessError> {
    let compilers = cfg.resolve()?;
    let variants_dir = opts.out.join("variants");
    fs::create_dir_all(&variants_dir).map_err(io_err(&variants_dir))?;
    let log_path = opts.out.join(LOG_FILE);
    let mut rows = load_log(&log_path)?;
    let mut seen: HashSet<_> = rows.iter().map(TestOutcome::key).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let timeout = Duration::from_secs(cfg.timeout_s);

    let mut files = Vec::new();
    let mut total_naive = BigUint::zero();
    let mut total_enum = BigUint::zero();
    let mut rows_added = 0;
    for path in corpus {
        let (mut summary, variants) = prepare(path, opts);
        for v in &variants {
            let p = variants_dir.join(format!("{}.c", v.id));
            fs::write(&p, &v.source).map_err(io_err(&p))?;
        }
        let tasks: Vec<Task> = variants
            .iter()
            .flat_map(|v| {
                compilers.iter().flat_map(move |c| {
                    cfg.flags.iter().map(move |f| Task {
                        variant: v,
                        compiler: c,
                        flags: f,
                    })
                })
            })
            .filter(|t| !seen.contains(&(t.variant.id.clone(), t.compiler.name.clone(), t.flags.to_vec())))
            .collect();
        let fresh: Vec<TestOutcome> = pool.install(|| {
            tasks
                .par_iter()
                .map(|t| execute(t, timeout))
                .collect::<Result<Vec<_>, _>>()
        })?;
        append(&log_path, &fresh)?;
        summary.new_rows = fresh.len();
        rows_added += fresh.len();
        for r in &fresh {
            seen.insert(r.key());
        }
        rows.extend(fresh);
        if summary.status == FileStatus::Tested {
            total_naive += summary
                .naive
                .as_deref()
                .unwrap_or("0")
                .parse::<BigUint>()
                .unwrap_or_default();
            total_enum += BigUint::from(summary.variants);
        }
        files.push(summary);
    }

    let reports = derive_reports(&rows);
    report::write_reports(&opts.out, &reports, &compilers)?;
    let summary = CampaignSummary {
        schema: SCHEMA_VERSION,
        files,
        reduction: (!total_enum.is_zero())
            .then(|| total_naive.to_f64().unwrap_or(f64::INFINITY) / total_enum.to_f64().unwrap_or(f64::INFINITY)),
        total_naive: total_naive.to_string(),
        total_enumerated: total_enum.to_string(),
        rows_added,
        reports: reports.iter().map(|r| r.id.clone()).collect(),
    };
    let sp = opts.out.join("summary.json");
    fs::write(
        &sp,
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )
    .map_err(io_err(&sp))?;
    Ok(summary)
}

/// Parse, count, gate and realize one corpus file.
fn prepare(path: &Path, opts: &CampaignOptions) -> (FileSummary, Vec<Variant>) {
    let file = path.display().to_string();
    let mut summary = FileSummary {
        file: file.clone(),
        status: FileStatus::ParseError,
        message: None,
        naive: None,
        selected: None,
        variants: 0,
        invalid: 0,
        new_rows: 0,
    };
    let prog = match fs::read_to_string(path)
        .map_err(|e| e.to_string())
        .and_then(|s| minilang::parse(&s).map_err(|e| e.to_string()))
    {
        Ok(p) => p,
        Err(e) => {
            summary.message = Some(e);
            return (summary, Vec::new());
        }
    };
    let skel = extract(
        &prog,
        ExtractOptions {
            decl_holes: opts.decl_holes,
        },
    );
    let plan = count_plan(&skel, opts.granularity);
    summary.naive = Some(plan.naive.to_string());
    let Some(count) = plan.selected(opts.mode) else {
        summary.status = FileStatus::Unsupported;
        summary.message = Some("paper mode does not support nested local scopes".into());
        return (summary, Vec::new());
    };
    summary.selected = Some(count.to_string());
    let take = match opts.limit {
        Limit::Threshold(t) if *count > BigUint::from(t) => {
            summary.status = FileStatus::Skipped;
            return (summary, Vec::new());
        }
        Limit::Threshold(_) => count.to_usize().unwrap_or(usize::MAX),
        Limit::Cap(c) => count.to_usize().unwrap_or(usize::MAX).min(c as usize),
    };
    let stream = match enumerate(&skel, opts.mode, opts.granularity) {
        Ok(s) => s,
        Err(e) => {
            summary.status = FileStatus::Unsupported;
            summary.message = Some(e.to_string());
            return (summary, Vec::new());
        }
    };
    summary.status = FileStatus::Tested;
    let stem = path
        .file_stem()
        .map_or_else(|| "variant".into(), |s| s.to_string_lossy().into_owned());
    let mut variants = Vec::new();
    for (seq, a) in stream.take(take).enumerate() {
        match realize(&skel, &a) {
            Ok(p) => {
                let r = minilang::interpret(&p, opts.step_budget);
                variants.push(Variant {
                    id: variant_name(&stem, seq, take),
                    file: file.clone(),
                    seq,
                    signature: canonical_signature(&skel, &a, opts.granularity)
                        .expect("enumerated assignments are valid")
                        .to_string(),
                    source: minilang::render(&p),
                    interp: InterpVerdict::from(&r),
                });
            }
            Err(RealizeError::Invalid(_)) => summary.invalid += 1,
            Err(RealizeError::Skeleton(e)) => panic!("enumerator produced an invalid assignment: {e}"),
        }
    }
    summary.variants = variants.len();
    (summary, variants)
}

fn execute(t: &Task, timeout: Duration) -> Result<TestOutcome, HarnessError> {
    let root = exec::temp_root();
    let dir = tempfile::Builder::new()
        .prefix("spe-")
        .tempdir_in(&root)
        .map_err(io_err(&root))?;
    let input = format!("{}.c", t.variant.id);
    let output = format!("{}.out", t.variant.id);
    let ipath = dir.path().join(&input);
    fs::write(&ipath, &t.variant.source).map_err(io_err(&ipath))?;
    let argv = t.compiler.argv(t.flags, &input, &output);
    let done = exec::run(&t.compiler.program, &argv, dir.path(), timeout).map_err(io_err(&t.compiler.program))?;
    let stderr = String::from_utf8_lossy(&done.stderr);
    let opath = dir.path().join(&output);
    let compile = if done.exit == Exit::TimedOut {
        CompileStatus::Timeout
    } else if is_crash(done.exit, &stderr) {
        CompileStatus::Crash {
            signature: normalize_signature(&stderr, done.exit),
        }
    } else {
        match done.exit {
            // A successful compile that left no binary is treated as a rejection.
            Exit::Code(0) if opath.is_file() => CompileStatus::Ok,
            Exit::Code(c) => CompileStatus::Reject { exit_code: c },
            _ => unreachable!("signals count as crashes"),
        }
    };
    let run = if compile == CompileStatus::Ok {
        let r = exec::run(&opath, &[], dir.path(), timeout).map_err(io_err(&opath))?;
        Some(RunStatus {
            exit_code: match r.exit {
                Exit::Code(c) => Some(c),
                Exit::Signal(s) => Some(128 + s),
                Exit::TimedOut => None,
            },
            stdout_sha256: sha256_hex(&r.stdout),
            timeout: r.exit == Exit::TimedOut,
        })
    } else {
        None
    };
    Ok(TestOutcome {
        schema: SCHEMA_VERSION,
        variant: t.variant.id.clone(),
        file: t.variant.file.clone(),
        seq: t.variant.seq,
        signature: t.variant.signature.clone(),
        compiler: t.compiler.name.clone(),
        flags: t.flags.to_vec(),
        compile,
        run,
        interp: t.variant.interp.clone(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    })
}

fn append(path: &Path, rows: &[TestOutcome]) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Ok(());
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut buf = String::new();
    for r in rows {
        buf.push_str(&serde_json::to_string(r).expect("outcome serializes"));
        buf.push('\n');
    }
    f.write_all(buf.as_bytes()).map_err(io_err(path))
}
