//! Verdicts and bug reports, derived from the outcome log alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, sha256_hex, CompileStatus, HarnessError, InterpVerdict, ResolvedCompiler, TestOutcome};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub compiler: String,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    WrongCode(Vec<Cell>),
}

/// Compare every compiled-and-run cell of one variant against the
/// interpreter. Variants with undefined behavior or an exhausted budget
/// are never wrong code; neither are runs that timed out.
pub fn differential_verdict(interp: &InterpVerdict, cells: &[&TestOutcome]) -> Verdict {
    let InterpVerdict::Ok {
        exit_code,
        stdout_sha256,
    } = interp
    else {
        return Verdict::Ok;
    };
    let mut bad: Vec<Cell> = cells
        .iter()
        .filter(|o| o.compile == CompileStatus::Ok)
        .filter_map(|o| o.run.as_ref().map(|r| (o, r)))
        .filter(|(_, r)| !r.timeout)
        .filter(|(_, r)| r.exit_code != Some(*exit_code) || r.stdout_sha256 != *stdout_sha256)
        .map(|(o, _)| Cell {
            compiler: o.compiler.clone(),
            flags: o.flags.clone(),
        })
        .collect();
    bad.sort();
    if bad.is_empty() {
        Verdict::Ok
    } else {
        Verdict::WrongCode(bad)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BugKind {
    Crash,
    WrongCode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    pub kind: BugKind,
    /// Normalized crash signature (crash reports).
    pub signature: Option<String>,
    /// Cells whose behavior differs from the interpreter (wrong-code reports).
    pub disagreeing: Vec<Cell>,
    pub variant: String,
    pub file: String,
    /// The cell the reproduction command uses.
    pub cell: Cell,
    /// Rows that hit this report.
    pub hits: usize,
    pub first_seen: String,
}

/// One crash report per signature, witnessed by the smallest
/// (variant, compiler, flags); one wrong-code report per variant.
pub fn derive_reports(rows: &[TestOutcome]) -> Vec<BugReport> {
    let mut crashes: BTreeMap<&str, Vec<&TestOutcome>> = BTreeMap::new();
    let mut by_variant: BTreeMap<&str, Vec<&TestOutcome>> = BTreeMap::new();
    for r in rows {
        if let CompileStatus::Crash { signature } = &r.compile {
            crashes.entry(signature).or_default().push(r);
        }
        by_variant.entry(&r.variant).or_default().push(r);
    }
    let mut out = Vec::new();
    for (sig, hits) in crashes {
        let w = hits.iter().min_by_key(|r| (&r.variant, &r.compiler, &r.flags)).unwrap();
        out.push(BugReport {
            id: format!("crash-{}", &sha256_hex(sig.as_bytes())[..12]),
            kind: BugKind::Crash,
            signature: Some(sig.to_string()),
            disagreeing: Vec::new(),
            variant: w.variant.clone(),
            file: w.file.clone(),
            cell: Cell {
                compiler: w.compiler.clone(),
                flags: w.flags.clone(),
            },
            hits: hits.len(),
            first_seen: hits.iter().map(|r| r.timestamp.clone()).min().unwrap(),
        });
    }
    for (variant, cells) in by_variant {
        if let Verdict::WrongCode(bad) = differential_verdict(&cells[0].interp, &cells) {
            out.push(BugReport {
                id: format!("wrong-{variant}"),
                kind: BugKind::WrongCode,
                signature: None,
                variant: variant.to_string(),
                file: cells[0].file.clone(),
                cell: bad[0].clone(),
                hits: bad.len(),
                disagreeing: bad,
                first_seen: cells.iter().map(|r| r.timestamp.clone()).min().unwrap(),
            });
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[derive(Serialize)]
struct Metadata<'a> {
    #[serde(flatten)]
    report: &'a BugReport,
    /// Compiler argv run inside a scratch copy of the report directory.
    command: Option<Vec<String>>,
}

pub(super) fn write_reports(
    out: &Path,
    reports: &[BugReport],
    compilers: &[ResolvedCompiler],
) -> Result<(), HarnessError> {
    let root = out.join("reports");
    if root.exists() {
        fs::remove_dir_all(&root).map_err(io_err(&root))?;
    }
    fs::create_dir_all(&root).map_err(io_err(&root))?;
    for r in reports {
        let dir = root.join(&r.id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let src = out.join("variants").join(format!("{}.c", r.variant));
        let witness = dir.join("witness.c");
        fs::copy(&src, &witness).map_err(io_err(&src))?;
        let command = compilers.iter().find(|c| c.name == r.cell.compiler).map(|c| {
            let mut argv = vec![c.program.display().to_string()];
            argv.extend(c.argv(&r.cell.flags, "witness.c", "witness.out"));
            argv
        });
        let meta = Metadata {
            report: r,
            command: command.clone(),
        };
        let mp = dir.join("metadata.json");
        fs::write(
            &mp,
            serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n",
        )
        .map_err(io_err(&mp))?;
        if let Some(argv) = command {
            let sp = dir.join("repro.sh");
            fs::write(&sp, repro_script(r, &argv)).map_err(io_err(&sp))?;
            make_executable(&sp)?;
        }
    }
    Ok(())
}

fn repro_script(r: &BugReport, argv: &[String]) -> String {
    let quoted: Vec<String> = argv
        .iter()
        .map(|a| shlex::try_quote(a).map_or_else(|_| a.clone(), |q| q.into_owned()))
        .collect();
    let mut s = String::from("#!/bin/sh\n");
    match &r.signature {
        Some(sig) => s.push_str(&format!("# expected crash: {sig}\n")),
        None => s.push_str("# compiled binary disagrees with the reference interpreter\n"),
    }
    s.push_str("here=$(cd \"$(dirname \"$0\")\" && pwd)\n");
    s.push_str("work=$(mktemp -d)\n");
    s.push_str("cp \"$here/witness.c\" \"$work/witness.c\"\n");
    s.push_str("cd \"$work\" || exit 2\n");
    match r.kind {
        BugKind::Crash => s.push_str(&format!("exec env -i PATH=\"$PATH\" {}\n", quoted.join(" "))),
        BugKind::WrongCode => {
            s.push_str(&format!("env -i PATH=\"$PATH\" {} || exit 2\n", quoted.join(" ")));
            s.push_str("env -i PATH=\"$PATH\" ./witness.out\n");
            s.push_str("echo \"exit: $?\"\n");
        }
    }
    s
}

#[cfg(unix)]
fn make_executable(p: &Path) -> Result<(), HarnessError> {
    use std::os::unix::fs::PermissionsExt;
    fs::set_permissions(p, fs::Permissions::from_mode(0o755)).map_err(io_err(p))
}

#[cfg(not(unix))]
fn make_executable(_: &Path) -> Result<(), HarnessError> {
    Ok(())
}
