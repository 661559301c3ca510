//! Crash detection and signature normalization.

use std::sync::OnceLock;

use regex::Regex;

use super::exec::Exit;

/// Substrings that mark a compiler crash regardless of exit status.
pub const ICE_MARKERS: &[&str] = &[
    "internal compiler error",
    "PLEASE submit a bug report",
    "Segmentation fault",
    "Assertion",
];

/// A compile step crashed if it died from a signal, exited with a code
/// of 128 or more, or printed an internal-error marker.
pub fn is_crash(exit: Exit, stderr: &str) -> bool {
    match exit {
        Exit::Signal(_) => true,
        Exit::Code(c) if c >= 128 => true,
        Exit::TimedOut => false,
        Exit::Code(_) => ICE_MARKERS.iter().any(|m| stderr.contains(m)),
    }
}

fn paths() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r"(?:/[^\s:/()'`]+)*/([^\s:/()'`]+)").unwrap())
}

fn numbers() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r":\d+").unwrap())
}

/// Reduce crash diagnostics to a stable signature: the first line carrying
/// a crash marker (from the marker on), or else the first non-empty line,
/// with absolute paths cut to basenames, `:N` positions turned into `:#`
/// and whitespace collapsed.
pub fn normalize_signature(stderr: &str, exit: Exit) -> String {
    let marked = stderr
        .lines()
        .find_map(|l| ICE_MARKERS.iter().filter_map(|m| l.find(m)).min().map(|i| &l[i..]));
    let line = marked.or_else(|| stderr.lines().find(|l| !l.trim().is_empty()));
    let Some(line) = line else {
        return match exit {
            Exit::Signal(s) => format!("signal:{s}"),
            Exit::Code(c) if c >= 128 => format!("signal:{}", c - 128),
            Exit::Code(c) => format!("exit:{c}"),
            Exit::TimedOut => "timeout".to_string(),
        };
    };
    let line = paths().replace_all(line, "$1");
    let line = numbers().replace_all(&line, ":#");
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}
