//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use spe::combinat::{count_plan, stirling2, Mode, RGString};
use spe::enumerator::{canonical_signature, enumerate, naive_count, naive_enumerate, Assignment};
use spe::harness::{
    load_log, normalize_signature, run_campaign, CampaignOptions, CompilerEntry, Exit, ToolchainConfig, LOG_FILE,
};
use spe::minilang::parse;
use spe::skeleton::{extract, ExtractOptions, Granularity, Skeleton};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn skeleton(file: &str, decl_holes: bool) -> Skeleton {
    extract(
        &parse(&common::fixture_src(file)).unwrap(),
        ExtractOptions { decl_holes },
    )
}

fn by_names(s: &Skeleton, names: &[&str]) -> Assignment {
    Assignment(
        names
            .iter()
            .map(|n| s.program.vars.iter().position(|v| v.name == *n).unwrap())
            .collect(),
    )
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

fn criterion_1() -> Check {
    let s = skeleton("two_pools.c", false);
    let plan = count_plan(&s, Granularity::Intra);
    let stream = enumerate(&s, Mode::Paper, Granularity::Intra)
        .map_err(|e| e.to_string())?
        .count();
    ensure(plan.paper == Some(big(36)), || format!("paper count {:?}", plan.paper))?;
    ensure(stream == 36, || format!("paper stream has {stream} members"))?;
    ensure(plan.naive == big(128), || format!("naive {}", plan.naive))?;
    Ok("paper 36, naive 128".into())
}

/// The compact renamings of the two-pool instance: swap a/b, swap c/d.
fn two_pool_group(s: &Skeleton) -> Vec<Vec<usize>> {
    let id = |n: &str| s.program.vars.iter().position(|v| v.name == n).unwrap();
    let (a, b, c, d) = (id("a"), id("b"), id("c"), id("d"));
    let n = s.program.vars.len();
    let perm = |swaps: &[(usize, usize)]| {
        let mut p: Vec<usize> = (0..n).collect();
        for &(x, y) in swaps {
            p.swap(x, y);
        }
        p
    };
    vec![perm(&[]), perm(&[(a, b)]), perm(&[(c, d)]), perm(&[(a, b), (c, d)])]
}

fn criterion_2() -> Check {
    let s = skeleton("two_pools.c", false);
    let group = two_pool_group(&s);
    let naive: Vec<Assignment> = naive_enumerate(&s, 1 << 20).map_err(|e| e.to_string())?.collect();
    let apply = |p: &[usize], a: &Assignment| -> Vec<usize> { a.0.iter().map(|&v| p[v]).collect() };
    let dedup: BTreeSet<Vec<usize>> = naive
        .iter()
        .map(|a| group.iter().map(|p| apply(p, a)).min().unwrap())
        .collect();
    let fixed: usize = group
        .iter()
        .map(|p| naive.iter().filter(|a| apply(p, a) == a.0).count())
        .sum();
    let burnside = fixed / group.len();
    let complete: Vec<Assignment> = enumerate(&s, Mode::Complete, Granularity::Intra)
        .map_err(|e| e.to_string())?
        .collect();
    let reps: BTreeSet<Vec<usize>> = complete
        .iter()
        .map(|a| group.iter().map(|p| apply(p, a)).min().unwrap())
        .collect();
    let count = count_plan(&s, Granularity::Intra).complete;
    ensure(fixed == 160, || format!("Burnside fixed-point total {fixed}"))?;
    ensure(dedup.len() == 40 && burnside == 40, || {
        format!("oracles {} / {burnside}", dedup.len())
    })?;
    ensure(count == big(40) && complete.len() == 40, || {
        format!("complete {count} / stream {}", complete.len())
    })?;
    ensure(reps == dedup, || {
        "complete stream is not a transversal of the orbits".into()
    })?;
    Ok("complete 40 = brute-force dedup 40 = Burnside (128+32)/4".into())
}

fn criterion_3() -> Check {
    let s = skeleton("while_loop.c", false);
    ensure(naive_count(&s) == big(64), || format!("naive {}", naive_count(&s)))?;
    let o = common::orbits(&s);
    for mode in [Mode::Paper, Mode::Complete] {
        let stream: Vec<Assignment> = enumerate(&s, mode, Granularity::Intra)
            .map_err(|e| e.to_string())?
            .collect();
        let ids: HashSet<usize> = stream.iter().map(|a| o.ids[&a.0]).collect();
        ensure(stream.len() == 32 && ids.len() == 32 && o.count == 32, || {
            format!(
                "{mode:?}: {} assignments over {} of {} orbits",
                stream.len(),
                ids.len(),
                o.count
            )
        })?;
    }
    let origin = canonical_signature(&s, &s.origin, Granularity::Intra).map_err(|e| e.to_string())?;
    let p2 = by_names(&s, &["a", "b", "b", "b", "a", "b"]);
    let p2 = canonical_signature(&s, &p2, Granularity::Intra).map_err(|e| e.to_string())?;
    let (r0, r2) = (origin.0[0].rgs.to_string(), p2.0[0].rgs.to_string());
    ensure(r0 == "010001" && r2 == "011101", || format!("RGS {r0} / {r2}"))?;
    ensure(RGString::from_labels(&s.origin.0).to_string() == r0, || {
        "RGS of the raw origin vector differs".into()
    })?;
    Ok("naive 64, both modes 32 = orbit count, RGS 010001 / 011101".into())
}

fn criterion_4() -> Check {
    let s = skeleton("nested_if.c", true);
    let plan = count_plan(&s, Granularity::Intra);
    ensure(s.n() == 10, || format!("{} holes", s.n()))?;
    ensure(plan.naive == big(32_768), || format!("naive {}", plan.naive))?;
    ensure(plan.scope_blind_naive == big(1_048_576), || {
        format!("scope-blind {}", plan.scope_blind_naive)
    })?;
    let o = common::orbits(&s);
    let stream: Vec<Assignment> = enumerate(&s, Mode::Complete, Granularity::Intra)
        .map_err(|e| e.to_string())?
        .collect();
    let ids: HashSet<usize> = stream.iter().map(|a| o.ids[&a.0]).collect();
    ensure(ids.len() == stream.len(), || {
        "duplicate orbit in the complete stream".into()
    })?;
    ensure(ids.len() == o.count, || {
        format!("{} of {} orbits covered", ids.len(), o.count)
    })?;
    Ok(format!(
        "naive 32768, scope-blind 1048576, complete {} = brute-force orbits",
        stream.len()
    ))
}

fn criterion_5() -> Check {
    let explicit = |n: usize, k: usize| -> BigUint {
        // k! S(n,k) = sum_j (-1)^j C(k,j) (k-j)^n
        let (mut pos, mut neg) = (BigUint::from(0u8), BigUint::from(0u8));
        let mut choose = BigUint::from(1u8);
        for j in 0..=k {
            let term = &choose * BigUint::from(k - j).pow(n as u32);
            if j % 2 == 0 {
                pos += term;
            } else {
                neg += term;
            }
            choose = choose * BigUint::from(k - j) / BigUint::from(j + 1);
        }
        let fact: BigUint = (1..=k).map(BigUint::from).product();
        (pos - neg) / fact
    };
    ensure(stirling2(4, 2) == big(7), || format!("S(4,2) = {}", stirling2(4, 2)))?;
    ensure(stirling2(5, 2) + stirling2(5, 1) == big(16), || {
        "S(5,2)+S(5,1) != 16".into()
    })?;
    ensure(stirling2(0, 0) == big(1), || "S(0,0) != 1".into())?;
    for n in 1..=9 {
        ensure(stirling2(n, 0) == big(0), || format!("S({n},0) != 0"))?;
        for k in 1..=n {
            let rec = BigUint::from(k) * stirling2(n - 1, k) + stirling2(n - 1, k - 1);
            ensure(stirling2(n, k) == rec, || format!("recurrence fails at ({n},{k})"))?;
            ensure(stirling2(n, k) == explicit(n, k), || {
                format!("explicit formula disagrees at ({n},{k})")
            })?;
        }
    }
    Ok("S(4,2)=7, S(5,2)+S(5,1)=16, recurrence and explicit formula for n <= 9".into())
}

fn criterion_6() -> Check {
    let (mut naive, mut orbits, mut paper) = (0, 0, 0);
    for seed in 0..200 {
        let c = common::check_partitions(seed)?;
        naive += c.naive;
        orbits += c.orbits;
        paper += usize::from(c.paper.is_some());
    }
    Ok(format!(
        "200 programs, {naive} naive assignments in {orbits} orbits, paper mode checked on {paper}"
    ))
}

fn criterion_7() -> Check {
    let mut orbits = 0;
    let mut programs = 0;
    for seed in 0..100 {
        orbits += common::check_semantics(seed, 2)?;
        programs += 1;
    }
    ensure(orbits >= 50, || format!("only {orbits} orbits sampled"))?;
    Ok(format!(
        "{orbits} orbits over {programs} programs, every member matches its representative"
    ))
}

fn crash_config(workers: usize) -> ToolchainConfig {
    let stub = common::fixture("stubs/crash_cc.py");
    ToolchainConfig {
        compilers: vec![CompilerEntry {
            name: "stubcc".into(),
            cmd: format!("python3 {} {{flags}} {{input}} -o {{output}}", stub.display()),
        }],
        flags: vec![vec!["-O0".into()], vec!["-O3".into()]],
        timeout_s: 10,
        workers,
    }
}

fn criterion_8() -> Check {
    let line = "internal compiler error: in assign_by_spills, at lra-assigns.c:1281";
    let mutated = "internal compiler error: in assign_by_spills, at lra-assigns.c:1307";
    ensure(
        normalize_signature(line, Exit::Code(1)) == normalize_signature(mutated, Exit::Code(1)),
        || "line-number mutation changes the signature".into(),
    )?;
    if !common::has_tool("python3") {
        return Err("python3 is required for the stub compiler".into());
    }
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let summary = run_campaign(
        &[common::fixture("crash_pattern.c")],
        &crash_config(4),
        &CampaignOptions::new(out.path()),
    )
    .map_err(|e| e.to_string())?;
    let rows = load_log(&out.path().join(LOG_FILE)).map_err(|e| e.to_string())?;
    let triggering: BTreeSet<&str> = rows
        .iter()
        .filter(|r| matches!(r.compile, spe::harness::CompileStatus::Crash { .. }))
        .map(|r| r.variant.as_str())
        .collect();
    ensure(triggering.len() > 1, || {
        format!("{} triggering variants", triggering.len())
    })?;
    ensure(summary.reports.len() == 1 && summary.crash_reports() == 1, || {
        format!("reports {:?}", summary.reports)
    })?;
    let dir = out.path().join("reports").join(&summary.reports[0]);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("metadata.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let sig = meta["signature"].as_str().unwrap_or_default().to_string();
    let repro = Command::new(dir.join("repro.sh")).output().map_err(|e| e.to_string())?;
    let exit = repro.status.code().map_or(Exit::Signal(0), Exit::Code);
    let again = normalize_signature(&String::from_utf8_lossy(&repro.stderr), exit);
    ensure(
        spe::harness::is_crash(exit, &String::from_utf8_lossy(&repro.stderr)),
        || "repro.sh did not crash".into(),
    )?;
    ensure(again == sig, || format!("repro signature `{again}` vs `{sig}`"))?;
    Ok(format!(
        "{} triggering variants, 1 report, repro re-crashes with `{sig}`",
        triggering.len()
    ))
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let mut bytes = fs::read(&p).unwrap();
                if p.ends_with("metadata.json") {
                    let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                    v.as_object_mut().unwrap().remove("first_seen");
                    bytes = v.to_string().into_bytes();
                }
                m.insert(p.strip_prefix(dir).unwrap().display().to_string(), bytes);
            }
        }
    }
    m
}

fn criterion_9() -> Check {
    let bin = env!("CARGO_BIN_EXE_spe");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = [common::fixture("while_loop.c"), common::fixture("two_pools.c")];
    let mut runs = Vec::new();
    for name in ["a", "b", "a"] {
        let out = tmp.path().join(name);
        let st = Command::new(bin)
            .arg("enumerate")
            .arg("--out")
            .arg(&out)
            .args(&corpus)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(st.status.success(), || format!("enumerate exited with {}", st.status))?;
        runs.push(dir_bytes(&out));
    }
    ensure(runs[0] == runs[1] && runs[1] == runs[2], || {
        "enumerate output differs between runs".into()
    })?;
    if !common::has_tool("python3") {
        return Err("python3 is required for the stub compiler".into());
    }
    let mut reports = Vec::new();
    for workers in [1, 2, 8] {
        let out = tmp.path().join(format!("campaign{workers}"));
        let opts = CampaignOptions::new(&out);
        let corpus = [common::fixture("crash_pattern.c")];
        run_campaign(&corpus, &crash_config(workers), &opts).map_err(|e| e.to_string())?;
        let again = run_campaign(&corpus, &crash_config(workers), &opts).map_err(|e| e.to_string())?;
        ensure(again.rows_added == 0, || {
            format!("re-run added {} rows", again.rows_added)
        })?;
        reports.push(dir_bytes(&out.join("reports")));
    }
    ensure(reports[0] == reports[1] && reports[1] == reports[2], || {
        "report sets differ across worker counts".into()
    })?;
    Ok(format!(
        "{} enumerated files byte-identical, re-run adds 0 rows, reports equal for 1/2/8 workers",
        runs[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 paper-mode worked example", criterion_1, Duration::from_secs(1)),
        ("2 complete mode vs two oracles", criterion_2, Duration::from_secs(1)),
        ("3 while-loop instance", criterion_3, Duration::from_secs(1)),
        (
            "4 nested-scope instance with declaration holes",
            criterion_4,
            Duration::from_secs(60),
        ),
        ("5 Stirling numbers", criterion_5, Duration::from_secs(1)),
        (
            "6 randomized partition properties",
            criterion_6,
            Duration::from_secs(120),
        ),
        ("7 renamed variants behave alike", criterion_7, Duration::from_secs(120)),
        ("8 crash triage", criterion_8, Duration::from_secs(120)),
        ("9 determinism and idempotence", criterion_9, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let r = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let r = r.and_then(|m| {
            if took <= limit {
                Ok(m)
            } else {
                Err(format!("{m}, but took {took:.2?} (limit {limit:?})"))
            }
        });
        match r {
            Ok(m) => println!("PASS criterion {name}: {m} [{took:.2?}]"),
            Err(m) => {
                failed += 1;
                println!("FAIL criterion {name}: {m} [{took:.2?}]");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
