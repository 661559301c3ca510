use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use spe_ffi::*;

const TWO_POOLS: &str = include_str!("../../core/tests/fixtures/two_pools.c");

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    spe_string_free(s);
    out
}

unsafe fn skeleton(src: &str, decl_holes: bool) -> *mut SpeSkeleton {
    let src = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(spe_program_parse(src.as_ptr(), &mut p), SpeStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(spe_skeleton_extract(p, decl_holes, &mut s), SpeStatus::Ok);
    spe_program_free(p);
    s
}

#[test]
fn counts_as_decimal_strings() {
    unsafe {
        let s = skeleton(TWO_POOLS, false);
        assert_eq!(spe_skeleton_hole_count(s), 5);
        let (mut naive, mut sel) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            spe_count(s, SpeMode::Paper, SpeGranularity::Intra, &mut naive, &mut sel),
            SpeStatus::Ok
        );
        assert_eq!((take(naive), take(sel)), ("128".to_string(), "36".to_string()));
        assert_eq!(
            spe_count(s, SpeMode::Complete, SpeGranularity::Intra, &mut naive, &mut sel),
            SpeStatus::Ok
        );
        assert_eq!(take(sel), "40");
        spe_string_free(naive);
        let mut json = ptr::null_mut();
        assert_eq!(spe_skeleton_to_json(s, &mut json), SpeStatus::Ok);
        let doc: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(doc["n"], 5);
        spe_skeleton_free(s);
    }
}

#[test]
fn enumerator_streams_until_exhausted() {
    unsafe {
        let s = skeleton(TWO_POOLS, false);
        let mut e = ptr::null_mut();
        assert_eq!(
            spe_enumerator_new(s, SpeMode::Complete, SpeGranularity::Intra, &mut e),
            SpeStatus::Ok
        );
        spe_skeleton_free(s);
        let mut sigs = Vec::new();
        loop {
            let (mut src, mut sig) = (ptr::null_mut(), ptr::null_mut());
            match spe_enumerator_next(e, &mut src, &mut sig) {
                SpeStatus::Ok => {
                    assert!(take(src).contains("main"));
                    sigs.push(take(sig));
                }
                SpeStatus::Exhausted => break,
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(
            spe_enumerator_next(e, &mut ptr::null_mut(), &mut ptr::null_mut()),
            SpeStatus::Exhausted
        );
        spe_enumerator_free(e);
        assert_eq!(sigs.len(), 40);
        sigs.sort();
        sigs.dedup();
        assert_eq!(sigs.len(), 40);
    }
}

#[test]
fn errors_carry_messages() {
    unsafe {
        let bad = CString::new("int main() { return x; }").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(spe_program_parse(bad.as_ptr(), &mut p), SpeStatus::ParseError);
        assert!(p.is_null());
        let msg = CStr::from_ptr(spe_last_error_message()).to_str().unwrap();
        assert!(msg.contains("undeclared"), "{msg}");
        assert_eq!(spe_program_parse(ptr::null(), &mut p), SpeStatus::NullArgument);
        let nested = "int main() { int a = 1; { int b = 2; { int c = 3; c = a + b; } } return a; }";
        let s = skeleton(nested, false);
        let mut e = ptr::null_mut();
        assert_eq!(
            spe_enumerator_new(s, SpeMode::Paper, SpeGranularity::Intra, &mut e),
            SpeStatus::Unsupported
        );
        spe_skeleton_free(s);
        spe_string_free(ptr::null_mut());
        spe_skeleton_free(ptr::null_mut());
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

fn has_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn header_links_from_c() {
    let lib = target_dir().join("libspe_ffi.a");
    if !has_cc() || !lib.exists() {
        eprintln!("skipping: cc or {} unavailable", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("client.c");
    std::fs::write(
        &prog,
        r#"#include "spe.h"
#include <stdio.h>
#include <string.h>
int main(void) {
    struct SpeProgram *p = NULL;
    struct SpeSkeleton *s = NULL;
    char *naive = NULL, *sel = NULL;
    if (spe_program_parse("int a = 1, b = 2; int main() { a = b; return a; }", &p) != SPE_STATUS_OK) return 10;
    if (spe_skeleton_extract(p, false, &s) != SPE_STATUS_OK) return 11;
    if (spe_count(s, SPE_MODE_COMPLETE, SPE_GRANULARITY_INTRA, &naive, &sel) != SPE_STATUS_OK) return 12;
    printf("%s %s\n", naive, sel);
    spe_string_free(naive);
    spe_string_free(sel);
    spe_skeleton_free(s);
    spe_program_free(p);
    if (spe_program_parse("int main() {", &p) != SPE_STATUS_PARSE_ERROR) return 13;
    return strlen(spe_last_error_message()) > 0 ? 0 : 14;
}
"#,
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let exe = dir.path().join("client");
    let st = Command::new("cc")
        .arg(&prog)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout), "8 4\n");
}
