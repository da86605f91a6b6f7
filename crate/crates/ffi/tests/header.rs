//! Compile C code against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

/// `target/<profile>`, found from this test binary's location (`target/<profile>/deps/`).
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(crate_dir().join("include/buckshare.h")).unwrap();
    for sym in [
        "typedef struct BsScenario BsScenario;",
        "typedef struct BsTrace BsTrace;",
        "BS_STATUS_OK = 0",
        "BS_STATUS_CCM_VIOLATION",
        "bs_scenario_parse",
        "bs_run",
        "bs_trace_get",
        "bs_trace_metrics",
        "bs_controller_step",
        "bs_equilibrium",
        "bs_last_error_message",
    ] {
        assert!(h.contains(sym), "{sym} missing from header");
    }
}

#[test]
fn header_compiles_as_c_and_cxx() {
    if !have_cc() {
        eprintln!("skipped: no C compiler");
        return;
    }
    let h = crate_dir().join("include/buckshare.h");
    let c = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Wextra", "-pedantic", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&h)
        .status()
        .unwrap();
    assert!(c.success());
    if let Ok(cxx) = Command::new("c++").args(["-fsyntax-only", "-x", "c++"]).arg(&h).status() {
        assert!(cxx.success());
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib = profile_dir().join("libbuckshare_ffi.a");
    if !have_cc() || !lib.exists() {
        eprintln!("skipped: no C compiler or {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let build = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror"])
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
