//! Compiles a C program against the generated header, links the static
//! library, and runs it: the ABI is exercised from the C side.

use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "wres_ffi.h"

int main(void) {
    WresResult *p = NULL;
    if (wres_compute('P', &p) != WRES_STATUS_OK) return 1;
    char *text = NULL;
    if (wres_render(p, WRES_FORMAT_PLAIN, &text) != WRES_STATUS_OK) return 2;
    if (strncmp(text, "P_D = -2^m", 10) != 0) return 3;
    wres_string_free(text);
    bool diverged = true;
    if (wres_has_discrepancy(p, &diverged) != WRES_STATUS_OK || diverged) return 4;
    wres_result_free(p);

    WresResult *q = NULL;
    if (wres_compute('Q', &q) != WRES_STATUS_OK) return 5;
    if (wres_checkpoint_count(q) != 12) return 6;
    if (wres_has_discrepancy(q, &diverged) != WRES_STATUS_OK || !diverged) return 7;
    char *report = NULL;
    if (wres_report_render(q, &report) != WRES_STATUS_OK || report == NULL) return 8;
    if (strstr(report, "II-1") == NULL) return 9;
    wres_string_free(report);
    wres_result_free(q);
    puts("c smoke ok");
    return 0;
}
"#;

#[test]
fn c_program_runs_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    assert!(include_dir.join("wres_ffi.h").is_file(), "header not generated");

    let exe = env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    assert!(
        lib_dir.join("libwres_ffi.a").is_file(),
        "static library missing at {}",
        lib_dir.display()
    );

    let work = env::temp_dir().join(format!("wres_ffi_smoke_{}", std::process::id()));
    fs::create_dir_all(&work).unwrap();
    let src = work.join("smoke.c");
    let bin = work.join("smoke");
    fs::write(&src, PROGRAM).unwrap();

    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lwres_ffi")
        .arg("-lpthread")
        .arg("-ldl")
        .arg("-lm")
        .arg("-o")
        .arg(&bin)
        .output()
        .expect("cc not runnable");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&bin).output().expect("smoke binary not runnable");
    assert!(
        run.status.success(),
        "smoke binary exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "c smoke ok");
    fs::remove_dir_all(&work).ok();
}
