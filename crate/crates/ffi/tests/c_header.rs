//! Compiles a C program against the generated header and links it with the
//! static library. Skipped when no C compiler is on the PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "egnn.h"

int main(void) {
    EgnnHyperParams hp = egnn_default_hyper_params();
    EgnnModel *m = NULL;
    if (egnn_model_new(&hp, 7, &m) != EGNN_STATUS_OK) return 1;
    const double a[2] = {0.1, 0.2}, b[2] = {0.8, 0.9};
    for (int i = 0; i < 20; i++) {
        egnn_model_learn(m, a, 2, 1, NULL);
        egnn_model_learn(m, b, 2, 2, NULL);
    }
    uint32_t cls = 0;
    double probs[8];
    size_t count = 0;
    if (egnn_model_predict(m, b, 2, &cls, probs, 8, &count) != EGNN_STATUS_OK) return 2;
    const double bad[1] = {0.5};
    if (egnn_model_learn(m, bad, 1, 1, NULL) != EGNN_STATUS_DIMENSION_MISMATCH) return 3;
    printf("%u %zu %s\n", cls, count, egnn_last_error());
    egnn_model_free(m);
    return 0;
}
"#;

fn find_cc() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .map(str::to_string)
}

/// `target/<profile>` directory holding `libegnn_ffi.a`.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = find_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = artifact_dir().join("libegnn_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("2 2 expected 2 features, got 1"), "{stdout}");
}
