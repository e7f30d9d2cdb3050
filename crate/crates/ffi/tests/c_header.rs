//! The generated header compiles as C and links against the shared library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include "ucplab.h"
#include <stdio.h>

int main(void) {
    double lo = 0.0, hi = 1.0, cuc = 0.0, c = 0.0;
    uintptr_t n = 31, len = 0;
    UcplabGrid *grid = NULL;
    UcplabSpectrum *spec = NULL;
    UcplabMask *mask = NULL;
    if (ucplab_eval_cuc(0.0, 0.0, -1.0, 1.0, 0.25, 2.0, &cuc, NULL) != UCPLAB_STATUS_OK) return 1;
    if (cuc < 0.0624 || cuc > 0.0626) return 2;
    if (ucplab_eval_cuc(0.0, 0.0, 1.0, 1.0, 3.0, 1.0, &cuc, NULL) != UCPLAB_STATUS_INVALID_ARGUMENT) return 3;
    if (ucplab_last_error() == NULL) return 4;
    if (ucplab_grid_new(1, &lo, &hi, &n, UCPLAB_BOUNDARY_DIRICHLET, &grid) != UCPLAB_STATUS_OK) return 5;
    ucplab_grid_len(grid, &len);
    double v[31] = {0};
    if (ucplab_spectrum_new(grid, v, len, &spec) != UCPLAB_STATUS_OK) return 6;
    if (ucplab_mask_centers(grid, 1.0, 0.1, &mask) != UCPLAB_STATUS_OK) return 7;
    if (ucplab_measure_observability(spec, mask, 1.0, &c, NULL) != UCPLAB_STATUS_OK) return 8;
    printf("%s %.6e\n", ucplab_version(), c);
    ucplab_mask_free(mask);
    ucplab_spectrum_free(spec);
    ucplab_grid_free(grid);
    return 0;
}
"#;

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

/// `target/<profile>/deps`, where cargo leaves the cdylib next to the test
/// executable.
fn deps_dir() -> PathBuf {
    std::env::current_exe().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_is_valid_c() {
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(header_dir().join("ucplab.h"))
        .status()
        .expect("C compiler available");
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let lib = deps_dir();
    assert!(
        lib.join("libucplab_ffi.so").exists(),
        "shared library missing in {}",
        lib.display()
    );
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror"])
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg("-L")
        .arg(&lib)
        .arg("-lucplab_ffi")
        .arg(format!("-Wl,-rpath,{}", lib.display()))
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")), "{stdout}");
}
