use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "rma_halo.h"

int main(void) {
    RmaHaloPlan *plan = NULL;
    if (rma_halo_plan_new_weak(16, 16, 256, 4, true, 2, &plan) != RMA_HALO_STATUS_OK) return 1;
    size_t bytes = 0;
    if (rma_halo_plan_region_bytes(plan, 0, 0, 1, true, &bytes) != RMA_HALO_STATUS_OK) return 2;
    rma_halo_plan_free(plan);
    if (bytes != 65536) return 3;

    RmaHaloBenchConfig *cfg = rma_halo_bench_config_new();
    if (rma_halo_bench_config_set(cfg, "mode", "bogus") != RMA_HALO_STATUS_CONFIG) return 4;
    char *err = rma_halo_last_error();
    if (err == NULL || strstr(err, "bogus") == NULL) return 5;
    rma_halo_string_free(err);
    rma_halo_bench_config_apply_text(cfg, "backend=p2p,fence\nranks=2\nlocal-grid=4x4x2\nfields=1\ntimesteps=2\nruns=1\n");
    RmaHaloReport *report = NULL;
    if (rma_halo_bench_run(cfg, &report) != RMA_HALO_STATUS_OK) return 6;
    if (rma_halo_report_cell_count(report) != 2) return 7;
    RmaHaloCell cell;
    if (rma_halo_report_cell(report, 1, &cell) != RMA_HALO_STATUS_OK) return 8;
    if (cell.backend != RMA_HALO_BACKEND_FENCE || cell.violations != 0) return 9;
    printf("%s %zu\n", rma_halo_version(), cell.ranks);
    rma_halo_report_free(report);
    rma_halo_bench_config_free(cfg);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("librma_halo_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("client");
    let status = Command::new(&cc)
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg(format!("-I{}", concat!(env!("CARGO_MANIFEST_DIR"), "/include")))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.trim(), format!("{} 2", env!("CARGO_PKG_VERSION")));
}
