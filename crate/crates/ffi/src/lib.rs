//! C ABI for `rma_halo`.
//!
//! All objects are opaque handles created and freed through this API.
//! Functions return an [`RmaHaloStatus`]; on failure the message is kept
//! per thread and can be fetched with [`rma_halo_last_error`]. Strings
//! returned to the caller must be released with [`rma_halo_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rma_halo::bench::{self, BenchConfig, BenchError, BenchReport};
use rma_halo::grid::GridError;
use rma_halo::halo::{
    halo_region_sizes, plan_decomposition, plan_weak, Accounting, Backend, DecompositionPlan, Direction,
    FieldDescriptor,
};
use rma_halo::sim::RankId;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmaHaloStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Plan = 4,
    Simulation = 5,
    /// A halo held wrong values.
    Oracle = 6,
    Io = 7,
    NotFound = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmaHaloBackend {
    P2p = 0,
    Fence = 1,
    Pscw = 2,
    Passive = 3,
}

impl From<Backend> for RmaHaloBackend {
    fn from(b: Backend) -> Self {
        match b {
            Backend::P2p => RmaHaloBackend::P2p,
            Backend::Fence => RmaHaloBackend::Fence,
            Backend::Pscw => RmaHaloBackend::Pscw,
            Backend::Passive => RmaHaloBackend::Passive,
        }
    }
}

/// One benchmark cell. Times are simulated nanoseconds.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmaHaloCell {
    pub backend: RmaHaloBackend,
    /// True for strong scaling, false for weak.
    pub strong: bool,
    pub ranks: usize,
    pub fields: usize,
    pub mean_comm_time: f64,
    pub min_comm_time: f64,
    pub max_comm_time: f64,
    pub init_block_time: f64,
    pub sync_msgs: u64,
    pub bytes: u64,
    pub violations: usize,
    pub mismatches: usize,
}

/// Domain decomposition over a rank grid.
pub struct RmaHaloPlan(DecompositionPlan);

/// Benchmark settings, edited through string keys.
pub struct RmaHaloBenchConfig(BenchConfig);

pub struct RmaHaloReport(BenchReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: RmaHaloStatus, msg: impl Into<String>) -> RmaHaloStatus {
    set_error(msg);
    status
}

fn bench_status(e: &BenchError) -> RmaHaloStatus {
    match e {
        BenchError::Config(_) | BenchError::TooFewBackends(_) => RmaHaloStatus::Config,
        BenchError::Plan(_) => RmaHaloStatus::Plan,
        BenchError::Grid(GridError::Mismatch { .. }) => RmaHaloStatus::Oracle,
        BenchError::Grid(_) => RmaHaloStatus::Simulation,
        BenchError::Io { .. } => RmaHaloStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> RmaHaloStatus) -> RmaHaloStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            fail(RmaHaloStatus::Internal, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, RmaHaloStatus> {
    if p.is_null() {
        return Err(fail(RmaHaloStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RmaHaloStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($p:expr, $what:literal) => {
        if $p.is_null() {
            return fail(RmaHaloStatus::NullPointer, concat!($what, " is null"));
        }
    };
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn rma_halo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. The caller
/// owns the string.
#[no_mangle]
pub extern "C" fn rma_halo_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Plan where every rank owns `lx * ly * lz` points.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_plan_new_weak(
    lx: usize,
    ly: usize,
    lz: usize,
    n_ranks: usize,
    periodic: bool,
    depth: usize,
    out: *mut *mut RmaHaloPlan,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(out, "out");
        match plan_weak((lx, ly, lz), n_ranks, periodic, depth) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(RmaHaloPlan(p)));
                RmaHaloStatus::Ok
            }
            Err(e) => fail(RmaHaloStatus::Plan, e.to_string()),
        }
    })
}

/// Plan splitting a global `nx * ny * nz` grid.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_plan_new_strong(
    nx: usize,
    ny: usize,
    nz: usize,
    n_ranks: usize,
    periodic: bool,
    depth: usize,
    out: *mut *mut RmaHaloPlan,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(out, "out");
        match plan_decomposition((nx, ny, nz), n_ranks, periodic, depth) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(RmaHaloPlan(p)));
                RmaHaloStatus::Ok
            }
            Err(e) => fail(RmaHaloStatus::Plan, e.to_string()),
        }
    })
}

/// # Safety
/// `plan` must come from a plan constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_plan_free(plan: *mut RmaHaloPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Rank count and rank grid of a plan. Any output pointer may be null.
///
/// # Safety
/// `plan` must be a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_plan_shape(
    plan: *const RmaHaloPlan,
    n_ranks: *mut usize,
    px: *mut usize,
    py: *mut usize,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(plan, "plan");
        let p = &(*plan).0;
        for (dst, v) in [(n_ranks, p.n_ranks()), (px, p.px), (py, p.py)] {
            if !dst.is_null() {
                *dst = v;
            }
        }
        RmaHaloStatus::Ok
    })
}

/// Interior dims of `rank`.
///
/// # Safety
/// `plan` must be a live plan handle; `dims` must hold three values.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_plan_local_dims(
    plan: *const RmaHaloPlan,
    rank: usize,
    dims: *mut usize,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(plan, "plan");
        non_null!(dims, "dims");
        let p = &(*plan).0;
        if rank >= p.n_ranks() {
            return fail(RmaHaloStatus::InvalidArgument, format!("rank {rank} out of range"));
        }
        let (x, y, z) = p.local_dims(RankId(rank));
        *dims = x;
        *dims.add(1) = y;
        *dims.add(2) = z;
        RmaHaloStatus::Ok
    })
}

/// Bytes exchanged with the neighbor of `rank` in `direction`, for
/// `fields` fields of the rank's local dims. Directions are numbered x-,
/// x+, y-, y+, then the corners x-y-, x-y+, x+y-, x+y+. `column_corners`
/// sizes corners as one column per layer. Returns `NotFound` when the rank
/// has no neighbor in that direction.
///
/// # Safety
/// `plan` must be a live plan handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_plan_region_bytes(
    plan: *const RmaHaloPlan,
    rank: usize,
    direction: u32,
    fields: usize,
    column_corners: bool,
    out: *mut usize,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(plan, "plan");
        non_null!(out, "out");
        let p = &(*plan).0;
        if rank >= p.n_ranks() {
            return fail(RmaHaloStatus::InvalidArgument, format!("rank {rank} out of range"));
        }
        let Some(&dir) = Direction::ALL.get(direction as usize) else {
            return fail(RmaHaloStatus::InvalidArgument, format!("bad direction {direction}"));
        };
        let descs: Vec<FieldDescriptor> = (0..fields)
            .map(|f| FieldDescriptor::for_rank(format!("f{f}"), p, RankId(rank)))
            .collect();
        let accounting = if column_corners {
            Accounting::Column
        } else {
            Accounting::Geometric
        };
        match halo_region_sizes(&descs, p, RankId(rank), accounting)
            .into_iter()
            .find(|(d, _)| *d == dir)
        {
            Some((_, bytes)) => {
                *out = bytes;
                RmaHaloStatus::Ok
            }
            None => fail(RmaHaloStatus::NotFound, format!("no neighbor in direction {dir}")),
        }
    })
}

/// Config with the default settings.
#[no_mangle]
pub extern "C" fn rma_halo_bench_config_new() -> *mut RmaHaloBenchConfig {
    Box::into_raw(Box::new(RmaHaloBenchConfig(BenchConfig::default())))
}

/// # Safety
/// `config` must come from [`rma_halo_bench_config_new`], or be null.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_bench_config_free(config: *mut RmaHaloBenchConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Sets one option by the name of its CLI flag, e.g. `ranks` = `4,9`.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_bench_config_set(
    config: *mut RmaHaloBenchConfig,
    key: *const c_char,
    value: *const c_char,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(config, "config");
        let key = try_status!(str_arg(key, "key"));
        let value = try_status!(str_arg(value, "value"));
        match (*config).0.set(key, value) {
            Ok(()) => RmaHaloStatus::Ok,
            Err(e) => fail(bench_status(&e), e.to_string()),
        }
    })
}

/// Applies `key=value` lines, as in a config file.
///
/// # Safety
/// `config` must be a live handle; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_bench_config_apply_text(
    config: *mut RmaHaloBenchConfig,
    text: *const c_char,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(config, "config");
        let text = try_status!(str_arg(text, "text"));
        match (*config).0.apply_file_text(text) {
            Ok(()) => RmaHaloStatus::Ok,
            Err(e) => fail(bench_status(&e), e.to_string()),
        }
    })
}

/// Runs the benchmark. A report whose cells carry violations is still
/// returned with `Ok`; check [`rma_halo_report_failed`].
///
/// # Safety
/// `config` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_bench_run(
    config: *const RmaHaloBenchConfig,
    out: *mut *mut RmaHaloReport,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(config, "config");
        non_null!(out, "out");
        match bench::run_benchmark(&(*config).0) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(RmaHaloReport(r)));
                RmaHaloStatus::Ok
            }
            Err(e) => fail(bench_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `report` must come from [`rma_halo_bench_run`], or be null.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_report_free(report: *mut RmaHaloReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle, or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn rma_halo_report_cell_count(report: *const RmaHaloReport) -> usize {
    if report.is_null() {
        0
    } else {
        let report = &(*report).0;
        report.cells.len()
    }
}

/// Whether any cell recorded violations or halo mismatches.
///
/// # Safety
/// `report` must be a live handle, or null (which yields false).
#[no_mangle]
pub unsafe extern "C" fn rma_halo_report_failed(report: *const RmaHaloReport) -> bool {
    !report.is_null() && (*report).0.failed()
}

/// # Safety
/// `report` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_report_cell(
    report: *const RmaHaloReport,
    index: usize,
    out: *mut RmaHaloCell,
) -> RmaHaloStatus {
    guard(|| {
        non_null!(report, "report");
        non_null!(out, "out");
        let report = &(*report).0;
        let Some(c) = report.cells.get(index) else {
            return fail(RmaHaloStatus::InvalidArgument, format!("cell {index} out of range"));
        };
        *out = RmaHaloCell {
            backend: c.backend.into(),
            strong: c.mode == bench::Mode::Strong,
            ranks: c.ranks,
            fields: c.fields,
            mean_comm_time: c.mean_comm_time,
            min_comm_time: c.min_comm_time,
            max_comm_time: c.max_comm_time,
            init_block_time: c.init_block_time,
            sync_msgs: c.sync_msgs,
            bytes: c.bytes,
            violations: c.violations,
            mismatches: c.mismatches,
        };
        RmaHaloStatus::Ok
    })
}

/// The report as CSV text, or null on a bad handle. The caller owns the
/// string.
///
/// # Safety
/// `report` must be a live handle, or null.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_report_csv(report: *const RmaHaloReport) -> *mut c_char {
    if report.is_null() {
        set_error("report is null");
        return ptr::null_mut();
    }
    into_c_string((*report).0.to_csv())
}

/// # Safety
/// `report` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_report_write_csv(report: *const RmaHaloReport, path: *const c_char) -> RmaHaloStatus {
    guard(|| {
        non_null!(report, "report");
        let path = try_status!(str_arg(path, "path"));
        match bench::write_csv(&(*report).0, Path::new(path)) {
            Ok(()) => RmaHaloStatus::Ok,
            Err(e) => fail(bench_status(&e), e.to_string()),
        }
    })
}

/// Backend comparison text. Fails with `Config` when the report holds
/// fewer than two backends.
///
/// # Safety
/// `report` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rma_halo_report_compare(report: *const RmaHaloReport, out: *mut *mut c_char) -> RmaHaloStatus {
    guard(|| {
        non_null!(report, "report");
        non_null!(out, "out");
        match bench::compare_backends(&(*report).0) {
            Ok(text) => {
                *out = into_c_string(text);
                RmaHaloStatus::Ok
            }
            Err(e) => fail(bench_status(&e), e.to_string()),
        }
    })
}
