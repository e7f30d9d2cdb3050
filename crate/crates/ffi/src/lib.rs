//! C ABI over `ucplab`.
//!
//! Grids, spectra and observation masks cross the boundary as opaque
//! handles owned by the caller and released with the matching `*_free`.
//! Every fallible entry point returns a [`UcplabStatus`]; on failure the
//! message is available from [`ucplab_last_error`] on the same thread.
//! Panics are caught at the boundary and reported as `UCPLAB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ucplab::heat::{eval_cobs, measure_observability, Branch, ObsConstants, ObservabilityParameters};
use ucplab::random::wegner_bound;
use ucplab::scenario::{parse_config, run_scenario, Kind, Overrides};
use ucplab::ucp::{eval_cuc_range, min_subspace_ratio};
use ucplab::{
    assemble_hamiltonian, eigendecompose, observation_mask, sample_equidistributed, BoundaryCondition, BoxDomain,
    EquidistributedSequence, Error, Grid, ObservationMask, Potential, SpectralData, DEFAULT_EIGEN_TOL,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcplabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Config = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcplabBoundary {
    Dirichlet = 0,
    Neumann = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcplabBranch {
    Auto = 0,
    First = 1,
    Second = 2,
}

/// Inputs of the observability constant.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UcplabObsParams {
    pub t: f64,
    pub g: f64,
    pub delta: f64,
    pub v_sup: f64,
    pub v_shift_sup: f64,
    pub kappa: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub struct UcplabGrid(Grid);

pub struct UcplabSpectrum(SpectralData);

pub struct UcplabMask(ObservationMask);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UcplabStatus {
    match e {
        Error::Config { .. } => UcplabStatus::Config,
        Error::Io { .. } | Error::Serialization(_) => UcplabStatus::Io,
        e if e.exit_code() == 3 => UcplabStatus::Numerical,
        _ => UcplabStatus::InvalidArgument,
    }
}

struct Fail(UcplabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(UcplabStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UcplabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UcplabStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            UcplabStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(UcplabStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ucplab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ucplab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Box `Π (lower[i], upper[i])` with `points[i]` interior nodes per axis;
/// `bc` is a [`UcplabBoundary`] value.
///
/// # Safety
/// `lower`, `upper` and `points` must hold `dim` elements; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_grid_new(
    dim: usize,
    lower: *const f64,
    upper: *const f64,
    points: *const usize,
    bc: u32,
    out_grid: *mut *mut UcplabGrid,
) -> UcplabStatus {
    guard(|| {
        let slot = out(out_grid, "out_grid")?;
        let lo = slice(lower, dim, "lower")?;
        let hi = slice(upper, dim, "upper")?;
        let pts = slice(points, dim, "points")?;
        let domain = BoxDomain::new(lo.iter().copied().zip(hi.iter().copied()).collect())?;
        let bc = match bc {
            x if x == UcplabBoundary::Dirichlet as u32 => BoundaryCondition::Dirichlet,
            x if x == UcplabBoundary::Neumann as u32 => BoundaryCondition::Neumann,
            x => return Err(Fail(UcplabStatus::InvalidArgument, format!("unknown boundary condition {x}"))),
        };
        let grid = Grid::new(domain, pts, bc)?;
        *slot = Box::into_raw(Box::new(UcplabGrid(grid)));
        Ok(())
    })
}

/// # Safety
/// `grid` must be NULL or a handle from [`ucplab_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ucplab_grid_free(grid: *mut UcplabGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live handle and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_grid_len(grid: *const UcplabGrid, len: *mut usize) -> UcplabStatus {
    guard(|| {
        *out(len, "len")? = deref(grid, "grid")?.0.len();
        Ok(())
    })
}

/// Eigendecomposition of `-Δ + V` with nodal potential values `v`
/// (`ucplab_grid_len` entries, last axis fastest).
///
/// # Safety
/// `grid` must be live, `v` must hold `len` values and `out_spectrum` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_spectrum_new(
    grid: *const UcplabGrid,
    v: *const f64,
    len: usize,
    out_spectrum: *mut *mut UcplabSpectrum,
) -> UcplabStatus {
    guard(|| {
        let slot = out(out_spectrum, "out_spectrum")?;
        let grid = &deref(grid, "grid")?.0;
        let v = Potential::new(slice(v, len, "v")?.to_vec())?;
        let spec = eigendecompose(&assemble_hamiltonian(grid, &v)?, DEFAULT_EIGEN_TOL)?;
        *slot = Box::into_raw(Box::new(UcplabSpectrum(spec)));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ucplab_spectrum_free(spectrum: *mut UcplabSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// # Safety
/// `spectrum` must be live and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_spectrum_len(spectrum: *const UcplabSpectrum, len: *mut usize) -> UcplabStatus {
    guard(|| {
        *out(len, "len")? = deref(spectrum, "spectrum")?.0.len();
        Ok(())
    })
}

/// Copy up to `cap` ascending eigenvalues into `buf`; `written` receives the
/// number copied.
///
/// # Safety
/// `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ucplab_spectrum_eigenvalues(
    spectrum: *const UcplabSpectrum,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> UcplabStatus {
    guard(|| {
        let ev = deref(spectrum, "spectrum")?.0.eigenvalues();
        let n = ev.len().min(cap);
        if n > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&ev[..n]);
        }
        *out(written, "written")? = n;
        Ok(())
    })
}

/// Copy eigenvector `index` (grid coordinates, unit h-norm) into `buf`,
/// which must hold `ucplab_grid_len` doubles.
///
/// # Safety
/// `buf` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ucplab_spectrum_eigenvector(
    spectrum: *const UcplabSpectrum,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> UcplabStatus {
    guard(|| {
        let spec = &deref(spectrum, "spectrum")?.0;
        if index >= spec.len() || len != spec.len() {
            return Err(Fail(
                UcplabStatus::InvalidArgument,
                format!("index {index} / buffer {len} do not fit a spectrum of size {}", spec.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let col = spec.vectors().column(index);
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(col.as_slice());
        Ok(())
    })
}

unsafe fn new_mask(
    grid: *const UcplabGrid,
    out_mask: *mut *mut UcplabMask,
    seq: impl FnOnce(&Grid) -> ucplab::Result<EquidistributedSequence>,
) -> UcplabStatus {
    guard(|| {
        let slot = out(out_mask, "out_mask")?;
        let grid = &deref(grid, "grid")?.0;
        let mask = observation_mask(grid, &seq(grid)?);
        *slot = Box::into_raw(Box::new(UcplabMask(mask)));
        Ok(())
    })
}

/// Mask of the `δ`-balls around the centres of the `G`-cells.
///
/// # Safety
/// `grid` must be live and `out_mask` writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_mask_centers(
    grid: *const UcplabGrid,
    g: f64,
    delta: f64,
    out_mask: *mut *mut UcplabMask,
) -> UcplabStatus {
    new_mask(grid, out_mask, |grid| EquidistributedSequence::centers(g, delta, grid.domain()))
}

/// Mask of `δ`-balls around one seeded random point per `G`-cell.
///
/// # Safety
/// `grid` must be live and `out_mask` writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_mask_sampled(
    grid: *const UcplabGrid,
    g: f64,
    delta: f64,
    seed: u64,
    out_mask: *mut *mut UcplabMask,
) -> UcplabStatus {
    new_mask(grid, out_mask, |grid| sample_equidistributed(g, delta, grid.domain(), seed))
}

/// # Safety
/// `mask` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ucplab_mask_free(mask: *mut UcplabMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// # Safety
/// `mask` must be live and `fraction` writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_mask_covered_fraction(mask: *const UcplabMask, fraction: *mut f64) -> UcplabStatus {
    guard(|| {
        *out(fraction, "fraction")? = deref(mask, "mask")?.0.covered_fraction();
        Ok(())
    })
}

/// `C_uc` for a potential with range `[v_min, v_max]`; `lambda_star`
/// may be NULL.
///
/// # Safety
/// `cuc` must be writable; `lambda_star` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_eval_cuc(
    v_min: f64,
    v_max: f64,
    energy: f64,
    g: f64,
    delta: f64,
    n_const: f64,
    cuc: *mut f64,
    lambda_star: *mut f64,
) -> UcplabStatus {
    guard(|| {
        let slot = out(cuc, "cuc")?;
        let c = eval_cuc_range(v_min, v_max, energy, g, delta, n_const)?;
        *slot = c.cuc;
        if let Some(l) = lambda_star.as_mut() {
            *l = c.lambda_star;
        }
        Ok(())
    })
}

/// Minimal observed-mass ratio over the spectral subspace below `energy`.
///
/// # Safety
/// Handles must be live and `ratio` writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_min_subspace_ratio(
    spectrum: *const UcplabSpectrum,
    mask: *const UcplabMask,
    energy: f64,
    ratio: *mut f64,
) -> UcplabStatus {
    guard(|| {
        let slot = out(ratio, "ratio")?;
        let r = min_subspace_ratio(&deref(spectrum, "spectrum")?.0, energy, &deref(mask, "mask")?.0)?;
        *slot = r.ratio;
        Ok(())
    })
}

/// # Safety
/// `params` must be readable and `c_obs` writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_eval_cobs(
    params: *const UcplabObsParams,
    branch: u32,
    c_obs: *mut f64,
) -> UcplabStatus {
    guard(|| {
        let slot = out(c_obs, "c_obs")?;
        let p = deref(params, "params")?;
        let params = ObservabilityParameters {
            t: p.t,
            g: p.g,
            delta: p.delta,
            v_sup: p.v_sup,
            v_shift_sup: p.v_shift_sup,
            kappa: p.kappa,
            constants: ObsConstants {
                c1: p.c1,
                c2: p.c2,
                c3: p.c3,
            },
        };
        let branch = match branch {
            x if x == UcplabBranch::Auto as u32 => Branch::Auto,
            x if x == UcplabBranch::First as u32 => Branch::First,
            x if x == UcplabBranch::Second as u32 => Branch::Second,
            x => return Err(Fail(UcplabStatus::InvalidArgument, format!("unknown branch {x}"))),
        };
        *slot = eval_cobs(&params, branch)?.c_obs;
        Ok(())
    })
}

/// # Safety
/// `bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_wegner_bound(
    e0: f64,
    epsilon: f64,
    l: f64,
    dim: usize,
    n_const: f64,
    c_const: f64,
    nu_sup: f64,
    bound: *mut f64,
) -> UcplabStatus {
    guard(|| {
        let slot = out(bound, "bound")?;
        *slot = wegner_bound(e0, epsilon, l, dim, n_const, c_const, nu_sup)?;
        Ok(())
    })
}

/// Measured observability constant at horizon `t`; `singular` may be NULL.
///
/// # Safety
/// Handles must be live and `c_meas` writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_measure_observability(
    spectrum: *const UcplabSpectrum,
    mask: *const UcplabMask,
    t: f64,
    c_meas: *mut f64,
    singular: *mut bool,
) -> UcplabStatus {
    guard(|| {
        let slot = out(c_meas, "c_meas")?;
        let m = measure_observability(&deref(spectrum, "spectrum")?.0, &deref(mask, "mask")?.0, t)?;
        *slot = m.c_meas;
        if let Some(s) = singular.as_mut() {
            *s = m.singular;
        }
        Ok(())
    })
}

/// Run a JSON-configured experiment of `kind` into `out_dir`. `seed` is
/// used only when `has_seed` is true.
///
/// # Safety
/// String arguments must be NUL-terminated; `findings` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ucplab_run_scenario(
    kind: *const c_char,
    config_json: *const c_char,
    has_seed: bool,
    seed: u64,
    out_dir: *const c_char,
    force: bool,
    findings: *mut usize,
) -> UcplabStatus {
    guard(|| {
        let kind: Kind = string(kind, "kind")?.parse()?;
        let text = string(config_json, "config_json")?;
        let dir = string(out_dir, "out_dir")?;
        let overrides = Overrides {
            kind: Some(kind),
            seed: has_seed.then_some(seed),
            output: Some(dir.into()),
            force,
        };
        let (config, raw) = parse_config(text, &overrides)?;
        let manifest = run_scenario(&config, &raw, Path::new(dir))?;
        if let Some(f) = findings.as_mut() {
            *f = manifest.findings.len();
        }
        Ok(())
    })
}
