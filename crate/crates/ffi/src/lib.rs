//! C ABI for mixlab.
//!
//! Every fallible function returns a [`MixlabStatus`]; on failure the
//! message is kept per thread and can be read with
//! [`mixlab_last_error_message`]. Objects are opaque handles released with
//! their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mixlab::blocks::BlockDescriptor;
use mixlab::budgets::proof_constants;
use mixlab::composer::CellularFlow;
use mixlab::diagnostics::{functional_mixing_scale, geometric_mixing_scale, MixParams};
use mixlab::error::MixError;
use mixlab::grid::{mixed_level, GridSpec, Pattern, TracerField};
use mixlab::scenario::run_scenario;

/// Result codes. Values 2, 3 and 4 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixlabStatus {
    Ok = 0,
    Failed = 1,
    InvalidArgument = 2,
    ResolutionTooCoarse = 3,
    MissingVelocity = 4,
    NullPointer = 5,
    NotMeanZero = 6,
    NotBinary = 7,
    Degenerate = 8,
    Io = 9,
    Parse = 10,
    StageOrder = 11,
    SigmaViolation = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixlabPattern {
    LeftRightHalves = 0,
    TopBottomHalves = 1,
    Checkerboard = 2,
    Stripes = 3,
    HorizontalStripes = 4,
}

/// Opaque tracer field.
pub struct MixlabField {
    inner: TracerField,
}

/// Opaque cellular flow.
pub struct MixlabFlow {
    inner: CellularFlow,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &MixError) -> MixlabStatus {
    match e {
        MixError::InvalidParameter(_) | MixError::Manifest(_) | MixError::Json(_) => {
            MixlabStatus::InvalidArgument
        }
        MixError::ResolutionTooCoarse { .. } | MixError::LevelTooFine { .. } => {
            MixlabStatus::ResolutionTooCoarse
        }
        MixError::MissingVelocity(_) => MixlabStatus::MissingVelocity,
        MixError::NotMeanZero(_) => MixlabStatus::NotMeanZero,
        MixError::NotBinary => MixlabStatus::NotBinary,
        MixError::Degenerate(_) => MixlabStatus::Degenerate,
        MixError::Io(_) => MixlabStatus::Io,
        MixError::Parse { .. } => MixlabStatus::Parse,
        MixError::StageOrder { .. } => MixlabStatus::StageOrder,
        MixError::SigmaViolation { .. } => MixlabStatus::SigmaViolation,
        _ => MixlabStatus::Failed,
    }
}

enum FfiError {
    Null,
    Mix(MixError),
}

impl From<MixError> for FfiError {
    fn from(e: MixError) -> Self {
        FfiError::Mix(e)
    }
}

impl From<serde_json::Error> for FfiError {
    fn from(e: serde_json::Error) -> Self {
        FfiError::Mix(e.into())
    }
}

impl From<std::io::Error> for FfiError {
    fn from(e: std::io::Error) -> Self {
        FfiError::Mix(e.into())
    }
}

fn null() -> FfiError {
    FfiError::Null
}

/// Runs `f`, records any error or panic and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> MixlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MixlabStatus::Ok
        }
        Ok(Err(FfiError::Null)) => {
            set_error("null pointer argument");
            MixlabStatus::NullPointer
        }
        Ok(Err(FfiError::Mix(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            MixlabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| MixError::InvalidParameter("string is not UTF-8".into()).into())
}

unsafe fn out_handle<T>(out: *mut *mut T, value: T) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn field_ref<'a>(f: *const MixlabField) -> Result<&'a TracerField, FfiError> {
    f.as_ref().map(|f| &f.inner).ok_or_else(null)
}

/// Copies the last error message of this thread into `buf` (always
/// NUL-terminated when `len > 0`) and returns its full length in bytes.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn mixlab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mixlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a canonical binary pattern on a `2^m` grid. `level` is ignored
/// for the two halves patterns.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_pattern(
    m: u32,
    pattern: MixlabPattern,
    level: u32,
    out: *mut *mut MixlabField,
) -> MixlabStatus {
    guard(|| {
        let p = match pattern {
            MixlabPattern::LeftRightHalves => Pattern::LeftRightHalves,
            MixlabPattern::TopBottomHalves => Pattern::TopBottomHalves,
            MixlabPattern::Checkerboard => Pattern::Checkerboard(level),
            MixlabPattern::Stripes => Pattern::Stripes(level),
            MixlabPattern::HorizontalStripes => Pattern::HorizontalStripes(level),
        };
        let f = TracerField::pattern(GridSpec::new(m)?, p)?;
        out_handle(out, MixlabField { inner: f })
    })
}

/// Binary field from `4^m` signs in cell order `i * 2^m + j` (`i` the
/// column from the left, `j` the row from the bottom).
///
/// # Safety
/// `signs` must be valid for `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_from_signs(
    m: u32,
    signs: *const i8,
    len: usize,
    out: *mut *mut MixlabField,
) -> MixlabStatus {
    guard(|| {
        if signs.is_null() {
            return Err(null());
        }
        let grid = GridSpec::new(m)?;
        if len != grid.cell_count() {
            return Err(MixError::InvalidParameter(format!(
                "{len} signs for {} cells",
                grid.cell_count()
            ))
            .into());
        }
        let v = std::slice::from_raw_parts(signs, len).to_vec();
        out_handle(out, MixlabField { inner: TracerField::binary(grid, v)? })
    })
}

/// Continuous field from `4^m` values in cell order.
///
/// # Safety
/// `values` must be valid for `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_from_values(
    m: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut MixlabField,
) -> MixlabStatus {
    guard(|| {
        if values.is_null() {
            return Err(null());
        }
        let grid = GridSpec::new(m)?;
        if len != grid.cell_count() {
            return Err(MixError::InvalidParameter(format!(
                "{len} values for {} cells",
                grid.cell_count()
            ))
            .into());
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        out_handle(out, MixlabField { inner: TracerField::continuous(grid, v)? })
    })
}

/// Reads a field file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_read(
    path: *const c_char,
    out: *mut *mut MixlabField,
) -> MixlabStatus {
    guard(|| {
        let f = TracerField::read(Path::new(str_arg(path)?))?;
        out_handle(out, MixlabField { inner: f })
    })
}

/// Writes a field file.
///
/// # Safety
/// `field` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_write(
    field: *const MixlabField,
    path: *const c_char,
) -> MixlabStatus {
    guard(|| Ok(field_ref(field)?.write(Path::new(str_arg(path)?), &[])?))
}

/// Grid exponent `m` of the field, or 0 for a null handle.
///
/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_m(field: *const MixlabField) -> u32 {
    field.as_ref().map(|f| f.inner.grid().m()).unwrap_or(0)
}

/// Copies the `4^m` cell values into `out`.
///
/// # Safety
/// `field` must be a live handle and `out` valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_values(
    field: *const MixlabField,
    out: *mut f64,
    len: usize,
) -> MixlabStatus {
    guard(|| {
        let f = field_ref(field)?;
        if out.is_null() {
            return Err(null());
        }
        let v = f.values();
        if len != v.len() {
            return Err(MixError::InvalidParameter(format!(
                "buffer holds {len} values, field has {}",
                v.len()
            ))
            .into());
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, len);
        Ok(())
    })
}

/// Finest level at which the field is mixed, or -1 if none.
///
/// # Safety
/// `field` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_mixed_level(
    field: *const MixlabField,
    out: *mut i32,
) -> MixlabStatus {
    guard(|| {
        let f = field_ref(field)?;
        if out.is_null() {
            return Err(null());
        }
        *out = mixed_level(f).map(|l| l as i32).unwrap_or(-1);
        Ok(())
    })
}

/// # Safety
/// `field` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn mixlab_field_free(field: *mut MixlabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Geometric mixing scale with accuracy `kappa` (other constants default).
///
/// # Safety
/// `field` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_geometric_mixing_scale(
    field: *const MixlabField,
    kappa: f64,
    out: *mut f64,
) -> MixlabStatus {
    guard(|| {
        let f = field_ref(field)?;
        if out.is_null() {
            return Err(null());
        }
        let params = MixParams {
            kappa,
            ..MixParams::default()
        };
        *out = geometric_mixing_scale(f, &params)?.value;
        Ok(())
    })
}

/// `H^-1` norm on a periodic box of side `padding`.
///
/// # Safety
/// `field` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_functional_mixing_scale(
    field: *const MixlabField,
    padding: usize,
    out: *mut f64,
) -> MixlabStatus {
    guard(|| {
        let f = field_ref(field)?;
        if out.is_null() {
            return Err(null());
        }
        *out = functional_mixing_scale(f, padding)?;
        Ok(())
    })
}

/// Creates a flow from an initial field (copied), the tiling exponent and a
/// JSON array of block descriptors, one per stage.
///
/// # Safety
/// `initial` must be a live handle, `blocks_json` a NUL-terminated string
/// and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_flow_new(
    initial: *const MixlabField,
    ell0: u32,
    blocks_json: *const c_char,
    out: *mut *mut MixlabFlow,
) -> MixlabStatus {
    guard(|| {
        let f = field_ref(initial)?.clone();
        let descriptors: Vec<BlockDescriptor> = serde_json::from_str(str_arg(blocks_json)?)?;
        let blocks = descriptors
            .iter()
            .map(|d| d.build())
            .collect::<Result<Vec<_>, MixError>>()?;
        let flow = CellularFlow::new(f, ell0, blocks, None, None)?;
        out_handle(out, MixlabFlow { inner: flow })
    })
}

/// Executes stage `n`, which must be the next unexecuted stage.
///
/// # Safety
/// `flow` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mixlab_flow_compose_stage(flow: *mut MixlabFlow, n: usize) -> MixlabStatus {
    guard(|| {
        let flow = flow.as_mut().ok_or_else(null)?;
        flow.inner.compose_stage(n)?;
        Ok(())
    })
}

/// Copies the current state into a new field handle.
///
/// # Safety
/// `flow` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_flow_state(
    flow: *const MixlabFlow,
    out: *mut *mut MixlabField,
) -> MixlabStatus {
    guard(|| {
        let flow = flow.as_ref().ok_or_else(null)?;
        out_handle(
            out,
            MixlabField {
                inner: flow.inner.state().clone(),
            },
        )
    })
}

/// # Safety
/// `flow` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn mixlab_flow_free(flow: *mut MixlabFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Runs a manifest file and writes its artifacts into `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mixlab_run_manifest(
    manifest_path: *const c_char,
    out_dir: *const c_char,
) -> MixlabStatus {
    guard(|| {
        let path = Path::new(str_arg(manifest_path)?);
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        run_scenario(&text, base, Path::new(str_arg(out_dir)?))?;
        Ok(())
    })
}

/// The constants `eta`, `omega` and `C(gamma_bar)` of the lower bound.
///
/// # Safety
/// The output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mixlab_proof_constants(
    gamma_bar: f64,
    alpha: f64,
    eta: *mut f64,
    omega: *mut f64,
    c_gamma: *mut f64,
) -> MixlabStatus {
    guard(|| {
        if eta.is_null() || omega.is_null() || c_gamma.is_null() {
            return Err(null());
        }
        let params = MixParams::new(0.5, gamma_bar, alpha)?;
        let c = proof_constants(&params);
        *eta = c.eta;
        *omega = c.omega;
        *c_gamma = c.c_gamma;
        Ok(())
    })
}
