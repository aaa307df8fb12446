//! C ABI over the `morse-smale` crate.
//!
//! Fields and complexes are opaque handles owned by the caller and released
//! with the matching `_free` function. Every fallible call returns an
//! [`MscStatus`]; the message for the most recent failure on the calling
//! thread is available from [`msc_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::slice;

use morse_smale::msc::{compute, ComputeOptions, MsComplex};
use morse_smale::volume::{Dtype, VolumeSpec};
use morse_smale::{Error, GridDims, ScalarField};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Overflow = 6,
    NotFound = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MscDtype {
    U8 = 0,
    U16 = 1,
    F32 = 2,
    F64 = 3,
}

impl From<MscDtype> for Dtype {
    fn from(d: MscDtype) -> Self {
        match d {
            MscDtype::U8 => Dtype::U8,
            MscDtype::U16 => Dtype::U16,
            MscDtype::F32 => Dtype::F32,
            MscDtype::F64 => Dtype::F64,
        }
    }
}

/// Opaque scalar field handle.
pub struct MscField {
    field: ScalarField,
    dtype: Dtype,
}

/// Opaque Morse-Smale complex handle.
pub struct MscComplex {
    complex: MsComplex,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MscCriticalPoint {
    pub id: u32,
    /// 0 minimum, 1 and 2 saddles, 3 maximum.
    pub index: u8,
    pub cell: u64,
    /// Doubled lattice coordinates.
    pub position: [u64; 3],
    pub value: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MscArc {
    pub src: u32,
    pub dst: u32,
    pub multiplicity: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MscStatus {
    match e {
        Error::Io(_) | Error::FileSize { .. } => MscStatus::Io,
        Error::Parse { .. } => MscStatus::Parse,
        Error::Overflow(_) => MscStatus::Overflow,
        Error::NotFound(_) => MscStatus::NotFound,
        Error::InvalidDims { .. } | Error::ValueCount { .. } => MscStatus::InvalidArgument,
        _ => MscStatus::Validation,
    }
}

fn fail(status: MscStatus, message: &str) -> MscStatus {
    set_last_error(message);
    status
}

/// Runs `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (MscStatus, String)>) -> MscStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            MscStatus::Ok
        }
        Ok(Err((status, message))) => fail(status, &message),
        Err(_) => fail(MscStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (MscStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MscStatus, String) {
    (MscStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MscStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Creates a field from `len = nx * ny * nz` values, x fastest.
#[no_mangle]
pub unsafe extern "C" fn msc_field_new(
    nx: usize,
    ny: usize,
    nz: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut MscField,
) -> MscStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if values.is_null() && len > 0 {
            return Err(null("values"));
        }
        let dims = GridDims::new(nx, ny, nz).map_err(lib_err)?;
        let vals = if len == 0 {
            Vec::new()
        } else {
            slice::from_raw_parts(values, len).to_vec()
        };
        let field = ScalarField::new(dims, vals).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MscField {
            field,
            dtype: Dtype::F64,
        }));
        Ok(())
    })
}

/// Reads a raw volume file. `path` is a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn msc_field_from_raw(
    path: *const c_char,
    nx: usize,
    ny: usize,
    nz: usize,
    dtype: MscDtype,
    big_endian: bool,
    out: *mut *mut MscField,
) -> MscStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (MscStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let dims = GridDims::new(nx, ny, nz).map_err(lib_err)?;
        let spec = VolumeSpec {
            path: PathBuf::from(path),
            dims,
            dtype: dtype.into(),
            big_endian,
        };
        let field = spec.read().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MscField {
            field,
            dtype: dtype.into(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn msc_field_free(field: *mut MscField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Computes the complex. With `segmentation` set, per-vertex and per-cube
/// extremum labels are kept for [`msc_complex_segmentation`].
#[no_mangle]
pub unsafe extern "C" fn msc_compute(
    field: *const MscField,
    segmentation: bool,
    out: *mut *mut MscComplex,
) -> MscStatus {
    guard(|| {
        let f = handle(field, "field")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let complex = compute(
            &f.field,
            ComputeOptions {
                segmentation,
                dtype: f.dtype,
            },
        )
        .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MscComplex { complex }));
        Ok(())
    })
}

/// Parses a JSON document of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn msc_complex_from_json(
    json: *const c_char,
    len: usize,
    out: *mut *mut MscComplex,
) -> MscStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if json.is_null() {
            return Err(null("json"));
        }
        let bytes = slice::from_raw_parts(json as *const u8, len);
        let complex = MsComplex::from_json(bytes).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MscComplex { complex }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn msc_complex_free(complex: *mut MscComplex) {
    if !complex.is_null() {
        drop(Box::from_raw(complex));
    }
}

/// Number of critical points, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn msc_complex_num_critical_points(complex: *const MscComplex) -> usize {
    complex
        .as_ref()
        .map_or(0, |c| c.complex.critical_points.len())
}

#[no_mangle]
pub unsafe extern "C" fn msc_complex_critical_point(
    complex: *const MscComplex,
    id: u32,
    out: *mut MscCriticalPoint,
) -> MscStatus {
    guard(|| {
        let c = handle(complex, "complex")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = c.complex.critical_point(id).map_err(lib_err)?;
        *out = MscCriticalPoint {
            id: p.id,
            index: p.index,
            cell: p.cell.0 as u64,
            position: p.position.map(|x| x as u64),
            value: p.value,
        };
        Ok(())
    })
}

/// Number of arcs, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn msc_complex_num_arcs(complex: *const MscComplex) -> usize {
    complex.as_ref().map_or(0, |c| c.complex.arcs.len())
}

#[no_mangle]
pub unsafe extern "C" fn msc_complex_arc(
    complex: *const MscComplex,
    i: usize,
    out: *mut MscArc,
) -> MscStatus {
    guard(|| {
        let c = handle(complex, "complex")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let a = c
            .complex
            .arcs
            .get(i)
            .ok_or_else(|| (MscStatus::NotFound, format!("arc {i} out of range")))?;
        *out = MscArc {
            src: a.src,
            dst: a.dst,
            multiplicity: a.multiplicity,
        };
        Ok(())
    })
}

/// Writes the number of minima, 1-saddles, 2-saddles and maxima to `out[0..4]`.
#[no_mangle]
pub unsafe extern "C" fn msc_complex_counts(
    complex: *const MscComplex,
    out: *mut usize,
) -> MscStatus {
    guard(|| {
        let c = handle(complex, "complex")?;
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, 4).copy_from_slice(&c.complex.counts());
        Ok(())
    })
}

/// Borrows the segmentation labels for dimension 0 (per vertex) or 3 (per
/// cube). The pointer stays valid until the complex is freed.
#[no_mangle]
pub unsafe extern "C" fn msc_complex_segmentation(
    complex: *const MscComplex,
    dim: u8,
    labels: *mut *const u32,
    len: *mut usize,
) -> MscStatus {
    guard(|| {
        let c = handle(complex, "complex")?;
        if labels.is_null() || len.is_null() {
            return Err(null("labels or len"));
        }
        let seg = c.complex.segmentation.as_ref().ok_or_else(|| {
            (
                MscStatus::NotFound,
                "complex was computed without segmentation".to_string(),
            )
        })?;
        let v = match dim {
            0 => &seg.minima,
            3 => &seg.maxima,
            _ => {
                return Err((
                    MscStatus::InvalidArgument,
                    format!("dimension {dim} has no segmentation"),
                ))
            }
        };
        *labels = v.as_ptr();
        *len = v.len();
        Ok(())
    })
}

/// Runs the Euler and mod-2 boundary checks. `violations` receives the
/// number of boundary violations; a nonzero Euler defect is reported as
/// [`MscStatus::Validation`].
#[no_mangle]
pub unsafe extern "C" fn msc_complex_check(
    complex: *const MscComplex,
    violations: *mut usize,
) -> MscStatus {
    guard(|| {
        let c = handle(complex, "complex")?;
        if violations.is_null() {
            return Err(null("violations"));
        }
        let report = c.complex.boundary_check();
        *violations = report.violations.len();
        if c.complex.euler() != 1 {
            return Err((
                MscStatus::Validation,
                format!("Euler sum is {}", c.complex.euler()),
            ));
        }
        if !report.is_clean() {
            return Err((
                MscStatus::Validation,
                format!("{} boundary violations", report.violations.len()),
            ));
        }
        Ok(())
    })
}

/// Serializes to a NUL-terminated JSON string to be released with
/// [`msc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn msc_complex_to_json(
    complex: *const MscComplex,
    out: *mut *mut c_char,
) -> MscStatus {
    guard(|| {
        let c = handle(complex, "complex")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(c.complex.to_json()).expect("JSON has no NUL bytes");
        *out = s.into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn msc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn msc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn msc_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    VERSION.as_ptr()
}
