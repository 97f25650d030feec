//! C ABI over `intcur`.
//!
//! Every fallible function returns an [`IntcurStatus`]; on failure the message
//! is available from [`intcur_last_error`] until the next call on the same
//! thread. Handles are opaque and released with their matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use intcur::experiments::{generate, InstanceSpec};
use intcur::flatnorm::flat_norm;
use intcur::io::{CurrentFile, Loaded};
use intcur::pa_maps::pushforward;
use intcur::rigidity::{rigidity_check, RigidityOptions, Verdict};
use intcur::{boundary, mass, EmbeddedComplex, Error, MetricMode, PiecewiseAffineMap, SimplicialCurrent};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntcurStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Input = 3,
    Format = 4,
    Io = 5,
    UnsupportedDimension = 6,
    Refinement = 7,
    DegenerateLevel = 8,
    Geometry = 9,
    Solver = 10,
    Hypothesis = 11,
    Panic = 12,
}

/// Outcome of a rigidity check.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntcurVerdict {
    ConsistentWithIsometry = 0,
    HypothesesViolated = 1,
    RigidityFailed = 2,
}

/// A loaded current file: source mesh, named chains and maps, optional target.
pub struct IntcurDocument(Loaded);

/// An integral current on some complex.
pub struct IntcurCurrent(SimplicialCurrent);

/// A piecewise-affine map from a source complex.
pub struct IntcurMap(PiecewiseAffineMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IntcurStatus {
    match e {
        Error::Input(_) => IntcurStatus::Input,
        Error::UnsupportedDimension(_) => IntcurStatus::UnsupportedDimension,
        Error::Refinement { .. } => IntcurStatus::Refinement,
        Error::DegenerateLevel { .. } => IntcurStatus::DegenerateLevel,
        Error::Hypothesis(_) => IntcurStatus::Hypothesis,
        Error::Geometry(_) => IntcurStatus::Geometry,
        Error::Solver(_) => IntcurStatus::Solver,
        Error::Format(_) => IntcurStatus::Format,
        Error::Io(_) => IntcurStatus::Io,
    }
}

struct Fail(IntcurStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(IntcurStatus::NullArgument, format!("`{what}` is null"))
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> IntcurStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IntcurStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            IntcurStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(IntcurStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    put(out, Box::into_raw(Box::new(v)), "out")
}

fn target(doc: &IntcurDocument) -> Result<&(Arc<EmbeddedComplex>, std::collections::BTreeMap<String, SimplicialCurrent>), Fail> {
    doc.0.target.as_ref().ok_or_else(|| Fail(IntcurStatus::Input, "document has no target section".into()))
}

/// Message of the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn intcur_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a current file from `path`.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_document_load(path: *const c_char, out: *mut *mut IntcurDocument) -> IntcurStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let loaded = CurrentFile::read(Path::new(path))?.load()?;
        put_handle(out, IntcurDocument(loaded))
    })
}

/// Parses a current file from JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_document_parse(json: *const c_char, out: *mut *mut IntcurDocument) -> IntcurStatus {
    guard(|| {
        let loaded = CurrentFile::parse(str_arg(json, "json")?)?.load()?;
        put_handle(out, IntcurDocument(loaded))
    })
}

/// Generates a named instance from a JSON spec such as `{"kind":"disk","n_segments":512}`.
///
/// # Safety
/// `spec_json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_document_generate(spec_json: *const c_char, out: *mut *mut IntcurDocument) -> IntcurStatus {
    guard(|| {
        let spec: InstanceSpec = serde_json::from_str(str_arg(spec_json, "spec_json")?).map_err(|e| Fail(IntcurStatus::Format, format!("instance spec: {e}")))?;
        let inst = generate(&spec)?;
        put_handle(out, IntcurDocument(CurrentFile::from_instance(&inst).load()?))
    })
}

/// Serializes the document as JSON; release the string with [`intcur_string_free`].
///
/// # Safety
/// `doc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_document_to_json(doc: *const IntcurDocument, out: *mut *mut c_char) -> IntcurStatus {
    guard(|| {
        let l = &ref_arg(doc, "doc")?.0;
        let mut f = CurrentFile::new(&l.complex);
        for (n, c) in &l.chains {
            f.chains.insert(n.clone(), intcur::io::ChainRecord::from_current(c));
        }
        for (n, m) in &l.maps {
            f.maps.insert(n.clone(), intcur::io::MapRecord::from_map(m));
        }
        if let Some((tc, ch)) = &l.target {
            f.target = Some(intcur::io::TargetRecord {
                mesh: intcur::io::MeshRecord::from_complex(tc),
                chains: ch.iter().map(|(n, c)| (n.clone(), intcur::io::ChainRecord::from_current(c))).collect(),
            });
        }
        let s = CString::new(f.to_json()).expect("JSON has no nul bytes");
        put(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `doc` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn intcur_document_free(doc: *mut IntcurDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Copies chain `name` from the source section, or from the target section when `in_target` is nonzero.
///
/// # Safety
/// `doc` must be a live handle; `name` a nul-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_document_chain(doc: *const IntcurDocument, name: *const c_char, in_target: bool, out: *mut *mut IntcurCurrent) -> IntcurStatus {
    guard(|| {
        let doc = ref_arg(doc, "doc")?;
        let name = str_arg(name, "name")?;
        let c = if in_target {
            target(doc)?.1.get(name).ok_or_else(|| Fail(IntcurStatus::Input, format!("target has no chain named `{name}`")))?
        } else {
            doc.0.chain(name)?
        };
        put_handle(out, IntcurCurrent(c.clone()))
    })
}

/// Copies map `name`.
///
/// # Safety
/// `doc` must be a live handle; `name` a nul-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_document_map(doc: *const IntcurDocument, name: *const c_char, out: *mut *mut IntcurMap) -> IntcurStatus {
    guard(|| {
        let doc = ref_arg(doc, "doc")?;
        let m = doc.0.map(str_arg(name, "name")?)?;
        put_handle(out, IntcurMap(m.clone()))
    })
}

/// Pushes `current` forward by `map` onto the document's target mesh.
///
/// # Safety
/// All handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_pushforward(doc: *const IntcurDocument, map: *const IntcurMap, current: *const IntcurCurrent, out: *mut *mut IntcurCurrent) -> IntcurStatus {
    guard(|| {
        let (tc, _) = target(ref_arg(doc, "doc")?)?;
        let r = pushforward(&ref_arg(map, "map")?.0, &ref_arg(current, "current")?.0, tc)?;
        put_handle(out, IntcurCurrent(r))
    })
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn intcur_map_free(map: *mut IntcurMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Dimension of the current.
///
/// # Safety
/// `current` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_current_dim(current: *const IntcurCurrent, out: *mut usize) -> IntcurStatus {
    guard(|| put(out, ref_arg(current, "current")?.0.dim(), "out"))
}

/// Number of simplices with nonzero multiplicity.
///
/// # Safety
/// `current` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_current_support_size(current: *const IntcurCurrent, out: *mut usize) -> IntcurStatus {
    guard(|| put(out, ref_arg(current, "current")?.0.len(), "out"))
}

/// Mass: sum of |multiplicity| times simplex volume.
///
/// # Safety
/// `current` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_current_mass(current: *const IntcurCurrent, out: *mut f64) -> IntcurStatus {
    guard(|| put(out, mass(&ref_arg(current, "current")?.0).total, "out"))
}

/// Boundary current.
///
/// # Safety
/// `current` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_current_boundary(current: *const IntcurCurrent, out: *mut *mut IntcurCurrent) -> IntcurStatus {
    guard(|| {
        let b = boundary(&ref_arg(current, "current")?.0)?;
        put_handle(out, IntcurCurrent(b))
    })
}

/// Flat norm on the current's own complex.
///
/// # Safety
/// `current` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_current_flat_norm(current: *const IntcurCurrent, out: *mut f64) -> IntcurStatus {
    guard(|| {
        let t = &ref_arg(current, "current")?.0;
        put(out, flat_norm(t, t.complex())?.value, "out")
    })
}

/// # Safety
/// `current` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn intcur_current_free(current: *mut IntcurCurrent) {
    if !current.is_null() {
        drop(Box::from_raw(current));
    }
}

/// Rigidity check of `map` on `current` against `ball`, all with the ambient metric.
/// Writes the verdict and, if `report_json` is non-null, the full report as JSON.
///
/// # Safety
/// Handles must be live; `verdict` writable; `report_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn intcur_rigidity_check(
    current: *const IntcurCurrent,
    map: *const IntcurMap,
    ball: *const IntcurCurrent,
    samples: usize,
    seed: u64,
    verdict: *mut IntcurVerdict,
    report_json: *mut *mut c_char,
) -> IntcurStatus {
    guard(|| {
        let opts = RigidityOptions {
            metric: MetricMode::AmbientEuclidean,
            samples,
            seed,
            ..Default::default()
        };
        let r = rigidity_check(&ref_arg(current, "current")?.0, &ref_arg(map, "map")?.0, &ref_arg(ball, "ball")?.0, &opts)?;
        let v = match r.verdict {
            Verdict::ConsistentWithIsometry => IntcurVerdict::ConsistentWithIsometry,
            Verdict::HypothesesViolated(_) => IntcurVerdict::HypothesesViolated,
            Verdict::RigidityFailed => IntcurVerdict::RigidityFailed,
        };
        put(verdict, v, "verdict")?;
        if !report_json.is_null() {
            let s = CString::new(serde_json::to_string(&r).expect("reports serialize")).expect("JSON has no nul bytes");
            report_json.write(s.into_raw());
        }
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn intcur_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
