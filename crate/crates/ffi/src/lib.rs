//! C ABI over `hkit`. Objects cross the boundary as opaque handles owned by the
//! caller and released with the matching `_free`. Every fallible call returns an
//! `int` status; on failure `hkit_last_error` holds a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hkit::heisenberg::{koranyi_dist, HPoint};
use hkit::hodge::{hodge_decompose, random_form, FourierForm};
use hkit::holder::{weierstrass_path, MollifierKernel, SampledPath};
use hkit::horizontal::horizontal_lift_curve;
use hkit::young::{auto_depth, dyadic_eps, young_mollified, young_rs};
use hkit::Error;

pub const HKIT_OK: c_int = 0;
pub const HKIT_ERR_NULL: c_int = 1;
pub const HKIT_ERR_DIMENSION: c_int = 2;
pub const HKIT_ERR_DEGREE: c_int = 3;
pub const HKIT_ERR_YOUNG_CONDITION: c_int = 4;
pub const HKIT_ERR_PRECONDITION: c_int = 5;
pub const HKIT_ERR_ON_CURVE: c_int = 6;
pub const HKIT_ERR_PARSE: c_int = 7;
pub const HKIT_ERR_IO: c_int = 8;
pub const HKIT_ERR_INTERNAL: c_int = 9;
pub const HKIT_ERR_PANIC: c_int = 10;
pub const HKIT_ERR_BUFFER: c_int = 11;

pub const HKIT_YOUNG_RS: c_int = 0;
pub const HKIT_YOUNG_MOLLIFIED: c_int = 1;

/// Uniformly or non-uniformly sampled path in R^d.
pub struct HkitPath(SampledPath);

/// Differential form on a flat torus, stored by Fourier modes.
pub struct HkitForm(FourierForm);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn code(e: &Error) -> c_int {
    match e {
        Error::DimensionMismatch(_) => HKIT_ERR_DIMENSION,
        Error::Degree(_) => HKIT_ERR_DEGREE,
        Error::YoungCondition(_) => HKIT_ERR_YOUNG_CONDITION,
        Error::Precondition(_) => HKIT_ERR_PRECONDITION,
        Error::OnCurve(..) => HKIT_ERR_ON_CURVE,
        Error::Parse(_) | Error::Json(_) => HKIT_ERR_PARSE,
        Error::Io(_) => HKIT_ERR_IO,
        Error::Internal(_) => HKIT_ERR_INTERNAL,
    }
}

enum Fail {
    Null(&'static str),
    Buffer(usize),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            HKIT_OK
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            HKIT_ERR_NULL
        }
        Ok(Err(Fail::Buffer(need))) => {
            set_error(format!("buffer too small: {need} bytes needed"));
            HKIT_ERR_BUFFER
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            code(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HKIT_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    put(out, Box::into_raw(Box::new(v)), "out")
}

/// Copies `s` plus a NUL into `buf`; `needed` receives the full size either way.
unsafe fn write_str(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    let need = s.len() + 1;
    if !needed.is_null() {
        needed.write(need);
    }
    if buf.is_null() || len < need {
        return Err(Fail::Buffer(need));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    buf.add(s.len()).write(0);
    Ok(())
}

fn opt(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buf`.
/// `needed` (nullable) receives the size including the terminator.
///
/// # Safety
/// `buf` must be writable for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn hkit_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> c_int {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    // does not go through `guard`, which would clear the message
    match write_str(&msg, buf, len, needed) {
        Ok(()) => HKIT_OK,
        Err(_) => HKIT_ERR_BUFFER,
    }
}

/// Path from `len` sample times and `len * dim` row-major values.
///
/// # Safety
/// `times` and `values` must point to arrays of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn hkit_path_new(
    times: *const f64,
    len: usize,
    dim: usize,
    values: *const f64,
    out: *mut *mut HkitPath,
) -> c_int {
    guard(|| {
        let t = slice(times, len, "times")?.to_vec();
        let v = slice(values, len.saturating_mul(dim), "values")?.to_vec();
        put_handle(out, HkitPath(SampledPath::new(t, dim, v)?))
    })
}

/// Random Weierstrass path of Hölder exponent `gamma` on [0, 1] with `n` intervals.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hkit_path_weierstrass(
    gamma: f64,
    base: u32,
    terms: usize,
    n: usize,
    dim: usize,
    seed: u64,
    out: *mut *mut HkitPath,
) -> c_int {
    guard(|| put_handle(out, HkitPath(weierstrass_path(gamma, base, terms, n, dim, seed)?)))
}

/// # Safety
/// `path` must be a live handle; `len` and `dim` writable.
#[no_mangle]
pub unsafe extern "C" fn hkit_path_shape(path: *const HkitPath, len: *mut usize, dim: *mut usize) -> c_int {
    guard(|| {
        let p = &deref(path, "path")?.0;
        put(len, p.len(), "len")?;
        put(dim, p.dim(), "dim")
    })
}

/// Copies the row-major sample values into `buf` of capacity `cap` doubles.
///
/// # Safety
/// `path` must be a live handle and `buf` writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn hkit_path_values(path: *const HkitPath, buf: *mut f64, cap: usize) -> c_int {
    guard(|| {
        let v = deref(path, "path")?.0.values();
        if buf.is_null() || cap < v.len() {
            return Err(Fail::Buffer(std::mem::size_of_val(v)));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// # Safety
/// `path` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hkit_path_free(path: *mut HkitPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// ∫ f dg for scalar paths on a common grid. `method` is `HKIT_YOUNG_RS` or
/// `HKIT_YOUNG_MOLLIFIED`; NaN exponents are estimated from the data.
///
/// # Safety
/// Handles must be live; `value` and `error_estimate` writable (the latter nullable).
#[no_mangle]
pub unsafe extern "C" fn hkit_young(
    f: *const HkitPath,
    g: *const HkitPath,
    method: c_int,
    alpha: f64,
    beta: f64,
    value: *mut f64,
    error_estimate: *mut f64,
) -> c_int {
    guard(|| {
        let (f, g) = (&deref(f, "f")?.0, &deref(g, "g")?.0);
        let r = match method {
            HKIT_YOUNG_RS => young_rs(f, g, auto_depth(f.intervals(), 8), opt(alpha), opt(beta))?,
            HKIT_YOUNG_MOLLIFIED => {
                let h = f.uniform_spacing().ok_or_else(|| Error::Precondition("non-uniform samples".into()))?;
                let eps = dyadic_eps(64.0 * h, 10);
                young_mollified(f, g, &eps, &MollifierKernel::default(), opt(alpha), opt(beta))?
            }
            m => return Err(Error::Parse(format!("unknown method {m}")).into()),
        };
        put(value, r.value, "value")?;
        if !error_estimate.is_null() {
            error_estimate.write(r.error_estimate);
        }
        Ok(())
    })
}

/// Korányi distance between points given as interleaved (x1, y1, …, xn, yn, t).
///
/// # Safety
/// `p` and `q` must hold `2n + 1` doubles each.
#[no_mangle]
pub unsafe extern "C" fn hkit_koranyi_dist(n: usize, p: *const f64, q: *const f64, out: *mut f64) -> c_int {
    guard(|| {
        let len = 2 * n + 1;
        let a = HPoint::from_coords(slice(p, len, "p")?)?;
        let b = HPoint::from_coords(slice(q, len, "q")?)?;
        put(out, koranyi_dist(&a, &b)?.koranyi, "out")
    })
}

/// Horizontal lift of an even-dimensional planar path starting at height `t0`;
/// the result has one extra (height) component.
///
/// # Safety
/// `planar` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hkit_horizontal_lift(planar: *const HkitPath, t0: f64, out: *mut *mut HkitPath) -> c_int {
    guard(|| {
        let lift = horizontal_lift_curve(&deref(planar, "planar")?.0, t0, None)?;
        put_handle(out, HkitPath(lift.path().clone()))
    })
}

/// Random real k-form of degree `l` on T^k with modes |ξ_i| ≤ `m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hkit_form_random(
    k: usize,
    l: usize,
    m: usize,
    seed: u64,
    mean_zero: bool,
    out: *mut *mut HkitForm,
) -> c_int {
    guard(|| put_handle(out, HkitForm(random_form(k, l, m, seed, mean_zero)?)))
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hkit_form_from_json(json: *const c_char, out: *mut *mut HkitForm) -> c_int {
    guard(|| {
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let s = CStr::from_ptr(json).to_str().map_err(|e| Error::Parse(e.to_string()))?;
        put_handle(out, HkitForm(FourierForm::from_json(s)?))
    })
}

/// Serializes a form; with a short buffer returns `HKIT_ERR_BUFFER` and sets `needed`.
///
/// # Safety
/// `form` must be live; `buf` writable for `len` bytes or null; `needed` nullable.
#[no_mangle]
pub unsafe extern "C" fn hkit_form_to_json(form: *const HkitForm, buf: *mut c_char, len: usize, needed: *mut usize) -> c_int {
    guard(|| {
        let s = deref(form, "form")?.0.to_json()?;
        write_str(&s, buf, len, needed)
    })
}

/// L² norm over the torus.
///
/// # Safety
/// `form` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hkit_form_norm(form: *const HkitForm, out: *mut f64) -> c_int {
    guard(|| put(out, deref(form, "form")?.0.norm(), "out"))
}

/// w = dα + δβ + h. Each output handle is nullable and receives a new form.
///
/// # Safety
/// `form` must be live; non-null outputs writable.
#[no_mangle]
pub unsafe extern "C" fn hkit_hodge_split(
    form: *const HkitForm,
    d_part: *mut *mut HkitForm,
    delta_part: *mut *mut HkitForm,
    harmonic: *mut *mut HkitForm,
) -> c_int {
    guard(|| {
        let s = hodge_decompose(&deref(form, "form")?.0)?;
        for (out, v) in [(d_part, s.d_part), (delta_part, s.delta_part), (harmonic, s.harmonic)] {
            if !out.is_null() {
                put_handle(out, HkitForm(v))?;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `form` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hkit_form_free(form: *mut HkitForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}
