//! C ABI over the `c4tail` library.
//!
//! Every fallible call returns a [`C4Status`] and writes its result through an
//! out-pointer. On failure the message is kept per thread and can be read with
//! [`c4_last_error_message`]. Graphs are opaque handles owned by the caller and
//! released with [`c4_graph_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use c4tail::{Error, Pattern, SimpleGraph};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum C4Status {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Budget = 3,
    Infeasible = 4,
    Precondition = 5,
    Parse = 6,
    NoFeasiblePoint = 7,
    Panic = 8,
}

/// Opaque graph handle.
pub struct C4Graph {
    inner: SimpleGraph,
}

/// Monte Carlo tail estimate with a 95% Wilson interval.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct C4TailEstimate {
    pub p_hat: f64,
    pub hits: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub threshold: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> C4Status {
    match err {
        Error::Domain(_) => C4Status::Domain,
        Error::Budget(_) => C4Status::Budget,
        Error::Infeasible(_) => C4Status::Infeasible,
        Error::Precondition(_) => C4Status::Precondition,
        Error::Parse(_) => C4Status::Parse,
        Error::NoFeasiblePoint { .. } => C4Status::NoFeasiblePoint,
    }
}

// Runs `f`, converting errors and panics into a status plus stored message.
fn guard(f: impl FnOnce() -> Result<(), (C4Status, String)>) -> C4Status {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => C4Status::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            C4Status::Panic
        }
    }
}

fn lib<T>(r: c4tail::Result<T>) -> Result<T, (C4Status, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (C4Status, String) {
    (C4Status::NullPointer, format!("{what} is null"))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), (C4Status, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn graph<'a>(g: *const C4Graph) -> Result<&'a SimpleGraph, (C4Status, String)> {
    g.as_ref().map(|h| &h.inner).ok_or_else(|| null("graph"))
}

fn boxed(g: SimpleGraph) -> *mut C4Graph {
    Box::into_raw(Box::new(C4Graph { inner: g }))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn c4_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn c4_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an empty graph on `n` vertices.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn c4_graph_new(n: usize, out: *mut *mut C4Graph) -> C4Status {
    guard(|| write(out, boxed(SimpleGraph::new(n)), "out"))
}

/// Parses the `n m` header plus `u v` lines format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn c4_graph_parse(text: *const c_char, out: *mut *mut C4Graph) -> C4Status {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (C4Status::Parse, "edge list is not UTF-8".to_string()))?;
        let g = lib(SimpleGraph::parse_edge_list(s))?;
        write(out, boxed(g), "out")
    })
}

/// Releases a graph handle; null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn c4_graph_free(g: *mut C4Graph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Adds edge `{u, v}`; adding an existing edge is a no-op.
///
/// # Safety
/// `g` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn c4_graph_add_edge(g: *mut C4Graph, u: usize, v: usize) -> C4Status {
    guard(|| {
        let h = g.as_mut().ok_or_else(|| null("graph"))?;
        lib(h.inner.add_edge(u, v)).map(|_| ())
    })
}

/// # Safety
/// `g` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_graph_vertex_count(g: *const C4Graph, out: *mut usize) -> C4Status {
    guard(|| write(out, graph(g)?.n(), "out"))
}

/// # Safety
/// `g` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_graph_edge_count(g: *const C4Graph, out: *mut usize) -> C4Status {
    guard(|| write(out, graph(g)?.edge_count(), "out"))
}

/// Number of induced 4-cycles.
///
/// # Safety
/// `g` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_graph_count_induced_c4(g: *const C4Graph, out: *mut u64) -> C4Status {
    guard(|| {
        let x = lib(c4tail::graph::count_induced(graph(g)?, Pattern::C4))?;
        write(out, x, "out")
    })
}

/// Writes the edge list into `buf` (NUL-terminated) when it fits. `needed`
/// receives the required size including the terminator either way.
///
/// # Safety
/// `g` must be a live handle, `buf` valid for `len` bytes (or null with
/// `len = 0`) and `needed` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_graph_to_edge_list(
    g: *const C4Graph,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> C4Status {
    guard(|| {
        let text = graph(g)?.to_edge_list();
        let size = text.len() + 1;
        write(needed, size, "needed")?;
        if len < size {
            return Err((
                C4Status::Precondition,
                format!("buffer holds {len} bytes, need {size}"),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast(), text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Runs core extraction with budget `s`; the result is a new handle.
///
/// # Safety
/// `g` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn c4_extract_core(
    g: *const C4Graph,
    s: f64,
    p: f64,
    out: *mut *mut C4Graph,
) -> C4Status {
    guard(|| {
        let core = lib(c4tail::cores::extract_core(graph(g)?, s, p))?;
        write(out, boxed(core), "out")
    })
}

/// `E[X] = 3 C(n,4) p^4 (1-p)^2`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_expected_induced_c4(n: usize, p: f64, out: *mut f64) -> C4Status {
    guard(|| write(out, lib(c4tail::graph::expected_induced_c4(n, p))?, "out"))
}

/// Rate in units of `n^2 p^2 log(1/p)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_normalized_rate(
    n: usize,
    p: f64,
    delta: f64,
    eps: f64,
    out: *mut f64,
) -> C4Status {
    guard(|| {
        let r = lib(c4tail::rates::rate_theorem(n, p, delta, eps))?;
        write(out, r.normalized_rate, "out")
    })
}

/// Family rate over mean-field rate in the sparse regimes.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_gap_ratio(n: usize, p: f64, delta: f64, out: *mut f64) -> C4Status {
    guard(|| {
        write(
            out,
            lib(c4tail::meanfield::gap_report(n, p, delta))?.ratio,
            "out",
        )
    })
}

/// Exact `P(X >= threshold)` for `n <= 7`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_exact_tail(
    n: usize,
    p: f64,
    threshold: f64,
    out: *mut f64,
) -> C4Status {
    guard(|| {
        let r = lib(c4tail::graph::exact_tail_probability(n, p, threshold))?;
        write(out, r.probability, "out")
    })
}

/// Monte Carlo estimate of `P(X >= (1+delta)E[X])`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn c4_estimate_tail(
    n: usize,
    p: f64,
    delta: f64,
    trials: u64,
    seed: u64,
    out: *mut C4TailEstimate,
) -> C4Status {
    guard(|| {
        let e = lib(c4tail::montecarlo::estimate_tail(n, p, delta, trials, seed))?;
        let v = C4TailEstimate {
            p_hat: e.p_hat,
            hits: e.hits,
            trials: e.trials,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            threshold: e.threshold,
        };
        write(out, v, "out")
    })
}
