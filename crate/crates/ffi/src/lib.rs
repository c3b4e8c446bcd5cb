//! C ABI over `nsw-core`.
//!
//! Instances and solutions are opaque handles released with their `_free`
//! function. Every fallible call returns an [`NswStatus`]; the message of the
//! last failure on the calling thread is available from
//! [`nsw_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nsw_core::error::NswError;
use nsw_core::io::{parse_instance, SolutionFile};
use nsw_core::model::Instance;
use nsw_core::oracle::brute_force;
use nsw_core::solver::{solve, SolveOptions, SolveReport};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NswStatus {
    Ok = 0,
    NullArgument = 1,
    Parse = 2,
    InvalidInstance = 3,
    Invariant = 4,
    BudgetExceeded = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque instance handle.
pub struct NswInstance(Instance);

/// Opaque solution handle.
pub struct NswSolution {
    report: SolveReport,
    product: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &NswError) -> NswStatus {
    match e {
        NswError::Parse { .. } => NswStatus::Parse,
        NswError::InvalidInstance(_) => NswStatus::InvalidInstance,
        NswError::BudgetExceeded { .. } => NswStatus::BudgetExceeded,
        NswError::InvalidAllocation(_) | NswError::Invariant { .. } => NswStatus::Invariant,
    }
}

fn guard(f: impl FnOnce() -> Result<(), NswStatus>) -> NswStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NswStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside nsw");
            NswStatus::Panic
        }
    }
}

fn fail(e: NswError) -> NswStatus {
    let s = status_of(&e);
    set_error(e);
    s
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), NswStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(NswStatus::NullArgument)
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nsw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an instance from a row-major `n * m` array of 0/1 bytes
/// (`heavy[i * m + g]` is nonzero when agent `i` values good `g` at `p / 2`).
///
/// # Safety
/// `heavy` must point to `n * m` readable bytes (it may be null when `m` is
/// zero) and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsw_instance_new(p: u64, n: usize, m: usize, heavy: *const u8, out: *mut *mut NswInstance) -> NswStatus {
    guard(|| {
        non_null(out, "out")?;
        let cells = n.checked_mul(m).ok_or_else(|| fail(NswError::InvalidInstance(format!("{n} x {m} overflows"))))?;
        if cells > 0 {
            non_null(heavy, "heavy")?;
        }
        let cells: &[u8] = if cells == 0 { &[] } else { std::slice::from_raw_parts(heavy, cells) };
        let rows = (0..n).map(|i| cells[i * m..(i + 1) * m].iter().map(|&b| b != 0).collect()).collect();
        let inst = Instance::new(p, m, rows).map_err(fail)?;
        *out = Box::into_raw(Box::new(NswInstance(inst)));
        Ok(())
    })
}

/// Parses an instance from its JSON text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsw_instance_parse(text: *const c_char, out: *mut *mut NswInstance) -> NswStatus {
    guard(|| {
        non_null(text, "text")?;
        non_null(out, "out")?;
        let s = CStr::from_ptr(text).to_str().map_err(|e| {
            set_error(format!("instance text is not UTF-8: {e}"));
            NswStatus::Parse
        })?;
        let inst = parse_instance(s).map_err(fail)?;
        *out = Box::into_raw(Box::new(NswInstance(inst)));
        Ok(())
    })
}

/// # Safety
/// `inst` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nsw_instance_free(inst: *mut NswInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nsw_instance_agents(inst: *const NswInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.n())
}

/// # Safety
/// `inst` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nsw_instance_goods(inst: *const NswInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.m())
}

/// Solves `inst` with `threads` workers (0 is treated as 1).
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nsw_solve(inst: *const NswInstance, threads: usize, out: *mut *mut NswSolution) -> NswStatus {
    guard(|| {
        non_null(inst, "inst")?;
        non_null(out, "out")?;
        let opts = SolveOptions {
            threads: threads.max(1),
            ..SolveOptions::default()
        };
        let report = solve(&(*inst).0, &opts).map_err(fail)?;
        let product = CString::new(report.key.product().to_string()).expect("digits");
        *out = Box::into_raw(Box::new(NswSolution { report, product }));
        Ok(())
    })
}

/// # Safety
/// `sol` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nsw_solution_free(sol: *mut NswSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Decimal product of the half-unit bundle values, owned by `sol`.
///
/// # Safety
/// `sol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nsw_solution_product(sol: *const NswSolution) -> *const c_char {
    sol.as_ref().map_or(ptr::null(), |s| s.product.as_ptr())
}

/// Number of empty bundles.
///
/// # Safety
/// `sol` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nsw_solution_empty_bundles(sol: *const NswSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.report.key.zeros())
}

/// Number of failed structural checks recorded during the solve.
///
/// # Safety
/// `sol` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nsw_solution_violations(sol: *const NswSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.report.violations.len())
}

/// Copies the half-unit value of every agent into `buf` (`len` entries).
///
/// # Safety
/// `sol` must be a live handle and `buf` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn nsw_solution_values_x2(sol: *const NswSolution, buf: *mut u64, len: usize) -> NswStatus {
    guard(|| {
        non_null(sol, "sol")?;
        let v = (*sol).report.alloc.values2();
        copy_out(v, buf, len)
    })
}

/// Copies the owner of every good into `buf` (`len` entries).
///
/// # Safety
/// `sol` must be a live handle and `buf` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn nsw_solution_owners(sol: *const NswSolution, buf: *mut usize, len: usize) -> NswStatus {
    guard(|| {
        non_null(sol, "sol")?;
        copy_out((*sol).report.alloc.owners(), buf, len)
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), NswStatus> {
    if len < src.len() {
        set_error(format!("buffer holds {len} entries, need {}", src.len()));
        return Err(NswStatus::BufferTooSmall);
    }
    if !src.is_empty() {
        non_null(buf, "buf")?;
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// The solution file as JSON. Release with [`nsw_string_free`].
///
/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nsw_solution_json(sol: *const NswSolution, out: *mut *mut c_char) -> NswStatus {
    guard(|| {
        non_null(sol, "sol")?;
        non_null(out, "out")?;
        let json = SolutionFile::from_report(&(*sol).report, false).to_json();
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nsw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Solves `inst` and compares with exhaustive search over at most `budget`
/// allocations. `*matches` is set to 1 on agreement, 0 otherwise.
///
/// # Safety
/// `inst` must be a live handle and `matches` writable.
#[no_mangle]
pub unsafe extern "C" fn nsw_verify(inst: *const NswInstance, budget: u64, matches: *mut i32) -> NswStatus {
    guard(|| {
        non_null(inst, "inst")?;
        non_null(matches, "matches")?;
        let inst = &(*inst).0;
        let oracle = brute_force(inst, budget as u128).map_err(fail)?;
        let report = solve(inst, &SolveOptions::default()).map_err(fail)?;
        *matches = i32::from(report.key == oracle.best_key);
        Ok(())
    })
}
