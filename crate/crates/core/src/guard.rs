//! Routing errors out of quadrature integrands.
//!
//! Integrands are plain `FnMut(f64) -> Complex64`; a fallible evaluation
//! inside one stores its error in a thread-local slot and returns NaN, which
//! stops the integrator. The caller then picks the stored error up.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{Estimate, QuadFailure};

thread_local! {
    static PENDING: RefCell<Option<Error>> = const { RefCell::new(None) };
}

/// Run `f`, routing an error raised inside a quadrature integrand (which
/// then returns NaN) back to the caller. A non-converged estimate is kept
/// when its relative error is at most `accept_rel`.
pub(crate) fn with_pending(accept_rel: f64, f: impl FnOnce() -> std::result::Result<Estimate, QuadFailure>) -> Result<Estimate> {
    PENDING.with(|p| p.borrow_mut().take());
    let out = f();
    let pending = PENDING.with(|p| p.borrow_mut().take());
    match (out, pending) {
        (_, Some(e)) => Err(e),
        (Ok(v), None) => Ok(v),
        (Err(QuadFailure::NoConvergence { estimate, .. }), None) if estimate.error <= accept_rel * estimate.value.norm() => {
            Ok(estimate)
        }
        (Err(f), None) => Err(quad_error("kernel quadrature", f, accept_rel)),
    }
}

pub(crate) fn stash(r: Result<Complex64>) -> Complex64 {
    match r {
        Ok(v) => v,
        Err(e) => {
            PENDING.with(|p| {
                let mut slot = p.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
            });
            Complex64::new(f64::NAN, f64::NAN)
        }
    }
}

/// Accuracy error for a failed quadrature; `requested_rel` is the relative
/// error that would have been accepted.
pub(crate) fn quad_error(context: &str, f: QuadFailure, requested_rel: f64) -> Error {
    match f {
        QuadFailure::NonFinite { at } => {
            Error::accuracy(format!("{context}: non-finite integrand at {at:.6e}"), f64::INFINITY, requested_rel)
        }
        QuadFailure::NoConvergence { estimate, at, .. } => Error::accuracy(
            format!("{context}: no convergence near {at:.6e}"),
            estimate.error / estimate.value.norm().max(f64::MIN_POSITIVE),
            requested_rel,
        ),
    }
}


/// Run `f` and return its raw outcome together with any error raised by an
/// integrand.
pub(crate) fn run_guarded<T>(f: impl FnOnce() -> T) -> (T, Option<Error>) {
    PENDING.with(|p| p.borrow_mut().take());
    let out = f();
    let pending = PENDING.with(|p| p.borrow_mut().take());
    (out, pending)
}
