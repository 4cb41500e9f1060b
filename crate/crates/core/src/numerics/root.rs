use crate::error::{Error, Result};

/// Stopping rule for [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectOptions {
    /// Stop once the bracket width is below `rel_tol·max(|lo|, |hi|)` (or `abs_tol`).
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_iter: 200,
        }
    }
}

/// Bisection on a bracket `[lo, hi]` with `f(lo)` and `f(hi)` of opposite sign.
///
/// Terminates on the tolerance, on an exact zero, or when the midpoint can no longer
/// be represented strictly inside the bracket.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, opts: &BisectOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{lo}, {hi}] (f = {flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        let width = hi - lo;
        if mid <= lo || mid >= hi || width <= opts.abs_tol || width <= opts.rel_tol * lo.abs().max(hi.abs()) {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFinding(format!(
        "bisection did not reach tolerance in {} iterations (bracket [{lo}, {hi}])",
        opts.max_iter
    )))
}
