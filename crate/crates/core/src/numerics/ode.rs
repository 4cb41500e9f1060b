//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.
//!
//! Steps are clamped so that every requested output abscissa is hit exactly,
//! which keeps sampled trajectories independent of interpolation error. An
//! optional scalar event function stops integration at its first sign change.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; `None` picks one from the interval length.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
    /// Any state component exceeding this magnitude aborts with [`Error::Overflow`].
    pub overflow: f64,
    /// Width in `x` to which an event location is refined.
    pub event_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            h_init: None,
            h_min: 1e-14,
            max_steps: 1_000_000,
            overflow: 1e300,
            event_tol: 1e-12,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rel_tol: tol,
            abs_tol: tol * 1e-4,
            ..Default::default()
        }
    }
}

/// Result of [`integrate`].
#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    /// Output abscissae actually reached, in order (the start point is always first).
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; D]>,
    /// Where integration stopped: `x_end`, or the event location.
    pub x_last: f64,
    pub y_last: [f64; D],
    /// True if the event function changed sign.
    pub event: bool,
    pub steps: usize,
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand–Prince step; returns the fifth-order solution, the error vector and
/// the derivative at the new point.
fn dp_step<const D: usize, F>(f: &F, x: f64, y: &[f64; D], k1: &[f64; D], h: f64) -> ([f64; D], [f64; D], [f64; D])
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let k2 = f(x + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(x + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(x + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(x + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(
        x + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y5 = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(x + h, &y5);
    let mut err = [0.0; D];
    for i in 0..D {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y5, err, k7)
}

fn error_norm<const D: usize>(y0: &[f64; D], y1: &[f64; D], err: &[f64; D], opts: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..D {
        let sc = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / D as f64).sqrt()
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end` (forward or backward).
///
/// `outputs` must be monotone in the direction of integration and lie inside
/// `[x0, x_end]`; the state is recorded exactly there. If `event` is given,
/// integration stops at the first point where it changes sign, located to
/// `opts.event_tol` by bisection of the step length.
pub fn integrate<const D: usize, F, G>(
    f: F,
    x0: f64,
    y0: [f64; D],
    x_end: f64,
    outputs: &[f64],
    event: Option<G>,
    opts: &OdeOptions,
) -> Result<Trajectory<D>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    G: Fn(f64, &[f64; D]) -> f64,
{
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let span = (x_end - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut h = opts.h_init.unwrap_or((span * 1e-3).max(opts.h_min)).min(span.max(opts.h_min));
    let mut traj = Trajectory {
        xs: vec![x0],
        ys: vec![y0],
        x_last: x0,
        y_last: y0,
        event: false,
        steps: 0,
    };
    let mut g_prev = event.as_ref().map(|g| g(x, &y));
    let mut next_out = outputs.iter().position(|&o| (o - x0) * dir > 0.0).unwrap_or(outputs.len());

    while (x_end - x) * dir > 0.0 {
        if traj.steps >= opts.max_steps {
            return Err(Error::StepBudget(opts.max_steps));
        }
        let target = if next_out < outputs.len() { outputs[next_out] } else { x_end };
        let remaining = (target - x).abs();
        let clamped = h >= remaining;
        let h_try = if clamped { remaining } else { h };
        let (y_new, err, k_new) = dp_step(&f, x, &y, &k1, dir * h_try);
        let en = error_norm(&y, &y_new, &err, opts);
        if !en.is_finite() || en > 1.0 {
            let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).max(0.2) } else { 0.2 };
            h = h_try * fac;
            if h < opts.h_min {
                return Err(Error::StepUnderflow { x, h });
            }
            continue;
        }
        traj.steps += 1;
        let x_new = if clamped { target } else { x + dir * h_try };
        if y_new.iter().any(|v| !v.is_finite() || v.abs() > opts.overflow) {
            return Err(Error::Overflow { x: x_new });
        }

        if let (Some(g), Some(gp)) = (event.as_ref(), g_prev) {
            let g_new = g(x_new, &y_new);
            if gp.signum() != g_new.signum() && gp != 0.0 {
                // Bisect on the step length; each trial is a single step from the accepted point.
                let (mut lo, mut hi) = (0.0, h_try);
                let mut y_hi = y_new;
                while hi - lo > opts.event_tol {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let (y_mid, _, _) = dp_step(&f, x, &y, &k1, dir * mid);
                    if g(x + dir * mid, &y_mid).signum() == gp.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                        y_hi = y_mid;
                    }
                }
                traj.x_last = x + dir * hi;
                traj.y_last = y_hi;
                traj.event = true;
                return Ok(traj);
            }
            g_prev = Some(g_new);
        }

        x = x_new;
        y = y_new;
        k1 = k_new;
        if clamped && next_out < outputs.len() {
            traj.xs.push(x);
            traj.ys.push(y);
            next_out += 1;
        }
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        // A step shortened only to land on an output node should not shrink the next one.
        h = if clamped { h.max(h_try * fac) } else { h_try * fac };
        h = h.max(opts.h_min);
    }
    traj.x_last = x;
    traj.y_last = y;
    Ok(traj)
}

/// Integration without events.
pub fn integrate_plain<const D: usize, F>(
    f: F,
    x0: f64,
    y0: [f64; D],
    x_end: f64,
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory<D>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    integrate(f, x0, y0, x_end, outputs, None::<fn(f64, &[f64; D]) -> f64>, opts)
}
