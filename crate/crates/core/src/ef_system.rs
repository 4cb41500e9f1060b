//! The logarithmic (Emden–Fowler) variables `t = ln r`, `y = r^δ u`,
//! `z = r^{(p−1)(δ+1)}|u'|^{p−2}u'`, the autonomous vector field they satisfy,
//! its first integral `V` and the steepness observable `H`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{gamma_mu, Exponents, Params};
use crate::numerics::spow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfState {
    pub t: f64,
    pub y: f64,
    pub z: f64,
}

pub fn to_ef(r: f64, u: f64, du_dr: f64, params: &Params, exps: &Exponents) -> Result<EfState> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if !(u > 0.0) {
        return Err(Error::domain(format!("u must be positive, got {u}")));
    }
    let d = exps.delta;
    Ok(EfState {
        t: r.ln(),
        y: r.powf(d) * u,
        z: spow(r.powf(d + 1.0) * du_dr, params.p - 1.0),
    })
}

/// Inverse of [`to_ef`]: `(r, u, u')`.
pub fn from_ef(state: &EfState, params: &Params, exps: &Exponents) -> Result<(f64, f64, f64)> {
    if !(state.y > 0.0) {
        return Err(Error::domain(format!("y must be positive, got {}", state.y)));
    }
    let d = exps.delta;
    let r = state.t.exp();
    let u = (-d * state.t).exp() * state.y;
    let du = spow(state.z, 1.0 / (params.p - 1.0)) * (-(d + 1.0) * state.t).exp();
    Ok((r, u, du))
}

/// `(dy/dt, dz/dt)`.
pub fn rhs(state: &EfState, params: &Params, exps: &Exponents) -> (f64, f64) {
    let p = params.p;
    let d = exps.delta;
    let (y, z) = (state.y, state.z);
    let dy = d * y + spow(z, 1.0 / (p - 1.0));
    let dz = -d * z - spow(y, exps.p_star_s - 1.0) - params.mu * spow(y, p - 1.0);
    (dy, dz)
}

/// `V(y, z) = |y|^{p*}/p* + μ|y|^p/p + δyz + |z|^{p'}/p'`.
pub fn first_integral(y: f64, z: f64, params: &Params, exps: &Exponents) -> f64 {
    let p = params.p;
    let ps = exps.p_star_s;
    let pc = p / (p - 1.0);
    y.abs().powf(ps) / ps + params.mu * y.abs().powf(p) / p + exps.delta * y * z + z.abs().powf(pc) / pc
}

/// `H = −|z|^{1/(p−1)−1}z / y`.
pub fn h_of(state: &EfState, params: &Params) -> Result<f64> {
    if !(state.y > 0.0) {
        return Err(Error::domain(format!("y must be positive, got {}", state.y)));
    }
    Ok(-spow(state.z, 1.0 / (params.p - 1.0)) / state.y)
}

/// The factor `(p*(s)−p)/(p(p−1))` of the H-equation.
pub fn h_rate(params: &Params) -> f64 {
    let p = params.p;
    let gap = p * (p - params.s) / (params.nf() - p);
    gap / (p * (p - 1.0))
}

/// `f(h) = −((p*(s)−p)/(p(p−1)))·|h|^{2−p}·Γ_μ(h)`, the right side of `H' = f(H)`.
pub fn h_rhs(h: f64, params: &Params, _exps: &Exponents) -> Result<f64> {
    let p = params.p;
    if h == 0.0 && p > 2.0 {
        if params.mu == 0.0 {
            // Γ_μ vanishes to order p−1 at 0, so f(h) ~ c(N−p)h → 0.
            return Ok(0.0);
        }
        return Err(Error::domain("f is unbounded at h = 0 for p > 2"));
    }
    let w = if p == 2.0 { 1.0 } else { h.abs().powf(2.0 - p) };
    Ok(-h_rate(params) * w * gamma_mu(h, params))
}
