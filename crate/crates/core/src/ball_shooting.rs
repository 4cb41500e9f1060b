//! The Dirichlet problem on the unit ball by shooting from the singular origin,
//! the Pohozaev check, the `w` observable and the first Hardy eigenvalue.
//!
//! The radial equation is integrated in `s = ln r` for the state `(u, q, I)`, with
//! `q = r^{N−1}|u'|^{p−2}u'` the flux and `I = ∫_0^r u^p t^{N−1} dt` the mass
//! entering the Pohozaev identity (its part below the start radius is taken from
//! the leading-order asymptotics).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{derive, Exponents, Params};
use crate::ground_state::HFlow;
use crate::numerics::ode::{integrate, OdeOptions, Trajectory};
use crate::numerics::root::{bisect, BisectOptions};
use crate::numerics::{log_space, spow};
use crate::profile::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallConfig {
    /// Start radius of the integration.
    pub r0: f64,
    pub ode_tol: f64,
    /// Points of the logarithmic amplitude scan.
    pub scan_points: usize,
    /// The amplitude bracket is `[lo, hi]·C1` with `C1` from the `λ = 0` ground state.
    pub bracket_factors: (f64, f64),
    /// Relative width to which amplitude roots are refined.
    pub root_tol: f64,
    /// Profile samples between `r0` and 1.
    pub samples: usize,
    /// Tolerance of the ground-state quadrature used for the amplitude scale.
    pub quad_tol: f64,
}

impl Default for BallConfig {
    fn default() -> Self {
        BallConfig {
            r0: 1e-6,
            ode_tol: 1e-12,
            scan_points: 60,
            bracket_factors: (1e-3, 1e3),
            root_tol: 1e-13,
            samples: 2001,
            quad_tol: 1e-12,
        }
    }
}

impl BallConfig {
    fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rel_tol: self.ode_tol,
            abs_tol: self.ode_tol * 1e-6,
            h_min: 1e-14,
            ..Default::default()
        }
    }
}

/// `(u(r0), u'(r0)) = (C r0^{−γ₁}, −γ₁ C r0^{−γ₁−1})`.
pub fn singular_start(c: f64, r0: f64, exps: &Exponents) -> Result<(f64, f64)> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::domain(format!("start radius must lie in (0, 1), got {r0}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("amplitude must be non-negative, got {c}")));
    }
    let g = exps.gamma1;
    let u0 = c * r0.powf(-g);
    Ok((u0, -g * u0 / r0))
}

/// Size of the neglected next-order terms allowed at the start radius.
const START_EPS: f64 = 1e-12;
/// Start radii are not pushed below this, to keep `r^{N−1}` and the flux representable.
const START_FLOOR: f64 = 1e-30;

/// Start radius for amplitude `c`: at most `r0_max`, and small enough that the terms
/// dropped by `singular_start` are below `START_EPS` in relative size.
///
/// The nonlinear term enters through `(C r^{δ−γ₁})^{p*−p}` and the `λ` term through `λ r^p`;
/// for `γ₁ = 0` and `p ≠ 2` their effect on `u` is the `1/(p−1)` power of these.
pub fn start_radius(c: f64, params: &Params, exps: &Exponents, r0_max: f64) -> f64 {
    let p = params.p;
    let gap = exps.gap(params);
    let q = if exps.gamma1 == 0.0 && p != 2.0 { 1.0 / (p - 1.0) } else { 1.0 };
    let eps = START_EPS.powf(1.0 / q);
    let mut r = r0_max;
    if c > 0.0 {
        r = r.min(((eps.ln() / gap - c.ln()) / (exps.delta - exps.gamma1)).exp());
    }
    if params.lambda != 0.0 {
        r = r.min((eps / params.lambda.abs()).powf(1.0 / p));
    }
    r.max(START_FLOOR)
}

/// Right side in `s = ln r` for `(u, q, I)`; `critical` switches the `|u|^{p*−p} r^{−s}` term.
fn radial_rhs(s: f64, y: &[f64; 3], params: &Params, exps: &Exponents, critical: bool) -> [f64; 3] {
    let n = params.nf();
    let p = params.p;
    let (u, q) = (y[0], y[1]);
    let du_ds = spow(q, 1.0 / (p - 1.0)) * (s * (1.0 - (n - 1.0) / (p - 1.0))).exp();
    let mut coef = params.mu * (-p * s).exp() + params.lambda;
    if critical {
        coef += u.abs().powf(exps.p_star_s - p) * (-params.s * s).exp();
    }
    let rn = (n * s).exp();
    [du_ds, -coef * spow(u, p - 1.0) * rn, u.abs().powf(p) * rn]
}

/// One radial integration from the singular start.
#[derive(Debug, Clone)]
pub struct RadialRun {
    pub profile: RadialProfile,
    /// `∫_0^r u^p t^{N−1} dt` at each profile radius.
    pub mass: Vec<f64>,
    /// First radius where `u` vanishes, if before `r_end`.
    pub first_zero: Option<f64>,
}

fn run(
    c: f64,
    params: &Params,
    exps: &Exponents,
    r0: f64,
    r_end: f64,
    outputs: &[f64],
    opts: &OdeOptions,
    critical: bool,
) -> Result<Trajectory<3>> {
    if !(r_end > r0) {
        return Err(Error::domain(format!("end radius {r_end} must exceed the start radius {r0}")));
    }
    let s_out: Vec<f64> = outputs.iter().map(|r| r.ln()).collect();
    integrate(
        |s, y: &[f64; 3]| radial_rhs(s, y, params, exps, critical),
        r0.ln(),
        start_state(c, r0, params, exps)?,
        r_end.ln(),
        &s_out,
        Some(|_: f64, y: &[f64; 3]| y[0]),
        opts,
    )
}

/// Integrates the radial equation from `r0` to `r_end` (or the first zero of `u`),
/// sampling at `outputs` (radii strictly between `r0` and `r_end`, increasing).
pub fn integrate_radial(
    c: f64,
    params: &Params,
    exps: &Exponents,
    r0: f64,
    r_end: f64,
    outputs: &[f64],
    tol: f64,
) -> Result<RadialRun> {
    let opts = OdeOptions {
        rel_tol: tol,
        abs_tol: tol * 1e-6,
        ..Default::default()
    };
    let tr = run(c, params, exps, r0, r_end, outputs, &opts, true)?;
    let p = params.p;
    let n = params.nf();
    let mut r = Vec::with_capacity(tr.xs.len() + 1);
    let mut u = vec![];
    let mut du = vec![];
    let mut flux = vec![];
    let mut mass = vec![];
    let mut push = |s: f64, y: &[f64; 3]| {
        let rr = s.exp();
        r.push(rr);
        u.push(y[0]);
        du.push(spow(y[1], 1.0 / (p - 1.0)) * rr.powf(-(n - 1.0) / (p - 1.0)));
        flux.push(y[1]);
        mass.push(y[2]);
    };
    for (s, y) in tr.xs.iter().zip(&tr.ys) {
        push(*s, y);
    }
    let last = tr.xs.last().copied().unwrap_or(f64::NEG_INFINITY);
    if tr.x_last > last {
        push(tr.x_last, &tr.y_last);
    }
    r[0] = r0;
    let profile = RadialProfile::new(r, u, du, flux)?;
    Ok(RadialRun {
        profile,
        mass,
        first_zero: tr.event.then(|| tr.x_last.exp()),
    })
}

/// `u(1)` if `u` stays positive on `(r0, 1]`, otherwise `−(1 − r_zero)`.
pub fn shoot(c: f64, params: &Params, exps: &Exponents, cfg: &BallConfig) -> Result<f64> {
    let r0 = start_radius(c, params, exps, cfg.r0);
    let tr = run(c, params, exps, r0, 1.0, &[], &cfg.ode_options(), true)?;
    Ok(if tr.event {
        -(1.0 - tr.x_last.exp())
    } else {
        tr.y_last[0]
    })
}

/// The amplitude scale `C1` of the `λ = 0` ground state with the same `(N, p, μ, s)`.
pub fn amplitude_scale(params: &Params, quad_tol: f64) -> Result<f64> {
    let ground = params.with_lambda(0.0)?;
    Ok(HFlow::new(&ground, quad_tol, 60)?.asymptotic_constants().0)
}

/// Evaluates `shoot` on a logarithmic grid of `n` amplitudes over `[lo, hi]`.
pub fn scan(params: &Params, exps: &Exponents, lo: f64, hi: f64, n: usize, cfg: &BallConfig) -> Result<Vec<(f64, f64)>> {
    log_space(lo, hi, n)
        .into_iter()
        .map(|c| Ok((c, shoot(c, params, exps, cfg)?)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BallSolution {
    pub params: Params,
    pub exps: Exponents,
    pub amplitude_c: f64,
    pub profile: RadialProfile,
    /// `u'(1)`.
    pub boundary_slope: f64,
    /// `u(1)`, zero up to the shooting accuracy.
    pub boundary_value: f64,
    /// Largest Pohozaev defect over `r = 1` and the interior radii `k/11`.
    pub pohozaev_defect: f64,
    pub w_trace: Vec<(f64, f64)>,
    /// Relative change of `u'(1)` when the start radius is halved.
    pub start_check: f64,
    pub r0: f64,
    pub ode_tol: f64,
}

/// Radii at which the Pohozaev identity is checked: `k/11` for `k = 1..=10`, and 1.
pub fn pohozaev_radii() -> Vec<f64> {
    (1..=11).map(|k| if k == 11 { 1.0 } else { k as f64 / 11.0 }).collect()
}

pub fn solve_ball(params: &Params, bracket: Option<(f64, f64)>, cfg: &BallConfig) -> Result<BallSolution> {
    let exps = derive(params)?;
    let (lo, hi) = match bracket {
        Some(b) => b,
        None => {
            let scale = amplitude_scale(params, cfg.quad_tol)?;
            (cfg.bracket_factors.0 * scale, cfg.bracket_factors.1 * scale)
        }
    };
    if !(lo > 0.0 && hi > lo) || cfg.scan_points < 2 {
        return Err(Error::domain("amplitude bracket must satisfy 0 < lo < hi"));
    }
    let values = scan(params, &exps, lo, hi, cfg.scan_points, cfg)?;
    let opts = BisectOptions {
        rel_tol: cfg.root_tol,
        abs_tol: 0.0,
        max_iter: 200,
    };
    let mut roots = vec![];
    for w in values.windows(2) {
        let ((c0, f0), (c1, f1)) = (w[0], w[1]);
        if f0 == 0.0 {
            roots.push(c0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            let shot = |x: f64| shoot(x.exp(), params, &exps, cfg).unwrap_or(f64::NAN);
            let x = bisect(shot, c0.ln(), c1.ln(), &opts)?;
            roots.push(x.exp());
        }
    }
    if let Some(&(c_last, f_last)) = values.last() {
        if f_last == 0.0 {
            roots.push(c_last);
        }
    }
    match roots.len() {
        0 => return Err(Error::NoSignChange { lo, hi }),
        1 => {}
        _ => return Err(Error::MultipleRoots(roots)),
    }
    let c = roots[0];

    let r0 = start_radius(c, params, &exps, cfg.r0);
    let grid = log_space(cfg.r0, 1.0, cfg.samples.max(2));
    let (profile, boundary_value) = integrate_ball_profile(c, params, &exps, cfg, r0, &grid)?;
    let boundary_slope = *profile.du_dr.last().unwrap_or(&f64::NAN);

    let (half_profile, _) = integrate_ball_profile(c, params, &exps, cfg, r0 / 2.0, &[r0 / 2.0, 1.0])?;
    let slope_half = *half_profile.du_dr.last().unwrap_or(&f64::NAN);
    let start_check = ((slope_half - boundary_slope) / boundary_slope).abs();

    let w = w_trace(&profile, params.p);
    let mut sol = BallSolution {
        params: *params,
        exps,
        amplitude_c: c,
        profile,
        boundary_slope,
        boundary_value,
        pohozaev_defect: 0.0,
        w_trace: w,
        start_check,
        r0,
        ode_tol: cfg.ode_tol,
    };
    let mut worst: f64 = 0.0;
    for r in pohozaev_radii() {
        worst = worst.max(pohozaev_defect(&sol, r)?);
    }
    sol.pohozaev_defect = worst;
    Ok(sol)
}

/// Profile at the radii of `grid` (increasing, ending at 1, none below `r0`), integrated from
/// `r0` without the zero event so that it always reaches `r = 1`.
fn integrate_ball_profile(
    c: f64,
    params: &Params,
    exps: &Exponents,
    cfg: &BallConfig,
    r0: f64,
    grid: &[f64],
) -> Result<(RadialProfile, f64)> {
    let n = params.nf();
    let p = params.p;
    let s_out: Vec<f64> = grid[..grid.len() - 1].iter().filter(|&&r| r > r0).map(|r| r.ln()).collect();
    let tr = integrate(
        |s, y: &[f64; 3]| radial_rhs(s, y, params, exps, true),
        r0.ln(),
        start_state(c, r0, params, exps)?,
        0.0,
        &s_out,
        None::<fn(f64, &[f64; 3]) -> f64>,
        &cfg.ode_options(),
    )?;
    let mut r = vec![];
    let mut u = vec![];
    let mut du = vec![];
    let mut flux = vec![];
    let mut states: Vec<(f64, [f64; 3])> = tr.xs.iter().copied().zip(tr.ys.iter().copied()).collect();
    // the initial state belongs to the profile only when the grid starts at r0
    if grid[0] > r0 {
        states.remove(0);
    }
    states.push((tr.x_last, tr.y_last));
    for (i, (s, y)) in states.into_iter().enumerate() {
        let rr = if s == 0.0 {
            1.0
        } else if i == 0 {
            grid[0]
        } else {
            s.exp()
        };
        r.push(rr);
        u.push(y[0]);
        du.push(spow(y[1], 1.0 / (p - 1.0)) * rr.powf(-(n - 1.0) / (p - 1.0)));
        flux.push(y[1]);
    }
    let boundary_value = *u.last().unwrap_or(&f64::NAN);
    Ok((RadialProfile::new(r, u, du, flux)?, boundary_value))
}

/// Both sides of the Pohozaev identity at radius `r`.
pub fn pohozaev_sides(sol: &BallSolution, r: f64) -> Result<(f64, f64)> {
    if !(r > sol.r0 && r <= 1.0) {
        return Err(Error::domain(format!("radius {r} outside ({}, 1]", sol.r0)));
    }
    let params = &sol.params;
    let exps = &sol.exps;
    let opts = OdeOptions {
        rel_tol: sol.ode_tol,
        abs_tol: sol.ode_tol * 1e-6,
        ..Default::default()
    };
    // No zero event: u(1) may be marginally negative at the shooting root.
    let tr = integrate(
        |s, y: &[f64; 3]| radial_rhs(s, y, params, exps, true),
        sol.r0.ln(),
        start_state(sol.amplitude_c, sol.r0, params, exps)?,
        r.ln(),
        &[],
        None::<fn(f64, &[f64; 3]) -> f64>,
        &opts,
    )?;
    let [u, q, mass] = tr.y_last;
    let n = params.nf();
    let p = params.p;
    let du = spow(q, 1.0 / (p - 1.0)) * r.powf(-(n - 1.0) / (p - 1.0));
    let lhs = params.lambda * mass;
    let rhs = (p - 1.0) / p * du.abs().powf(p) * r.powf(n)
        + (n - p) / p * u * q
        + (params.mu * r.powf(n - p) + params.lambda * r.powf(n)) * u.abs().powf(p) / p
        + u.abs().powf(exps.p_star_s) * r.powf(n - params.s) / exps.p_star_s;
    Ok((lhs, rhs))
}

fn start_state(c: f64, r0: f64, params: &Params, exps: &Exponents) -> Result<[f64; 3]> {
    let (u0, du0) = singular_start(c, r0, exps)?;
    let n = params.nf();
    let p = params.p;
    let q0 = r0.powf(n - 1.0) * spow(du0, p - 1.0);
    let tail = c.powf(p) * r0.powf(n - p * exps.gamma1) / (n - p * exps.gamma1);
    Ok([u0, q0, tail])
}

/// `|LHS − RHS| / (|LHS| + |RHS|)` of the Pohozaev identity at radius `r`.
pub fn pohozaev_defect(sol: &BallSolution, r: f64) -> Result<f64> {
    let (l, rr) = pohozaev_sides(sol, r)?;
    Ok((l - rr).abs() / (l.abs() + rr.abs() + f64::MIN_POSITIVE))
}

/// `(r, w(r))` with `w = −r^{p−1}|u'|^{p−2}u'/u^{p−1}`, at samples where `u > 0`.
pub fn w_trace(profile: &RadialProfile, p: f64) -> Vec<(f64, f64)> {
    profile
        .r
        .iter()
        .zip(&profile.u)
        .zip(&profile.du_dr)
        .filter(|((_, &u), _)| u > 0.0)
        .map(|((&r, &u), &d)| (r, spow(-r * d / u, p - 1.0)))
        .collect()
}

/// Smallest `λ` for which the linear equation `−(r^{N−1}|u'|^{p−2}u')' = (μ r^{−p} + λ)|u|^{p−2}u r^{N−1}`,
/// started from the `γ₁` asymptotics, first vanishes at `r = 1`.
pub fn first_eigenvalue(n: u32, p: f64, mu: f64, tol: f64) -> Result<f64> {
    let base = Params::ground(n, p, mu, 0.0)?;
    let exps = derive(&base)?;
    let opts = OdeOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-18,
        ..Default::default()
    };
    let r0 = 1e-6;
    // true once the solution has a zero in (r0, 1]
    let vanishes = |lambda: f64| -> Result<bool> {
        let pr = Params { lambda, ..base };
        let tr = run(1.0, &pr, &exps, r0, 1.0, &[], &opts, false)?;
        Ok(tr.event || tr.y_last[0] <= 0.0)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while !vanishes(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::RootFinding("no eigenvalue bracket found".into()));
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if vanishes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_values() {
        let e = derive(&Params::ground(4, 2.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(singular_start(2.0, 1e-6, &e).unwrap(), (2.0, -0.0));
        let e = derive(&Params::ground(4, 2.0, 0.75, 0.0).unwrap()).unwrap();
        let (u, du) = singular_start(1.0, 1e-4, &e).unwrap();
        assert!((u - 100.0).abs() < 1e-10);
        assert!((du + 0.5 * 1e6).abs() < 1e-4);
        assert!(singular_start(1.0, 0.0, &e).is_err());
        assert!(singular_start(-1.0, 1e-6, &e).is_err());
    }

    #[test]
    fn ground_state_amplitude_never_vanishes() {
        let pr = Params::ground(5, 2.0, 0.5, 0.0).unwrap();
        let e = derive(&pr).unwrap();
        let cfg = BallConfig::default();
        for c in log_space(1e-2, 1e2, 7) {
            assert!(shoot(c, &pr, &e, &cfg).unwrap() > 0.0);
        }
    }

    #[test]
    fn radial_run_matches_ground_state() {
        let pr = Params::ground(4, 2.0, 0.5, 0.0).unwrap();
        let e = derive(&pr).unwrap();
        let flow = HFlow::new(&pr, 1e-12, 60).unwrap();
        let (c1, _) = flow.asymptotic_constants();
        let outs = [0.01, 0.1, 0.5, 0.9];
        let runr = integrate_radial(c1, &pr, &e, 1e-6, 1.0, &outs, 1e-11).unwrap();
        assert!(runr.first_zero.is_none());
        for (k, &r) in outs.iter().enumerate() {
            let (_, st) = flow.state_at(r.ln()).unwrap();
            let u = st.y * r.powf(-e.delta);
            assert!((runr.profile.u[k + 1] - u).abs() <= 1e-6 * u, "r={r}");
        }
    }

    #[test]
    fn eigenvalue_decreases_in_mu() {
        let vals: Vec<f64> = [-1.0, 0.0, 0.1, 0.2]
            .iter()
            .map(|&mu| first_eigenvalue(4, 2.0, mu, 1e-8).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
        assert!(vals.iter().all(|&v| v > 0.0));
    }
}
