//! Comparators, slope fits and conservation checks shared by the test-suite and the CLI.

use serde::Serialize;

use crate::ball_shooting::{amplitude_scale, first_eigenvalue, scan, solve_ball, BallConfig, BallSolution};
use crate::closed_forms::{dilate, select, ClosedFormFamily, Kind, RadialEvaluator};
use crate::error::{Error, Result};
use crate::exponents::{derive, gamma_mu, Params};
use crate::ground_state::{solve, GroundStateConfig, GroundStateSolution, HFlow};
use crate::numerics::{fit_line, log_space, spow, LineFit};
use crate::profile::RadialProfile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub measured: f64,
    pub allowed: f64,
    pub passed: bool,
    pub context: String,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, measured: f64, allowed: f64, context: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            measured,
            allowed,
            // NaN never passes
            passed: measured <= allowed,
            context: context.into(),
        }
    }
}

pub fn params_context(params: &Params) -> String {
    format!(
        "N={} p={} mu={} s={} lambda={}",
        params.n, params.p, params.mu, params.s, params.lambda
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum End {
    Zero,
    Infinity,
}

/// Half a decade at the extreme end of the profile is left out of slope fits.
const FIT_MARGIN_DECADES: f64 = 0.5;

/// Least-squares slope of `ln u` against `ln r` over the outer `decades` decades at one end.
pub fn fit_power_slope(profile: &RadialProfile, end: End, decades: u32) -> Result<LineFit> {
    let (Some(&r_lo), Some(&r_hi)) = (profile.r.first(), profile.r.last()) else {
        return Err(Error::InsufficientData("empty profile".into()));
    };
    let d = decades as f64;
    if decades == 0 || (r_hi / r_lo).log10() < d {
        return Err(Error::InsufficientData(format!(
            "profile spans {:.3} decades, {decades} requested",
            (r_hi / r_lo).log10()
        )));
    }
    let (lo, hi) = match end {
        End::Zero => (r_lo * 10f64.powf(FIT_MARGIN_DECADES), r_lo * 10f64.powf(d)),
        End::Infinity => (r_hi * 10f64.powf(-d), r_hi * 10f64.powf(-FIT_MARGIN_DECADES)),
    };
    let (mut xs, mut ys) = (vec![], vec![]);
    for (&r, &u) in profile.r.iter().zip(&profile.u) {
        if r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12) && u > 0.0 {
            xs.push(r.ln());
            ys.push(u.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} usable samples in [{lo:e}, {hi:e}]", xs.len())));
    }
    fit_line(&xs, &ys).ok_or_else(|| Error::InsufficientData("degenerate fit".into()))
}

/// Sup relative error between a profile and the matching explicit family, after
/// dilating the family so that both maxima of `r^δ u` coincide.
pub fn compare_to_closed_form(numeric: &RadialProfile, params: &Params) -> Result<CheckReport> {
    compare_to_closed_form_within(numeric, params, 1e-6)
}

pub fn compare_to_closed_form_within(numeric: &RadialProfile, params: &Params, allowed: f64) -> Result<CheckReport> {
    let family = select(params).ok_or_else(|| Error::domain("no closed form is known for these parameters"))?;
    let delta = family.delta();
    let r_num = numeric
        .argmax_radius(delta)
        .ok_or_else(|| Error::InsufficientData("profile does not bracket the maximum of r^delta u".into()))?;
    let tau = family.argmax_radius() / r_num;
    let aligned = dilate(&family, tau)?;
    let mut worst: f64 = 0.0;
    let mut count = 0usize;
    for (&r, &u) in numeric.r.iter().zip(&numeric.u) {
        if !(1e-2..=1e2).contains(&r) {
            continue;
        }
        let (uc, _) = aligned.eval(r)?;
        worst = worst.max(((u - uc) / uc).abs());
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("profile has no samples in [1e-2, 1e2]".into()));
    }
    Ok(CheckReport::new(
        "closed-form sup relative error",
        worst,
        allowed,
        params_context(params),
    ))
}

/// Relative Pohozaev defect allowed for ball solutions.
pub const POHOZAEV_TOL: f64 = 1e-5;
/// First-integral drift allowed for ground states, relative to `1 + M^{p*}`.
pub const FIRST_INTEGRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub enum Monitored<'a> {
    Ground(&'a GroundStateSolution),
    Ball(&'a BallSolution),
}

/// `max|V|` along a ground state, or the worst Pohozaev defect over `r = 1` and ten interior radii.
pub fn conservation_monitor(solution: Monitored<'_>) -> CheckReport {
    match solution {
        Monitored::Ground(g) => CheckReport::new(
            "first integral drift",
            g.report.max_first_integral,
            FIRST_INTEGRAL_TOL * g.report.first_integral_scale,
            params_context(&g.params),
        ),
        Monitored::Ball(b) => CheckReport::new(
            "pohozaev defect",
            b.pohozaev_defect,
            POHOZAEV_TOL,
            params_context(&b.params),
        ),
    }
}

/// Behaviour of `w` near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WLimit {
    /// `γ₁^{p−1}` (signed power).
    pub limit: f64,
    /// `|w − limit|` at the innermost sample.
    pub error_at_start: f64,
    /// Slope of `ln|w − limit|` against `ln r` over the fitted decades.
    pub rate: Option<f64>,
    /// Whether `|w − limit|` shrinks towards the origin at every sample of the fitted decades.
    pub monotone: bool,
}

pub fn w_limit(profile: &RadialProfile, params: &Params, gamma1: f64, decades: u32) -> Result<WLimit> {
    let p = params.p;
    let limit = spow(gamma1, p - 1.0);
    let w = profile.w(p);
    let r_lo = *profile.r.first().ok_or_else(|| Error::InsufficientData("empty profile".into()))?;
    let hi = r_lo * 10f64.powi(decades as i32) * (1.0 + 1e-12);
    let pts: Vec<(f64, f64)> = profile
        .r
        .iter()
        .zip(&w)
        .take_while(|(&r, _)| r <= hi)
        .map(|(&r, &w)| (r, (w - limit).abs()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} samples near the origin", pts.len())));
    }
    let monotone = pts.windows(2).all(|q| q[0].1 <= q[1].1);
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().filter(|q| q.1 > 0.0).map(|q| (q.0.ln(), q.1.ln())).unzip();
    let rate = if xs.len() >= 3 { fit_line(&xs, &ys).map(|f| f.slope) } else { None };
    Ok(WLimit {
        limit,
        error_at_start: pts[0].1,
        rate,
        monotone,
    })
}

/// Checks gathered by one verification run, plus informational notes.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Suite {
    pub checks: Vec<CheckReport>,
    pub notes: Vec<String>,
}

impl Suite {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, c: CheckReport) {
        self.checks.push(c);
    }

    fn extend(&mut self, other: Suite) {
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }
}

pub const NONEXISTENCE_NOTE: &str = "no solution (consistent with nonexistence theorem)";

/// Amplitude values scanned when checking that `λ ≤ 0` admits no ball solution.
const NONEXISTENCE_SCAN: usize = 40;

/// Every invariant that applies to one parameter tuple: exponent residuals, the ground state
/// when `λ = 0`, the ball solution when `λ > 0` and nonexistence when `λ ≤ 0`.
pub fn check_params(params: &Params, gcfg: &GroundStateConfig, bcfg: &BallConfig) -> Result<Suite> {
    params.validate()?;
    let ctx = params_context(params);
    let exps = derive(params)?;
    let mut suite = Suite::default();
    let p = params.p;
    let np = params.nf() - p;
    for (name, g) in [("gamma1 residual", exps.gamma1), ("gamma2 residual", exps.gamma2)] {
        let scale = (p - 1.0) * g.abs().powf(p) + np * g.abs().powf(p - 1.0) + params.mu.abs();
        suite.push(CheckReport::new(name, gamma_mu(g, params).abs(), 1e-12 * scale.max(1.0), &ctx));
    }

    if params.lambda == 0.0 {
        let sol = solve(params, gcfg)?;
        suite.extend(ground_state_checks(&sol)?);
    }
    if params.lambda > 0.0 {
        match solve_ball(params, None, bcfg) {
            Ok(sol) => suite.extend(ball_checks(&sol)),
            Err(Error::NoSignChange { lo, hi }) => suite
                .notes
                .push(format!("{ctx}: no sign change of the shooting defect on [{lo:e}, {hi:e}]")),
            Err(Error::MultipleRoots(roots)) => {
                suite.push(CheckReport::new("shooting roots", roots.len() as f64, 1.0, &ctx))
            }
            Err(e) => return Err(e),
        }
    } else {
        let scale = amplitude_scale(&params.with_lambda(0.0)?, bcfg.quad_tol)?;
        let (lo, hi) = bcfg.bracket_factors;
        let values = scan(params, &exps, lo * scale, hi * scale, NONEXISTENCE_SCAN, bcfg)?;
        let changes = values.windows(2).filter(|w| w[0].1 * w[1].1 <= 0.0).count();
        suite.push(CheckReport::new("shooting sign changes", changes as f64, 0.0, &ctx));
        if changes == 0 {
            suite.notes.push(format!("{ctx}: {NONEXISTENCE_NOTE}"));
        }
    }
    Ok(suite)
}

pub fn ground_state_checks(sol: &GroundStateSolution) -> Result<Suite> {
    let ctx = params_context(&sol.params);
    let r = &sol.report;
    let e = &sol.exps;
    let mut suite = Suite::default();
    suite.push(conservation_monitor(Monitored::Ground(sol)));
    suite.push(CheckReport::new("y / M - 1", r.max_y_ratio - 1.0, 1e-9, &ctx));
    suite.push(CheckReport::new("ode residual", r.max_ode_residual, 1e-6, &ctx));
    let slope_err = |fit: Option<f64>, g: f64| fit.map_or(f64::NAN, |s| (s + g).abs());
    suite.push(CheckReport::new("slope at zero + gamma1", slope_err(r.slope_fit_0, e.gamma1), 1e-3, &ctx));
    suite.push(CheckReport::new("slope at infinity + gamma2", slope_err(r.slope_fit_inf, e.gamma2), 1e-3, &ctx));
    if let Some(family) = select(&sol.params) {
        suite.push(compare_to_closed_form(&sol.profile, &sol.params)?);
        let inv = family.dilation_invariant();
        suite.push(CheckReport::new(
            "dilation invariant",
            (r.dilation_invariant - inv).abs() / inv.abs().max(1.0),
            1e-8,
            &ctx,
        ));
    }
    Ok(suite)
}

pub fn ball_checks(sol: &BallSolution) -> Suite {
    let ctx = params_context(&sol.params);
    let mut suite = Suite::default();
    suite.push(conservation_monitor(Monitored::Ball(sol)));
    suite.push(CheckReport::new("|u(1)|", sol.boundary_value.abs(), 1e-10, &ctx));
    // strictly negative slope: the measured value must lie below -0
    suite.push(CheckReport::new("u'(1)", sol.boundary_slope, -f64::MIN_POSITIVE, &ctx));
    let interior = &sol.profile.u[..sol.profile.len().saturating_sub(1)];
    let nonpositive = interior.iter().filter(|&&u| u <= 0.0).count();
    suite.push(CheckReport::new("nonpositive interior samples", nonpositive as f64, 0.0, &ctx));
    suite
}

/// Largest `|y_of_h(h)^{p*−p} − p*(−Γ_μ(h))/p|` over `n` interior points of `(γ₁, γ₂)`.
pub fn algebraic_identity_defect(flow: &HFlow, n: usize) -> Result<f64> {
    let params = flow.params();
    let e = flow.exponents();
    let gap = e.gap(params);
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        let h = e.gamma1 + (e.gamma2 - e.gamma1) * k as f64 / (n + 1) as f64;
        let y = flow.y_of_h(h)?;
        let d = y.powf(gap) - e.p_star_s * (-gamma_mu(h, params)) / params.p;
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

/// The default verification suite, run by `verify` when no parameters are given.
pub fn default_suite(gcfg: &GroundStateConfig, bcfg: &BallConfig) -> Result<Suite> {
    let mut suite = Suite::default();

    let pr = Params::ground(4, 2.0, 0.75, 0.0)?;
    let e = derive(&pr)?;
    let ctx = params_context(&pr);
    suite.push(CheckReport::new("gamma1 = 0.5", (e.gamma1 - 0.5).abs(), 1e-12, &ctx));
    suite.push(CheckReport::new("gamma2 = 1.5", (e.gamma2 - 1.5).abs(), 1e-12, &ctx));
    for p in [1.5, 2.0, 2.5, 3.0] {
        let pr = Params::ground(4, p, 0.0, 0.0)?;
        let e = derive(&pr)?;
        let err = e.gamma1.abs().max((e.gamma2 - (4.0 - p) / (p - 1.0)).abs());
        suite.push(CheckReport::new("mu = 0 exponents", err, 1e-13, params_context(&pr)));
    }

    for s in [0.0, 0.5, 1.0] {
        let pr = Params::ground(4, 2.0, 0.0, s)?;
        let a = ClosedFormFamily::new(&pr, Kind::P2)?;
        let b = ClosedFormFamily::new(&pr, Kind::Mu0)?;
        let mut worst: f64 = 0.0;
        for r in log_space(1e-3, 1e3, 601) {
            let (ua, _) = a.eval(r)?;
            let (ub, _) = b.eval(r)?;
            worst = worst.max(((ua - ub) / ub).abs());
        }
        suite.push(CheckReport::new("P2 vs MU0 closed form", worst, 1e-12, params_context(&pr)));
    }

    let ground = [
        Params::ground(4, 2.0, 0.5, 0.5)?,
        Params::ground(5, 3.0, 0.0, 1.0)?,
        Params::ground(5, 3.0, -2.0, 0.0)?,
    ];
    for pr in &ground {
        suite.extend(check_params(pr, gcfg, bcfg)?);
        let flow = HFlow::new(pr, gcfg.quad_tol, gcfg.levels)?;
        let d = algebraic_identity_defect(&flow, 200)?;
        suite.push(CheckReport::new("algebraic identity", d, 1e-9, params_context(pr)));
    }

    let pr = Params::ground(4, 2.0, 0.5, 0.0)?;
    let sol = solve(&pr, gcfg)?;
    let wl = w_limit(&sol.profile, &pr, sol.exps.gamma1, 2)?;
    let ctx = params_context(&pr);
    suite.push(CheckReport::new("w limit at r_min", wl.error_at_start, 1e-4, &ctx));
    suite.push(CheckReport::new("w approach not monotone", if wl.monotone { 0.0 } else { 1.0 }, 0.0, &ctx));

    let base = Params::ground(5, 2.0, 0.5, 0.0)?;
    let lam1 = first_eigenvalue(5, 2.0, 0.5, 1e-12)?;
    for lambda in [0.3 * lam1, -1.0] {
        suite.extend(check_params(&base.with_lambda(lambda)?, gcfg, bcfg)?);
    }

    let pi2 = std::f64::consts::PI.powi(2);
    let lam = first_eigenvalue(3, 2.0, 0.0, 1e-12)?;
    suite.push(CheckReport::new(
        "first eigenvalue vs pi^2",
        ((lam - pi2) / pi2).abs(),
        1e-4,
        "N=3 p=2 mu=0",
    ));
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{ClosedFormFamily, Kind};
    use crate::numerics::log_space;

    fn closed_profile(params: &Params, tau: f64) -> RadialProfile {
        let fam = ClosedFormFamily::new(params, if params.p == 2.0 { Kind::P2 } else { Kind::Mu0 }).unwrap();
        let d = dilate(&fam, tau).unwrap();
        let r = log_space(1e-6, 1e6, 2001);
        let (u, du): (Vec<f64>, Vec<f64>) = r.iter().map(|&r| d.eval(r).unwrap()).unzip();
        RadialProfile::from_values(params, r, u, du).unwrap()
    }

    #[test]
    fn mu0_slopes() {
        let pr = Params::ground(5, 3.0, 0.0, 1.0).unwrap();
        let prof = closed_profile(&pr, 1.0);
        let z = fit_power_slope(&prof, End::Zero, 2).unwrap();
        assert!(z.slope.abs() < 1e-3, "{}", z.slope);
        let i = fit_power_slope(&prof, End::Infinity, 2).unwrap();
        assert!((i.slope + 1.0).abs() < 1e-3, "{}", i.slope);
        assert!(fit_power_slope(&prof, End::Zero, 13).is_err());
    }

    #[test]
    fn comparator_detects_dilation_and_corruption() {
        let pr = Params::ground(4, 2.0, 0.5, 0.5).unwrap();
        let prof = closed_profile(&pr, 3.7);
        let rep = compare_to_closed_form(&prof, &pr).unwrap();
        assert!(rep.passed, "{rep:?}");
        let mut bad = prof.clone();
        bad.u[1000] *= 1.001;
        assert!(!compare_to_closed_form(&bad, &pr).unwrap().passed);
        let none = Params::ground(5, 3.0, -1.0, 0.0).unwrap();
        assert!(compare_to_closed_form(&prof, &none).is_err());
    }

    #[test]
    fn w_limit_of_closed_form() {
        let pr = Params::ground(4, 2.0, 0.5, 0.0).unwrap();
        let e = crate::exponents::derive(&pr).unwrap();
        let prof = closed_profile(&pr, 1.0);
        let wl = w_limit(&prof, &pr, e.gamma1, 2).unwrap();
        assert!(wl.error_at_start < 1e-4, "{wl:?}");
        assert!(wl.monotone);
        // u = c r^{-a(1-ν)}(1 + r^{2νa/k})^{-k}: w − γ₁ ~ r^{2ν a/k}
        assert!(wl.rate.unwrap() > 0.5, "{wl:?}");
    }

    #[test]
    fn default_suite_passes() {
        let suite = default_suite(&GroundStateConfig::default(), &BallConfig::default()).unwrap();
        for c in suite.checks.iter().filter(|c| !c.passed) {
            eprintln!("{c:?}");
        }
        assert!(suite.passed());
    }

    #[test]
    fn nan_never_passes() {
        assert!(!CheckReport::new("x", f64::NAN, 1.0, "").passed);
    }
}
