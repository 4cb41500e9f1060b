//! Explicit solution families of the `λ = 0` problem, used as validation oracles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{derive, Exponents, Params};

/// Which explicit family applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Kind {
    /// `p = 2`, any admissible `μ` and `s`.
    P2,
    /// `μ = 0`, any admissible `p` and `s`.
    Mu0,
    /// `p = 2, μ = 0, s = 0` in the scaled form `(λ√(N(N−2))/(λ²+r²))^{(N−2)/2}`.
    AubinTalenti { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormFamily {
    pub kind: Kind,
    pub constant_c: f64,
    /// `ν = √(1 − μ/μ̄)`, only for [`Kind::P2`].
    pub nu: Option<f64>,
    params: Params,
    exps: Exponents,
}

/// Anything that can be evaluated as a radial profile `r ↦ (u, u')`.
pub trait RadialEvaluator {
    fn eval(&self, r: f64) -> Result<(f64, f64)>;
    /// The dilation exponent `(N−p)/p`.
    fn delta(&self) -> f64;
}

/// Returns the explicit family for `params`, preferring [`Kind::P2`] when both apply.
pub fn select(params: &Params) -> Option<ClosedFormFamily> {
    if params.p == 2.0 {
        ClosedFormFamily::new(params, Kind::P2).ok()
    } else if params.mu == 0.0 {
        ClosedFormFamily::new(params, Kind::Mu0).ok()
    } else {
        None
    }
}

/// Free-function form of [`ClosedFormFamily::eval`].
pub fn eval(family: &ClosedFormFamily, r: f64) -> Result<(f64, f64)> {
    family.eval(r)
}

impl ClosedFormFamily {
    pub fn new(params: &Params, kind: Kind) -> Result<Self> {
        let exps = derive(params)?;
        let n = params.nf();
        let p = params.p;
        let s = params.s;
        let (constant_c, nu) = match kind {
            Kind::P2 => {
                if p != 2.0 {
                    return Err(Error::domain("the p = 2 family needs p = 2"));
                }
                let c = (4.0 * (n - s) * (exps.mu_bar - params.mu) / (n - 2.0)).powf((n - 2.0) / (2.0 * (2.0 - s)));
                (c, Some((1.0 - params.mu / exps.mu_bar).sqrt()))
            }
            Kind::Mu0 => {
                if params.mu != 0.0 {
                    return Err(Error::domain("the mu = 0 family needs mu = 0"));
                }
                let c = ((n - s) * ((n - p) / (p - 1.0)).powf(p - 1.0)).powf((n - p) / (p * (p - s)));
                (c, None)
            }
            Kind::AubinTalenti { scale } => {
                if p != 2.0 || params.mu != 0.0 || s != 0.0 {
                    return Err(Error::domain("the scaled family needs p = 2, mu = 0, s = 0"));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::domain("scale must be positive"));
                }
                ((n * (n - 2.0)).sqrt().powf((n - 2.0) / 2.0), None)
            }
        };
        Ok(ClosedFormFamily {
            kind,
            constant_c,
            nu,
            params: *params,
            exps,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn exponents(&self) -> &Exponents {
        &self.exps
    }

    /// `(u(r), u'(r))`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::domain(format!("radius must be positive, got {r}")));
        }
        let n = self.params.nf();
        let p = self.params.p;
        let s = self.params.s;
        let c = self.constant_c;
        match self.kind {
            Kind::P2 => {
                let nu = self.nu.unwrap_or(1.0);
                let a = (2.0 - s) / 2.0;
                let k = (n - 2.0) / (2.0 - s);
                let (e1, e2) = (a * (1.0 - nu), a * (1.0 + nu));
                if r == 0.0 {
                    if self.params.mu != 0.0 {
                        return Err(Error::domain("the p = 2 family with mu != 0 is singular at r = 0"));
                    }
                    return power_sum_at_zero(c, 2.0 - s, k);
                }
                let l = r.ln();
                // ln(r^e1 + r^e2) and the logarithmic derivative, factoring out the dominant power.
                let (ln_a, weight) = if l <= 0.0 {
                    let rho = ((e2 - e1) * l).exp();
                    (e1 * l + rho.ln_1p(), (e1 + e2 * rho) / (1.0 + rho))
                } else {
                    let rho = ((e1 - e2) * l).exp();
                    (e2 * l + rho.ln_1p(), (e2 + e1 * rho) / (1.0 + rho))
                };
                let u = c * (-k * ln_a).exp();
                Ok((u, -k * weight * u / r))
            }
            Kind::Mu0 => {
                let b = (p - s) / (p - 1.0);
                let m = (n - p) / (p - s);
                if r == 0.0 {
                    return power_sum_at_zero(c, b, m);
                }
                let l = r.ln();
                let (ln_a, frac) = if l <= 0.0 {
                    let rb = (b * l).exp();
                    (rb.ln_1p(), rb / (1.0 + rb))
                } else {
                    let rb = (-b * l).exp();
                    (b * l + rb.ln_1p(), 1.0 / (1.0 + rb))
                };
                let u = c * (-m * ln_a).exp();
                Ok((u, -m * b * frac * u / r))
            }
            Kind::AubinTalenti { scale } => {
                let e = (n - 2.0) / 2.0;
                let d = scale * scale + r * r;
                let u = c * (scale / d).powf(e);
                Ok((u, -2.0 * e * r * u / d))
            }
        }
    }

    /// Coefficients of `u ≈ C1 r^{−γ₁}` at 0 and `u ≈ C2 r^{−γ₂}` at infinity.
    pub fn asymptotic_constants(&self) -> (f64, f64) {
        match self.kind {
            Kind::AubinTalenti { scale } => {
                let tau = 1.0 / scale;
                let d = self.exps.delta;
                (
                    self.constant_c * tau.powf(d - self.exps.gamma1),
                    self.constant_c * tau.powf(d - self.exps.gamma2),
                )
            }
            _ => (self.constant_c, self.constant_c),
        }
    }

    /// Radius where `r^δ u(r)` attains its maximum.
    pub fn argmax_radius(&self) -> f64 {
        let e = &self.exps;
        match self.kind {
            Kind::P2 => 1.0,
            Kind::Mu0 => {
                let b = (self.params.p - self.params.s) / (self.params.p - 1.0);
                (e.delta / (e.gamma2 - e.delta)).powf(1.0 / b)
            }
            Kind::AubinTalenti { scale } => scale,
        }
    }

    /// The dilation-invariant combination `(γ₂−δ)·ln C1 + (δ−γ₁)·ln C2`.
    pub fn dilation_invariant(&self) -> f64 {
        let e = &self.exps;
        let (c1, c2) = self.asymptotic_constants();
        (e.gamma2 - e.delta) * c1.ln() + (e.delta - e.gamma1) * c2.ln()
    }
}

/// `c(1 + r^b)^{−m}` and its derivative at `r = 0`.
fn power_sum_at_zero(c: f64, b: f64, m: f64) -> Result<(f64, f64)> {
    if b > 1.0 {
        Ok((c, 0.0))
    } else if b == 1.0 {
        Ok((c, -c * m))
    } else {
        Err(Error::domain("the derivative is unbounded at r = 0 for this family"))
    }
}

impl RadialEvaluator for ClosedFormFamily {
    fn eval(&self, r: f64) -> Result<(f64, f64)> {
        ClosedFormFamily::eval(self, r)
    }

    fn delta(&self) -> f64 {
        self.exps.delta
    }
}

/// `u^τ(r) = τ^δ u(τr)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dilated<E> {
    pub inner: E,
    pub tau: f64,
}

pub fn dilate<E: RadialEvaluator>(inner: E, tau: f64) -> Result<Dilated<E>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("dilation factor must be positive, got {tau}")));
    }
    Ok(Dilated { inner, tau })
}

impl<E: RadialEvaluator> RadialEvaluator for Dilated<E> {
    fn eval(&self, r: f64) -> Result<(f64, f64)> {
        let d = self.inner.delta();
        let (u, du) = self.inner.eval(self.tau * r)?;
        Ok((self.tau.powf(d) * u, self.tau.powf(d + 1.0) * du))
    }

    fn delta(&self) -> f64 {
        self.inner.delta()
    }
}

impl<E: RadialEvaluator> RadialEvaluator for &E {
    fn eval(&self, r: f64) -> Result<(f64, f64)> {
        (**self).eval(r)
    }

    fn delta(&self) -> f64 {
        (**self).delta()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(n: u32, p: f64, mu: f64, s: f64, kind: Kind) -> ClosedFormFamily {
        ClosedFormFamily::new(&Params::ground(n, p, mu, s).unwrap(), kind).unwrap()
    }

    #[test]
    fn selection() {
        let k = |n, p, mu, s| select(&Params::ground(n, p, mu, s).unwrap()).map(|f| f.kind);
        assert_eq!(k(4, 2.0, 0.5, 0.5), Some(Kind::P2));
        assert_eq!(k(4, 2.0, 0.0, 0.0), Some(Kind::P2));
        assert_eq!(k(5, 3.0, 0.0, 1.0), Some(Kind::Mu0));
        assert_eq!(k(5, 3.0, -1.0, 0.0), None);
    }

    #[test]
    fn known_values() {
        let mu0 = fam(4, 2.0, 0.0, 0.0, Kind::Mu0);
        assert!((mu0.constant_c - 8f64.sqrt()).abs() < 1e-15);
        assert!((mu0.eval(1.0).unwrap().0 - 2f64.sqrt()).abs() < 1e-15);
        let p2 = fam(4, 2.0, 0.0, 0.0, Kind::P2);
        assert!((p2.eval(1.0).unwrap().0 - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mu0.eval(0.0).unwrap(), (mu0.constant_c, 0.0));
        assert!(fam(4, 2.0, 0.5, 0.0, Kind::P2).eval(0.0).is_err());
        assert!(mu0.eval(-1.0).is_err());
    }

    #[test]
    fn small_r_coefficient_p2() {
        let f = fam(4, 2.0, 0.75, 0.0, Kind::P2);
        let r = 1e-12;
        let (u, _) = f.eval(r).unwrap();
        assert!((u * r.powf(0.5) / f.constant_c - 1.0).abs() < 1e-5);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let cases = [
            fam(4, 2.0, 0.5, 0.5, Kind::P2),
            fam(5, 3.0, 0.0, 1.0, Kind::Mu0),
            fam(6, 2.0, -3.0, 1.5, Kind::P2),
            fam(5, 2.0, 0.0, 0.0, Kind::AubinTalenti { scale: 0.3 }),
        ];
        for f in &cases {
            for k in 0..100 {
                let r = 10f64.powf(-3.0 + 6.0 * (k as f64 + 0.37) / 100.0);
                let h = r * 1e-5;
                let fd = (f.eval(r + h).unwrap().0 - f.eval(r - h).unwrap().0) / (2.0 * h);
                let (u, an) = f.eval(r).unwrap();
                // the second term bounds the roundoff of the difference quotient
                assert!((an - fd).abs() <= 1e-7 * an.abs() + 1e-9 * u / r, "{:?} r={r}: {an} vs {fd}", f.kind);
            }
        }
    }

    #[test]
    fn aubin_talenti_is_dilated_mu0() {
        let mu0 = fam(5, 2.0, 0.0, 0.0, Kind::Mu0);
        let at = fam(5, 2.0, 0.0, 0.0, Kind::AubinTalenti { scale: 0.3 });
        let d = dilate(&mu0, 1.0 / 0.3).unwrap();
        for &r in &[1e-3, 0.1, 0.3, 2.0, 50.0] {
            let (a, da) = at.eval(r).unwrap();
            let (b, db) = d.eval(r).unwrap();
            assert!((a - b).abs() <= 1e-13 * a);
            assert!((da - db).abs() <= 1e-13 * da.abs());
        }
        assert!((at.dilation_invariant() - mu0.dilation_invariant()).abs() < 1e-12);
    }

    #[test]
    fn argmax_is_where_log_slope_is_delta() {
        for f in [fam(5, 3.0, 0.0, 1.0, Kind::Mu0), fam(7, 2.5, 0.0, 0.4, Kind::Mu0), fam(4, 2.0, 0.5, 0.5, Kind::P2)] {
            let r = f.argmax_radius();
            let (u, du) = f.eval(r).unwrap();
            assert!((-r * du / u - f.exponents().delta).abs() < 1e-13);
        }
    }

    #[test]
    fn dilation_composes() {
        let f = fam(5, 3.0, 0.0, 1.0, Kind::Mu0);
        let once = dilate(&f, 6.0).unwrap();
        let twice = dilate(dilate(&f, 2.0).unwrap(), 3.0).unwrap();
        let id = dilate(&f, 1.0).unwrap();
        for &r in &[0.01, 0.7, 9.0] {
            let a = once.eval(r).unwrap();
            let b = twice.eval(r).unwrap();
            assert!((a.0 - b.0).abs() <= 1e-14 * a.0);
            assert!((a.1 - b.1).abs() <= 1e-14 * a.1.abs());
            assert_eq!(id.eval(r).unwrap(), f.eval(r).unwrap());
        }
        assert!(dilate(&f, 0.0).is_err());
    }
}
