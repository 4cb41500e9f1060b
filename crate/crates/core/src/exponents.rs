//! Problem parameters, the characteristic function Γ_μ and its roots, and the
//! derived constants every other module consumes.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numerics::root::{bisect, BisectOptions};
use crate::numerics::spow;

/// The problem tuple `(N, p, μ, s, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub mu: f64,
    pub s: f64,
    pub lambda: f64,
}

impl Params {
    /// Builds a validated tuple.
    pub fn new(n: u32, p: f64, mu: f64, s: f64, lambda: f64) -> Result<Self> {
        let params = Params { n, p, mu, s, lambda };
        params.validate()?;
        Ok(params)
    }

    /// Shorthand for the `λ = 0` problem.
    pub fn ground(n: u32, p: f64, mu: f64, s: f64) -> Result<Self> {
        Params::new(n, p, mu, s, 0.0)
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Params::new(self.n, self.p, self.mu, self.s, lambda)
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn mu_bar(&self) -> f64 {
        ((self.nf() - self.p) / self.p).powf(self.p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nf();
        if self.n < 2 {
            return Err(Error::InvalidParams("requires N >= 2".into()));
        }
        if !(self.p.is_finite() && self.p > 1.0 && self.p < n) {
            return Err(Error::InvalidParams("requires 1 < p < N".into()));
        }
        if !(self.mu.is_finite() && self.mu < self.mu_bar()) {
            return Err(Error::InvalidParams("requires mu < ((N-p)/p)^p".into()));
        }
        if !(self.s.is_finite() && self.s >= 0.0 && self.s < self.p) {
            return Err(Error::InvalidParams("requires 0 <= s < p".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParams("requires lambda finite".into()));
        }
        Ok(())
    }
}

/// Constants derived from [`Params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta: f64,
    pub mu_bar: f64,
    pub p_star_s: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub sphere_measure: f64,
}

impl Exponents {
    /// `p*(s) − p`, computed without cancellation.
    pub fn gap(&self, params: &Params) -> f64 {
        params.p * (params.p - params.s) / (params.nf() - params.p)
    }

    /// `p' = p/(p−1)`.
    pub fn p_conj(&self, params: &Params) -> f64 {
        params.p / (params.p - 1.0)
    }
}

/// Stopping rule for the root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// The bracket for a negative-μ root is doubled at most this many times.
    pub max_doublings: u32,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            rel_tol: 1e-14,
            max_iter: 200,
            max_doublings: 60,
        }
    }
}

/// `Γ_μ(γ) = (p−1)|γ|^p − (N−p)|γ|^{p−2}γ + μ`.
pub fn gamma_mu(gamma: f64, params: &Params) -> f64 {
    let p = params.p;
    (p - 1.0) * gamma.abs().powf(p) - (params.nf() - p) * spow(gamma, p - 1.0) + params.mu
}

/// `Γ_μ'(γ) = (p−1)|γ|^{p−2}(pγ − (N−p))`.
pub fn gamma_mu_derivative(gamma: f64, params: &Params) -> Result<f64> {
    let p = params.p;
    let np = params.nf() - p;
    if gamma == 0.0 {
        return if p < 2.0 {
            Err(Error::domain("derivative of Gamma_mu is unbounded at 0 for 1 < p < 2"))
        } else if p == 2.0 {
            Ok(-(p - 1.0) * np)
        } else {
            Ok(0.0)
        };
    }
    Ok((p - 1.0) * gamma.abs().powf(p - 2.0) * (p * gamma - np))
}

pub fn derive(params: &Params) -> Result<Exponents> {
    derive_with(params, &RootConfig::default())
}

pub fn derive_with(params: &Params, cfg: &RootConfig) -> Result<Exponents> {
    params.validate()?;
    let n = params.nf();
    let p = params.p;
    let mu = params.mu;
    let delta = (n - p) / p;
    let mu_bar = params.mu_bar();
    let p_star_s = (n - params.s) * p / (n - p);
    let upper = (n - p) / (p - 1.0);

    let (gamma1, gamma2) = if mu == 0.0 {
        (0.0, upper)
    } else if p == 2.0 {
        let a = mu_bar.sqrt();
        let b = (mu_bar - mu).sqrt();
        (a - b, a + b)
    } else {
        let opts = BisectOptions {
            rel_tol: cfg.rel_tol,
            abs_tol: 0.0,
            max_iter: cfg.max_iter,
        };
        let g = |x: f64| gamma_mu(x, params);
        if mu > 0.0 {
            (bisect(g, 0.0, delta, &opts)?, bisect(g, delta, upper, &opts)?)
        } else {
            let lo = grow_bracket(|w| g(-w), cfg)?;
            let hi = grow_bracket(|w| g(upper + w), cfg)?;
            (bisect(g, -lo, 0.0, &opts)?, bisect(g, upper, upper + hi, &opts)?)
        }
    };

    let gap = p * (p - params.s) / (n - p);
    let m = (p_star_s * (mu_bar - mu) / p).powf(1.0 / gap);
    let sphere_measure = 2.0 * std::f64::consts::PI.powf(n / 2.0) / gamma(n / 2.0);
    Ok(Exponents {
        gamma1,
        gamma2,
        delta,
        mu_bar,
        p_star_s,
        m,
        sphere_measure,
    })
}

/// Smallest `G = 2^k` with `f(G) > 0`.
fn grow_bracket<F: Fn(f64) -> f64>(f: F, cfg: &RootConfig) -> Result<f64> {
    let mut w = 1.0;
    for _ in 0..=cfg.max_doublings {
        if f(w) > 0.0 {
            return Ok(w);
        }
        w *= 2.0;
    }
    Err(Error::RootFinding(format!(
        "no bracket for a root of Gamma_mu within 2^{}",
        cfg.max_doublings
    )))
}

/// The `y`-level at which the flux variable changes sign, `(−p*(s)μ/p)^{1/(p*(s)−p)}`.
pub fn t_minus_level(params: &Params) -> Result<f64> {
    params.validate()?;
    if params.mu >= 0.0 {
        return Err(Error::domain("the flux never changes sign when mu >= 0"));
    }
    let n = params.nf();
    let p = params.p;
    let p_star_s = (n - params.s) * p / (n - p);
    let gap = p * (p - params.s) / (n - p);
    Ok((-p_star_s * params.mu / p).powf(1.0 / gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, p: f64, mu: f64, s: f64) -> Params {
        Params::ground(n, p, mu, s).unwrap()
    }

    #[test]
    fn validation_messages() {
        let msg = |r: Result<Params>| r.unwrap_err().to_string();
        assert_eq!(msg(Params::ground(4, 2.0, 1.0, 0.0)), "requires mu < ((N-p)/p)^p");
        assert_eq!(msg(Params::ground(4, 4.0, 0.0, 0.0)), "requires 1 < p < N");
        assert_eq!(msg(Params::ground(4, 1.0, 0.0, 0.0)), "requires 1 < p < N");
        assert_eq!(msg(Params::ground(4, 2.0, 0.0, 2.0)), "requires 0 <= s < p");
        assert_eq!(msg(Params::ground(4, 2.0, 0.0, -0.1)), "requires 0 <= s < p");
        assert_eq!(msg(Params::ground(1, 0.5, 0.0, 0.0)), "requires N >= 2");
        assert!(Params::new(4, 2.0, 0.0, 0.0, f64::NAN).is_err());
        assert!(Params::new(4, 2.0, 0.0, 0.0, -3.0).is_ok());
    }

    #[test]
    fn gamma_mu_values() {
        let pr = params(4, 2.0, 0.75, 0.0);
        assert_eq!(gamma_mu(0.0, &pr), 0.75);
        assert!((gamma_mu(1.0, &pr) + 0.25).abs() < 1e-15);
        let pr = params(5, 3.0, -1.0, 0.5);
        let delta = 2.0 / 3.0;
        assert!((gamma_mu(delta, &pr) + (pr.mu_bar() - pr.mu)).abs() < 1e-14);
    }

    #[test]
    fn derivative_values() {
        let pr = params(4, 2.0, 0.3, 0.0);
        assert_eq!(gamma_mu_derivative(1.0, &pr).unwrap(), 0.0);
        assert_eq!(gamma_mu_derivative(2.0, &pr).unwrap(), 2.0);
        assert!(gamma_mu_derivative(0.0, &params(4, 1.5, 0.0, 0.0)).is_err());
        assert_eq!(gamma_mu_derivative(0.0, &params(5, 3.0, 0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let pr = params(6, 2.7, -0.4, 1.1);
        for k in 0..20 {
            let g = -1.5 + 0.173 * k as f64 + 0.01;
            let h = 1e-6;
            let fd = (gamma_mu(g + h, &pr) - gamma_mu(g - h, &pr)) / (2.0 * h);
            let an = gamma_mu_derivative(g, &pr).unwrap();
            assert!((an - fd).abs() <= 1e-6 * (1.0 + an.abs()), "g={g}: {an} vs {fd}");
        }
    }

    #[test]
    fn derive_special_cases() {
        let e = derive(&params(4, 2.0, 0.0, 0.0)).unwrap();
        assert_eq!((e.gamma1, e.gamma2, e.delta, e.mu_bar, e.p_star_s), (0.0, 2.0, 1.0, 1.0, 4.0));
        assert!((e.m - 2f64.sqrt()).abs() < 1e-15);
        assert!((e.sphere_measure - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);

        let e = derive(&params(4, 2.0, 0.75, 0.0)).unwrap();
        assert!((e.gamma1 - 0.5).abs() < 1e-15);
        assert!((e.gamma2 - 1.5).abs() < 1e-15);

        let e = derive(&params(5, 3.0, 0.0, 1.0)).unwrap();
        assert_eq!((e.gamma1, e.gamma2), (0.0, 1.0));
    }

    #[test]
    fn m_matches_argmax_of_closed_form() {
        // max of r·2√2/(1+r²) over a fine grid
        let best = (1..20000)
            .map(|k| {
                let r = k as f64 * 1e-4;
                r * 8f64.sqrt() / (1.0 + r * r)
            })
            .fold(0.0, f64::max);
        let e = derive(&params(4, 2.0, 0.0, 0.0)).unwrap();
        assert!((e.m - best).abs() < 1e-7);
    }

    #[test]
    fn general_roots_lie_in_their_intervals() {
        for &(n, p, mu, s) in &[(5, 3.0, 0.2, 1.0), (5, 3.0, -2.0, 0.0), (3, 1.5, 0.01, 0.3), (7, 2.5, -10.0, 2.0)] {
            let pr = params(n, p, mu, s);
            let e = derive(&pr).unwrap();
            let upper = (pr.nf() - p) / (p - 1.0);
            for g in [e.gamma1, e.gamma2] {
                assert!(gamma_mu(g, &pr).abs() <= 1e-12 * mu.abs().max(1.0), "{pr:?}");
            }
            if mu > 0.0 {
                assert!(0.0 < e.gamma1 && e.gamma1 < e.delta && e.delta < e.gamma2 && e.gamma2 < upper);
            } else {
                assert!(e.gamma1 < 0.0 && e.gamma2 > upper);
            }
        }
    }

    #[test]
    fn t_minus_level_values() {
        let pr = params(4, 2.0, -1.0, 0.0);
        assert!((t_minus_level(&pr).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(t_minus_level(&params(4, 2.0, 0.0, 0.0)).is_err());
        assert!(t_minus_level(&pr).unwrap() < derive(&pr).unwrap().m);
    }
}
