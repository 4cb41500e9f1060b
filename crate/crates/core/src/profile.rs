use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::Params;
use crate::numerics::spow;

/// A sampled radial solution: values, derivatives and the flux `r^{N−1}|u'|^{p−2}u'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du_dr: Vec<f64>,
    pub flux: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, u: Vec<f64>, du_dr: Vec<f64>, flux: Vec<f64>) -> Result<Self> {
        let n = r.len();
        if u.len() != n || du_dr.len() != n || flux.len() != n {
            return Err(Error::InsufficientData("profile columns have different lengths".into()));
        }
        if r.first().is_some_and(|&r0| !(r0 > 0.0)) || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InsufficientData("radii must be positive and strictly increasing".into()));
        }
        Ok(RadialProfile { r, u, du_dr, flux })
    }

    /// Builds a profile, computing the flux from `u'`.
    pub fn from_values(params: &Params, r: Vec<f64>, u: Vec<f64>, du_dr: Vec<f64>) -> Result<Self> {
        let flux = r
            .iter()
            .zip(&du_dr)
            .map(|(&r, &d)| r.powf(params.nf() - 1.0) * spow(d, params.p - 1.0))
            .collect();
        RadialProfile::new(r, u, du_dr, flux)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Logarithmic steepness `−r u'/u` at every sample.
    pub fn steepness(&self) -> Vec<f64> {
        self.r
            .iter()
            .zip(&self.u)
            .zip(&self.du_dr)
            .map(|((&r, &u), &d)| -r * d / u)
            .collect()
    }

    /// `w = −r^{p−1}|u'|^{p−2}u'/u^{p−1}` at every sample.
    pub fn w(&self, p: f64) -> Vec<f64> {
        self.steepness().into_iter().map(|h| spow(h, p - 1.0)).collect()
    }

    /// Radius at which the steepness crosses `level`, by inverse interpolation of `ln r`
    /// against the steepness on up to eight samples around the crossing. Assumes the
    /// steepness increases with `r`.
    pub fn steepness_crossing(&self, level: f64) -> Option<f64> {
        const NODES: usize = 8;
        let h = self.steepness();
        let n = h.len();
        let i = (0..n.saturating_sub(1)).find(|&i| h[i] <= level && level < h[i + 1])?;
        let lo = (i + 1).saturating_sub(NODES / 2);
        let hi = (lo + NODES).min(n);
        let lo = hi.saturating_sub(NODES);
        let xs = &h[lo..hi];
        let ys: Vec<f64> = self.r[lo..hi].iter().map(|r| r.ln()).collect();
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            let t = (level - h[i]) / (h[i + 1] - h[i]);
            return Some((ys[i - lo] + t * (ys[i - lo + 1] - ys[i - lo])).exp());
        }
        let mut acc = 0.0;
        for j in 0..xs.len() {
            let mut l = 1.0;
            for m in 0..xs.len() {
                if m != j {
                    l *= (level - xs[m]) / (xs[j] - xs[m]);
                }
            }
            acc += l * ys[j];
        }
        Some(acc.exp())
    }

    /// Argmax of `r^δ u(r)`, where the steepness equals `δ`.
    pub fn argmax_radius(&self, delta: f64) -> Option<f64> {
        self.steepness_crossing(delta)
    }
}
