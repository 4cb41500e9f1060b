//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate falls below `max(abs_tol, rel_tol·|I|)`. Rules never sample the
//! endpoints, so integrands with removable or integrable endpoint singularities
//! can be passed directly as long as they are finite in the interior.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions {
            abs_tol: tol,
            rel_tol: tol,
            ..Default::default()
        }
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = 0.0;
    let mut kronrod = WGK[10] * fc;
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_val = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_val > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_val);
    }
    (value, err)
}

/// Integrates `f` over `[a, b]` (either orientation).
pub fn integrate<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value0, error0) = kronrod21(&f, a, b);
    let mut panels = vec![Panel {
        a,
        b,
        value: value0,
        error: error0,
    }];
    let mut evaluations = 21;
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature {
                a,
                b,
                error: f64::INFINITY,
                subdivisions: panels.len(),
            });
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
            });
        }
        // Bisect the worst panel that is still resolvable in floating point.
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                let m = 0.5 * (p.a + p.b);
                (p.b - p.a).abs() > 1e3 * f64::EPSILON * p.a.abs().max(p.b.abs()).max(f64::MIN_POSITIVE)
                    && m != p.a
                    && m != p.b
            })
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            // Every remaining panel is at roundoff resolution; the estimate is as good as it gets.
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
            });
        };
        if panels.len() >= opts.max_subdivisions {
            return Err(Error::Quadrature {
                a,
                b,
                error: err,
                subdivisions: panels.len(),
            });
        }
        let p = panels.swap_remove(i);
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = kronrod21(&f, p.a, m);
        let (v2, e2) = kronrod21(&f, m, p.b);
        evaluations += 42;
        panels.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        panels.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
    }
}

/// Integrates `F(x)` over `[z, z + len]` (`len` of either sign) where `F` behaves like
/// `|x − z|^(p−2)` times a smooth function near `z`.
///
/// The substitution `x = z + len·v^(1/(p−1))` turns that singular (p < 2) or
/// cusp-like (p > 2) factor into a bounded, smooth integrand in `v ∈ [0, 1]`.
/// `f` receives both `x` and the exact offset `x − z`, which may be far below the
/// resolution of `x` itself.
pub fn integrate_power_endpoint<F>(f: F, z: f64, len: f64, p: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64, f64) -> f64,
{
    let m = 1.0 / (p - 1.0);
    let g = |v: f64| {
        let d = len * v.powf(m);
        f(z + d, d) * len * m * v.powf(m - 1.0)
    };
    integrate(g, 0.0, 1.0, opts)
}
