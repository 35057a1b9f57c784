//! Student-t distribution via the regularized incomplete beta function.

use core::f64::consts::PI;

use crate::error::{OcrError, Result};

const CF_MAX_ITER: usize = 5000;
const CF_EPS: f64 = 1e-15;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return libm::log(PI / libm::sin(PI * x)) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * libm::log(2.0 * PI) + (x + 0.5) * libm::log(t) - t + libm::log(a)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn betainc(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(OcrError::InvalidArgument("incomplete beta outside its domain"));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - betainc_cf(b, a, 1.0 - x)?)
    } else {
        betainc_cf(a, b, x)
    }
}

/// Continued fraction with the modified Lentz recurrence.
fn betainc_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let prefix = libm::exp(a * libm::log(x) + b * libm::log1p(-x) - ln_beta(a, b)) / a;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(prefix * h);
        }
    }
    Err(OcrError::NoConvergence { iterations: CF_MAX_ITER })
}

/// Upper tail `P(T > t)` for `t >= 0`.
fn t_upper_tail(t: f64, df: f64) -> Result<f64> {
    debug_assert!(t >= 0.0);
    let x = df / (df + t * t);
    Ok(0.5 * betainc(0.5 * df, 0.5, x)?)
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(OcrError::InvalidArgument("degrees of freedom must be positive"));
    }
    if t.is_nan() {
        return Err(OcrError::NonFinite);
    }
    let tail = t_upper_tail(t.abs(), df)?;
    Ok(if t >= 0.0 { 1.0 - tail } else { tail })
}

/// Two-sided p-value `P(|T| >= |t|)`.
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(OcrError::InvalidArgument("degrees of freedom must be positive"));
    }
    Ok((2.0 * t_upper_tail(t.abs(), df)?).min(1.0))
}

fn t_pdf(t: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * libm::log(df * PI);
    libm::exp(ln_norm - 0.5 * (df + 1.0) * libm::log1p(t * t / df))
}

/// Quantile of Student's t, by safeguarded Newton iteration on the CDF.
pub fn t_quantile(df: f64, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(OcrError::InvalidProbability(prob));
    }
    if !(df > 0.0) {
        return Err(OcrError::InvalidArgument("degrees of freedom must be positive"));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    let (tail, sign) = if prob > 0.5 { (1.0 - prob, 1.0) } else { (prob, -1.0) };

    // bracket t in [lo, hi] with upper_tail(lo) >= tail > upper_tail(hi)
    let mut lo = 0.0;
    let mut hi = normal_quantile(1.0 - tail).max(1.0);
    while t_upper_tail(hi, df)? > tail {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(OcrError::NoConvergence { iterations: 0 });
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t_upper_tail(t, df)? - tail;
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if f.abs() <= 1e-15 * tail.max(1e-300) || (hi - lo) <= 1e-14 * hi {
            return Ok(sign * t);
        }
        // d(upper_tail)/dt = -pdf
        let step = f / t_pdf(t, df);
        let next = t + step;
        t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Ok(sign * t)
}

/// Standard normal quantile (Acklam's rational approximation, relative
/// error below 1.2e-9). Used as a starting point and for large-sample
/// reference values.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}
