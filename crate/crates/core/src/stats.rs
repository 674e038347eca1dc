//! Statistical machinery shared by the detectors, attacks, and harnesses:
//! normal CDF and quantile, exact binomial tail thresholds, the one-sample
//! Kolmogorov-Smirnov statistic, and proportion confidence intervals.

use crate::{Error, Result};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

const LN_2: f64 = std::f64::consts::LN_2;
const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal quantile, absolute error below 1e-8 on (0, 1).
///
/// Acklam's rational approximation refined by one Halley step against the
/// exact CDF. The refinement matters: detection thresholds are integers, but
/// quantile embedding needs coordinate accuracy well under 1e-6.
pub fn std_normal_inv_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile argument {p} outside (0,1)")));
    }
    let x = acklam(p);
    // One Halley iteration: u = (cdf(x) - p) / pdf(x).
    let e = std_normal_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

fn acklam(p: f64) -> f64 {
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
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Exact upper-tail log-probability `ln P[Bin(t, 1/2) >= tau]`.
pub fn ln_binomial_tail_half(t: u64, tau: u64) -> f64 {
    if tau > t {
        return f64::NEG_INFINITY;
    }
    let mut ln_tail = f64::NEG_INFINITY;
    for k in (tau..=t).rev() {
        ln_tail = log_add_exp(ln_tail, ln_choose(t, k) - t as f64 * LN_2);
    }
    ln_tail
}

/// Smallest `tau` with `P[Bin(t, 1/2) >= tau] <= alpha`.
///
/// Tails are summed exactly in log space up to `t = 1e5`; above that a
/// Chernoff (Kullback-Leibler) upper bound is used, which only ever returns a
/// threshold at least as conservative as the exact one.
pub fn binomial_threshold(t: u64, alpha: f64) -> Result<u64> {
    if t == 0 {
        return Err(Error::InvalidParameter("binomial threshold needs t >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0,1)")));
    }
    let ln_alpha = alpha.ln();
    if t <= 100_000 {
        // Walk tau downward from t, accumulating the tail, and stop at the
        // first tau whose tail exceeds alpha.
        let mut ln_tail = f64::NEG_INFINITY;
        for tau in (0..=t).rev() {
            ln_tail = log_add_exp(ln_tail, ln_choose(t, tau) - t as f64 * LN_2);
            if ln_tail > ln_alpha {
                return Ok(tau + 1);
            }
        }
        // Unreachable: the tail at tau = 0 is 1 > alpha.
        Ok(0)
    } else {
        // ln P[Bin(t,1/2) >= tau] <= -t * KL(tau/t || 1/2) for tau >= t/2.
        let kl_bound = |tau: u64| -> f64 {
            let a = tau as f64 / t as f64;
            -(t as f64) * (a * (2.0 * a).ln() + (1.0 - a) * (2.0 * (1.0 - a)).ln())
        };
        let mut lo = t / 2 + 1;
        let mut hi = t;
        if kl_bound(hi) > ln_alpha {
            return Ok(t + 1);
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if kl_bound(mid) <= ln_alpha {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }
}

/// One-sample Kolmogorov-Smirnov statistic against the standard normal CDF.
pub fn ks_normal_stat(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::DegenerateInput("KS statistic of an empty sample".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = std_normal_cdf(*x);
        d = d.max((i as f64 / n - f).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Asymptotic KS critical value at significance `alpha` for sample size `n`.
///
/// `c(0.01) = 1.63`, `c(0.05) = 1.36`; rejection when the statistic exceeds
/// `c(alpha) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c / (n as f64).sqrt()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter("Wilson interval needs trials >= 1".into()));
    }
    if successes > trials {
        return Err(Error::InvalidParameter(format!(
            "successes {successes} exceed trials {trials}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence {confidence} outside (0,1)")));
    }
    let z = std_normal_inv_cdf((1.0 + confidence) / 2.0)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Normal-approximation confidence interval for a difference of two
/// independent proportions, `p1 - p2`.
pub fn two_proportion_ci(
    s1: u64,
    n1: u64,
    s2: u64,
    n2: u64,
    confidence: f64,
) -> Result<(f64, f64)> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidParameter("two-proportion CI needs nonzero trials".into()));
    }
    let z = std_normal_inv_cdf((1.0 + confidence) / 2.0)?;
    let p1 = s1 as f64 / n1 as f64;
    let p2 = s2 as f64 / n2 as f64;
    let se = (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt();
    let diff = p1 - p2;
    Ok((diff - z * se, diff + z * se))
}

/// First `x` (by linear interpolation) at which a weakly increasing sampled
/// curve reaches `target`; `None` if it never does.
pub fn crossing_point(xs: &[f64], ys: &[f64], target: f64) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if ys.is_empty() {
        return None;
    }
    if ys[0] >= target {
        return Some(xs[0]);
    }
    for i in 1..ys.len() {
        if ys[i] >= target {
            let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
            if y1 == y0 {
                return Some(x1);
            }
            return Some(x0 + (x1 - x0) * (target - y0) / (y1 - y0));
        }
    }
    None
}
