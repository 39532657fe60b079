//! Standard-normal helpers used by the Gaussian perturbation and the Parzen
//! density machinery: pdf, cdf (via a rational erf approximation), and the
//! inverse cdf (Acklam's algorithm). All pure functions, so results are
//! reproducible across platforms.

use std::f64::consts::{PI, SQRT_2};

/// Error function, Abramowitz & Stegun 7.1.26 (max error ~1.5e-7).
pub fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal cumulative distribution.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / SQRT_2))
}

/// Inverse standard normal cdf (Acklam's rational approximation,
/// relative error ~1.15e-9). `p` is clamped away from 0 and 1.
pub fn norm_ppf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let p = p.clamp(1e-300, 1.0 - 1e-16);
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

/// Density of a normal truncated to [low, high], evaluated at `x`.
/// Zero outside the interval; the mass inside is renormalized.
pub fn truncated_norm_pdf(x: f64, mean: f64, sigma: f64, low: f64, high: f64) -> f64 {
    if x < low || x > high {
        return 0.0;
    }
    let z_mass = norm_cdf((high - mean) / sigma) - norm_cdf((low - mean) / sigma);
    if z_mass <= 0.0 {
        // Degenerate truncation window; fall back to uniform on [low, high].
        return 1.0 / (high - low);
    }
    norm_pdf((x - mean) / sigma) / (sigma * z_mass)
}

/// Draw from a normal truncated to [low, high] by inverse-cdf sampling of the
/// uniform variate `u` in [0, 1).
pub fn truncated_norm_sample(u: f64, mean: f64, sigma: f64, low: f64, high: f64) -> f64 {
    let lo = norm_cdf((low - mean) / sigma);
    let hi = norm_cdf((high - mean) / sigma);
    let p = lo + u * (hi - lo);
    (mean + sigma * norm_ppf(p)).clamp(low, high)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_points() {
        // Tolerances match the approximation's ~1.5e-7 max error.
        assert!((erf(0.0)).abs() < 1e-8);
        assert!((erf(1.0) - 0.8427007929).abs() < 1e-6);
        assert!((erf(-1.0) + 0.8427007929).abs() < 1e-6);
        assert!((erf(3.0) - 0.9999779095).abs() < 1e-6);
    }

    #[test]
    fn cdf_reference_points() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-9);
        assert!((norm_cdf(1.96) - 0.9750021).abs() < 1e-6);
        assert!((norm_cdf(-1.96) - 0.0249979).abs() < 1e-6);
    }

    #[test]
    fn ppf_inverts_cdf() {
        for &p in &[0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999] {
            let x = norm_ppf(p);
            assert!((norm_cdf(x) - p).abs() < 1e-6, "p={p}, x={x}");
        }
        assert!((norm_ppf(0.975) - 1.959964).abs() < 1e-4);
    }

    #[test]
    fn truncated_pdf_is_zero_outside() {
        assert_eq!(truncated_norm_pdf(-0.1, 0.5, 0.2, 0.0, 1.0), 0.0);
        assert_eq!(truncated_norm_pdf(1.1, 0.5, 0.2, 0.0, 1.0), 0.0);
        assert!(truncated_norm_pdf(0.5, 0.5, 0.2, 0.0, 1.0) > 0.0);
    }

    #[test]
    fn truncated_sample_stays_in_bounds() {
        for i in 0..100 {
            let u = i as f64 / 100.0;
            let x = truncated_norm_sample(u, 0.9, 2.0, 0.0, 1.0);
            assert!((0.0..=1.0).contains(&x), "u={u} -> {x}");
        }
    }
}
