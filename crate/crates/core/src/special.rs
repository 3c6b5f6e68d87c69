//! Special functions needed by the statistical tests.

use core::f64::consts::FRAC_1_SQRT_2;

pub use libm::erfc;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 - Φ(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of the standard normal CDF.
///
/// Rational approximation (Acklam) followed by one Halley step against
/// `erfc`, which brings the result to near machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e+02,
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

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let e = normal_cdf(x) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
///
/// Same role as `igamc` in the reference test-suite sources. Series expansion
/// below `x < a + 1`, Lentz continued fraction above.
pub fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if a <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_fraction(a, x)
    }
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn igam(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_fraction(a, x)
    }
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_sf(statistic: f64, dof: f64) -> f64 {
    igamc(dof / 2.0, statistic / 2.0)
}

fn log_prefactor(a: f64, x: f64) -> f64 {
    a * libm::log(x) - x - libm::lgamma(a)
}

fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    (sum * libm::exp(log_prefactor(a, x))).clamp(0.0, 1.0)
}

fn upper_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (libm::exp(log_prefactor(a, x)) * h).clamp(0.0, 1.0)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// `x·ln x` with the `0·ln 0 = 0` convention.
#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * libm::log(x)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn igamc_integer_shape_matches_poisson_sum() {
        // Q(k, x) = e^{-x} Σ_{j<k} x^j / j!
        for &k in &[1u32, 2, 5, 10] {
            for &x in &[0.3, 1.0, 4.0, 12.0, 30.0] {
                let mut term = 1.0;
                let mut sum = 0.0;
                for j in 0..k {
                    if j > 0 {
                        term *= x / j as f64;
                    }
                    sum += term;
                }
                let expect = libm::exp(-x) * sum;
                let got = igamc(k as f64, x);
                assert!(close(got, expect, 1e-13 * expect.max(1e-300) + 1e-15), "k={k} x={x}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn igamc_half_shape_is_erfc() {
        // Q(1/2, x) = erfc(√x)
        for &x in &[0.01, 0.5, 1.0, 2.0, 7.5, 40.0] {
            let expect = erfc(libm::sqrt(x));
            assert!(close(igamc(0.5, x), expect, 1e-13), "x={x}");
        }
    }

    #[test]
    fn igam_and_igamc_are_complements() {
        for &(a, x) in &[(4.5, 3.52), (0.5, 0.1), (100.0, 90.0), (3.0, 10.0)] {
            assert!(close(igam(a, x) + igamc(a, x), 1.0, 1e-14));
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.77, 0.975, 0.999_999] {
            let x = normal_quantile(p);
            assert!(close(normal_cdf(x), p, 1e-15 + p * 1e-13), "p={p}");
        }
        assert!(close(normal_quantile(0.975), 1.959_963_984_540_054, 1e-12));
        assert_eq!(normal_quantile(0.5), 0.0);
    }
}
