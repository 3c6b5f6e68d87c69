//! Characterization of raw records: code histograms, min-entropy,
//! shot-noise calibration, Gaussian goodness of fit and autocorrelation.

use alloc::vec;
use alloc::vec::Vec;

use crate::acquisition::{AdcConfig, SampleRecord};
use crate::error::{bail, Result};
use crate::special::{chi2_sf, normal_cdf, normal_quantile, normal_sf};

/// Default subset size for the goodness-of-fit test. Larger samples make the
/// test sensitive to tiny systematic deviations that do not affect min-entropy.
pub const GOF_SUBSET: usize = 1000;
pub const GOF_DEFAULT_BINS: usize = 10;

/// Code-indexed histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    pub resolution_bits: u8,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn from_counts(resolution_bits: u8, counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self {
            resolution_bits,
            counts,
            total,
        }
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Codes with a nonzero count.
    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyReport {
    pub p_max: f64,
    pub h_min: f64,
    pub bits_per_raw_bit: f64,
    pub sample_count: u64,
}

impl EntropyReport {
    fn from_p_max(p_max: f64, resolution_bits: u8, sample_count: u64) -> Self {
        let h_min = -libm::log2(p_max);
        // −log₂(1) is −0.0
        let h_min = if h_min == 0.0 { 0.0 } else { h_min };
        Self {
            p_max,
            h_min,
            bits_per_raw_bit: h_min / resolution_bits as f64,
            sample_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationReport {
    pub v_total: f64,
    pub v_vacuum: f64,
    pub v_detector: f64,
    /// Total variance in shot-noise units.
    pub variance_snu: f64,
    /// Detector noise in shot-noise units.
    pub detector_snu: f64,
    /// Mean photon number implied by `variance_snu = 2n + 1`.
    pub n_inferred: f64,
}

/// One bin per ADC code.
pub fn histogram_codes(record: &SampleRecord) -> Histogram {
    let mut counts = vec![0u64; record.adc.levels() as usize];
    for &c in &record.codes {
        counts[c as usize] += 1;
    }
    Histogram {
        resolution_bits: record.adc.resolution_bits,
        counts,
        total: record.codes.len() as u64,
    }
}

/// Empirical min-entropy `−log₂ max_x Pr[X = x]`.
pub fn min_entropy(hist: &Histogram) -> Result<EntropyReport> {
    if hist.total == 0 {
        bail!(Domain, "min-entropy of an empty histogram");
    }
    let p_max = hist.max_count() as f64 / hist.total as f64;
    Ok(EntropyReport::from_p_max(p_max, hist.resolution_bits, hist.total))
}

/// Probability of each code for a Gaussian input `N(mean, sigma²)`, clipped
/// inputs landing in the end codes.
pub fn gaussian_code_probabilities(adc: &AdcConfig, mean: f64, sigma: f64) -> Result<Vec<f64>> {
    adc.validate()?;
    if !(sigma > 0.0) {
        bail!(Domain, "standard deviation must be positive, got {sigma}");
    }
    let levels = adc.levels() as usize;
    let cdf = |x: f64| normal_cdf((x - mean) / sigma);
    let sf = |x: f64| normal_sf((x - mean) / sigma);
    let mut probs = Vec::with_capacity(levels);
    for k in 0..levels {
        let lo = adc.lower_edge(k as u16);
        let hi = adc.full_scale_min + (k + 1) as f64 * adc.step();
        let p = if levels == 1 {
            1.0
        } else if k == 0 {
            cdf(hi)
        } else if k == levels - 1 {
            sf(lo)
        } else if lo >= mean {
            sf(lo) - sf(hi)
        } else {
            cdf(hi) - cdf(lo)
        };
        probs.push(p);
    }
    Ok(probs)
}

/// Model min-entropy of a Gaussian input digitized by `adc`.
pub fn gaussian_min_entropy(adc: &AdcConfig, mean: f64, sigma: f64) -> Result<EntropyReport> {
    let probs = gaussian_code_probabilities(adc, mean, sigma)?;
    let p_max = probs.iter().copied().fold(0.0, f64::max);
    Ok(EntropyReport::from_p_max(p_max, adc.resolution_bits, 0))
}

/// Normalizes a raw total variance against vacuum and detector noise.
pub fn calibrate_snu(v_total: f64, v_vacuum: f64, v_detector: f64) -> Result<CalibrationReport> {
    if !(v_detector >= 0.0) {
        bail!(Calibration, "detector variance must be non-negative, got {v_detector}");
    }
    if !(v_vacuum > v_detector) {
        bail!(
            Calibration,
            "vacuum variance {v_vacuum} does not exceed detector variance {v_detector}"
        );
    }
    if !(v_total >= v_vacuum) {
        bail!(
            Calibration,
            "total variance {v_total} is below the vacuum variance {v_vacuum}"
        );
    }
    let shot = v_vacuum - v_detector;
    let variance_snu = (v_total - v_detector) / shot;
    Ok(CalibrationReport {
        v_total,
        v_vacuum,
        v_detector,
        variance_snu,
        detector_snu: v_detector / shot,
        n_inferred: (variance_snu - 1.0) / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub degrees_of_freedom: usize,
    pub observed: Vec<u64>,
    pub expected_per_bin: f64,
    pub fitted_mean: f64,
    pub fitted_sigma: f64,
}

/// Pearson χ² test of a Gaussian with mean and variance fitted to the data.
///
/// Bins are equiprobable under the fitted Gaussian, so every bin expects
/// `len / bin_count` samples; degrees of freedom are `bin_count − 3`.
pub fn chi_square_gaussian(samples: &[f64], bin_count: usize) -> Result<GofResult> {
    if bin_count < 4 {
        bail!(Contract, "goodness of fit needs at least 4 bins, got {bin_count}");
    }
    let n = samples.len();
    let expected = n as f64 / bin_count as f64;
    if expected < 5.0 {
        bail!(
            Contract,
            "{n} samples give {expected:.2} expected per bin for {bin_count} bins (need 5)"
        );
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;
    let sigma = libm::sqrt(var);
    if !(sigma > 0.0) {
        bail!(Domain, "samples have zero variance");
    }
    let edges: Vec<f64> = (1..bin_count)
        .map(|k| mean + sigma * normal_quantile(k as f64 / bin_count as f64))
        .collect();
    let mut observed = vec![0u64; bin_count];
    for &x in samples {
        let bin = edges.partition_point(|&e| e <= x);
        observed[bin] += 1;
    }
    let statistic = observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum::<f64>();
    let dof = bin_count - 3;
    Ok(GofResult {
        statistic,
        p_value: chi2_sf(statistic, dof as f64),
        degrees_of_freedom: dof,
        observed,
        expected_per_bin: expected,
        fitted_mean: mean,
        fitted_sigma: sigma,
    })
}

/// Sample autocorrelation coefficients `r(0..=max_lag)`.
pub fn autocorrelation(samples: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    if max_lag.saturating_mul(2) >= n {
        bail!(Contract, "max lag {max_lag} must be below half the series length {n}");
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let denom: f64 = centered.iter().map(|x| x * x).sum();
    if !(denom > 0.0) {
        bail!(Domain, "autocorrelation of a constant series is undefined");
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for lag in 1..=max_lag {
        let num = dot(&centered[..n - lag], &centered[lag..]);
        out.push(num / denom);
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four partial sums let the compiler vectorize the loop.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * i + k] * b[4 * i + k];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::quantize;
    use crate::source_sim::{sample_quadratures, SourceParams};
    use alloc::string::String;
    use proptest::prelude::*;

    fn record(codes: &[u16], bits: u8) -> SampleRecord {
        let adc = AdcConfig::new(bits, 0.0, 1.0).unwrap();
        SampleRecord::new(codes.to_vec(), adc, 1.0, String::new()).unwrap()
    }

    #[test]
    fn histogram_examples() {
        let h = histogram_codes(&record(&[7; 50], 8));
        assert_eq!(h.occupied(), 1);
        assert_eq!(h.counts[7], 50);

        let mut codes = vec![10u16; 3];
        codes.extend([20u16; 7]);
        let h = histogram_codes(&record(&codes, 8));
        assert_eq!((h.counts[10], h.counts[20], h.total), (3, 7, 10));
    }

    #[test]
    fn histogram_conserves_samples() {
        let p = SourceParams::default();
        let s = sample_quadratures(&p, 481.0, 100_000, 11).unwrap();
        let adc = AdcConfig::for_sigma(8, s.model_sigma()).unwrap();
        let h = histogram_codes(&quantize(&s, &adc, 1e8).unwrap());
        assert_eq!(h.counts.iter().sum::<u64>(), 100_000);
        assert_eq!(h.total, 100_000);
    }

    #[test]
    fn min_entropy_extremes() {
        let uniform: Vec<u16> = (0..256u16).flat_map(|c| [c; 4]).collect();
        let r = min_entropy(&histogram_codes(&record(&uniform, 8))).unwrap();
        assert_eq!(r.h_min, 8.0);
        assert_eq!(r.bits_per_raw_bit, 1.0);

        let r = min_entropy(&histogram_codes(&record(&[3; 9], 8))).unwrap();
        assert_eq!(r.h_min, 0.0);
        assert_eq!(r.p_max, 1.0);

        let empty = Histogram::from_counts(8, vec![0; 256]);
        assert!(matches!(min_entropy(&empty), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn analytic_center_bin_oracle() {
        // Center bins for ±4σ at 8 bits have width σ/32; the most likely one
        // is [0, σ/32): P = Φ(1/32) − 1/2.
        let adc = AdcConfig::for_sigma(8, 1.0).unwrap();
        let r = gaussian_min_entropy(&adc, 0.0, 1.0).unwrap();
        let direct = normal_cdf(1.0 / 32.0) - 0.5;
        assert!((r.p_max - direct).abs() < 1e-15);
        assert!((r.h_min - 6.326).abs() < 1e-3, "{}", r.h_min);
        let total: f64 = gaussian_code_probabilities(&adc, 0.0, 1.0).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_examples() {
        let r = calibrate_snu(1.62, 1.62, 0.62).unwrap();
        assert_eq!(r.variance_snu, 1.0);
        assert_eq!(r.n_inferred, 0.0);

        let r = calibrate_snu(964.0, 2.0, 1.0).unwrap();
        assert_eq!(r.variance_snu, 963.0);
        assert_eq!(r.n_inferred, 481.0);

        let r = calibrate_snu(964.24, 1.62, 0.62).unwrap();
        assert!((r.variance_snu - 963.62).abs() < 1e-9);
        assert!((r.detector_snu - 0.62).abs() < 1e-12);

        assert!(matches!(calibrate_snu(5.0, 1.0, 1.0), Err(crate::Error::Calibration(_))));
        assert!(calibrate_snu(5.0, 0.5, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn calibration_is_unit_free(total in 2.0f64..1e4, vac in 1.0f64..2.0, det in 0.0f64..0.99, scale in 1e-6f64..1e6) {
            let a = calibrate_snu(total, vac, det).unwrap();
            let b = calibrate_snu(total * scale, vac * scale, det * scale).unwrap();
            prop_assert!((a.variance_snu - b.variance_snu).abs() <= 1e-9 * a.variance_snu);
        }

        #[test]
        fn min_entropy_ignores_code_labels(counts in proptest::collection::vec(0u64..50, 256), rot in 0usize..256) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let a = Histogram::from_counts(8, counts.clone());
            let mut permuted = counts;
            permuted.rotate_left(rot);
            permuted.reverse();
            let b = Histogram::from_counts(8, permuted);
            let (ra, rb) = (min_entropy(&a).unwrap(), min_entropy(&b).unwrap());
            prop_assert_eq!(ra, rb);
            prop_assert!((0.0..=8.0).contains(&ra.h_min));
        }

        #[test]
        fn autocorrelation_is_reversal_symmetric(xs in proptest::collection::vec(-100.0f64..100.0, 20..200)) {
            prop_assume!(xs.iter().any(|&x| (x - xs[0]).abs() > 1e-6));
            let lag = xs.len() / 2 - 1;
            let fwd = autocorrelation(&xs, lag).unwrap();
            let rev: Vec<f64> = xs.iter().rev().copied().collect();
            let back = autocorrelation(&rev, lag).unwrap();
            for (a, b) in fwd.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn autocorrelation_examples() {
        let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = autocorrelation(&alt, 3).unwrap();
        assert_eq!(r[0], 1.0);
        assert!((r[1] + 1.0).abs() < 2e-3);
        assert!((r[2] - 1.0).abs() < 3e-3);

        assert!(matches!(autocorrelation(&[2.0; 10], 2), Err(crate::Error::Domain(_))));
        assert!(matches!(autocorrelation(&[1.0, 2.0, 3.0, 4.0], 2), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn gof_on_bin_centroids_is_exact() {
        // Ten samples at each conditional mean of the ten equiprobable
        // standard-normal bins; conditional mean of [a, b) is
        // (φ(a) − φ(b)) / P.
        let bins = 10;
        let phi = |x: f64| libm::exp(-x * x / 2.0) / libm::sqrt(2.0 * core::f64::consts::PI);
        let edges: Vec<f64> = (0..=bins)
            .map(|k| normal_quantile(k as f64 / bins as f64))
            .collect();
        let mut xs = Vec::new();
        for k in 0..bins {
            let (a, b) = (edges[k], edges[k + 1]);
            let (pa, pb) = (if a.is_finite() { phi(a) } else { 0.0 }, if b.is_finite() { phi(b) } else { 0.0 });
            let c = (pa - pb) * bins as f64;
            xs.extend([c; 10]);
        }
        let r = chi_square_gaussian(&xs, bins).unwrap();
        assert_eq!(r.observed, vec![10; bins]);
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gof_rejects_uniform_data() {
        let mut rng_state = 0x1234_5678_u64;
        let xs: Vec<f64> = (0..1000)
            .map(|_| {
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (rng_state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let r = chi_square_gaussian(&xs, 10).unwrap();
        // Oracle: recompute the statistic from the reported counts.
        let chi: f64 = r.observed.iter().map(|&o| (o as f64 - 100.0).powi(2) / 100.0).sum();
        assert!((chi - r.statistic).abs() < 1e-9);
        assert!(r.p_value < 1e-3, "{}", r.p_value);
    }

    #[test]
    fn gof_preconditions() {
        assert!(chi_square_gaussian(&[0.0; 100], 3).is_err());
        assert!(chi_square_gaussian(&[0.0; 30], 10).is_err());
        assert!(matches!(chi_square_gaussian(&[1.0; 100], 10), Err(crate::Error::Domain(_))));
    }
}
