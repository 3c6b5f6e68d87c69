//! Simulated entropy source: a single-mode thermal state measured by a
//! balanced homodyne detector, plus the closed-form source formulas.
//!
//! Quadratures are expressed in shot-noise units, so vacuum noise has
//! variance 1. Detector noise, vacuum noise and the thermal excess are
//! independent zero-mean Gaussians whose variances add.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Result};

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Planck constant, J·s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Physical configuration of the simulated source and detector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceParams {
    /// Central wavelength λ of the filtered ASE light, meters.
    pub wavelength: f64,
    /// Optical bandpass width Δλ, meters.
    pub filter_bandwidth: f64,
    /// ASE power after the filter, watts.
    pub optical_power: f64,
    /// Overall detection efficiency η.
    pub efficiency: f64,
    /// Electrical noise of the detector in shot-noise units.
    pub detector_noise_var: f64,
    pub lo_enabled: bool,
    pub ase_enabled: bool,
}

impl Default for SourceParams {
    /// The laboratory setup: 1542 nm, 0.8 nm filter, 29 µW, η = 0.5,
    /// detector noise 0.62 SNU, LO and ASE on.
    fn default() -> Self {
        Self {
            wavelength: 1542e-9,
            filter_bandwidth: 0.8e-9,
            optical_power: 29.0e-6,
            efficiency: 0.5,
            detector_noise_var: 0.62,
            lo_enabled: true,
            ase_enabled: true,
        }
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            bail!(Domain, "wavelength must be positive, got {}", self.wavelength);
        }
        if !(self.filter_bandwidth > 0.0 && self.filter_bandwidth < self.wavelength) {
            bail!(
                Domain,
                "filter bandwidth must lie in (0, wavelength), got {}",
                self.filter_bandwidth
            );
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            bail!(Domain, "efficiency must lie in [0, 1], got {}", self.efficiency);
        }
        if !(self.optical_power >= 0.0 && self.optical_power.is_finite()) {
            bail!(Domain, "optical power must be non-negative, got {}", self.optical_power);
        }
        if !(self.detector_noise_var >= 0.0 && self.detector_noise_var.is_finite()) {
            bail!(
                Domain,
                "detector noise variance must be non-negative, got {}",
                self.detector_noise_var
            );
        }
        Ok(())
    }

    /// Optical frequency ν = c/λ.
    pub fn frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.wavelength
    }

    /// Variance of the detector output in shot-noise units for a thermal
    /// mode with mean photon number `n_mode`.
    pub fn output_variance(&self, n_mode: f64) -> Result<f64> {
        let signal = match (self.lo_enabled, self.ase_enabled) {
            (false, false) => 0.0,
            (true, false) => 1.0,
            (true, true) => quadrature_variance(n_mode)?,
            (false, true) => bail!(
                Unsupported,
                "ASE on with LO off is direct detection, not homodyne detection"
            ),
        };
        Ok(signal + self.detector_noise_var)
    }
}

/// Number of optical modes in a bandwidth Δλ around λ during a window Δt,
/// counting both polarizations: `N = 2·c·Δλ·Δt/λ²`.
pub fn mode_count(filter_bandwidth: f64, wavelength: f64, window: f64) -> Result<f64> {
    if !(filter_bandwidth > 0.0) || !(wavelength > 0.0) {
        bail!(
            Domain,
            "bandwidth and wavelength must be positive (got {filter_bandwidth}, {wavelength})"
        );
    }
    if !(window >= 0.0) {
        bail!(Domain, "time window must be non-negative, got {window}");
    }
    Ok(2.0 * SPEED_OF_LIGHT * filter_bandwidth * window / (wavelength * wavelength))
}

/// Mean photon number per mode seen by the detector, `η·P·λ³/(2·h·c²·Δλ)`.
pub fn mean_photon_number(params: &SourceParams) -> Result<f64> {
    params.validate()?;
    let p = params;
    Ok(p.efficiency * p.optical_power * (p.wavelength * p.wavelength * p.wavelength)
        / (2.0 * PLANCK * SPEED_OF_LIGHT * SPEED_OF_LIGHT * p.filter_bandwidth))
}

/// Quadrature variance of a thermal state, `2n + 1` shot-noise units.
pub fn quadrature_variance(n: f64) -> Result<f64> {
    if !(n >= 0.0) {
        bail!(Domain, "mean photon number must be non-negative, got {n}");
    }
    Ok(2.0 * n + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureSeries {
    /// Samples in shot-noise units.
    pub values: Vec<f64>,
    /// Variance the generator targeted.
    pub model_variance: f64,
}

impl QuadratureSeries {
    pub fn model_sigma(&self) -> f64 {
        libm::sqrt(self.model_variance)
    }
}

/// Seeded generator of homodyne output samples.
///
/// Successive [`fill`](Self::fill) calls continue one deterministic stream, so
/// generating in chunks gives the same samples as one large call.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    rng: ChaCha12Rng,
    sigma: f64,
    variance: f64,
}

impl QuadratureSampler {
    pub fn new(params: &SourceParams, n_mode: f64, seed: u64) -> Result<Self> {
        Self::with_stream(params, n_mode, seed, 0)
    }

    /// Independent sub-stream `stream` of the generator keyed by `seed`.
    pub fn with_stream(params: &SourceParams, n_mode: f64, seed: u64, stream: u64) -> Result<Self> {
        params.validate()?;
        let variance = params.output_variance(n_mode)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self {
            rng,
            sigma: libm::sqrt(variance),
            variance,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *v = self.sigma * z;
        }
    }
}

/// Draws `count` i.i.d. detector output samples.
pub fn sample_quadratures(
    params: &SourceParams,
    n_mode: f64,
    count: usize,
    seed: u64,
) -> Result<QuadratureSeries> {
    if count == 0 {
        bail!(Contract, "sample count must be positive");
    }
    if !(n_mode >= 0.0) {
        bail!(Domain, "mean photon number must be non-negative, got {n_mode}");
    }
    let mut sampler = QuadratureSampler::new(params, n_mode, seed)?;
    let mut values = alloc::vec![0.0; count];
    sampler.fill(&mut values);
    Ok(QuadratureSeries {
        values,
        model_variance: sampler.variance,
    })
}

/// Thermal (Bose–Einstein) photon-number distribution,
/// `P(k) = ⟨n⟩^k / (1+⟨n⟩)^(1+k)`, evaluated in log space.
pub fn bose_einstein_pmf(k: u64, mean: f64) -> Result<f64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        bail!(Domain, "mean photon number must be non-negative, got {mean}");
    }
    if mean == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if k == 0 {
        return Ok(1.0 / (1.0 + mean));
    }
    let log_p = k as f64 * log_ratio(mean) - libm::log1p(mean);
    Ok(libm::exp(log_p).clamp(0.0, 1.0))
}

/// `ln(⟨n⟩/(1+⟨n⟩))`, the log of the geometric ratio.
fn log_ratio(mean: f64) -> f64 {
    -libm::log1p(1.0 / mean)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhotonCountSeries {
    pub counts: Vec<u64>,
    /// ⟨n⟩ the counts were drawn with.
    pub mean_target: f64,
}

/// Draws photon counts from the thermal distribution by geometric inversion.
pub fn sample_photon_counts(mean: f64, count: usize, seed: u64) -> Result<PhotonCountSeries> {
    if !(mean >= 0.0) || !mean.is_finite() {
        bail!(Domain, "mean photon number must be non-negative, got {mean}");
    }
    if count == 0 {
        bail!(Contract, "sample count must be positive");
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let counts = if mean == 0.0 {
        alloc::vec![0; count]
    } else {
        let ln_q = log_ratio(mean);
        (0..count)
            .map(|_| {
                // u in (0, 1]: P(K ≥ k) = q^k  ⇒  K = ⌊ln u / ln q⌋
                let u: f64 = 1.0 - rng.random::<f64>();
                libm::floor(libm::log(u) / ln_q) as u64
            })
            .collect()
    };
    Ok(PhotonCountSeries {
        counts,
        mean_target: mean,
    })
}

/// Min-entropy of direct photon counting, `log₂(1+⟨n⟩)` bits per sample.
///
/// Evaluated as `−log₂ P(0)`, the most likely count being zero.
pub fn photon_min_entropy(mean: f64) -> Result<f64> {
    Ok(-libm::log2(bose_einstein_pmf(0, mean)?))
}
