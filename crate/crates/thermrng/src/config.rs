//! TOML pipeline configuration. Every section is optional; command-line flags
//! override individual values after loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thermrng_core::acquisition::{AdcConfig, DEFAULT_RANGE_SIGMAS};
use thermrng_core::extractor::{DEFAULT_M_OUT, DEFAULT_N_IN};
use thermrng_core::source_sim::{mean_photon_number, SourceParams};
use thermrng_core::stattests::{BatteryConfig, TestKind};

use crate::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub wavelength_nm: f64,
    pub bandwidth_nm: f64,
    pub power_uw: f64,
    pub efficiency: f64,
    /// Detector electrical noise, shot-noise units.
    pub detector_noise: f64,
    pub lo: bool,
    pub ase: bool,
    /// Overrides the photon number computed from the optics.
    pub mode_photons: Option<f64>,
}

impl Default for SourceSection {
    fn default() -> Self {
        let p = SourceParams::default();
        Self {
            wavelength_nm: p.wavelength * 1e9,
            bandwidth_nm: p.filter_bandwidth * 1e9,
            power_uw: p.optical_power * 1e6,
            efficiency: p.efficiency,
            detector_noise: p.detector_noise_var,
            lo: p.lo_enabled,
            ase: p.ase_enabled,
            mode_photons: None,
        }
    }
}

impl SourceSection {
    pub fn params(&self) -> SourceParams {
        SourceParams {
            wavelength: self.wavelength_nm * 1e-9,
            filter_bandwidth: self.bandwidth_nm * 1e-9,
            optical_power: self.power_uw * 1e-6,
            efficiency: self.efficiency,
            detector_noise_var: self.detector_noise,
            lo_enabled: self.lo,
            ase_enabled: self.ase,
        }
    }

    /// Photon number actually simulated.
    pub fn mode_photons(&self) -> Result<f64, AppError> {
        let params = self.params();
        params.validate()?;
        match self.mode_photons {
            Some(n) if !(n >= 0.0 && n.is_finite()) => {
                Err(AppError::Usage(format!("mode_photons must be non-negative, got {n}")))
            }
            Some(n) => Ok(n),
            None => Ok(mean_photon_number(&params)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionSection {
    pub bits: u8,
    /// Full scale `±range_sigmas·σ` unless `full_scale` is given.
    pub range_sigmas: f64,
    pub full_scale: Option<[f64; 2]>,
    pub rate_hz: f64,
    /// Samples to simulate; `pipeline` picks enough for the battery when absent.
    pub count: Option<usize>,
    pub seed: u64,
}

impl Default for AcquisitionSection {
    fn default() -> Self {
        Self {
            bits: 8,
            range_sigmas: DEFAULT_RANGE_SIGMAS,
            full_scale: None,
            rate_hz: 100e6,
            count: None,
            seed: 1,
        }
    }
}

impl AcquisitionSection {
    pub const DEFAULT_COUNT: usize = 1_000_000;

    pub fn adc(&self, sigma: f64) -> Result<AdcConfig, AppError> {
        if !(self.range_sigmas > 0.0) && self.full_scale.is_none() {
            return Err(AppError::Usage("range_sigmas must be positive".into()));
        }
        Ok(match self.full_scale {
            Some([lo, hi]) => AdcConfig::new(self.bits, lo, hi)?,
            None => AdcConfig::symmetric(self.bits, sigma, self.range_sigmas)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorSection {
    pub n: usize,
    pub m: usize,
    /// Raw seed bytes; generated from `seed` when absent.
    pub seed_file: Option<PathBuf>,
    pub seed: u64,
    /// Min-entropy per sample assumed for the security budget; measured when absent.
    pub h_min: Option<f64>,
}

impl Default for ExtractorSection {
    fn default() -> Self {
        Self {
            n: DEFAULT_N_IN,
            m: DEFAULT_M_OUT,
            seed_file: None,
            seed: 2,
            h_min: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportSection {
    pub name: String,
    #[serde(default)]
    pub label: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySection {
    pub sequences: usize,
    pub length: usize,
    pub alpha: f64,
    pub uniformity_alpha: f64,
    pub tests: Vec<String>,
    pub block_frequency_m: usize,
    pub approximate_entropy_m: usize,
    pub serial_m: usize,
    pub import: Vec<ImportSection>,
}

impl Default for BatterySection {
    fn default() -> Self {
        let c = BatteryConfig::default();
        Self {
            sequences: 100,
            length: 1_000_000,
            alpha: c.alpha,
            uniformity_alpha: c.uniformity_alpha,
            tests: Vec::new(),
            block_frequency_m: c.block_frequency_block,
            approximate_entropy_m: c.approximate_entropy_m,
            serial_m: c.serial_m,
            import: Vec::new(),
        }
    }
}

impl BatterySection {
    pub fn battery_config(&self) -> Result<BatteryConfig, AppError> {
        let tests = if self.tests.is_empty() {
            TestKind::ALL.to_vec()
        } else {
            self.tests
                .iter()
                .map(|t| {
                    TestKind::from_name(t).ok_or_else(|| AppError::Usage(format!("unknown test {t:?}")))
                })
                .collect::<Result<_, _>>()?
        };
        let c = BatteryConfig {
            tests,
            alpha: self.alpha,
            uniformity_alpha: self.uniformity_alpha,
            block_frequency_block: self.block_frequency_m,
            approximate_entropy_m: self.approximate_entropy_m,
            serial_m: self.serial_m,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("thermrng-out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub source: SourceSection,
    pub acquisition: AcquisitionSection,
    pub extractor: ExtractorSection,
    pub battery: BatterySection,
    pub output: OutputSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))?;
        // Relative paths inside a config resolve against its directory.
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            if let Some(p) = cfg.extractor.seed_file.as_mut() {
                fix(p);
            }
            for imp in &mut cfg.battery.import {
                fix(&mut imp.path);
            }
            fix(&mut cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), AppError> {
        self.source.mode_photons()?;
        if self.acquisition.count == Some(0) {
            return Err(AppError::Usage("sample count must be positive".into()));
        }
        if !(self.acquisition.rate_hz > 0.0) {
            return Err(AppError::Usage("sampling rate must be positive".into()));
        }
        self.acquisition.adc(1.0)?;
        self.battery.battery_config()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_lab_setup() {
        let c = PipelineConfig::from_toml("").unwrap();
        let (got, lab) = (c.source.params(), SourceParams::default());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        assert!(close(got.wavelength, lab.wavelength) && close(got.filter_bandwidth, lab.filter_bandwidth));
        assert!(close(got.optical_power, lab.optical_power) && got.efficiency == lab.efficiency);
        let n = c.source.mode_photons().unwrap();
        assert!((549.0..=561.0).contains(&n), "{n}");
        c.validate().unwrap();
    }

    #[test]
    fn round_trip_and_unknown_keys() {
        let mut c = PipelineConfig::default();
        c.source.mode_photons = Some(481.0);
        c.battery.tests = vec!["Frequency".into(), "fft".into()];
        let back = PipelineConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.battery.battery_config().unwrap().tests, [TestKind::Frequency, TestKind::Fft]);
        assert!(PipelineConfig::from_toml("[source]\ncolour = 1\n").is_err());
        assert!(PipelineConfig::from_toml("[battery]\ntests = [\"Nope\"]\n")
            .unwrap()
            .validate()
            .is_err());
    }
}
