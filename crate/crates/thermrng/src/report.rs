//! Report documents for each command and the text summary table of a battery run.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thermrng_core::analysis::{CalibrationReport, EntropyReport, GofResult};
use thermrng_core::stattests::{BatteryReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub record: String,
    pub samples: usize,
    pub seed: u64,
    /// Photons per mode from the optical parameters.
    pub mode_photons_optics: f64,
    /// Photons per mode actually simulated.
    pub mode_photons: f64,
    /// Output variance in shot-noise units.
    pub expected_variance: f64,
    pub resolution_bits: u8,
    pub full_scale: [f64; 2],
    pub sampling_rate: f64,
    pub clipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationSummary {
    pub max_lag: usize,
    /// `r(1..=max_lag)`.
    pub values: Vec<f64>,
    pub max_abs: f64,
    pub max_abs_lag: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub record: String,
    pub samples: usize,
    pub resolution_bits: u8,
    pub histogram: Vec<u64>,
    pub entropy: EntropyReport,
    pub clipped: usize,
    /// Variance of the reconstructed input, in record units.
    pub input_variance: f64,
    pub autocorrelation: Option<AutocorrelationSummary>,
    pub goodness_of_fit: Option<GofResult>,
    pub calibration: Option<CalibrationReport>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub record: String,
    pub output: String,
    pub n_in: usize,
    pub m_out: usize,
    pub h_min_per_sample: f64,
    /// Whether `h_min_per_sample` came from the record rather than an override.
    pub h_min_measured: bool,
    pub entropy_surplus: f64,
    pub epsilon: Option<f64>,
    pub log2_epsilon: Option<f64>,
    pub forced: bool,
    pub input_samples: usize,
    pub blocks: usize,
    pub residual_bits: usize,
    pub output_bits: usize,
    pub bits_per_sample: f64,
    pub bits_per_raw_bit: f64,
    pub seconds: f64,
    pub output_mbit_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub simulate: SimulateReport,
    pub analyze: AnalyzeReport,
    pub extract: ExtractReport,
    pub battery: BatteryReport,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::NotApplicable => "n/a",
    }
}

/// Histogram columns C1..C10, uniformity P-value, proportion and test name.
/// Multi-result tests show their worst row; the `*` column marks failures.
pub fn battery_table(report: &BatteryReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} sequences of {} bits, alpha = {}",
        report.sequence_count, report.sequence_length, report.alpha
    );
    for c in 1..=10 {
        let _ = write!(s, "{:>5}", format!("C{c}"));
    }
    let _ = writeln!(s, " {:>10} {:>10}   TEST", "P-VALUE", "PROPORTION");
    for t in &report.tests {
        let Some(row) = t.worst_row() else {
            let _ = writeln!(
                s,
                "{:>50} {:>10} {:>10}   {} ({})",
                "",
                "----",
                "----",
                t.name,
                t.note.as_deref().unwrap_or("not applicable")
            );
            continue;
        };
        for c in row.histogram {
            let _ = write!(s, "{c:>5}");
        }
        let uni = row
            .uniformity_p
            .map_or_else(|| "----".to_string(), |u| format!("{u:.6}"));
        let prop = format!("{}/{}", row.pass_count, row.sequence_count);
        let mark = if t.verdict == Verdict::Fail { " *" } else { "" };
        let mut name = t.name.clone();
        if t.rows.len() > 1 {
            let _ = write!(name, " (worst of {})", t.rows.len());
        }
        if t.external {
            name.push_str(" [imported]");
        }
        let _ = writeln!(s, " {uni:>10} {prop:>10}   {name}{mark}");
    }
    if let Some(t) = report
        .tests
        .iter()
        .find_map(|t| t.worst_row().filter(|r| r.sequence_count == report.sequence_count))
    {
        let _ = writeln!(
            s,
            "minimum pass count {} of {} (formula value {:.2}); uniformity threshold {}",
            t.threshold.min_passes, t.sequence_count, t.threshold.exact, report.uniformity_alpha
        );
    }
    for t in report.tests.iter().filter(|t| t.external) {
        if let Some(r) = t.worst_row() {
            let _ = writeln!(
                s,
                "{}: {} sequences, minimum pass count {} (formula value {:.2})",
                t.name, r.sequence_count, r.threshold.min_passes, r.threshold.exact
            );
        }
    }
    let _ = writeln!(s, "battery: {}", verdict_word(report.verdict));
    s
}

pub fn simulate_text(r: &SimulateReport) -> String {
    format!(
        "wrote {} ({} samples, seed {})\n\
         photons per mode: {:.1} (optics {:.1})\n\
         expected variance: {:.2} SNU\n\
         ADC: {} bits over [{:.4}, {:.4}), {} clipped\n",
        r.record,
        r.samples,
        r.seed,
        r.mode_photons,
        r.mode_photons_optics,
        r.expected_variance,
        r.resolution_bits,
        r.full_scale[0],
        r.full_scale[1],
        r.clipped
    )
}

pub fn analyze_text(r: &AnalyzeReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}: {} samples at {} bits", r.record, r.samples, r.resolution_bits);
    let _ = writeln!(
        s,
        "p_max {:.6e}, h_min {:.4} bits/sample ({:.4} per raw bit)",
        r.entropy.p_max, r.entropy.h_min, r.entropy.bits_per_raw_bit
    );
    let _ = writeln!(s, "clipped samples: {}", r.clipped);
    if let Some(a) = &r.autocorrelation {
        let _ = writeln!(
            s,
            "autocorrelation k=1..{}: max |r| = {:.3e} at k={}",
            a.max_lag, a.max_abs, a.max_abs_lag
        );
    }
    if let Some(g) = &r.goodness_of_fit {
        let _ = writeln!(
            s,
            "Gaussian fit ({} dof): chi2 = {:.3}, p = {:.4}",
            g.degrees_of_freedom, g.statistic, g.p_value
        );
    }
    if let Some(c) = &r.calibration {
        let _ = writeln!(
            s,
            "calibration: variance {:.2} SNU, detector noise {:.3} SNU, n = {:.1}",
            c.variance_snu, c.detector_snu, c.n_inferred
        );
    }
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

pub fn extract_text(r: &ExtractReport) -> String {
    let mut s = String::new();
    let eps = match r.log2_epsilon {
        Some(l) => format!("epsilon = 2^{l:.2}"),
        None => "epsilon undefined (no entropy surplus)".to_string(),
    };
    let _ = writeln!(
        s,
        "Toeplitz {}x{}: h_min {:.4}{}, surplus {:.2} bits, {eps}{}",
        r.m_out,
        r.n_in,
        r.h_min_per_sample,
        if r.h_min_measured { " (measured)" } else { " (assumed)" },
        r.entropy_surplus,
        if r.forced { " [forced]" } else { "" }
    );
    let _ = writeln!(
        s,
        "{} samples -> {} bits ({:.4} bits/sample, {:.4} per raw bit), {} residual bits dropped",
        r.input_samples, r.output_bits, r.bits_per_sample, r.bits_per_raw_bit, r.residual_bits
    );
    let _ = writeln!(s, "wrote {} in {:.3} s ({:.1} Mbit/s)", r.output, r.seconds, r.output_mbit_per_s);
    s
}
