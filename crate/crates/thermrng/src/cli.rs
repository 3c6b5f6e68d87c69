//! Subcommands `simulate`, `analyze`, `extract`, `battery` and `pipeline`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thermrng_core::acquisition::SampleRecord;
use thermrng_core::analysis::{
    autocorrelation, calibrate_snu, chi_square_gaussian, histogram_codes, min_entropy, GOF_DEFAULT_BINS, GOF_SUBSET,
};
use thermrng_core::extractor::{entropy_surplus, epsilon_for, extract_stream, ToeplitzSpec};
use thermrng_core::source_sim::mean_photon_number;
use thermrng_core::stattests::BatteryReport;

use crate::bitfile::{read_bit_files, read_p_values, read_seed, write_bits, write_bits_to};
use crate::config::{AcquisitionSection, ImportSection, PipelineConfig};
use crate::parallel::run_battery_on_stream;
use crate::pipeline::simulate_codes;
use crate::record::{load_record, save_record};
use crate::report::{
    analyze_text, battery_table, extract_text, simulate_text, to_json, AnalyzeReport, AutocorrelationSummary,
    ExtractReport, Format, PipelineReport, SimulateReport,
};
use crate::{AppError, ExitCode};

#[derive(Debug, Parser)]
#[command(name = "thermrng", version, about = "Thermal-light homodyne random number generator toolkit")]
pub struct Cli {
    /// TOML configuration; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate and digitize homodyne samples into a record file.
    Simulate(SimulateArgs),
    /// Histogram, min-entropy, autocorrelation and optional calibration of a record.
    Analyze(AnalyzeArgs),
    /// Toeplitz-hash a record into packed output bits.
    Extract(ExtractArgs),
    /// Run the statistical battery over bit files.
    Battery(BatteryArgs),
    /// simulate → analyze → extract → battery from one configuration.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output record path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub bits: Option<u8>,
    #[arg(long)]
    pub range_sigmas: Option<f64>,
    /// Explicit ADC range, e.g. `--full-scale=-60,60`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub full_scale: Option<Vec<f64>>,
    #[arg(long)]
    pub rate_hz: Option<f64>,
    /// Override the photon number per mode computed from the optics.
    #[arg(long)]
    pub mode_photons: Option<f64>,
    #[arg(long)]
    pub detector_noise: Option<f64>,
    #[arg(long)]
    pub efficiency: Option<f64>,
    #[arg(long)]
    pub power_uw: Option<f64>,
    #[arg(long)]
    pub wavelength_nm: Option<f64>,
    #[arg(long)]
    pub bandwidth_nm: Option<f64>,
    /// Local oscillator on or off.
    #[arg(long)]
    pub lo: Option<bool>,
    /// ASE source on or off.
    #[arg(long)]
    pub ase: Option<bool>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub record: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub max_lag: usize,
    /// Chi-square Gaussian fit on the first 1000 samples.
    #[arg(long)]
    pub gof: bool,
    #[arg(long, default_value_t = GOF_DEFAULT_BINS)]
    pub gof_bins: usize,
    /// Record taken with the ASE source off (LO only).
    #[arg(long, requires = "dark")]
    pub vacuum: Option<PathBuf>,
    /// Record taken with LO and ASE off.
    #[arg(long, requires = "vacuum")]
    pub dark: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    pub record: PathBuf,
    /// Output bit file; `-` writes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Raw seed bytes for the Toeplitz matrix.
    #[arg(long)]
    pub seed_file: Option<PathBuf>,
    /// Generator seed for the Toeplitz matrix when no seed file is given.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Min-entropy per sample to budget with instead of the measured value.
    #[arg(long)]
    pub h_min: Option<f64>,
    /// Extract even when the min-entropy does not cover the output.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct BatteryArgs {
    #[arg(required = true)]
    pub bits: Vec<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequences: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated test names.
    #[arg(long, value_delimiter = ',')]
    pub tests: Option<Vec<String>>,
    /// External p-values as `NAME[:LABEL]=FILE`, one p-value per line.
    #[arg(long = "import")]
    pub imports: Vec<String>,
    /// Accepted for symmetry with the other commands; the battery is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Configuration file (same as the global `--config`).
    pub config_file: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args`, runs the command and writes the report to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<ExitCode, AppError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                stdout
                    .write_all(e.render().to_string().as_bytes())
                    .map_err(|e| AppError::io(Path::new("<stdout>"), e))?;
                return Ok(ExitCode::Pass);
            }
            _ => return Err(AppError::Usage(e.render().to_string())),
        },
    };
    execute(cli, stdout)
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<ExitCode, AppError> {
    let config_path = match &cli.command {
        Command::Pipeline(p) => p.config_file.clone().or(cli.config.clone()),
        _ => cli.config.clone(),
    };
    let mut config = match &config_path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let fmt = cli.format;
    let out = |s: &mut dyn Write, text: String| -> Result<(), AppError> {
        s.write_all(text.as_bytes())
            .map_err(|e| AppError::io(Path::new("<stdout>"), e))
    };
    match cli.command {
        Command::Simulate(a) => {
            apply_simulate_flags(&mut config, &a)?;
            let path = a.out.unwrap_or_else(|| PathBuf::from("record.trng"));
            let count = config.acquisition.count.unwrap_or(AcquisitionSection::DEFAULT_COUNT);
            let r = simulate(&config, count, &path)?;
            out(stdout, render(fmt, &r, simulate_text))?;
            Ok(ExitCode::Pass)
        }
        Command::Analyze(a) => {
            let r = analyze(&a)?;
            let text = render(fmt, &r, analyze_text);
            if let Some(p) = &a.out {
                write_text(p, &text)?;
            }
            out(stdout, text)?;
            Ok(ExitCode::Pass)
        }
        Command::Extract(a) => {
            apply_extract_flags(&mut config, &a);
            let record = load_record(&a.record)?;
            let to_stdout = a.out.as_deref() == Some(Path::new("-"));
            let path = a.out.clone().unwrap_or_else(|| PathBuf::from("extracted.bin"));
            let (r, bits) = extract(&config, &record, &a.record, &path, a.force)?;
            if to_stdout {
                write_bits_to(&mut *stdout, &bits).map_err(|e| AppError::io(Path::new("<stdout>"), e))?;
                eprint!("{}", render(fmt, &r, extract_text));
            } else {
                write_bits(&path, &bits)?;
                out(stdout, render(fmt, &r, extract_text))?;
            }
            Ok(ExitCode::Pass)
        }
        Command::Battery(a) => {
            apply_battery_flags(&mut config, &a)?;
            let report = battery(&config, &a.bits)?;
            let text = render(fmt, &report, battery_table);
            if let Some(p) = &a.out {
                write_text(p, &text)?;
            }
            out(stdout, text)?;
            Ok(if report.passed() {
                ExitCode::Pass
            } else {
                ExitCode::StatisticalFailure
            })
        }
        Command::Pipeline(a) => {
            if let Some(d) = a.out {
                config.output.dir = d;
            }
            if let Some(s) = a.seed {
                config.acquisition.seed = s;
            }
            let r = pipeline(&config)?;
            let text = match fmt {
                Format::Json => to_json(&r),
                Format::Text => [
                    simulate_text(&r.simulate),
                    analyze_text(&r.analyze),
                    extract_text(&r.extract),
                    battery_table(&r.battery),
                ]
                .join("\n"),
            };
            out(stdout, text)?;
            Ok(if r.battery.passed() {
                ExitCode::Pass
            } else {
                ExitCode::StatisticalFailure
            })
        }
    }
}

fn render<T: serde::Serialize>(fmt: Format, value: &T, text: fn(&T) -> String) -> String {
    match fmt {
        Format::Json => {
            let mut s = to_json(value);
            s.push('\n');
            s
        }
        Format::Text => text(value),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn apply_simulate_flags(c: &mut PipelineConfig, a: &SimulateArgs) -> Result<(), AppError> {
    let s = &mut c.source;
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(s.detector_noise, a.detector_noise);
    set!(s.efficiency, a.efficiency);
    set!(s.power_uw, a.power_uw);
    set!(s.wavelength_nm, a.wavelength_nm);
    set!(s.bandwidth_nm, a.bandwidth_nm);
    set!(s.lo, a.lo);
    set!(s.ase, a.ase);
    if a.mode_photons.is_some() {
        s.mode_photons = a.mode_photons;
    }
    let q = &mut c.acquisition;
    set!(q.seed, a.seed);
    set!(q.bits, a.bits);
    set!(q.range_sigmas, a.range_sigmas);
    set!(q.rate_hz, a.rate_hz);
    if let Some(n) = a.count {
        q.count = Some(n);
    }
    if let Some(fs) = &a.full_scale {
        let [lo, hi] = fs[..] else {
            return Err(AppError::Usage("--full-scale expects MIN,MAX".into()));
        };
        q.full_scale = Some([lo, hi]);
    }
    c.validate()
}

fn apply_extract_flags(c: &mut PipelineConfig, a: &ExtractArgs) {
    let e = &mut c.extractor;
    if let Some(n) = a.n {
        e.n = n;
    }
    if let Some(m) = a.m {
        e.m = m;
    }
    if let Some(s) = a.seed {
        e.seed = s;
        e.seed_file = None;
    }
    if a.seed_file.is_some() {
        e.seed_file = a.seed_file.clone();
    }
    if a.h_min.is_some() {
        e.h_min = a.h_min;
    }
}

fn parse_import(spec: &str) -> Result<ImportSection, AppError> {
    // Labels such as `x=+1` may contain '=', so the path starts after the last one.
    let (head, path) = spec
        .rsplit_once('=')
        .ok_or_else(|| AppError::Usage(format!("--import expects NAME[:LABEL]=FILE, got {spec:?}")))?;
    let (name, label) = head.split_once(':').unwrap_or((head, ""));
    if name.is_empty() {
        return Err(AppError::Usage(format!("--import {spec:?} has no test name")));
    }
    Ok(ImportSection {
        name: name.to_string(),
        label: label.to_string(),
        path: PathBuf::from(path),
    })
}

fn apply_battery_flags(c: &mut PipelineConfig, a: &BatteryArgs) -> Result<(), AppError> {
    let b = &mut c.battery;
    if let Some(n) = a.sequences {
        b.sequences = n;
    }
    if let Some(n) = a.length {
        b.length = n;
    }
    if let Some(x) = a.alpha {
        b.alpha = x;
    }
    if let Some(t) = &a.tests {
        b.tests = t.clone();
    }
    for spec in &a.imports {
        b.import.push(parse_import(spec)?);
    }
    b.battery_config()?;
    Ok(())
}

/// Writes a simulated record and summarizes it.
pub fn simulate(config: &PipelineConfig, count: usize, path: &Path) -> Result<SimulateReport, AppError> {
    config.validate()?;
    if count == 0 {
        return Err(AppError::Usage("sample count must be positive".into()));
    }
    let params = config.source.params();
    let optics = mean_photon_number(&params)?;
    let n_mode = config.source.mode_photons()?;
    let variance = params.output_variance(n_mode)?;
    let q = &config.acquisition;
    let adc = q.adc(variance.sqrt())?;
    let codes = simulate_codes(&params, n_mode, &adc, count, q.seed)?;
    let record = SampleRecord::new(codes, adc, q.rate_hz, format!("simulated seed {}", q.seed))?;
    save_record(path, &record)?;
    Ok(SimulateReport {
        record: path.display().to_string(),
        samples: count,
        seed: q.seed,
        mode_photons_optics: optics,
        mode_photons: n_mode,
        expected_variance: variance,
        resolution_bits: adc.resolution_bits,
        full_scale: [adc.full_scale_min, adc.full_scale_max],
        sampling_rate: q.rate_hz,
        clipped: record.clipped(),
    })
}

/// Histogram, min-entropy, autocorrelation, optional fit and calibration.
pub fn analyze(a: &AnalyzeArgs) -> Result<AnalyzeReport, AppError> {
    let record = load_record(&a.record)?;
    let mut report = analyze_record(&record, &a.record.display().to_string(), a.max_lag, a.gof.then_some(a.gof_bins))?;
    if let (Some(v), Some(d)) = (&a.vacuum, &a.dark) {
        let vac = load_record(v)?;
        let dark = load_record(d)?;
        if vac.adc != record.adc || dark.adc != record.adc {
            report
                .notes
                .push("calibration records use a different ADC range; variances compared in input units".into());
        }
        report.calibration = Some(calibrate_snu(
            record.input_variance(),
            vac.input_variance(),
            dark.input_variance(),
        )?);
    }
    Ok(report)
}

pub fn analyze_record(
    record: &SampleRecord,
    name: &str,
    max_lag: usize,
    gof_bins: Option<usize>,
) -> Result<AnalyzeReport, AppError> {
    let hist = histogram_codes(record);
    let entropy = min_entropy(&hist)?;
    let mut notes = Vec::new();
    let autocorrelation = if max_lag == 0 {
        None
    } else {
        match autocorrelation(&record.codes_f64(), max_lag) {
            Ok(r) => {
                let (lag, max_abs) = r[1..]
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i + 1, v.abs()))
                    .fold((0, 0.0), |b, x| if x.1 > b.1 { x } else { b });
                Some(AutocorrelationSummary {
                    max_lag,
                    values: r[1..].to_vec(),
                    max_abs,
                    max_abs_lag: lag,
                })
            }
            Err(e) => {
                notes.push(format!("autocorrelation skipped: {e}"));
                None
            }
        }
    };
    let goodness_of_fit = match gof_bins {
        Some(bins) => {
            let subset: Vec<f64> = record.reconstructed().into_iter().take(GOF_SUBSET).collect();
            match chi_square_gaussian(&subset, bins) {
                Ok(g) => Some(g),
                Err(e) => {
                    notes.push(format!("goodness of fit skipped: {e}"));
                    None
                }
            }
        }
        None => None,
    };
    Ok(AnalyzeReport {
        record: name.to_string(),
        samples: record.len(),
        resolution_bits: record.resolution_bits(),
        histogram: hist.counts,
        entropy,
        clipped: record.clipped(),
        input_variance: record.input_variance(),
        autocorrelation,
        goodness_of_fit,
        calibration: None,
        notes,
    })
}

fn toeplitz_spec(config: &PipelineConfig) -> Result<ToeplitzSpec, AppError> {
    let e = &config.extractor;
    match &e.seed_file {
        Some(p) => read_seed(p, e.n, e.m),
        None => Ok(ToeplitzSpec::from_generator(e.n, e.m, e.seed)?),
    }
}

/// Security check plus extraction. The bits are returned, not written.
pub fn extract(
    config: &PipelineConfig,
    record: &SampleRecord,
    record_path: &Path,
    out_path: &Path,
    force: bool,
) -> Result<(ExtractReport, thermrng_core::bits::BitString), AppError> {
    let spec = toeplitz_spec(config)?;
    let b = record.resolution_bits() as u32;
    let (h_min, measured) = match config.extractor.h_min {
        Some(h) => (h, false),
        None => (min_entropy(&histogram_codes(record))?.h_min, true),
    };
    if !(0.0..=b as f64).contains(&h_min) {
        return Err(AppError::Usage(format!("h_min {h_min} outside [0, {b}]")));
    }
    let surplus = entropy_surplus(spec.n_in(), spec.m_out(), h_min, b);
    // Zero surplus gives ε = 1, which certifies nothing.
    let epsilon = if surplus > 0.0 {
        Some(epsilon_for(spec.n_in(), spec.m_out(), h_min, b)?)
    } else {
        None
    };
    if epsilon.is_none() && !force {
        return Err(AppError::Refused(format!(
            "{} output bits per {}-bit block need more than the {:.3} bits of min-entropy available",
            spec.m_out(),
            spec.n_in(),
            spec.m_out() as f64 + surplus
        )));
    }
    let start = Instant::now();
    let stream = extract_stream(record, &spec)?;
    let seconds = start.elapsed().as_secs_f64();
    let output_bits = stream.bits.len();
    let report = ExtractReport {
        record: record_path.display().to_string(),
        output: out_path.display().to_string(),
        n_in: spec.n_in(),
        m_out: spec.m_out(),
        h_min_per_sample: h_min,
        h_min_measured: measured,
        entropy_surplus: surplus,
        epsilon,
        log2_epsilon: epsilon.map(f64::log2),
        forced: force && epsilon.is_none(),
        input_samples: record.len(),
        blocks: stream.blocks,
        residual_bits: stream.residual_bits,
        output_bits,
        bits_per_sample: output_bits as f64 / record.len() as f64,
        bits_per_raw_bit: output_bits as f64 / (record.len() as f64 * b as f64),
        seconds,
        output_mbit_per_s: if seconds > 0.0 {
            output_bits as f64 / seconds / 1e6
        } else {
            f64::INFINITY
        },
    };
    Ok((report, stream.bits))
}

/// Partitions bit files into sequences, runs the battery and merges imports.
pub fn battery<P: AsRef<Path>>(config: &PipelineConfig, bit_files: &[P]) -> Result<BatteryReport, AppError> {
    let bits = read_bit_files(bit_files)?;
    battery_on_bits(config, &bits)
}

pub fn battery_on_bits(
    config: &PipelineConfig,
    bits: &thermrng_core::bits::BitString,
) -> Result<BatteryReport, AppError> {
    let b = &config.battery;
    let mut report = run_battery_on_stream(bits, b.sequences, b.length, &b.battery_config()?)?;
    for imp in &b.import {
        let ps = read_p_values(&imp.path)?;
        report.merge_external(&imp.name, &imp.label, &ps)?;
    }
    Ok(report)
}

/// Samples needed so the extractor yields at least `bits` output bits.
pub fn samples_for_bits(config: &PipelineConfig, bits: usize) -> usize {
    let e = &config.extractor;
    let blocks = bits.div_ceil(e.m.max(1));
    let raw = blocks * e.n;
    raw.div_ceil(config.acquisition.bits.max(1) as usize)
}

pub fn pipeline(config: &PipelineConfig) -> Result<PipelineReport, AppError> {
    config.validate()?;
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let needed_bits = config.battery.sequences.saturating_mul(config.battery.length);
    let count = config
        .acquisition
        .count
        .unwrap_or_else(|| samples_for_bits(config, needed_bits));
    let record_path = dir.join("record.trng");
    let simulate = simulate(config, count, &record_path)?;
    let record = load_record(&record_path)?;
    let analyze = analyze_record(&record, &record_path.display().to_string(), 100, Some(GOF_DEFAULT_BINS))?;
    write_text(&dir.join("analyze.json"), &to_json(&analyze))?;
    let bits_path = dir.join("extracted.bin");
    let (extract, bits) = extract(config, &record, &record_path, &bits_path, false)?;
    write_bits(&bits_path, &bits)?;
    let battery = battery_on_bits(config, &bits)?;
    let report = PipelineReport {
        simulate,
        analyze,
        extract,
        battery,
    };
    write_text(&dir.join("pipeline.json"), &to_json(&report))?;
    Ok(report)
}

/// Binary entry point.
pub fn main() -> std::process::ExitCode {
    let mut stdout = std::io::stdout().lock();
    let code = match run(std::env::args_os(), &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("thermrng: {}", e.to_string().trim_end());
            e.exit_code()
        }
    };
    let _ = stdout.flush();
    std::process::ExitCode::from(code as u8)
}
