//! Multi-sequence battery: per-test P-value uniformity and pass proportions.

mod suite;

pub use suite::*;

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::fft::RealDftPlan;
use crate::special::chi2_sf;

/// Fewest p-values for which the uniformity statistic is reported.
pub const MIN_UNIFORMITY_SAMPLES: usize = 55;
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TestKind {
    Frequency,
    BlockFrequency,
    CumulativeSums,
    Runs,
    LongestRun,
    Rank,
    Fft,
    ApproximateEntropy,
    Serial,
}

impl TestKind {
    pub const ALL: [TestKind; 9] = [
        TestKind::Frequency,
        TestKind::BlockFrequency,
        TestKind::CumulativeSums,
        TestKind::Runs,
        TestKind::LongestRun,
        TestKind::Rank,
        TestKind::Fft,
        TestKind::ApproximateEntropy,
        TestKind::Serial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Frequency => "Frequency",
            TestKind::BlockFrequency => "BlockFrequency",
            TestKind::CumulativeSums => "CumulativeSums",
            TestKind::Runs => "Runs",
            TestKind::LongestRun => "LongestRun",
            TestKind::Rank => "Rank",
            TestKind::Fft => "FFT",
            TestKind::ApproximateEntropy => "ApproximateEntropy",
            TestKind::Serial => "Serial",
        }
    }

    /// Labels of the p-values this test yields per sequence.
    pub fn sub_labels(self) -> &'static [&'static str] {
        match self {
            TestKind::CumulativeSums => &["forward", "backward"],
            TestKind::Serial => &["1", "2"],
            _ => &[""],
        }
    }

    pub fn from_name(name: &str) -> Option<TestKind> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatteryConfig {
    pub tests: Vec<TestKind>,
    pub alpha: f64,
    pub uniformity_alpha: f64,
    pub block_frequency_block: usize,
    pub approximate_entropy_m: usize,
    pub serial_m: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            tests: TestKind::ALL.to_vec(),
            alpha: 0.01,
            uniformity_alpha: 1e-4,
            block_frequency_block: 128,
            approximate_entropy_m: 2,
            serial_m: 2,
        }
    }
}

impl BatteryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tests.is_empty() {
            bail!(Config, "battery selects no tests");
        }
        if !(0.0..1.0).contains(&self.alpha) {
            bail!(Config, "alpha must be in [0, 1), got {}", self.alpha);
        }
        if !(0.0..1.0).contains(&self.uniformity_alpha) {
            bail!(Config, "uniformity threshold must be in [0, 1)");
        }
        if self.block_frequency_block == 0 {
            bail!(Config, "block frequency block size must be positive");
        }
        if !(2..=24).contains(&self.serial_m) || self.approximate_entropy_m > 24 {
            bail!(Config, "serial m must be 2..=24 and approximate entropy m at most 24");
        }
        Ok(())
    }
}

/// Per-sequence p-values for one test, or the reason it could not run.
pub type TestOutcome = core::result::Result<Vec<f64>, Error>;

/// Outcomes for one sequence, in the order of [`BatteryConfig::tests`].
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutcome {
    pub outcomes: Vec<TestOutcome>,
}

/// A configured battery for sequences of one fixed length.
pub struct Battery {
    config: BatteryConfig,
    seq_len: usize,
    spectral: Option<RealDftPlan>,
}

impl Battery {
    pub fn new(config: BatteryConfig, seq_len: usize) -> Result<Self> {
        config.validate()?;
        if seq_len == 0 {
            bail!(Contract, "empty sequences");
        }
        let spectral = (config.tests.contains(&TestKind::Fft) && seq_len >= 2)
            .then(|| RealDftPlan::new(seq_len));
        Ok(Self {
            config,
            seq_len,
            spectral,
        })
    }

    pub fn config(&self) -> &BatteryConfig {
        &self.config
    }

    pub fn sequence_length(&self) -> usize {
        self.seq_len
    }

    fn run_one(&self, kind: TestKind, seq: &BitSequence) -> TestOutcome {
        let c = &self.config;
        Ok(match kind {
            TestKind::Frequency => vec![frequency(seq)?],
            TestKind::BlockFrequency => vec![block_frequency(seq, c.block_frequency_block)?],
            TestKind::CumulativeSums => vec![
                cumulative_sums(seq, CusumMode::Forward)?,
                cumulative_sums(seq, CusumMode::Backward)?,
            ],
            TestKind::Runs => vec![runs(seq)?],
            TestKind::LongestRun => vec![longest_run(seq)?],
            TestKind::Rank => vec![rank(seq)?],
            TestKind::Fft => match &self.spectral {
                Some(plan) => vec![spectral_with_plan(seq, plan)?.p_value],
                None => vec![spectral_fft(seq)?],
            },
            TestKind::ApproximateEntropy => vec![approximate_entropy(seq, c.approximate_entropy_m)?],
            TestKind::Serial => {
                let (a, b) = serial(seq, c.serial_m)?;
                vec![a, b]
            }
        })
    }

    pub fn evaluate(&self, seq: &BitSequence) -> Result<SequenceOutcome> {
        if seq.len() != self.seq_len {
            bail!(
                Contract,
                "sequence of {} bits in a battery of {}-bit sequences",
                seq.len(),
                self.seq_len
            );
        }
        Ok(SequenceOutcome {
            outcomes: self
                .config
                .tests
                .iter()
                .map(|&k| self.run_one(k, seq))
                .collect(),
        })
    }

    /// Folds per-sequence outcomes into a report.
    pub fn aggregate(&self, outcomes: &[SequenceOutcome]) -> Result<BatteryReport> {
        let cfg = &self.config;
        let mut tests = Vec::with_capacity(cfg.tests.len());
        for (t, &kind) in cfg.tests.iter().enumerate() {
            let labels = kind.sub_labels();
            let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(outcomes.len()); labels.len()];
            let mut inapplicable = None;
            for o in outcomes {
                match o.outcomes.get(t) {
                    Some(Ok(ps)) => {
                        if ps.len() != labels.len() {
                            bail!(Contract, "{} produced {} p-values", kind.name(), ps.len());
                        }
                        for (col, &p) in columns.iter_mut().zip(ps) {
                            col.push(p);
                        }
                    }
                    Some(Err(e @ Error::Applicability { .. })) => inapplicable = Some(e.to_string()),
                    Some(Err(e)) => return Err(e.clone()),
                    None => bail!(Contract, "outcome is missing {}", kind.name()),
                }
            }
            if let Some(reason) = inapplicable {
                tests.push(TestReport::not_applicable(kind.name(), reason));
                continue;
            }
            let rows = labels
                .iter()
                .zip(&columns)
                .map(|(label, ps)| RowReport::from_p_values(label, ps, cfg.alpha, cfg.uniformity_alpha))
                .collect();
            tests.push(TestReport::from_rows(kind.name(), rows, false));
        }
        Ok(BatteryReport::new(
            outcomes.len(),
            self.seq_len,
            cfg.alpha,
            cfg.uniformity_alpha,
            tests,
        ))
    }
}

/// Runs the battery sequentially over equal-length sequences.
pub fn run_battery(sequences: &[BitSequence], config: &BatteryConfig) -> Result<BatteryReport> {
    let Some(first) = sequences.first() else {
        bail!(Contract, "battery needs at least one sequence");
    };
    if let Some(bad) = sequences.iter().find(|s| s.len() != first.len()) {
        bail!(Contract, "mixed sequence lengths {} and {}", first.len(), bad.len());
    }
    let battery = Battery::new(config.clone(), first.len())?;
    let outcomes = sequences
        .iter()
        .map(|s| battery.evaluate(s))
        .collect::<Result<Vec<_>>>()?;
    battery.aggregate(&outcomes)
}

/// Counts of p-values in the ten equal bins of `[0, 1]`; 1 falls in the last.
pub fn p_value_histogram(p_values: &[f64]) -> [u64; HISTOGRAM_BINS] {
    let mut h = [0u64; HISTOGRAM_BINS];
    for &p in p_values {
        let bin = ((p * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        h[bin] += 1;
    }
    h
}

/// Chi-square uniformity p-value of histogram counts over ten bins.
pub fn uniformity_from_counts(counts: &[u64; HISTOGRAM_BINS]) -> f64 {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / HISTOGRAM_BINS as f64;
    let chi: f64 = counts
        .iter()
        .map(|&c| (c as f64 - e) * (c as f64 - e) / e)
        .sum();
    chi2_sf(chi, (HISTOGRAM_BINS - 1) as f64)
}

pub fn uniformity_p(p_values: &[f64]) -> Result<f64> {
    if p_values.len() < MIN_UNIFORMITY_SAMPLES {
        return Err(Error::Applicability {
            test: "uniformity",
            needed: MIN_UNIFORMITY_SAMPLES,
            got: p_values.len(),
        });
    }
    Ok(uniformity_from_counts(&p_value_histogram(p_values)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProportionThreshold {
    /// `k·((1−α) − 3·√(α(1−α)/k))` before rounding.
    pub exact: f64,
    pub min_passes: usize,
}

pub fn proportion_threshold(sequence_count: usize, alpha: f64) -> ProportionThreshold {
    let k = sequence_count as f64;
    let exact = if sequence_count == 0 {
        0.0
    } else {
        k * ((1.0 - alpha) - 3.0 * libm::sqrt(alpha * (1.0 - alpha) / k))
    };
    // Guard against 980.0000000001-style noise pushing the ceiling up.
    let min_passes = libm::ceil(exact - 1e-9).max(0.0) as usize;
    ProportionThreshold {
        exact,
        min_passes: min_passes.min(sequence_count),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RowReport {
    /// Sub-result label, empty for single-valued tests.
    pub label: String,
    pub histogram: [u64; HISTOGRAM_BINS],
    /// `None` when fewer than [`MIN_UNIFORMITY_SAMPLES`] sequences were tested.
    pub uniformity_p: Option<f64>,
    pub pass_count: usize,
    pub sequence_count: usize,
    pub threshold: ProportionThreshold,
    pub uniformity_ok: bool,
    pub proportion_ok: bool,
}

impl RowReport {
    pub fn from_p_values(label: &str, p_values: &[f64], alpha: f64, uniformity_alpha: f64) -> Self {
        let histogram = p_value_histogram(p_values);
        let uniformity_p = (p_values.len() >= MIN_UNIFORMITY_SAMPLES).then(|| uniformity_from_counts(&histogram));
        let pass_count = p_values.iter().filter(|&&p| p >= alpha).count();
        let threshold = proportion_threshold(p_values.len(), alpha);
        Self {
            label: label.to_string(),
            histogram,
            uniformity_p,
            pass_count,
            sequence_count: p_values.len(),
            threshold,
            uniformity_ok: uniformity_p.map_or(true, |u| u >= uniformity_alpha),
            proportion_ok: pass_count >= threshold.min_passes,
        }
    }

    pub fn passed(&self) -> bool {
        self.uniformity_ok && self.proportion_ok
    }

    /// Ordering key for "worst": failures first, then fewest passes, then lowest uniformity.
    fn badness(&self) -> (bool, f64, f64) {
        let frac = if self.sequence_count == 0 {
            1.0
        } else {
            self.pass_count as f64 / self.sequence_count as f64
        };
        (self.passed(), frac, self.uniformity_p.unwrap_or(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestReport {
    pub name: String,
    pub rows: Vec<RowReport>,
    /// Index into `rows` of the row shown in a one-line summary.
    pub worst: Option<usize>,
    pub verdict: Verdict,
    /// Rows imported from p-values computed elsewhere.
    pub external: bool,
    pub note: Option<String>,
}

impl TestReport {
    pub fn from_rows(name: &str, rows: Vec<RowReport>, external: bool) -> Self {
        let worst = rows
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.badness()
                    .partial_cmp(&b.badness())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i);
        let verdict = if rows.is_empty() {
            Verdict::NotApplicable
        } else if rows.iter().all(RowReport::passed) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.to_string(),
            rows,
            worst,
            verdict,
            external,
            note: None,
        }
    }

    pub fn not_applicable(name: &str, reason: String) -> Self {
        Self {
            name: name.to_string(),
            rows: Vec::new(),
            worst: None,
            verdict: Verdict::NotApplicable,
            external: false,
            note: Some(reason),
        }
    }

    pub fn worst_row(&self) -> Option<&RowReport> {
        self.worst.map(|i| &self.rows[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatteryReport {
    pub sequence_count: usize,
    pub sequence_length: usize,
    pub alpha: f64,
    pub uniformity_alpha: f64,
    pub tests: Vec<TestReport>,
    pub verdict: Verdict,
}

impl BatteryReport {
    pub fn new(
        sequence_count: usize,
        sequence_length: usize,
        alpha: f64,
        uniformity_alpha: f64,
        tests: Vec<TestReport>,
    ) -> Self {
        let mut r = Self {
            sequence_count,
            sequence_length,
            alpha,
            uniformity_alpha,
            tests,
            verdict: Verdict::NotApplicable,
        };
        r.refresh_verdict();
        r
    }

    fn refresh_verdict(&mut self) {
        let applicable: Vec<_> = self
            .tests
            .iter()
            .filter(|t| t.verdict != Verdict::NotApplicable)
            .collect();
        self.verdict = if applicable.is_empty() {
            Verdict::NotApplicable
        } else if applicable.iter().all(|t| t.verdict == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn test(&self, name: &str) -> Option<&TestReport> {
        self.tests.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    /// Adds a row built from externally computed p-values. The count may differ
    /// from the battery's sequence count.
    pub fn merge_external(&mut self, name: &str, label: &str, p_values: &[f64]) -> Result<()> {
        if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!(Domain, "imported p-value {p} outside [0, 1]");
        }
        if p_values.is_empty() {
            bail!(Contract, "no p-values imported for {name}");
        }
        let row = RowReport::from_p_values(label, p_values, self.alpha, self.uniformity_alpha);
        match self.tests.iter_mut().find(|t| t.external && t.name == name) {
            Some(t) => {
                let mut rows = core::mem::take(&mut t.rows);
                rows.push(row);
                *t = TestReport::from_rows(name, rows, true);
            }
            None => self.tests.push(TestReport::from_rows(name, vec![row], true)),
        }
        self.refresh_verdict();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table1_frequency() -> [u64; 10] {
        [107, 99, 84, 102, 89, 100, 99, 116, 100, 104]
    }

    #[test]
    fn uniformity_of_table_counts() {
        let c = table1_frequency();
        let chi: f64 = c.iter().map(|&x| (x as f64 - 100.0).powi(2) / 100.0).sum();
        assert!((chi - 7.04).abs() < 1e-12);
        assert!((uniformity_from_counts(&c) - 0.632955).abs() < 1e-4);
    }

    #[test]
    fn uniformity_examples() {
        let even: Vec<f64> = (0..1000).map(|i| (i % 10) as f64 / 10.0 + 0.05).collect();
        assert_eq!(uniformity_p(&even).unwrap(), 1.0);
        let lumped = vec![0.55; 1000];
        assert!(uniformity_p(&lumped).unwrap() < 1e-300);
        assert!(matches!(
            uniformity_p(&[0.5; 54]),
            Err(Error::Applicability { needed: 55, .. })
        ));
        assert_eq!(p_value_histogram(&[1.0, 0.0, 0.1, 0.0999])[..2], [2, 1]);
        assert_eq!(p_value_histogram(&[1.0])[9], 1);
    }

    #[test]
    fn proportion_threshold_examples() {
        let t = proportion_threshold(1000, 0.01);
        assert!((t.exact - 980.56).abs() < 0.01);
        assert_eq!(t.min_passes, 981);
        assert_eq!(proportion_threshold(630, 0.01).min_passes, 617);
        assert_eq!(proportion_threshold(100, 0.01).min_passes, 97);
        assert_eq!(proportion_threshold(1000, 0.0).min_passes, 1000);
    }

    fn random_sequences(count: usize, len: usize, seed: u64) -> Vec<BitSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut bytes = vec![0u8; len.div_ceil(8)];
                rng.fill_bytes(&mut bytes);
                BitString::from_bytes(&bytes, len).unwrap()
            })
            .collect()
    }

    #[test]
    fn all_zeros_fail_every_test() {
        let zeros = vec![BitString::zeros(40_000); 60];
        let r = run_battery(&zeros, &BatteryConfig::default()).unwrap();
        assert_eq!(r.tests.len(), 9);
        for t in &r.tests {
            assert_eq!(t.verdict, Verdict::Fail, "{}", t.name);
        }
        assert!(!r.passed());
    }

    #[test]
    fn mixed_lengths_rejected() {
        let seqs = [BitString::zeros(100), BitString::zeros(101)];
        assert!(matches!(
            run_battery(&seqs, &BatteryConfig::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn short_sequences_are_not_applicable() {
        let seqs = random_sequences(5, 200, 3);
        let r = run_battery(&seqs, &BatteryConfig::default()).unwrap();
        assert_eq!(r.test("Rank").unwrap().verdict, Verdict::NotApplicable);
        assert_ne!(r.test("Frequency").unwrap().verdict, Verdict::NotApplicable);
        assert!(r.test("Frequency").unwrap().rows[0].uniformity_p.is_none());
    }

    #[test]
    fn report_invariants_and_worst_row() {
        let seqs = random_sequences(60, 40_000, 11);
        let r = run_battery(&seqs, &BatteryConfig::default()).unwrap();
        for t in &r.tests {
            for row in &t.rows {
                assert_eq!(row.histogram.iter().sum::<u64>(), 60);
                assert!(row.pass_count <= row.sequence_count);
            }
            let w = t.worst_row().unwrap();
            assert!(t.rows.iter().all(|row| row.pass_count >= w.pass_count || !w.passed()));
        }
        assert_eq!(r.test("Serial").unwrap().rows.len(), 2);
        assert_eq!(r.test("CumulativeSums").unwrap().rows.len(), 2);
    }

    #[test]
    fn rejection_rates_in_binomial_band() {
        // Reduced length keeps this quick; each test sees 1000 independent sequences.
        let seqs = random_sequences(1000, 40_000, 2024);
        let r = run_battery(&seqs, &BatteryConfig::default()).unwrap();
        for t in &r.tests {
            for row in &t.rows {
                let rate = 1.0 - row.pass_count as f64 / 1000.0;
                assert!((0.002..=0.025).contains(&rate), "{} {}: {rate}", t.name, row.label);
            }
        }
    }

    #[test]
    fn external_rows_keep_their_own_count() {
        let seqs = random_sequences(60, 20_000, 5);
        let mut r = run_battery(&seqs, &BatteryConfig::default()).unwrap();
        let ps: Vec<f64> = (0..630).map(|i| (i as f64 + 0.5) / 630.0).collect();
        r.merge_external("RandomExcursions", "x=+1", &ps).unwrap();
        r.merge_external("RandomExcursions", "x=-1", &ps).unwrap();
        let t = r.test("RandomExcursions").unwrap();
        assert!(t.external);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].threshold.min_passes, 617);
        assert!(r.merge_external("Bad", "", &[1.5]).is_err());
    }

    proptest! {
        #[test]
        fn uniformity_is_permutation_invariant(mut ps in proptest::collection::vec(0.0f64..=1.0, 55..200), seed in any::<u64>()) {
            let a = uniformity_p(&ps).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..ps.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                ps.swap(i, j);
            }
            prop_assert_eq!(a, uniformity_p(&ps).unwrap());
        }
    }
}
