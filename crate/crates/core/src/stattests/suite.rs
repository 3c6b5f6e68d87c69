//! Nine SP 800-22 tests: frequency, block frequency, cumulative sums, runs,
//! longest run of ones, binary matrix rank, discrete Fourier transform,
//! approximate entropy and serial.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, SQRT_2};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::fft::RealDftPlan;
use crate::special::{erfc, igamc, normal_cdf, xlnx};

pub type BitSequence = BitString;

fn require(test: &'static str, seq: &BitSequence, needed: usize) -> Result<()> {
    if seq.len() < needed.max(1) {
        return Err(Error::Applicability {
            test,
            needed: needed.max(1),
            got: seq.len(),
        });
    }
    Ok(())
}

fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        0.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// Monobit frequency test.
pub fn frequency(seq: &BitSequence) -> Result<f64> {
    require("Frequency", seq, 1)?;
    let n = seq.len() as f64;
    let ones = seq.count_ones() as f64;
    let s = 2.0 * ones - n;
    Ok(clamp_p(erfc(s.abs() / libm::sqrt(n) / SQRT_2)))
}

/// Frequency within `block`-bit blocks.
pub fn block_frequency(seq: &BitSequence, block: usize) -> Result<f64> {
    if block == 0 {
        return Err(Error::Config("block frequency needs a positive block size".into()));
    }
    require("BlockFrequency", seq, block)?;
    let blocks = seq.len() / block;
    let bits = seq.unpack();
    let chi: f64 = bits
        .chunks_exact(block)
        .take(blocks)
        .map(|c| {
            let pi = c.iter().map(|&b| b as usize).sum::<usize>() as f64 / block as f64;
            (pi - 0.5) * (pi - 0.5)
        })
        .sum::<f64>()
        * 4.0
        * block as f64;
    Ok(clamp_p(igamc(blocks as f64 / 2.0, chi / 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CusumMode {
    Forward,
    Backward,
}

/// Cumulative sums (random walk excursion) test.
pub fn cumulative_sums(seq: &BitSequence, mode: CusumMode) -> Result<f64> {
    require("CumulativeSums", seq, 1)?;
    let n = seq.len();
    let bits = seq.unpack();
    let step = |b: u8| if b == 1 { 1i64 } else { -1i64 };
    let mut s = 0i64;
    let mut z = 0i64;
    match mode {
        CusumMode::Forward => {
            for &b in &bits {
                s += step(b);
                z = z.max(s.abs());
            }
        }
        CusumMode::Backward => {
            for &b in bits.iter().rev() {
                s += step(b);
                z = z.max(s.abs());
            }
        }
    }
    Ok(cusum_p(n as i64, z))
}

fn cusum_p(n: i64, z: i64) -> f64 {
    let sqrt_n = libm::sqrt(n as f64);
    let zf = z as f64;
    // Summation limits use truncating integer division, as in the reference code.
    let q = n / z;
    let mut sum1 = 0.0;
    let mut k = (-q + 1) / 4;
    while k <= (q - 1) / 4 {
        let kf = k as f64;
        sum1 += normal_cdf((4.0 * kf + 1.0) * zf / sqrt_n) - normal_cdf((4.0 * kf - 1.0) * zf / sqrt_n);
        k += 1;
    }
    let mut sum2 = 0.0;
    let mut k = (-q - 3) / 4;
    while k <= (q - 1) / 4 {
        let kf = k as f64;
        sum2 += normal_cdf((4.0 * kf + 3.0) * zf / sqrt_n) - normal_cdf((4.0 * kf + 1.0) * zf / sqrt_n);
        k += 1;
    }
    clamp_p(1.0 - sum1 + sum2)
}

/// Runs test. Returns 0 when the frequency prerequisite fails.
pub fn runs(seq: &BitSequence) -> Result<f64> {
    require("Runs", seq, 2)?;
    let n = seq.len() as f64;
    let bits = seq.unpack();
    let pi = seq.count_ones() as f64 / n;
    let tau = 2.0 / libm::sqrt(n);
    if (pi - 0.5).abs() >= tau {
        return Ok(0.0);
    }
    let v = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * libm::sqrt(2.0 * n) * pi * (1.0 - pi);
    Ok(clamp_p(erfc(num / den)))
}

struct LongestRunParams {
    block: usize,
    /// Run lengths at or below `lowest` share the first class.
    lowest: usize,
    probs: &'static [f64],
}

fn longest_run_params(n: usize) -> Option<LongestRunParams> {
    if n >= 750_000 {
        Some(LongestRunParams {
            block: 10_000,
            lowest: 10,
            probs: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        })
    } else if n >= 6272 {
        Some(LongestRunParams {
            block: 128,
            lowest: 4,
            probs: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
        })
    } else if n >= 128 {
        Some(LongestRunParams {
            block: 8,
            lowest: 1,
            probs: &[0.2148, 0.3672, 0.2305, 0.1875],
        })
    } else {
        None
    }
}

/// Longest run of ones in a block; block size chosen from the length.
pub fn longest_run(seq: &BitSequence) -> Result<f64> {
    let Some(params) = longest_run_params(seq.len()) else {
        return Err(Error::Applicability {
            test: "LongestRun",
            needed: 128,
            got: seq.len(),
        });
    };
    let bits = seq.unpack();
    let blocks = seq.len() / params.block;
    let classes = params.probs.len();
    let mut counts = vec![0u64; classes];
    for chunk in bits.chunks_exact(params.block).take(blocks) {
        let mut best = 0usize;
        let mut run = 0usize;
        for &b in chunk {
            if b == 1 {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        let class = best.saturating_sub(params.lowest).min(classes - 1);
        counts[class] += 1;
    }
    let nb = blocks as f64;
    let chi: f64 = counts
        .iter()
        .zip(params.probs)
        .map(|(&c, &p)| {
            let e = nb * p;
            (c as f64 - e) * (c as f64 - e) / e
        })
        .sum();
    Ok(clamp_p(igamc((classes - 1) as f64 / 2.0, chi / 2.0)))
}

const RANK_DIM: usize = 32;

/// Probability that a random `rows × cols` GF(2) matrix has rank `r`.
pub fn rank_probability(r: usize, rows: usize, cols: usize) -> f64 {
    let (m, q) = (rows as i32, cols as i32);
    let r = r as i32;
    let mut product = 1.0;
    for i in 0..r {
        let num = (1.0 - libm::exp2((i - q) as f64)) * (1.0 - libm::exp2((i - m) as f64));
        let den = 1.0 - libm::exp2((i - r) as f64);
        product *= num / den;
    }
    libm::exp2((r * (q + m - r) - m * q) as f64) * product
}

/// Rank of a square GF(2) matrix whose rows are bit masks.
pub fn gf2_rank(rows: &mut [u32]) -> usize {
    let mut rank = 0;
    for bit in (0..32).rev() {
        let mask = 1u32 << bit;
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] & mask != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let p = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row & mask != 0 {
                *row ^= p;
            }
        }
        rank += 1;
    }
    rank
}

/// Binary matrix rank test on consecutive 32×32 matrices.
pub fn rank(seq: &BitSequence) -> Result<f64> {
    let per = RANK_DIM * RANK_DIM;
    require("Rank", seq, 38 * per)?;
    let matrices = seq.len() / per;
    let bytes = seq.as_bytes();
    let (mut full, mut minus_one) = (0u64, 0u64);
    let mut rows = [0u32; RANK_DIM];
    for k in 0..matrices {
        let base = k * per / 8;
        for (r, row) in rows.iter_mut().enumerate() {
            let o = base + r * 4;
            *row = u32::from_be_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        }
        match gf2_rank(&mut rows) {
            32 => full += 1,
            31 => minus_one += 1,
            _ => {}
        }
    }
    let p32 = rank_probability(32, RANK_DIM, RANK_DIM);
    let p31 = rank_probability(31, RANK_DIM, RANK_DIM);
    let p30 = 1.0 - p32 - p31;
    let n = matrices as f64;
    let rest = n - full as f64 - minus_one as f64;
    let sq = |obs: f64, p: f64| (obs - p * n) * (obs - p * n) / (p * n);
    let chi = sq(full as f64, p32) + sq(minus_one as f64, p31) + sq(rest, p30);
    Ok(clamp_p(libm::exp(-chi / 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralStatistics {
    /// Peaks below the 95% threshold `T`.
    pub below_threshold: usize,
    /// Expected count `0.95·n/2`.
    pub expected: f64,
    pub threshold: f64,
    pub d: f64,
    pub p_value: f64,
}

/// Spectral test statistics given `|S_k|` for `k < n/2`.
pub fn spectral_statistics_from_moduli(n: usize, moduli: &[f64]) -> SpectralStatistics {
    let nf = n as f64;
    let threshold = libm::sqrt(libm::log(1.0 / 0.05) * nf);
    let expected = 0.95 * nf / 2.0;
    let below = moduli.iter().filter(|&&m| m < threshold).count();
    let d = (below as f64 - expected) / libm::sqrt(nf * 0.95 * 0.05 / 4.0);
    SpectralStatistics {
        below_threshold: below,
        expected,
        threshold,
        d,
        p_value: clamp_p(erfc(d.abs() / SQRT_2)),
    }
}

/// Discrete Fourier transform test, reusing a prepared plan of matching length.
pub fn spectral_with_plan(seq: &BitSequence, plan: &RealDftPlan) -> Result<SpectralStatistics> {
    require("FFT", seq, 2)?;
    if plan.len() != seq.len() {
        return Err(Error::Contract("spectral plan length does not match the sequence".into()));
    }
    let x: Vec<f64> = seq.unpack().iter().map(|&b| 2.0 * b as f64 - 1.0).collect();
    let spectrum = plan.spectrum_half(&x);
    let moduli: Vec<f64> = spectrum.iter().map(|c| c.norm()).collect();
    Ok(spectral_statistics_from_moduli(seq.len(), &moduli))
}

pub fn spectral_fft(seq: &BitSequence) -> Result<f64> {
    require("FFT", seq, 2)?;
    Ok(spectral_with_plan(seq, &RealDftPlan::new(seq.len()))?.p_value)
}

/// Overlapping `m`-bit pattern counts with wraparound.
fn pattern_counts(bits: &[u8], m: usize) -> Vec<u64> {
    let n = bits.len();
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        counts[0] = n as u64;
        return counts;
    }
    let mask = (1usize << m) - 1;
    let mut window = 0usize;
    for &b in &bits[..m - 1] {
        window = (window << 1) | b as usize;
    }
    for i in 0..n {
        window = ((window << 1) | bits[(i + m - 1) % n] as usize) & mask;
        counts[window] += 1;
    }
    counts
}

/// Approximate entropy with block length `m` (compares `m` and `m + 1`).
pub fn approximate_entropy(seq: &BitSequence, m: usize) -> Result<f64> {
    require("ApproximateEntropy", seq, m + 2)?;
    if m > 24 {
        return Err(Error::Config("approximate entropy block length above 24".into()));
    }
    let bits = seq.unpack();
    let n = bits.len() as f64;
    let phi = |len: usize| -> f64 {
        if len == 0 {
            return 0.0;
        }
        pattern_counts(&bits, len)
            .iter()
            .map(|&c| xlnx(c as f64 / n))
            .sum()
    };
    let apen = phi(m) - phi(m + 1);
    let chi = 2.0 * n * (LN_2 - apen);
    Ok(clamp_p(igamc(libm::exp2(m as f64 - 1.0), chi / 2.0)))
}

/// Serial test with block length `m`; returns both p-values.
pub fn serial(seq: &BitSequence, m: usize) -> Result<(f64, f64)> {
    if !(2..=24).contains(&m) {
        return Err(Error::Config("serial test block length must be in 2..=24".into()));
    }
    require("Serial", seq, m + 1)?;
    let bits = seq.unpack();
    let n = bits.len() as f64;
    let psi = |len: usize| -> f64 {
        if len == 0 {
            return 0.0;
        }
        let sum: f64 = pattern_counts(&bits, len)
            .iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum();
        libm::exp2(len as f64) / n * sum - n
    };
    let (p0, p1, p2) = (psi(m), psi(m - 1), psi(m - 2));
    let del1 = p0 - p1;
    let del2 = p0 - 2.0 * p1 + p2;
    Ok((
        clamp_p(igamc(libm::exp2(m as f64 - 2.0), del1 / 2.0)),
        clamp_p(igamc(libm::exp2(m as f64 - 3.0), del2 / 2.0)),
    ))
}
