//! Chunked simulation: sampler → ADC → Toeplitz extractor, without holding
//! the whole raw record in memory.

use rayon::prelude::*;
use thermrng_core::acquisition::{quantize_into, AdcConfig};
use thermrng_core::bits::BitString;
use thermrng_core::extractor::{StreamExtractor, ToeplitzSpec};
use thermrng_core::source_sim::{QuadratureSampler, SourceParams};

use crate::AppError;

/// Samples per generator sub-stream.
pub const CHUNK_SAMPLES: usize = 1 << 20;

/// Codes for samples `[chunk·CHUNK_SAMPLES, …)`, drawn from sub-stream `chunk`.
fn chunk_codes(
    params: &SourceParams,
    n_mode: f64,
    adc: &AdcConfig,
    seed: u64,
    chunk: usize,
    len: usize,
) -> Result<Vec<u16>, AppError> {
    let mut sampler = QuadratureSampler::with_stream(params, n_mode, seed, chunk as u64)?;
    let mut values = vec![0.0; len];
    sampler.fill(&mut values);
    let mut codes = vec![0u16; len];
    quantize_into(&values, adc, &mut codes);
    Ok(codes)
}

fn chunk_lengths(count: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..count.div_ceil(CHUNK_SAMPLES)).map(move |c| (c, CHUNK_SAMPLES.min(count - c * CHUNK_SAMPLES)))
}

/// Simulates and digitizes `count` samples. Sub-stream `k` supplies samples
/// `k·CHUNK_SAMPLES` onwards, so output is independent of the thread count.
pub fn simulate_codes(
    params: &SourceParams,
    n_mode: f64,
    adc: &AdcConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<u16>, AppError> {
    if count == 0 {
        return Err(AppError::Usage("sample count must be positive".into()));
    }
    adc.validate()?;
    let chunks: Vec<_> = chunk_lengths(count).collect();
    let parts = chunks
        .into_par_iter()
        .map(|(c, len)| chunk_codes(params, n_mode, adc, seed, c, len))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.concat())
}

#[derive(Debug, Clone)]
pub struct ExtractionRun {
    pub bits: BitString,
    pub samples: usize,
    pub blocks: usize,
    pub residual_bits: usize,
}

/// Same bits as quantizing [`simulate_codes`] and extracting the whole record.
pub fn simulate_extracted(
    params: &SourceParams,
    n_mode: f64,
    adc: &AdcConfig,
    spec: &ToeplitzSpec,
    count: usize,
    seed: u64,
) -> Result<ExtractionRun, AppError> {
    if count == 0 {
        return Err(AppError::Usage("sample count must be positive".into()));
    }
    adc.validate()?;
    let mut extractor = StreamExtractor::new(spec, adc.resolution_bits)?;
    let total_blocks = count * adc.resolution_bits as usize / spec.n_in();
    let mut bits = BitString::with_capacity(total_blocks * spec.m_out());
    let chunks: Vec<_> = chunk_lengths(count).collect();
    // Generate a few chunks at a time in parallel, then hash them in order.
    let batch = rayon::current_num_threads().max(1) * 2;
    for group in chunks.chunks(batch) {
        let parts = group
            .par_iter()
            .map(|&(c, len)| chunk_codes(params, n_mode, adc, seed, c, len))
            .collect::<Result<Vec<_>, _>>()?;
        for codes in &parts {
            extractor.push(codes, &mut bits);
        }
    }
    Ok(ExtractionRun {
        bits,
        samples: count,
        blocks: extractor.blocks(),
        residual_bits: extractor.residual_bits(),
    })
}
