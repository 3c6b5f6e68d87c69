//! Binary sample-record files.
//!
//! Little-endian layout: `"TRNG"`, version `u16 = 1`, resolution bits `u8`,
//! reserved `u8`, full-scale min `f64`, full-scale max `f64`, sampling rate
//! `f64`, sample count `u64`, then the samples as `u16`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thermrng_core::acquisition::{AdcConfig, SampleRecord};

use crate::AppError;

pub const MAGIC: [u8; 4] = *b"TRNG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 40;

/// Failure while decoding a record, with the byte offset where it was detected.
#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("byte {offset}: {message}")]
    Format { offset: u64, message: String },
}

impl RecordError {
    fn at(offset: usize, message: impl Into<String>) -> Self {
        RecordError::Format {
            offset: offset as u64,
            message: message.into(),
        }
    }

    pub fn with_path(self, path: &Path) -> AppError {
        match self {
            RecordError::Io(e) => AppError::io(path, e),
            RecordError::Format { offset, message } => AppError::Format {
                path: path.display().to_string(),
                offset,
                message,
            },
        }
    }
}

pub fn encode_header(record: &SampleRecord) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(&MAGIC);
    h[4..6].copy_from_slice(&VERSION.to_le_bytes());
    h[6] = record.adc.resolution_bits;
    h[8..16].copy_from_slice(&record.adc.full_scale_min.to_le_bytes());
    h[16..24].copy_from_slice(&record.adc.full_scale_max.to_le_bytes());
    h[24..32].copy_from_slice(&record.sampling_rate.to_le_bytes());
    h[32..40].copy_from_slice(&(record.codes.len() as u64).to_le_bytes());
    h
}

pub fn write_record<W: Write>(mut w: W, record: &SampleRecord) -> std::io::Result<()> {
    w.write_all(&encode_header(record))?;
    let mut buf = Vec::with_capacity(64 * 1024);
    for chunk in record.codes.chunks(32 * 1024) {
        buf.clear();
        for &c in chunk {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()
}

fn f64_at(h: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(h[at..at + 8].try_into().unwrap())
}

/// Reads exactly `buf.len()` bytes or reports how many arrived.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

pub fn read_record<R: Read>(mut r: R) -> Result<SampleRecord, RecordError> {
    let mut h = [0u8; HEADER_LEN];
    let got = read_full(&mut r, &mut h)?;
    if got < 4 || h[0..4] != MAGIC {
        return Err(RecordError::at(0, "not a sample record (bad magic)"));
    }
    if got < HEADER_LEN {
        return Err(RecordError::at(got, "truncated header"));
    }
    let version = u16::from_le_bytes([h[4], h[5]]);
    if version != VERSION {
        return Err(RecordError::at(4, format!("unsupported version {version}")));
    }
    let adc = AdcConfig {
        resolution_bits: h[6],
        full_scale_min: f64_at(&h, 8),
        full_scale_max: f64_at(&h, 16),
    };
    if let Err(e) = adc.validate() {
        let offset = if (1..=16).contains(&h[6]) { 8 } else { 6 };
        return Err(RecordError::at(offset, e.to_string()));
    }
    let rate = f64_at(&h, 24);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(RecordError::at(24, format!("sampling rate {rate} is not positive")));
    }
    let count = u64::from_le_bytes(h[32..40].try_into().unwrap());
    let count = usize::try_from(count).map_err(|_| RecordError::at(32, "sample count too large"))?;

    let max = adc.max_code();
    let mut codes = Vec::with_capacity(count.min(1 << 26));
    let mut buf = vec![0u8; 64 * 1024];
    let mut remaining = count;
    while remaining > 0 {
        let want = (remaining * 2).min(buf.len());
        let got = read_full(&mut r, &mut buf[..want])?;
        if got < want {
            let offset = HEADER_LEN + codes.len() * 2 + got;
            return Err(RecordError::at(
                offset,
                format!("truncated: header announces {count} samples"),
            ));
        }
        for pair in buf[..want].chunks_exact(2) {
            let c = u16::from_le_bytes([pair[0], pair[1]]);
            if c > max {
                let offset = HEADER_LEN + codes.len() * 2;
                return Err(RecordError::at(
                    offset,
                    format!("code {c} exceeds the {}-bit range", adc.resolution_bits),
                ));
            }
            codes.push(c);
        }
        remaining -= want / 2;
    }
    let mut probe = [0u8; 1];
    if read_full(&mut r, &mut probe)? != 0 {
        return Err(RecordError::at(HEADER_LEN + count * 2, "trailing bytes after samples"));
    }
    SampleRecord::new(codes, adc, rate, String::from("file")).map_err(|e| RecordError::at(0, e.to_string()))
}

pub fn save_record(path: &Path, record: &SampleRecord) -> Result<(), AppError> {
    let f = File::create(path).map_err(|e| AppError::io(path, e))?;
    write_record(BufWriter::new(f), record).map_err(|e| AppError::io(path, e))
}

pub fn load_record(path: &Path) -> Result<SampleRecord, AppError> {
    let f = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut record = read_record(BufReader::new(f)).map_err(|e| e.with_path(path))?;
    record.provenance = path.display().to_string();
    Ok(record)
}
