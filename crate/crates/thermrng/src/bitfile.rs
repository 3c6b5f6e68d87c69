//! Packed bit files, Toeplitz seed files and imported p-value lists.

use std::fs;
use std::io::Write;
use std::path::Path;

use thermrng_core::bits::BitString;
use thermrng_core::extractor::ToeplitzSpec;

use crate::AppError;

/// Writes packed MSB-first bytes; a trailing partial byte is zero-padded.
pub fn write_bits(path: &Path, bits: &BitString) -> Result<(), AppError> {
    fs::write(path, bits.as_bytes()).map_err(|e| AppError::io(path, e))
}

pub fn write_bits_to<W: Write>(mut w: W, bits: &BitString) -> std::io::Result<()> {
    w.write_all(bits.as_bytes())?;
    w.flush()
}

pub fn read_bits(path: &Path) -> Result<BitString, AppError> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(BitString::from_byte_vec(bytes))
}

/// Reads and concatenates several bit files in order.
pub fn read_bit_files<P: AsRef<Path>>(paths: &[P]) -> Result<BitString, AppError> {
    let mut out = BitString::new();
    for p in paths {
        out.extend_from(&read_bits(p.as_ref())?);
    }
    Ok(out)
}

/// Loads a seed file holding at least `⌈(n+m−1)/8⌉` bytes; extra bits are ignored.
pub fn read_seed(path: &Path, n_in: usize, m_out: usize) -> Result<ToeplitzSpec, AppError> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    let need = (n_in + m_out).saturating_sub(1).div_ceil(8);
    if bytes.len() < need {
        return Err(AppError::Format {
            path: path.display().to_string(),
            offset: bytes.len() as u64,
            message: format!("seed file holds {} bytes, {need} needed", bytes.len()),
        });
    }
    Ok(ToeplitzSpec::from_seed_bytes(n_in, m_out, &bytes)?)
}

pub fn write_seed(path: &Path, spec: &ToeplitzSpec) -> Result<(), AppError> {
    write_bits(path, spec.seed())
}

/// Parses one p-value per line. Blank lines and `#` comments are skipped.
pub fn parse_p_values(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p: f64 = line
            .parse()
            .map_err(|_| format!("line {}: not a number: {line:?}", i + 1))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("line {}: p-value {p} outside [0, 1]", i + 1));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn read_p_values(path: &Path) -> Result<Vec<f64>, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_p_values(&text).map_err(|message| AppError::Format {
        path: path.display().to_string(),
        offset: 0,
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_lines() {
        assert_eq!(parse_p_values("0.1\n\n# c\n1 # x\n0\n").unwrap(), [0.1, 1.0, 0.0]);
        assert!(parse_p_values("0.5\n1.2\n").unwrap_err().starts_with("line 2"));
        assert!(parse_p_values("abc").is_err());
    }
}
