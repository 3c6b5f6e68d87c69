//! Packed bit strings.
//!
//! Bits are stored MSB-first: bit 0 of the string is the most significant bit
//! of byte 0. Every file format in the toolkit uses the same order.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

/// Fixed-size block fed to or produced by the extractor.
pub type BitBlock = BitString;

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bytes: vec![0; len.div_ceil(8)],
            len,
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Takes the first `len` bits of `bytes`; any trailing bits are cleared.
    ///
    /// Returns `None` if `bytes` holds fewer than `len` bits.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        let need = len.div_ceil(8);
        if bytes.len() < need {
            return None;
        }
        let mut out = Self {
            bytes: bytes[..need].to_vec(),
            len,
        };
        out.clear_tail();
        Some(out)
    }

    /// Wraps a whole byte vector without copying.
    pub fn from_byte_vec(bytes: Vec<u8>) -> Self {
        let len = bytes.len() * 8;
        Self { bytes, len }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::new();
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Parses a string of `'0'`/`'1'` characters, ignoring whitespace.
    pub fn parse_binary(text: &str) -> Option<Self> {
        let mut out = Self::new();
        for c in text.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                c if c.is_whitespace() => {}
                _ => return None,
            }
        }
        Some(out)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.bytes[i >> 3] & (0x80 >> (i & 7)) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 0x80 >> (i & 7);
        if value {
            self.bytes[i >> 3] |= mask;
        } else {
            self.bytes[i >> 3] &= !mask;
        }
    }

    #[inline]
    pub fn push(&mut self, value: bool) {
        if self.len & 7 == 0 {
            self.bytes.push(0);
        }
        if value {
            self.bytes[self.len >> 3] |= 0x80 >> (self.len & 7);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        let mut remaining = width;
        while remaining > 0 {
            let used = (self.len & 7) as u32;
            if used == 0 {
                self.bytes.push(0);
            }
            let room = 8 - used;
            let take = room.min(remaining);
            let shift = remaining - take;
            let chunk = ((value >> shift) & ((1u64 << take) - 1)) as u8;
            let last = self.bytes.len() - 1;
            self.bytes[last] |= chunk << (room - take);
            self.len += take as usize;
            remaining -= take;
        }
    }

    /// Appends another bit string.
    pub fn extend_from(&mut self, other: &BitString) {
        if self.len & 7 == 0 {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        let full = other.len / 8;
        for &b in &other.bytes[..full] {
            self.push_bits(b as u64, 8);
        }
        let rest = (other.len % 8) as u32;
        if rest > 0 {
            self.push_bits((other.bytes[full] >> (8 - rest)) as u64, rest);
        }
    }

    /// Copies `len` bits starting at bit `start` into a new, byte-aligned string.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        if start & 7 == 0 {
            return BitString::from_bytes(&self.bytes[start >> 3..], len).expect("in range");
        }
        let shift = (start & 7) as u32;
        let first = start >> 3;
        let nbytes = len.div_ceil(8);
        let mut bytes = Vec::with_capacity(nbytes);
        for k in 0..nbytes {
            let hi = self.bytes[first + k] << shift;
            let lo = self
                .bytes
                .get(first + k + 1)
                .map_or(0, |b| b >> (8 - shift));
            bytes.push(hi | lo);
        }
        let mut out = BitString { bytes, len };
        out.clear_tail();
        out
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// One byte per bit, each 0 or 1.
    pub fn unpack(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len);
        for &b in &self.bytes {
            for k in (0..8).rev() {
                out.push((b >> k) & 1);
            }
        }
        out.truncate(self.len);
        out
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Bitwise XOR of two equal-length strings.
    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        BitString {
            bytes: self
                .bytes
                .iter()
                .zip(&other.bytes)
                .map(|(a, b)| a ^ b)
                .collect(),
            len: self.len,
        }
    }

    fn clear_tail(&mut self) {
        let spare = self.bytes.len() * 8 - self.len;
        if spare > 0 {
            let last = self.bytes.len() - 1;
            self.bytes[last] &= 0xffu8 << spare;
        }
    }
}

impl core::fmt::Debug for BitString {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "BitString({} bits: ", self.len)?;
        for (i, b) in self.iter().take(64).enumerate() {
            if i > 0 && i % 8 == 0 {
                f.write_str("_")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.len > 64 {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bools(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_layout() {
        let b = BitString::parse_binary("1000 0001 1").unwrap();
        assert_eq!(b.len(), 9);
        assert_eq!(b.as_bytes(), &[0x81, 0x80]);
    }

    #[test]
    fn push_bits_matches_push() {
        let mut a = BitString::new();
        a.push(true);
        a.push_bits(0b1_0110_0101, 9);
        a.push_bits(0xfff, 12);
        let mut b = BitString::new();
        b.push(true);
        for c in "101100101111111111111".chars() {
            b.push(c == '1');
        }
        assert_eq!(a, b);
    }

    #[test]
    fn from_bytes_clears_tail() {
        let b = BitString::from_bytes(&[0xff, 0xff], 12).unwrap();
        assert_eq!(b.as_bytes(), &[0xff, 0xf0]);
        assert!(BitString::from_bytes(&[0xff], 9).is_none());
    }

    proptest! {
        #[test]
        fn slice_agrees_with_get(bytes in proptest::collection::vec(any::<u8>(), 1..40), s in 0usize..64, l in 0usize..200) {
            let full = BitString::from_byte_vec(bytes);
            let start = s.min(full.len());
            let len = l.min(full.len() - start);
            let part = full.slice(start, len);
            prop_assert_eq!(part.len(), len);
            for i in 0..len {
                prop_assert_eq!(part.get(i), full.get(start + i));
            }
        }

        #[test]
        fn extend_concatenates(a in proptest::collection::vec(any::<bool>(), 0..80), b in proptest::collection::vec(any::<bool>(), 0..80)) {
            let mut x = BitString::from_bools(a.iter().copied());
            x.extend_from(&BitString::from_bools(b.iter().copied()));
            let expect: BitString = a.iter().chain(&b).copied().collect();
            prop_assert_eq!(x, expect);
        }
    }
}
