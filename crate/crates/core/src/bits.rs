// SPDX-License-Identifier: Apache-2.0
//! Two-state bit vectors up to 128 bits wide.

use std::fmt;

use thiserror::Error;

/// Widest signal the frontend and simulator accept.
pub const MAX_WIDTH: u32 = 128;

/// Mask covering the low `width` bits.
#[inline]
pub fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// Number of bits needed to represent `value` (at least 1).
pub fn bits_needed(value: u128) -> u32 {
    (128 - value.leading_zeros()).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("width {0} outside 1..=128")]
    BadWidth(u32),
    #[error("value 0x{value:x} does not fit in {width} bits")]
    Overflow { value: u128, width: u32 },
}

/// A fixed-width unsigned bit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    value: u128,
    width: u32,
}

impl Bits {
    pub fn new(value: u128, width: u32) -> Result<Self, BitsError> {
        if width == 0 || width > MAX_WIDTH {
            return Err(BitsError::BadWidth(width));
        }
        if value & !mask(width) != 0 {
            return Err(BitsError::Overflow { value, width });
        }
        Ok(Bits { value, width })
    }

    /// Builds a vector, discarding bits above `width`.
    pub fn truncating(value: u128, width: u32) -> Self {
        let width = width.clamp(1, MAX_WIDTH);
        Bits {
            value: value & mask(width),
            width,
        }
    }

    pub fn zero(width: u32) -> Self {
        Bits::truncating(0, width)
    }

    pub fn value(self) -> u128 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.width.div_ceil(4) as usize;
        write!(f, "{:0digits$x}", self.value)
    }
}

/// MSB-first reader over a byte buffer, yielding zeros once exhausted.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: usize,
    cursor: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader {
            bytes,
            bit_len: bytes.len() * 8,
            cursor: 0,
        }
    }

    /// Reader limited to the first `bit_len` bits of `bytes`.
    pub fn with_bit_len(bytes: &'a [u8], bit_len: usize) -> Self {
        BitReader {
            bytes,
            bit_len: bit_len.min(bytes.len() * 8),
            cursor: 0,
        }
    }

    /// Bits consumed so far, padding included.
    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn exhausted(&self) -> bool {
        self.cursor >= self.bit_len
    }

    /// Data bits still available before zero padding starts.
    pub fn remaining(&self) -> usize {
        self.bit_len.saturating_sub(self.cursor)
    }

    /// Takes `width` bits (MSB first) as an integer.
    pub fn take(&mut self, width: u32) -> u128 {
        let mut out = 0u128;
        for _ in 0..width {
            let bit = if self.cursor < self.bit_len {
                (self.bytes[self.cursor / 8] >> (7 - self.cursor % 8)) & 1
            } else {
                0
            };
            out = (out << 1) | bit as u128;
            self.cursor += 1;
        }
        out
    }
}

/// MSB-first writer, the inverse of [`BitReader`].
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: u128, width: u32) {
        for i in (0..width).rev() {
            let bit = ((value >> i) & 1) as u8;
            if self.bit_len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if bit == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 1 << (7 - self.bit_len % 8);
            }
            self.bit_len += 1;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn width_checks() {
        assert!(Bits::new(0x1ff, 8).is_err());
        assert!(Bits::new(0, 0).is_err());
        assert!(Bits::new(u128::MAX, 128).is_ok());
        assert_eq!(Bits::truncating(0x1ff, 8).value(), 0xff);
    }

    #[test]
    fn reader_pads_with_zeros() {
        let mut r = BitReader::with_bit_len(&[0b1011_0100], 6);
        assert_eq!(r.take(14), 0b101101 << 8);
        assert_eq!(r.consumed(), 14);
        assert!(r.exhausted());
    }

    proptest! {
        #[test]
        fn writer_reader_inverse(fields in proptest::collection::vec((1u32..=128, any::<u128>()), 0..12)) {
            let mut w = BitWriter::new();
            for (width, v) in &fields {
                w.push(v & mask(*width), *width);
            }
            let bytes = w.into_bytes();
            let mut r = BitReader::new(&bytes);
            for (width, v) in &fields {
                prop_assert_eq!(r.take(*width), v & mask(*width));
            }
        }
    }
}
