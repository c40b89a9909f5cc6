// SPDX-License-Identifier: Apache-2.0
//! Deterministic stage: walking flips, arithmetic and interesting values
//! in a fixed order whose length depends only on the input length.

use super::mutate::{INTERESTING_16, INTERESTING_32, INTERESTING_8};

const ARITH_VARIANTS: usize = 2 * 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetOp {
    BitFlip1,
    BitFlip2,
    BitFlip4,
    ByteFlip1,
    ByteFlip2,
    ByteFlip4,
    Arith8,
    Arith16,
    Arith32,
    Interesting8,
    Interesting16,
    Interesting32,
}

impl DetOp {
    pub const ORDER: [DetOp; 12] = [
        DetOp::BitFlip1,
        DetOp::BitFlip2,
        DetOp::BitFlip4,
        DetOp::ByteFlip1,
        DetOp::ByteFlip2,
        DetOp::ByteFlip4,
        DetOp::Arith8,
        DetOp::Arith16,
        DetOp::Arith32,
        DetOp::Interesting8,
        DetOp::Interesting16,
        DetOp::Interesting32,
    ];

    /// Children this operation emits for an input of `n` bytes.
    pub fn count(self, n: usize) -> usize {
        let bits = 8 * n;
        match self {
            DetOp::BitFlip1 => bits,
            DetOp::BitFlip2 => bits.saturating_sub(1),
            DetOp::BitFlip4 => bits.saturating_sub(3),
            DetOp::ByteFlip1 => n,
            DetOp::ByteFlip2 => n.saturating_sub(1),
            DetOp::ByteFlip4 => n.saturating_sub(3),
            DetOp::Arith8 => ARITH_VARIANTS * n,
            DetOp::Arith16 => ARITH_VARIANTS * n.saturating_sub(1),
            DetOp::Arith32 => ARITH_VARIANTS * n.saturating_sub(3),
            DetOp::Interesting8 => INTERESTING_8.len() * n,
            DetOp::Interesting16 => (INTERESTING_8.len() + INTERESTING_16.len()) * n.saturating_sub(1),
            DetOp::Interesting32 => (INTERESTING_8.len() + INTERESTING_16.len() + INTERESTING_32.len()) * n.saturating_sub(3),
        }
    }
}

/// Total children for an input of `n` bytes: 100 for one byte and
/// `292 n - 388` from four bytes on.
pub fn stage_len(n: usize) -> usize {
    DetOp::ORDER.iter().map(|op| op.count(n)).sum()
}

fn flip_bits(buf: &mut [u8], first: usize, count: usize) {
    for b in first..first + count {
        buf[b / 8] ^= 0x80 >> (b % 8);
    }
}

fn interesting(width: usize, k: usize) -> u32 {
    let n8 = INTERESTING_8.len();
    let n16 = INTERESTING_16.len();
    let v: i32 = if k < n8 {
        INTERESTING_8[k] as i32
    } else if k < n8 + n16 {
        INTERESTING_16[k - n8] as i32
    } else {
        INTERESTING_32[k - n8 - n16]
    };
    match width {
        1 => v as i8 as u8 as u32,
        2 => v as i16 as u16 as u32,
        _ => v as u32,
    }
}

/// The `index`-th child of the stage for `input`, or `None` past the end.
pub fn child(input: &[u8], mut index: usize) -> Option<Vec<u8>> {
    let n = input.len();
    for op in DetOp::ORDER {
        let c = op.count(n);
        if index >= c {
            index -= c;
            continue;
        }
        let mut buf = input.to_vec();
        match op {
            DetOp::BitFlip1 => flip_bits(&mut buf, index, 1),
            DetOp::BitFlip2 => flip_bits(&mut buf, index, 2),
            DetOp::BitFlip4 => flip_bits(&mut buf, index, 4),
            DetOp::ByteFlip1 | DetOp::ByteFlip2 | DetOp::ByteFlip4 => {
                let w = match op {
                    DetOp::ByteFlip1 => 1,
                    DetOp::ByteFlip2 => 2,
                    _ => 4,
                };
                buf[index..index + w].iter_mut().for_each(|b| *b ^= 0xFF);
            }
            DetOp::Arith8 | DetOp::Arith16 | DetOp::Arith32 => {
                let w = match op {
                    DetOp::Arith8 => 1,
                    DetOp::Arith16 => 2,
                    _ => 4,
                };
                let pos = index / ARITH_VARIANTS;
                let k = index % ARITH_VARIANTS;
                let d = (k / 2 + 1) as i64;
                let d = if k.is_multiple_of(2) { d } else { -d };
                let mut raw = [0u8; 4];
                raw[..w].copy_from_slice(&buf[pos..pos + w]);
                let v = u32::from_le_bytes(raw) as i64 + d;
                let out = (v as u32).to_le_bytes();
                buf[pos..pos + w].copy_from_slice(&out[..w]);
            }
            DetOp::Interesting8 | DetOp::Interesting16 | DetOp::Interesting32 => {
                let (w, per) = match op {
                    DetOp::Interesting8 => (1, INTERESTING_8.len()),
                    DetOp::Interesting16 => (2, INTERESTING_8.len() + INTERESTING_16.len()),
                    _ => (4, INTERESTING_8.len() + INTERESTING_16.len() + INTERESTING_32.len()),
                };
                let pos = index / per;
                let v = interesting(w, index % per).to_le_bytes();
                buf[pos..pos + w].copy_from_slice(&v[..w]);
            }
        }
        return Some(buf);
    }
    None
}
