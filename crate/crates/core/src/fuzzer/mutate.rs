// SPDX-License-Identifier: Apache-2.0
//! Havoc mutations: stacked random edits in the style of AFL.

use rand::Rng;

pub const DEFAULT_MAX_LEN: usize = 4096;
const ARITH_MAX: u32 = 35;

pub const INTERESTING_8: [i8; 9] = [-128, -1, 0, 1, 16, 32, 64, 100, 127];
pub const INTERESTING_16: [i16; 10] = [-32768, -129, 128, 255, 256, 512, 1000, 1024, 4096, 32767];
pub const INTERESTING_32: [i32; 8] = [-2147483648, -100663046, -32769, 32768, 65535, 65536, 100663045, 2147483647];

/// Block length biased towards small blocks, never above `limit`.
fn block_len(rng: &mut impl Rng, limit: usize) -> usize {
    if limit <= 1 {
        return limit;
    }
    let (lo, hi) = match rng.gen_range(0..4) {
        0 => (1, 4),
        1 | 2 => (1, 32),
        _ => (32, 128),
    };
    let hi = hi.min(limit);
    let lo = lo.min(hi);
    rng.gen_range(lo..=hi)
}

fn interesting16(rng: &mut impl Rng) -> u16 {
    let i = rng.gen_range(0..INTERESTING_8.len() + INTERESTING_16.len());
    if i < INTERESTING_8.len() {
        INTERESTING_8[i] as i16 as u16
    } else {
        INTERESTING_16[i - INTERESTING_8.len()] as u16
    }
}

fn interesting32(rng: &mut impl Rng) -> u32 {
    let n8 = INTERESTING_8.len();
    let n16 = INTERESTING_16.len();
    let i = rng.gen_range(0..n8 + n16 + INTERESTING_32.len());
    if i < n8 {
        INTERESTING_8[i] as i32 as u32
    } else if i < n8 + n16 {
        INTERESTING_16[i - n8] as i32 as u32
    } else {
        INTERESTING_32[i - n8 - n16] as u32
    }
}

fn delta(rng: &mut impl Rng) -> i64 {
    let d = rng.gen_range(1..=ARITH_MAX) as i64;
    if rng.gen_bool(0.5) {
        d
    } else {
        -d
    }
}

/// Applies `1 << rand(0..=6)` stacked havoc operations to `parent`.
/// `splice` offers a second queue entry for crossover; without it the
/// splice operation falls back to a random byte edit.
pub fn havoc(parent: &[u8], splice: Option<&[u8]>, max_len: usize, rng: &mut impl Rng) -> Vec<u8> {
    let max_len = max_len.max(1);
    let mut buf: Vec<u8> = parent.iter().copied().take(max_len).collect();
    if buf.is_empty() {
        buf.push(rng.gen());
    }
    let stack = 1usize << rng.gen_range(0..=6);
    for _ in 0..stack {
        let len = buf.len();
        match rng.gen_range(0..13) {
            0 => {
                let bit = rng.gen_range(0..len * 8);
                buf[bit / 8] ^= 0x80 >> (bit % 8);
            }
            1 => {
                let i = rng.gen_range(0..len);
                buf[i] = INTERESTING_8[rng.gen_range(0..INTERESTING_8.len())] as u8;
            }
            2 if len >= 2 => {
                let i = rng.gen_range(0..len - 1);
                let v = interesting16(rng);
                let b = if rng.gen_bool(0.5) { v.to_le_bytes() } else { v.to_be_bytes() };
                buf[i..i + 2].copy_from_slice(&b);
            }
            3 if len >= 4 => {
                let i = rng.gen_range(0..len - 3);
                let v = interesting32(rng);
                let b = if rng.gen_bool(0.5) { v.to_le_bytes() } else { v.to_be_bytes() };
                buf[i..i + 4].copy_from_slice(&b);
            }
            4 | 5 => {
                let i = rng.gen_range(0..len);
                buf[i] = (buf[i] as i64 + delta(rng)) as u8;
            }
            6 if len >= 2 => {
                let i = rng.gen_range(0..len - 1);
                let be = rng.gen_bool(0.5);
                let raw = [buf[i], buf[i + 1]];
                let v = if be { u16::from_be_bytes(raw) } else { u16::from_le_bytes(raw) };
                let v = (v as i64 + delta(rng)) as u16;
                let b = if be { v.to_be_bytes() } else { v.to_le_bytes() };
                buf[i..i + 2].copy_from_slice(&b);
            }
            7 if len >= 4 => {
                let i = rng.gen_range(0..len - 3);
                let be = rng.gen_bool(0.5);
                let raw = [buf[i], buf[i + 1], buf[i + 2], buf[i + 3]];
                let v = if be { u32::from_be_bytes(raw) } else { u32::from_le_bytes(raw) };
                let v = (v as i64 + delta(rng)) as u32;
                let b = if be { v.to_be_bytes() } else { v.to_le_bytes() };
                buf[i..i + 4].copy_from_slice(&b);
            }
            9 if len >= 2 => {
                let n = block_len(rng, len - 1);
                let at = rng.gen_range(0..=len - n);
                buf.drain(at..at + n);
            }
            10 if len < max_len => {
                let n = block_len(rng, (max_len - len).min(len.max(1)));
                let at = rng.gen_range(0..=len);
                let block: Vec<u8> = if rng.gen_range(0..4) != 0 && n <= len {
                    let from = rng.gen_range(0..=len - n);
                    buf[from..from + n].to_vec()
                } else {
                    let fill = if rng.gen_bool(0.5) { rng.gen() } else { buf[rng.gen_range(0..len)] };
                    vec![fill; n]
                };
                buf.splice(at..at, block);
            }
            11 if len >= 2 => {
                let n = block_len(rng, len - 1);
                let to = rng.gen_range(0..=len - n);
                if rng.gen_range(0..4) != 0 {
                    let from = rng.gen_range(0..=len - n);
                    buf.copy_within(from..from + n, to);
                } else {
                    let fill = if rng.gen_bool(0.5) { rng.gen() } else { buf[rng.gen_range(0..len)] };
                    buf[to..to + n].fill(fill);
                }
            }
            12 if splice.is_some_and(|s| !s.is_empty()) => {
                let other = splice.expect("checked");
                let cut = rng.gen_range(0..len.min(other.len()).max(1));
                buf.truncate(cut);
                buf.extend_from_slice(&other[cut.min(other.len())..]);
                buf.truncate(max_len);
                if buf.is_empty() {
                    buf.push(rng.gen());
                }
            }
            _ => {
                let i = rng.gen_range(0..len);
                buf[i] ^= rng.gen_range(1..=255u8);
            }
        }
    }
    buf
}
