// SPDX-License-Identifier: Apache-2.0
//! Block-removal trimming that preserves a run signature.

use crate::harness::{Harness, Outcome};
use crate::sim::SimError;

const TRIM_MIN_BYTES: usize = 4;
const TRIM_START_STEPS: usize = 16;
const TRIM_END_STEPS: usize = 1024;

/// Removes blocks of power-of-two sizes, from `len_p2 / 16` down to 4
/// bytes, keeping each removal whose signature equals the original's.
/// `run` returns `None` once the caller's budget is spent; trimming then
/// stops with what it has. Inputs under five bytes are returned as is.
pub fn trim_by<T: PartialEq>(input: &[u8], mut run: impl FnMut(&[u8]) -> Option<T>) -> Vec<u8> {
    let mut buf = input.to_vec();
    if buf.len() <= TRIM_MIN_BYTES {
        return buf;
    }
    let Some(reference) = run(&buf) else {
        return buf;
    };
    let len_p2 = buf.len().next_power_of_two();
    let mut remove_len = (len_p2 / TRIM_START_STEPS).max(TRIM_MIN_BYTES);
    let end = (len_p2 / TRIM_END_STEPS).max(TRIM_MIN_BYTES);
    while remove_len >= end {
        let mut pos = 0;
        while pos < buf.len() {
            let cut = remove_len.min(buf.len() - pos);
            let mut candidate = Vec::with_capacity(buf.len() - cut);
            candidate.extend_from_slice(&buf[..pos]);
            candidate.extend_from_slice(&buf[pos + cut..]);
            match run(&candidate) {
                None => return buf,
                Some(sig) if sig == reference => buf = candidate,
                Some(_) => pos += remove_len,
            }
        }
        if remove_len == TRIM_MIN_BYTES {
            break;
        }
        remove_len /= 2;
    }
    buf
}

/// Run signature used for trimming: the sorted bucket set and the verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimSignature {
    pub buckets: Vec<u16>,
    pub fault: Option<String>,
}

pub fn signature(h: &mut Harness, input: &[u8]) -> Result<TrimSignature, SimError> {
    let v = h.run(input)?;
    let mut buckets = h.monitor.map.touched().to_vec();
    buckets.sort_unstable();
    let fault = match v.outcome {
        Outcome::Fault { property, .. } => Some(property),
        Outcome::Clean => None,
    };
    Ok(TrimSignature { buckets, fault })
}

/// Trims `input` against `h` without any execution budget.
pub fn trim(h: &mut Harness, input: &[u8]) -> Result<Vec<u8>, SimError> {
    let mut err = None;
    let out = trim_by(input, |cand| match signature(h, cand) {
        Ok(s) => Some(s),
        Err(e) => {
            err = Some(e);
            None
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
