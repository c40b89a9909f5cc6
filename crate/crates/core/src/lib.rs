// SPDX-License-Identifier: Apache-2.0
//! Value-guided fuzzing for hardware designs written in a small HDL subset.

pub mod bench;
pub mod bits;
pub mod cli;
pub mod coverage;
pub mod depgraph;
pub mod fuzzer;
pub mod harness;
pub mod hdl;
pub mod sim;
