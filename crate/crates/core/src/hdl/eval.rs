// SPDX-License-Identifier: Apache-2.0
//! Expression evaluation over an abstract signal environment.

use super::ir::{BinaryOp, Expr, ExprKind, Rom, SignalId, UnaryOp};
use crate::bits::mask;

pub trait Env {
    fn value(&self, signal: SignalId) -> u128;
}

/// Environment with no signals; used for constant folding.
pub struct NoSignals;

impl Env for NoSignals {
    fn value(&self, _: SignalId) -> u128 {
        0
    }
}

#[inline(always)]
pub fn eval(expr: &Expr, env: &impl Env, roms: &[Rom]) -> u128 {
    // Constants and whole-signal reads are already in range.
    match &expr.kind {
        ExprKind::Const(v) => *v,
        ExprKind::Signal(s) => env.value(*s),
        _ => eval_node(expr, env, roms),
    }
}

fn eval_node(expr: &Expr, env: &impl Env, roms: &[Rom]) -> u128 {
    let v = match &expr.kind {
        ExprKind::Const(v) => *v,
        ExprKind::Signal(s) => env.value(*s),
        ExprKind::Slice { signal, lsb } => env.value(*signal) >> lsb,
        ExprKind::DynBit { signal, index } => {
            let i = eval(index, env, roms);
            if i < 128 {
                env.value(*signal) >> i
            } else {
                0
            }
        }
        ExprKind::Rom { rom, index } => {
            let i = eval(index, env, roms);
            roms[rom.0 as usize].words.get(i as usize).copied().unwrap_or(0)
        }
        ExprKind::Concat(parts) => {
            let mut acc = 0u128;
            for p in parts {
                acc = if p.width >= 128 { 0 } else { acc << p.width };
                acc |= eval(p, env, roms);
            }
            acc
        }
        ExprKind::Unary(op, a) => {
            let x = eval(a, env, roms);
            match op {
                UnaryOp::Not => !x,
                UnaryOp::Neg => x.wrapping_neg(),
                UnaryOp::LogicNot => (x == 0) as u128,
                UnaryOp::RedAnd => (x == mask(a.width)) as u128,
                UnaryOp::RedOr => (x != 0) as u128,
                UnaryOp::RedXor => (x.count_ones() & 1) as u128,
            }
        }
        ExprKind::Binary(op, a, b) => {
            let x = eval(a, env, roms);
            match op {
                BinaryOp::LogicAnd => {
                    if x == 0 {
                        0
                    } else {
                        (eval(b, env, roms) != 0) as u128
                    }
                }
                BinaryOp::LogicOr => {
                    if x != 0 {
                        1
                    } else {
                        (eval(b, env, roms) != 0) as u128
                    }
                }
                _ => {
                    let y = eval(b, env, roms);
                    match op {
                        BinaryOp::Add => x.wrapping_add(y),
                        BinaryOp::Sub => x.wrapping_sub(y),
                        BinaryOp::Mul => x.wrapping_mul(y),
                        BinaryOp::And => x & y,
                        BinaryOp::Or => x | y,
                        BinaryOp::Xor => x ^ y,
                        BinaryOp::Shl => {
                            if y >= 128 {
                                0
                            } else {
                                x << y
                            }
                        }
                        BinaryOp::Shr => {
                            if y >= 128 {
                                0
                            } else {
                                x >> y
                            }
                        }
                        BinaryOp::Eq => (x == y) as u128,
                        BinaryOp::Ne => (x != y) as u128,
                        BinaryOp::Lt => (x < y) as u128,
                        BinaryOp::Le => (x <= y) as u128,
                        BinaryOp::Gt => (x > y) as u128,
                        BinaryOp::Ge => (x >= y) as u128,
                        BinaryOp::LogicAnd | BinaryOp::LogicOr => unreachable!(),
                    }
                }
            }
        }
        ExprKind::Ternary(c, a, b) => {
            if eval(c, env, roms) != 0 {
                eval(a, env, roms)
            } else {
                eval(b, env, roms)
            }
        }
    };
    v & mask(expr.width)
}
