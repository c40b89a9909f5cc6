// SPDX-License-Identifier: Apache-2.0
//! Processes lowered to flat stack-machine programs. Semantics match the
//! tree interpreter in `exec`, which the unit tests below check against.

use super::exec::Update;
use crate::bits::mask;
use crate::hdl::{BinaryOp, Expr, ExprKind, Process, ProcessKind, Rom, Stmt, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(u128),
    Sig(u32),
    Slice {
        sig: u32,
        lsb: u32,
        mask: u128,
    },
    DynBit {
        sig: u32,
        mask: u128,
    },
    Rom {
        rom: u32,
        mask: u128,
    },
    /// Pops `b`, `a`; pushes `a << width | b`.
    ShlOr(u32),
    Mask(u128),
    Not(u128),
    Neg(u128),
    LogicNot,
    RedAnd(u128),
    RedOr,
    RedXor,
    Bool,
    Bin(BinaryOp, u128),
    Jz(u32),
    Jnz(u32),
    Jmp(u32),
    Store {
        sig: u32,
        lsb: u32,
        mask: u128,
        delay: u32,
    },
    SaveTemp(u32),
    EqTemp(u32),
}

#[derive(Debug, Clone)]
pub(crate) struct Program {
    ops: Vec<Op>,
    /// Blocking semantics need a local view of earlier assignments.
    overlay: bool,
    temps: usize,
    /// Maximum evaluation stack depth.
    depth: usize,
}

#[derive(Debug, Default, Clone)]
pub(crate) struct Scratch {
    stack: Vec<u128>,
    temps: Vec<u128>,
    local: Vec<(u32, u128)>,
}

struct Builder {
    ops: Vec<Op>,
    temps: u32,
}

impl Builder {
    fn here(&self) -> u32 {
        self.ops.len() as u32
    }

    fn patch(&mut self, at: u32, target: u32) {
        match &mut self.ops[at as usize] {
            Op::Jz(t) | Op::Jnz(t) | Op::Jmp(t) => *t = target,
            _ => unreachable!("patching a non-jump"),
        }
    }

    fn expr(&mut self, e: &Expr) {
        let m = mask(e.width);
        match &e.kind {
            ExprKind::Const(v) => self.ops.push(Op::Const(*v)),
            ExprKind::Signal(s) => self.ops.push(Op::Sig(s.0)),
            ExprKind::Slice { signal, lsb } => self.ops.push(Op::Slice {
                sig: signal.0,
                lsb: *lsb,
                mask: m,
            }),
            ExprKind::DynBit { signal, index } => {
                self.expr(index);
                self.ops.push(Op::DynBit { sig: signal.0, mask: m });
            }
            ExprKind::Rom { rom, index } => {
                self.expr(index);
                self.ops.push(Op::Rom { rom: rom.0, mask: m });
            }
            ExprKind::Concat(parts) => {
                for (k, p) in parts.iter().enumerate() {
                    self.expr(p);
                    if k > 0 {
                        self.ops.push(Op::ShlOr(p.width));
                    }
                }
                self.ops.push(Op::Mask(m));
            }
            ExprKind::Unary(op, a) => {
                self.expr(a);
                self.ops.push(match op {
                    UnaryOp::Not => Op::Not(m),
                    UnaryOp::Neg => Op::Neg(m),
                    UnaryOp::LogicNot => Op::LogicNot,
                    UnaryOp::RedAnd => Op::RedAnd(mask(a.width)),
                    UnaryOp::RedOr => Op::RedOr,
                    UnaryOp::RedXor => Op::RedXor,
                });
            }
            ExprKind::Binary(BinaryOp::LogicAnd, a, b) => {
                self.expr(a);
                let jz = self.here();
                self.ops.push(Op::Jz(0));
                self.expr(b);
                self.ops.push(Op::Bool);
                let jmp = self.here();
                self.ops.push(Op::Jmp(0));
                let zero = self.here();
                self.patch(jz, zero);
                self.ops.push(Op::Const(0));
                let end = self.here();
                self.patch(jmp, end);
            }
            ExprKind::Binary(BinaryOp::LogicOr, a, b) => {
                self.expr(a);
                let jz = self.here();
                self.ops.push(Op::Jz(0));
                self.ops.push(Op::Const(1));
                let jmp = self.here();
                self.ops.push(Op::Jmp(0));
                let rhs = self.here();
                self.patch(jz, rhs);
                self.expr(b);
                self.ops.push(Op::Bool);
                let end = self.here();
                self.patch(jmp, end);
            }
            ExprKind::Binary(op, a, b) => {
                self.expr(a);
                self.expr(b);
                self.ops.push(Op::Bin(*op, m));
            }
            ExprKind::Ternary(c, a, b) => {
                self.expr(c);
                let jz = self.here();
                self.ops.push(Op::Jz(0));
                self.expr(a);
                let jmp = self.here();
                self.ops.push(Op::Jmp(0));
                let other = self.here();
                self.patch(jz, other);
                self.expr(b);
                let end = self.here();
                self.patch(jmp, end);
                self.ops.push(Op::Mask(m));
            }
        }
    }

    fn stmts(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Assign { target, value, delay, .. } => {
                self.expr(value);
                self.ops.push(Op::Store {
                    sig: target.signal.0,
                    lsb: target.lsb,
                    mask: mask(target.width),
                    delay: *delay,
                });
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond);
                let jz = self.here();
                self.ops.push(Op::Jz(0));
                self.stmts(then_branch);
                if else_branch.is_empty() {
                    let end = self.here();
                    self.patch(jz, end);
                } else {
                    let jmp = self.here();
                    self.ops.push(Op::Jmp(0));
                    let other = self.here();
                    self.patch(jz, other);
                    self.stmts(else_branch);
                    let end = self.here();
                    self.patch(jmp, end);
                }
            }
            Stmt::Case { subject, arms, default } => {
                let slot = self.temps;
                self.temps += 1;
                self.expr(subject);
                self.ops.push(Op::SaveTemp(slot));
                let mut arm_jumps = Vec::with_capacity(arms.len());
                for arm in arms {
                    let mut js = Vec::new();
                    for l in &arm.labels {
                        self.expr(l);
                        self.ops.push(Op::EqTemp(slot));
                        js.push(self.here());
                        self.ops.push(Op::Jnz(0));
                    }
                    arm_jumps.push(js);
                }
                self.stmts(default);
                let mut ends = vec![self.here()];
                self.ops.push(Op::Jmp(0));
                for (arm, js) in arms.iter().zip(arm_jumps) {
                    let start = self.here();
                    for j in js {
                        self.patch(j, start);
                    }
                    self.stmts(&arm.body);
                    ends.push(self.here());
                    self.ops.push(Op::Jmp(0));
                }
                let end = self.here();
                for j in ends {
                    self.patch(j, end);
                }
            }
        }
    }
}

/// Upper bound on stack depth: the running depth along the op sequence,
/// which counts the pushes of both arms of every branch.
fn max_depth(ops: &[Op]) -> usize {
    let (mut d, mut max) = (0i64, 0i64);
    for op in ops {
        d += match op {
            Op::Const(_) | Op::Sig(_) | Op::Slice { .. } => 1,
            Op::ShlOr(_) | Op::Bin(..) | Op::Jz(_) | Op::Jnz(_) | Op::SaveTemp(_) | Op::Store { .. } => -1,
            _ => 0,
        };
        max = max.max(d);
    }
    max.max(1) as usize
}

impl Program {
    pub fn compile(p: &Process) -> Program {
        let mut b = Builder { ops: Vec::new(), temps: 0 };
        b.stmts(&p.body);
        let single = matches!(p.body.as_slice(), [Stmt::Assign { .. }]);
        let depth = max_depth(&b.ops);
        Program {
            depth,
            ops: b.ops,
            overlay: p.kind == ProcessKind::Combinational && !single,
            temps: b.temps as usize,
        }
    }

    /// Runs against committed `values`, with the same contract as
    /// `exec::run_process`.
    pub fn run(&self, values: &[u128], roms: &[Rom], sc: &mut Scratch, updates: &mut Vec<Update>, delayed: &mut Vec<(u32, Update)>, zero_delay: bool) {
        if self.overlay {
            self.exec::<true>(values, roms, sc, updates, delayed, zero_delay);
            for &(s, v) in &sc.local {
                updates.push(Update::full(crate::hdl::SignalId(s), v));
            }
        } else {
            self.exec::<false>(values, roms, sc, updates, delayed, zero_delay);
        }
    }

    #[inline(always)]
    fn load<const OVERLAY: bool>(values: &[u128], local: &[(u32, u128)], sig: u32) -> u128 {
        if OVERLAY {
            for &(s, v) in local {
                if s == sig {
                    return v;
                }
            }
        }
        values[sig as usize]
    }

    fn exec<const OVERLAY: bool>(
        &self,
        values: &[u128],
        roms: &[Rom],
        sc: &mut Scratch,
        updates: &mut Vec<Update>,
        delayed: &mut Vec<(u32, Update)>,
        zero_delay: bool,
    ) {
        let Scratch { stack, temps, local } = sc;
        if stack.len() < self.depth {
            stack.resize(self.depth, 0);
        }
        let st = &mut stack[..];
        let mut sp = 0usize;
        local.clear();
        if temps.len() < self.temps {
            temps.resize(self.temps, 0);
        }
        let ops = &self.ops;
        macro_rules! push {
            ($v:expr) => {{
                let v = $v;
                st[sp] = v;
                sp += 1;
            }};
        }
        macro_rules! pop {
            () => {{
                sp -= 1;
                st[sp]
            }};
        }
        let mut pc = 0usize;
        while pc < ops.len() {
            let op = ops[pc];
            pc += 1;
            match op {
                Op::Const(v) => push!(v),
                Op::Sig(s) => push!(Self::load::<OVERLAY>(values, local, s)),
                Op::Slice { sig, lsb, mask } => push!((Self::load::<OVERLAY>(values, local, sig) >> lsb) & mask),
                Op::DynBit { sig, mask } => {
                    let i = pop!();
                    let v = if i < 128 { Self::load::<OVERLAY>(values, local, sig) >> i } else { 0 };
                    push!(v & mask);
                }
                Op::Rom { rom, mask } => {
                    let i = pop!();
                    let w = roms[rom as usize].words.get(i as usize).copied().unwrap_or(0);
                    push!(w & mask);
                }
                Op::ShlOr(w) => {
                    let b = pop!();
                    let a = pop!();
                    push!(if w >= 128 { b } else { (a << w) | b });
                }
                Op::Mask(m) => {
                    let t = &mut st[sp - 1];
                    *t &= m;
                }
                Op::Not(m) => {
                    let t = &mut st[sp - 1];
                    *t = !*t & m;
                }
                Op::Neg(m) => {
                    let t = &mut st[sp - 1];
                    *t = t.wrapping_neg() & m;
                }
                Op::LogicNot => {
                    let t = &mut st[sp - 1];
                    *t = (*t == 0) as u128;
                }
                Op::RedAnd(m) => {
                    let t = &mut st[sp - 1];
                    *t = (*t == m) as u128;
                }
                Op::RedOr | Op::Bool => {
                    let t = &mut st[sp - 1];
                    *t = (*t != 0) as u128;
                }
                Op::RedXor => {
                    let t = &mut st[sp - 1];
                    *t = (t.count_ones() & 1) as u128;
                }
                Op::Bin(op, m) => {
                    let y = pop!();
                    let x = pop!();
                    let v = match op {
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
                        BinaryOp::LogicAnd => (x != 0 && y != 0) as u128,
                        BinaryOp::LogicOr => (x != 0 || y != 0) as u128,
                    };
                    push!(v & m);
                }
                Op::Jz(t) => {
                    if pop!() == 0 {
                        pc = t as usize;
                    }
                }
                Op::Jnz(t) => {
                    if pop!() != 0 {
                        pc = t as usize;
                    }
                }
                Op::Jmp(t) => pc = t as usize,
                Op::SaveTemp(k) => temps[k as usize] = pop!(),
                Op::EqTemp(k) => {
                    let v = pop!();
                    push!((v == temps[k as usize]) as u128);
                }
                Op::Store { sig, lsb, mask, delay } => {
                    let v = pop!();
                    let m = mask << lsb;
                    let u = Update {
                        signal: crate::hdl::SignalId(sig),
                        mask: m,
                        value: (v << lsb) & m,
                    };
                    if delay > 0 && !zero_delay {
                        delayed.push((delay, u));
                    } else if OVERLAY {
                        match local.iter_mut().find(|(s, _)| *s == sig) {
                            Some(slot) => slot.1 = (slot.1 & !m) | u.value,
                            None => local.push((sig, (values[sig as usize] & !m) | u.value)),
                        }
                    } else {
                        updates.push(u);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::{parse_design, SourceText};
    use crate::sim::exec::reference::run_process;

    fn both(src: &str, values: &[u128]) {
        let d = parse_design(&SourceText::new(src, "t")).unwrap();
        assert_eq!(values.len(), d.signals.len());
        for p in &d.processes {
            let prog = Program::compile(p);
            for zero in [false, true] {
                let (mut u1, mut d1, mut u2, mut d2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
                run_process(p, values, &d.roms, &mut Vec::new(), &mut u1, &mut d1, zero);
                prog.run(values, &d.roms, &mut Scratch::default(), &mut u2, &mut d2, zero);
                assert_eq!(u1, u2, "line {}", p.line);
                assert_eq!(d1, d2, "line {}", p.line);
            }
        }
    }

    const SRC: &str = "module t(input clk, input [7:0] a, input [7:0] b, output reg [7:0] q = 0, output [7:0] y);
        rom [3:0] r [0:3] = '{4'd1, 4'd2, 4'd3, 4'd4};
        reg [7:0] t1;
        always @* begin
            t1 = a ^ b;
            t1[3:0] = ~t1[7:4];
            if (a > b && b != 0) t1 = t1 + 1; else if (a[0] || !b[1]) t1 = {a[3:0], b[3:0]};
        end
        assign #2 y = (a == b) ? -a : (a << b[2:0]) | &b | ^a;
        always @(posedge clk) begin
            case (a[1:0])
                2'd0, 2'd3: q <= b - a;
                2'd1: q[7:4] <= t1[3:0] ^ r[b[1:0]];
                default: q <= a[b[2:0]] ? 8'hff : 8'h0f;
            endcase
        end
    endmodule";

    #[test]
    fn compiled_matches_tree_interpreter() {
        let d = parse_design(&SourceText::new(SRC, "t")).unwrap();
        let n = d.signals.len();
        let mut rng: u64 = 0x1234_5678;
        for _ in 0..500 {
            let mut vals = vec![0u128; n];
            for (i, s) in d.signals.iter().enumerate() {
                rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                vals[i] = (rng >> 17) as u128 & mask(s.width);
            }
            both(SRC, &vals);
        }
    }
}
