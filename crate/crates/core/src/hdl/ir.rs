// SPDX-License-Identifier: Apache-2.0
//! Elaborated, flattened design representation shared by the simulator and
//! the dependency analysis.

use std::collections::BTreeSet;
use std::fmt;

use crate::bits::{mask, Bits};

/// Dense signal index, assigned in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct SignalId(pub u32);

impl SignalId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RomId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    Input,
    Output,
    Register,
    Wire,
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalKind::Input => "input",
            SignalKind::Output => "output",
            SignalKind::Register => "register",
            SignalKind::Wire => "wire",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalDecl {
    pub id: SignalId,
    /// Hierarchical name, `.`-separated below the top module.
    pub name: String,
    pub width: u32,
    pub kind: SignalKind,
    /// Power-on value. Zero unless the declaration gave one.
    pub init: Bits,
}

/// Constant lookup table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rom {
    pub name: String,
    pub width: u32,
    pub words: Vec<u128>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    LogicNot,
    Neg,
    RedAnd,
    RedOr,
    RedXor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogicAnd,
    LogicOr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    /// Result width in bits.
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Const(u128),
    Signal(SignalId),
    /// Constant part select `signal[lsb + width - 1 : lsb]`.
    Slice {
        signal: SignalId,
        lsb: u32,
    },
    /// Single bit selected by a run-time index.
    DynBit {
        signal: SignalId,
        index: Box<Expr>,
    },
    Rom {
        rom: RomId,
        index: Box<Expr>,
    },
    /// Operands, most significant first.
    Concat(Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: u128, width: u32) -> Expr {
        Expr {
            kind: ExprKind::Const(value & mask(width)),
            width,
        }
    }

    /// Visits every signal the expression reads, tagging reads that only
    /// select behavior (ROM indices, ternary conditions) as control reads.
    pub fn visit_reads(&self, f: &mut impl FnMut(SignalId, ReadRole)) {
        self.visit_inner(ReadRole::Data, f);
    }

    fn visit_inner(&self, role: ReadRole, f: &mut impl FnMut(SignalId, ReadRole)) {
        match &self.kind {
            ExprKind::Const(_) => {}
            ExprKind::Signal(s) | ExprKind::Slice { signal: s, .. } => f(*s, role),
            ExprKind::DynBit { signal, index } => {
                f(*signal, role);
                index.visit_inner(role, f);
            }
            ExprKind::Rom { index, .. } => index.visit_inner(ReadRole::Control, f),
            ExprKind::Concat(parts) => parts.iter().for_each(|p| p.visit_inner(role, f)),
            ExprKind::Unary(_, a) => a.visit_inner(role, f),
            ExprKind::Binary(_, a, b) => {
                a.visit_inner(role, f);
                b.visit_inner(role, f);
            }
            ExprKind::Ternary(c, a, b) => {
                c.visit_inner(ReadRole::Control, f);
                a.visit_inner(role, f);
                b.visit_inner(role, f);
            }
        }
    }

    pub fn signals(&self) -> BTreeSet<SignalId> {
        let mut out = BTreeSet::new();
        self.visit_reads(&mut |s, _| {
            out.insert(s);
        });
        out
    }
}

/// How an expression read influences the assigned value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadRole {
    Data,
    Control,
}

/// Assignment destination: a whole signal or a constant bit range of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LValue {
    pub signal: SignalId,
    pub lsb: u32,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign {
        target: LValue,
        value: Expr,
        nonblocking: bool,
        /// Delay in timesteps; zero means the next delta cycle.
        delay: u32,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    Case {
        subject: Expr,
        arms: Vec<CaseArm>,
        default: Vec<Stmt>,
    },
}

impl Stmt {
    /// Calls `f` for every assignment together with the guard expressions
    /// (if conditions, case subjects and labels) enclosing it.
    pub fn visit_assigns<'a>(&'a self, guards: &mut Vec<&'a Expr>, f: &mut impl FnMut(&'a LValue, &'a Expr, &[&'a Expr])) {
        match self {
            Stmt::Assign { target, value, .. } => f(target, value, guards),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                guards.push(cond);
                for s in then_branch.iter().chain(else_branch) {
                    s.visit_assigns(guards, f);
                }
                guards.pop();
            }
            Stmt::Case { subject, arms, default } => {
                guards.push(subject);
                let depth = guards.len();
                for arm in arms {
                    guards.extend(arm.labels.iter());
                    for s in &arm.body {
                        s.visit_assigns(guards, f);
                    }
                    guards.truncate(depth);
                }
                for s in default {
                    s.visit_assigns(guards, f);
                }
                guards.pop();
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trigger {
    pub signal: SignalId,
    pub edge: Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    Combinational,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub kind: ProcessKind,
    /// Edge sensitivity list; empty for combinational processes. The first
    /// entry is the process clock.
    pub triggers: Vec<Trigger>,
    pub body: Vec<Stmt>,
    /// Source line of the block, for diagnostics.
    pub line: usize,
}

impl Process {
    pub fn clock(&self) -> Option<Trigger> {
        self.triggers.first().copied()
    }

    /// Signals assigned anywhere in the body.
    pub fn driven(&self) -> BTreeSet<SignalId> {
        let mut out = BTreeSet::new();
        let mut guards = Vec::new();
        for s in &self.body {
            s.visit_assigns(&mut guards, &mut |lv, _, _| {
                out.insert(lv.signal);
            });
        }
        out
    }

    /// Signals read by the body (right-hand sides and guards).
    pub fn reads(&self) -> BTreeSet<SignalId> {
        fn walk(stmts: &[Stmt], out: &mut BTreeSet<SignalId>) {
            for s in stmts {
                match s {
                    Stmt::Assign { value, .. } => out.extend(value.signals()),
                    Stmt::If {
                        cond,
                        then_branch,
                        else_branch,
                    } => {
                        out.extend(cond.signals());
                        walk(then_branch, out);
                        walk(else_branch, out);
                    }
                    Stmt::Case { subject, arms, default } => {
                        out.extend(subject.signals());
                        for arm in arms {
                            for l in &arm.labels {
                                out.extend(l.signals());
                            }
                            walk(&arm.body, out);
                        }
                        walk(default, out);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.body, &mut out);
        out
    }
}

/// A checked condition; the property fires when `expr` evaluates to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionDecl {
    pub name: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub name: String,
    pub signals: Vec<SignalDecl>,
    pub roms: Vec<Rom>,
    pub processes: Vec<Process>,
    pub assertions: Vec<AssertionDecl>,
}

impl Design {
    pub fn signal(&self, id: SignalId) -> Option<&SignalDecl> {
        self.signals.get(id.index())
    }

    pub fn find_signal(&self, name: &str) -> Option<SignalId> {
        self.signals.iter().find(|s| s.name == name).map(|s| s.id)
    }

    pub fn find_assertion(&self, name: &str) -> Option<usize> {
        self.assertions.iter().position(|a| a.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &SignalDecl> {
        self.signals.iter().filter(|s| s.kind == SignalKind::Input)
    }

    /// Stable, declaration-ordered `(id, name, width, kind)` listing.
    pub fn list_signals(&self) -> Vec<(SignalId, &str, u32, SignalKind)> {
        self.signals.iter().map(|s| (s.id, s.name.as_str(), s.width, s.kind)).collect()
    }

    /// Signals used as an edge trigger by at least one process.
    pub fn clock_signals(&self) -> BTreeSet<SignalId> {
        self.processes.iter().flat_map(|p| p.triggers.iter().map(|t| t.signal)).collect()
    }
}
