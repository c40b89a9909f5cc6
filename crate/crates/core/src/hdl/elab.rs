// SPDX-License-Identifier: Apache-2.0
//! Name resolution, width inference and hierarchy flattening.

use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use super::error::{ParseError, SemanticError};
use super::eval::{eval, NoSignals};
use super::ir::*;
use crate::bits::{bits_needed, mask, Bits, MAX_WIDTH};

type EResult<T> = Result<T, SemanticError>;

const MAX_DEPTH: usize = 32;

#[derive(Clone, Copy)]
enum Binding {
    Signal(SignalId),
    Param { value: u128, width: u32 },
    Rom(RomId),
}

type Scope = HashMap<String, Binding>;

#[derive(Clone, Copy)]
struct Cx<'a> {
    signals: &'a [SignalDecl],
    roms: &'a [Rom],
}

struct Elaborator<'a> {
    modules: HashMap<&'a str, &'a ModuleAst>,
    signals: Vec<SignalDecl>,
    roms: Vec<Rom>,
    processes: Vec<Process>,
    assertions: Vec<AssertionDecl>,
    /// Signals declared `wire`, which may not be assigned procedurally.
    is_net: Vec<bool>,
}

pub fn elaborate(modules: &[ModuleAst]) -> Result<Design, ParseError> {
    let mut map = HashMap::new();
    for m in modules {
        if map.insert(m.name.as_str(), m).is_some() {
            return Err(SemanticError::Duplicate {
                name: m.name.clone(),
                line: m.line,
            }
            .into());
        }
    }
    let instantiated: Vec<&str> = modules
        .iter()
        .flat_map(|m| m.items.iter())
        .filter_map(|i| match i {
            Item::Instance { module, .. } => Some(module.as_str()),
            _ => None,
        })
        .collect();
    let top = modules
        .iter()
        .rev()
        .find(|m| !instantiated.contains(&m.name.as_str()))
        .ok_or_else(|| SemanticError::Invalid {
            line: modules[0].line,
            message: "no top-level module (instantiation cycle)".into(),
        })?;

    let mut el = Elaborator {
        modules: map,
        signals: Vec::new(),
        roms: Vec::new(),
        processes: Vec::new(),
        assertions: Vec::new(),
        is_net: Vec::new(),
    };
    el.module(top, "", true, 0)?;
    el.check_drivers()?;
    Ok(Design {
        name: top.name.clone(),
        signals: el.signals,
        roms: el.roms,
        processes: el.processes,
        assertions: el.assertions,
    })
}

fn const_width(line: usize, ast: &(ExprAst, ExprAst), scope: &Scope, cx: Cx) -> EResult<u32> {
    let msb = const_value(&ast.0, scope, cx)?;
    let lsb = const_value(&ast.1, scope, cx)?;
    if lsb != 0 {
        return Err(SemanticError::Invalid {
            line,
            message: "ranges must have the form [msb:0]".into(),
        });
    }
    let w = msb + 1;
    if w > MAX_WIDTH as u128 {
        return Err(SemanticError::WidthMismatch {
            line,
            message: format!("width {w} exceeds {MAX_WIDTH}"),
        });
    }
    Ok(w as u32)
}

fn const_value(ast: &ExprAst, scope: &Scope, cx: Cx) -> EResult<u128> {
    let e = lower(ast, 0, scope, cx)?;
    match e.kind {
        ExprKind::Const(v) => Ok(v),
        _ => Err(SemanticError::Invalid {
            line: ast.line,
            message: "expected a constant expression".into(),
        }),
    }
}

fn lookup(scope: &Scope, name: &str, line: usize) -> EResult<Binding> {
    scope
        .get(name)
        .copied()
        .ok_or_else(|| SemanticError::UndeclaredSignal { name: name.to_string(), line })
}

/// Self-determined width of an expression.
fn self_width(ast: &ExprAst, scope: &Scope, cx: Cx) -> EResult<u32> {
    let (signals, roms) = (cx.signals, cx.roms);
    let sw = |a: &ExprAst| self_width(a, scope, cx);
    let w = match &ast.kind {
        ExprAstKind::Num { value, size } => size.unwrap_or_else(|| bits_needed(*value).max(32)),
        ExprAstKind::Ident(name) => match lookup(scope, name, ast.line)? {
            Binding::Signal(s) => signals[s.index()].width,
            Binding::Param { width, .. } => width,
            Binding::Rom(_) => {
                return Err(SemanticError::Invalid {
                    line: ast.line,
                    message: format!("ROM '{name}' used without an index"),
                })
            }
        },
        ExprAstKind::Index { name, .. } => match lookup(scope, name, ast.line)? {
            Binding::Rom(r) => roms[r.0 as usize].width,
            _ => 1,
        },
        ExprAstKind::Range { msb, lsb, .. } => {
            let hi = const_value(msb, scope, cx)?;
            let lo = const_value(lsb, scope, cx)?;
            if hi < lo {
                return Err(SemanticError::WidthMismatch {
                    line: ast.line,
                    message: format!("reversed part select [{hi}:{lo}]"),
                });
            }
            (hi - lo + 1).min(u32::MAX as u128) as u32
        }
        ExprAstKind::Concat(parts) => {
            let mut total = 0u32;
            for p in parts {
                total = total.saturating_add(sw(p)?);
            }
            total
        }
        ExprAstKind::Repeat { count, parts } => {
            let n = const_value(count, scope, cx)?;
            let mut total = 0u32;
            for p in parts {
                total = total.saturating_add(sw(p)?);
            }
            (n.min(u32::MAX as u128) as u32).saturating_mul(total)
        }
        ExprAstKind::Unary(op, a) => match *op {
            "~" | "-" => sw(a)?,
            _ => 1,
        },
        ExprAstKind::Binary(op, a, b) => match *op {
            "+" | "-" | "*" | "&" | "|" | "^" => sw(a)?.max(sw(b)?),
            "<<" | ">>" => sw(a)?,
            _ => 1,
        },
        ExprAstKind::Ternary(_, a, b) => sw(a)?.max(sw(b)?),
    };
    if w == 0 || w > MAX_WIDTH {
        return Err(SemanticError::WidthMismatch {
            line: ast.line,
            message: format!("expression width {w} outside 1..={MAX_WIDTH}"),
        });
    }
    Ok(w)
}

fn unary_op(op: &str) -> UnaryOp {
    match op {
        "~" => UnaryOp::Not,
        "!" => UnaryOp::LogicNot,
        "-" => UnaryOp::Neg,
        "&" => UnaryOp::RedAnd,
        "|" => UnaryOp::RedOr,
        "^" => UnaryOp::RedXor,
        _ => unreachable!("unary {op}"),
    }
}

fn binary_op(op: &str) -> BinaryOp {
    match op {
        "+" => BinaryOp::Add,
        "-" => BinaryOp::Sub,
        "*" => BinaryOp::Mul,
        "&" => BinaryOp::And,
        "|" => BinaryOp::Or,
        "^" => BinaryOp::Xor,
        "<<" => BinaryOp::Shl,
        ">>" => BinaryOp::Shr,
        "==" => BinaryOp::Eq,
        "!=" => BinaryOp::Ne,
        "<" => BinaryOp::Lt,
        "<=" => BinaryOp::Le,
        ">" => BinaryOp::Gt,
        ">=" => BinaryOp::Ge,
        "&&" => BinaryOp::LogicAnd,
        "||" => BinaryOp::LogicOr,
        _ => unreachable!("binary {op}"),
    }
}

fn fold(e: Expr, roms: &[Rom]) -> Expr {
    let foldable = match &e.kind {
        ExprKind::Const(_) | ExprKind::Signal(_) | ExprKind::Slice { .. } | ExprKind::DynBit { .. } => false,
        ExprKind::Rom { index, .. } => matches!(index.kind, ExprKind::Const(_)),
        ExprKind::Concat(parts) => parts.iter().all(|p| matches!(p.kind, ExprKind::Const(_))),
        ExprKind::Unary(_, a) => matches!(a.kind, ExprKind::Const(_)),
        ExprKind::Binary(_, a, b) => matches!(a.kind, ExprKind::Const(_)) && matches!(b.kind, ExprKind::Const(_)),
        ExprKind::Ternary(c, a, b) => [c, a, b].iter().all(|x| matches!(x.kind, ExprKind::Const(_))),
    };
    if foldable {
        Expr::constant(eval(&e, &NoSignals, roms), e.width)
    } else {
        e
    }
}

/// Lowers an AST expression; `ctx` is the context width (0 = self-determined).
fn lower(ast: &ExprAst, ctx: u32, scope: &Scope, cx: Cx) -> EResult<Expr> {
    let (signals, roms) = (cx.signals, cx.roms);
    let line = ast.line;
    let own = self_width(ast, scope, cx)?;
    let w = own.max(ctx).min(MAX_WIDTH);
    let rec = |a: &ExprAst, c: u32| lower(a, c, scope, cx);
    let e = match &ast.kind {
        ExprAstKind::Num { value, size } => {
            if let Some(size) = size {
                if *value & !mask(*size) != 0 {
                    return Err(SemanticError::WidthMismatch {
                        line,
                        message: format!("literal value {value} does not fit in {size} bits"),
                    });
                }
            }
            Expr::constant(*value, w)
        }
        ExprAstKind::Ident(name) => match lookup(scope, name, line)? {
            Binding::Signal(s) => Expr {
                kind: ExprKind::Signal(s),
                width: signals[s.index()].width,
            },
            Binding::Param { value, .. } => Expr::constant(value, w),
            Binding::Rom(_) => unreachable!("rejected by self_width"),
        },
        ExprAstKind::Index { name, index } => match lookup(scope, name, line)? {
            Binding::Rom(r) => {
                let idx = rec(index, 0)?;
                let rom = &roms[r.0 as usize];
                if let ExprKind::Const(i) = idx.kind {
                    if i as usize >= rom.words.len() {
                        return Err(SemanticError::WidthMismatch {
                            line,
                            message: format!("index {i} outside ROM '{name}' of depth {}", rom.words.len()),
                        });
                    }
                }
                Expr {
                    kind: ExprKind::Rom { rom: r, index: Box::new(idx) },
                    width: rom.width,
                }
            }
            Binding::Signal(s) => {
                let sw = signals[s.index()].width;
                let idx = rec(index, 0)?;
                match idx.kind {
                    ExprKind::Const(i) => {
                        if i >= sw as u128 {
                            return Err(SemanticError::WidthMismatch {
                                line,
                                message: format!("bit {i} outside '{name}' of width {sw}"),
                            });
                        }
                        Expr {
                            kind: ExprKind::Slice { signal: s, lsb: i as u32 },
                            width: 1,
                        }
                    }
                    _ => Expr {
                        kind: ExprKind::DynBit {
                            signal: s,
                            index: Box::new(idx),
                        },
                        width: 1,
                    },
                }
            }
            Binding::Param { value, .. } => {
                let i = const_value(index, scope, cx)?;
                Expr::constant(if i < 128 { (value >> i) & 1 } else { 0 }, 1)
            }
        },
        ExprAstKind::Range { name, msb, lsb } => {
            let hi = const_value(msb, scope, cx)? as u32;
            let lo = const_value(lsb, scope, cx)? as u32;
            match lookup(scope, name, line)? {
                Binding::Signal(s) => {
                    let sw = signals[s.index()].width;
                    if hi >= sw {
                        return Err(SemanticError::WidthMismatch {
                            line,
                            message: format!("part select [{hi}:{lo}] outside '{name}' of width {sw}"),
                        });
                    }
                    Expr {
                        kind: ExprKind::Slice { signal: s, lsb: lo },
                        width: hi - lo + 1,
                    }
                }
                Binding::Param { value, .. } => Expr::constant(value >> lo, hi - lo + 1),
                Binding::Rom(_) => {
                    return Err(SemanticError::Invalid {
                        line,
                        message: format!("part select on ROM '{name}'"),
                    })
                }
            }
        }
        ExprAstKind::Concat(parts) => {
            let parts = parts.iter().map(|p| rec(p, 0)).collect::<EResult<Vec<_>>>()?;
            Expr {
                kind: ExprKind::Concat(parts),
                width: own,
            }
        }
        ExprAstKind::Repeat { count, parts } => {
            let n = const_value(count, scope, cx)? as usize;
            let one = parts.iter().map(|p| rec(p, 0)).collect::<EResult<Vec<_>>>()?;
            let mut all = Vec::with_capacity(n * one.len());
            for _ in 0..n {
                all.extend(one.iter().cloned());
            }
            Expr {
                kind: ExprKind::Concat(all),
                width: own,
            }
        }
        ExprAstKind::Unary(op, a) => match *op {
            "~" | "-" => Expr {
                kind: ExprKind::Unary(unary_op(op), Box::new(rec(a, w)?)),
                width: w,
            },
            "~&" | "~|" | "~^" => {
                let inner = Expr {
                    kind: ExprKind::Unary(unary_op(&op[1..]), Box::new(rec(a, 0)?)),
                    width: 1,
                };
                Expr {
                    kind: ExprKind::Unary(UnaryOp::Not, Box::new(inner)),
                    width: 1,
                }
            }
            _ => Expr {
                kind: ExprKind::Unary(unary_op(op), Box::new(rec(a, 0)?)),
                width: 1,
            },
        },
        ExprAstKind::Binary(op, a, b) => match *op {
            "+" | "-" | "*" | "&" | "|" | "^" => Expr {
                kind: ExprKind::Binary(binary_op(op), Box::new(rec(a, w)?), Box::new(rec(b, w)?)),
                width: w,
            },
            "<<" | ">>" => Expr {
                kind: ExprKind::Binary(binary_op(op), Box::new(rec(a, w)?), Box::new(rec(b, 0)?)),
                width: w,
            },
            "&&" | "||" => Expr {
                kind: ExprKind::Binary(binary_op(op), Box::new(rec(a, 0)?), Box::new(rec(b, 0)?)),
                width: 1,
            },
            _ => {
                let cw = self_width(a, scope, cx)?.max(self_width(b, scope, cx)?);
                Expr {
                    kind: ExprKind::Binary(binary_op(op), Box::new(rec(a, cw)?), Box::new(rec(b, cw)?)),
                    width: 1,
                }
            }
        },
        ExprAstKind::Ternary(c, a, b) => Expr {
            kind: ExprKind::Ternary(Box::new(rec(c, 0)?), Box::new(rec(a, w)?), Box::new(rec(b, w)?)),
            width: w,
        },
    };
    Ok(fold(e, roms))
}

impl<'a> Elaborator<'a> {
    fn cx(&self) -> Cx<'_> {
        Cx {
            signals: &self.signals,
            roms: &self.roms,
        }
    }

    fn lower(&self, ast: &ExprAst, ctx: u32, scope: &Scope) -> EResult<Expr> {
        lower(ast, ctx, scope, self.cx())
    }

    #[allow(clippy::too_many_arguments)]
    fn declare(&mut self, scope: &mut Scope, prefix: &str, name: &str, width: u32, kind: SignalKind, net: bool, line: usize) -> EResult<SignalId> {
        if scope.contains_key(name) {
            return Err(SemanticError::Duplicate { name: name.to_string(), line });
        }
        let id = SignalId(self.signals.len() as u32);
        self.signals.push(SignalDecl {
            id,
            name: format!("{prefix}{name}"),
            width,
            kind,
            init: Bits::zero(width),
        });
        self.is_net.push(net);
        scope.insert(name.to_string(), Binding::Signal(id));
        Ok(id)
    }

    fn set_init(&mut self, id: SignalId, init: &ExprAst, scope: &Scope) -> EResult<()> {
        let width = self.signals[id.index()].width;
        if let ExprAstKind::Num { size: Some(size), .. } = init.kind {
            if size != width {
                return Err(SemanticError::WidthMismatch {
                    line: init.line,
                    message: format!("initial value has width {size}, signal '{}' has width {width}", self.signals[id.index()].name),
                });
            }
        }
        let v = const_value(init, scope, self.cx())?;
        let b = Bits::new(v, width).map_err(|_| SemanticError::WidthMismatch {
            line: init.line,
            message: format!("initial value {v} does not fit in {width} bits"),
        })?;
        self.signals[id.index()].init = b;
        Ok(())
    }

    /// Elaborates one module instance; returns its ports by local name.
    fn module(&mut self, m: &ModuleAst, prefix: &str, top: bool, depth: usize) -> EResult<Vec<(String, SignalId, DeclKind)>> {
        if depth > MAX_DEPTH {
            return Err(SemanticError::Invalid {
                line: m.line,
                message: "instantiation nested too deeply".into(),
            });
        }
        let mut scope: Scope = HashMap::new();
        // Parameters first so that port ranges may use them.
        for item in &m.items {
            if let Item::Param { name, value, line } = item {
                let e = self.lower(value, 0, &scope)?;
                let ExprKind::Const(v) = e.kind else {
                    return Err(SemanticError::Invalid {
                        line: *line,
                        message: format!("parameter '{name}' is not constant"),
                    });
                };
                if scope.insert(name.clone(), Binding::Param { value: v, width: e.width }).is_some() {
                    return Err(SemanticError::Duplicate {
                        name: name.clone(),
                        line: *line,
                    });
                }
            }
        }
        let mut ports = Vec::new();
        for p in &m.ports {
            let width = match &p.range {
                Some(r) => const_width(p.line, r, &scope, self.cx())?,
                None => 1,
            };
            let kind = match (top, p.kind) {
                (true, DeclKind::Input) => SignalKind::Input,
                (true, _) => SignalKind::Output,
                (false, DeclKind::OutputReg) => SignalKind::Register,
                (false, _) => SignalKind::Wire,
            };
            let net = matches!(p.kind, DeclKind::Output | DeclKind::Input);
            let id = self.declare(&mut scope, prefix, &p.name, width, kind, net && !(top && p.kind == DeclKind::Input), p.line)?;
            if let Some(init) = &p.init {
                if p.kind != DeclKind::OutputReg {
                    return Err(SemanticError::Invalid {
                        line: p.line,
                        message: format!("only registers take an initial value ('{}')", p.name),
                    });
                }
                self.set_init(id, init, &scope)?;
            }
            ports.push((p.name.clone(), id, p.kind));
        }

        for item in &m.items {
            match item {
                Item::Param { .. } => {}
                Item::Decl(d) => {
                    let width = match &d.range {
                        Some(r) => const_width(d.line, r, &scope, self.cx())?,
                        None => 1,
                    };
                    let (kind, net) = match d.kind {
                        DeclKind::Wire => (SignalKind::Wire, true),
                        _ => (SignalKind::Register, false),
                    };
                    let id = self.declare(&mut scope, prefix, &d.name, width, kind, net, d.line)?;
                    if let Some(init) = &d.init {
                        if net {
                            let value = self.lower(init, width, &scope)?;
                            self.processes.push(Process {
                                kind: ProcessKind::Combinational,
                                triggers: Vec::new(),
                                body: vec![Stmt::Assign {
                                    target: LValue { signal: id, lsb: 0, width },
                                    value,
                                    nonblocking: false,
                                    delay: 0,
                                }],
                                line: d.line,
                            });
                        } else {
                            self.set_init(id, init, &scope)?;
                        }
                    }
                }
                Item::Rom {
                    name,
                    range,
                    depth: (lo, hi),
                    words,
                    line,
                } => {
                    let width = match range {
                        Some(r) => const_width(*line, r, &scope, self.cx())?,
                        None => 1,
                    };
                    let lo = const_value(lo, &scope, self.cx())?;
                    let hi = const_value(hi, &scope, self.cx())?;
                    if lo != 0 || hi < lo {
                        return Err(SemanticError::Invalid {
                            line: *line,
                            message: "ROM depth must have the form [0:last]".into(),
                        });
                    }
                    if words.len() as u128 != hi + 1 {
                        return Err(SemanticError::WidthMismatch {
                            line: *line,
                            message: format!("ROM '{name}' declares {} words but lists {}", hi + 1, words.len()),
                        });
                    }
                    let mut vals = Vec::with_capacity(words.len());
                    for w in words {
                        let v = const_value(w, &scope, self.cx())?;
                        if v & !mask(width) != 0 {
                            return Err(SemanticError::WidthMismatch {
                                line: w.line,
                                message: format!("ROM word {v} does not fit in {width} bits"),
                            });
                        }
                        vals.push(v);
                    }
                    if scope.contains_key(name) {
                        return Err(SemanticError::Duplicate {
                            name: name.clone(),
                            line: *line,
                        });
                    }
                    let id = RomId(self.roms.len() as u32);
                    self.roms.push(Rom {
                        name: format!("{prefix}{name}"),
                        width,
                        words: vals,
                    });
                    scope.insert(name.clone(), Binding::Rom(id));
                }
                Item::Assign { delay, target, value, line } => {
                    let lv = self.lvalue(target, &scope)?;
                    let value = self.lower(value, lv.width, &scope)?;
                    self.processes.push(Process {
                        kind: ProcessKind::Combinational,
                        triggers: Vec::new(),
                        body: vec![Stmt::Assign {
                            target: lv,
                            value,
                            nonblocking: false,
                            delay: *delay,
                        }],
                        line: *line,
                    });
                }
                Item::AlwaysComb { body, line } => {
                    let body = self.stmts(body, &scope, ProcessKind::Combinational)?;
                    self.processes.push(Process {
                        kind: ProcessKind::Combinational,
                        triggers: Vec::new(),
                        body,
                        line: *line,
                    });
                }
                Item::AlwaysFf { triggers, body, line } => {
                    let mut trig = Vec::new();
                    for (edge, name) in triggers {
                        let Binding::Signal(s) = lookup(&scope, name, *line)? else {
                            return Err(SemanticError::Invalid {
                                line: *line,
                                message: format!("'{name}' is not a signal"),
                            });
                        };
                        if self.signals[s.index()].width != 1 {
                            return Err(SemanticError::WidthMismatch {
                                line: *line,
                                message: format!("edge trigger '{name}' must be 1 bit wide"),
                            });
                        }
                        trig.push(Trigger { signal: s, edge: *edge });
                    }
                    let body = self.stmts(body, &scope, ProcessKind::Sequential)?;
                    self.processes.push(Process {
                        kind: ProcessKind::Sequential,
                        triggers: trig,
                        body,
                        line: *line,
                    });
                }
                Item::Instance {
                    module,
                    name,
                    connections,
                    line,
                } => {
                    let child = *self.modules.get(module.as_str()).ok_or_else(|| SemanticError::Invalid {
                        line: *line,
                        message: format!("unknown module '{module}'"),
                    })?;
                    if scope.contains_key(name) {
                        return Err(SemanticError::Duplicate {
                            name: name.clone(),
                            line: *line,
                        });
                    }
                    let child_prefix = format!("{prefix}{name}.");
                    let child_ports = self.module(child, &child_prefix, false, depth + 1)?;
                    for (port, conn) in connections {
                        let Some((_, pid, pkind)) = child_ports.iter().find(|(n, _, _)| n == port) else {
                            return Err(SemanticError::Invalid {
                                line: *line,
                                message: format!("module '{module}' has no port '{port}'"),
                            });
                        };
                        let Some(conn) = conn else { continue };
                        let pw = self.signals[pid.index()].width;
                        let body = if *pkind == DeclKind::Input {
                            let value = self.lower(conn, pw, &scope)?;
                            Stmt::Assign {
                                target: LValue {
                                    signal: *pid,
                                    lsb: 0,
                                    width: pw,
                                },
                                value,
                                nonblocking: false,
                                delay: 0,
                            }
                        } else {
                            let ExprAstKind::Ident(ref target) = conn.kind else {
                                return Err(SemanticError::Invalid {
                                    line: *line,
                                    message: format!("output port '{port}' must connect to a signal name"),
                                });
                            };
                            let lv = self.lvalue(
                                &LvAst {
                                    name: target.clone(),
                                    msb: None,
                                    lsb: None,
                                    line: *line,
                                },
                                &scope,
                            )?;
                            Stmt::Assign {
                                target: lv,
                                value: Expr {
                                    kind: ExprKind::Signal(*pid),
                                    width: pw,
                                },
                                nonblocking: false,
                                delay: 0,
                            }
                        };
                        self.processes.push(Process {
                            kind: ProcessKind::Combinational,
                            triggers: Vec::new(),
                            body: vec![body],
                            line: *line,
                        });
                    }
                }
                Item::Assert { name, expr, line } => {
                    let e = self.lower(expr, 0, &scope)?;
                    if e.width != 1 {
                        return Err(SemanticError::WidthMismatch {
                            line: *line,
                            message: format!("assertion '{name}' has width {}, expected 1", e.width),
                        });
                    }
                    let full = format!("{prefix}{name}");
                    if self.assertions.iter().any(|a| a.name == full) {
                        return Err(SemanticError::Duplicate { name: full, line: *line });
                    }
                    self.assertions.push(AssertionDecl { name: full, expr: e });
                }
            }
        }
        Ok(ports)
    }

    fn lvalue(&self, lv: &LvAst, scope: &Scope) -> EResult<LValue> {
        let Binding::Signal(s) = lookup(scope, &lv.name, lv.line)? else {
            return Err(SemanticError::Invalid {
                line: lv.line,
                message: format!("cannot assign to '{}'", lv.name),
            });
        };
        let sw = self.signals[s.index()].width;
        let (lsb, width) = match (&lv.msb, &lv.lsb) {
            (None, _) => (0, sw),
            (Some(bit), None) => (const_value(bit, scope, self.cx())? as u32, 1),
            (Some(hi), Some(lo)) => {
                let hi = const_value(hi, scope, self.cx())? as u32;
                let lo = const_value(lo, scope, self.cx())? as u32;
                if hi < lo {
                    return Err(SemanticError::WidthMismatch {
                        line: lv.line,
                        message: format!("reversed part select [{hi}:{lo}]"),
                    });
                }
                (lo, hi - lo + 1)
            }
        };
        if lsb + width > sw {
            return Err(SemanticError::WidthMismatch {
                line: lv.line,
                message: format!("assignment range outside '{}' of width {sw}", lv.name),
            });
        }
        Ok(LValue { signal: s, lsb, width })
    }

    fn stmts(&self, ast: &StmtAst, scope: &Scope, kind: ProcessKind) -> EResult<Vec<Stmt>> {
        let mut out = Vec::new();
        self.stmt_into(ast, scope, kind, &mut out)?;
        Ok(out)
    }

    fn stmt_into(&self, ast: &StmtAst, scope: &Scope, kind: ProcessKind, out: &mut Vec<Stmt>) -> EResult<()> {
        match ast {
            StmtAst::Empty => {}
            StmtAst::Block(items) => {
                for s in items {
                    self.stmt_into(s, scope, kind, out)?;
                }
            }
            StmtAst::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cond = self.lower(cond, 0, scope)?;
                let then_branch = self.stmts(then_branch, scope, kind)?;
                let else_branch = match else_branch {
                    Some(e) => self.stmts(e, scope, kind)?,
                    None => Vec::new(),
                };
                out.push(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                });
            }
            StmtAst::Case { subject, arms, default, .. } => {
                let subject_ir = self.lower(subject, 0, scope)?;
                let mut arms_ir = Vec::new();
                for (labels, body) in arms {
                    let labels = labels.iter().map(|l| self.lower(l, subject_ir.width, scope)).collect::<EResult<Vec<_>>>()?;
                    arms_ir.push(CaseArm {
                        labels,
                        body: self.stmts(body, scope, kind)?,
                    });
                }
                let default = match default {
                    Some(d) => self.stmts(d, scope, kind)?,
                    None => Vec::new(),
                };
                out.push(Stmt::Case {
                    subject: subject_ir,
                    arms: arms_ir,
                    default,
                });
            }
            StmtAst::Assign {
                target,
                nonblocking,
                delay,
                value,
                line,
            } => {
                match kind {
                    ProcessKind::Sequential if !nonblocking => {
                        return Err(SemanticError::Invalid {
                            line: *line,
                            message: "clocked processes use only nonblocking assignments (<=)".into(),
                        })
                    }
                    ProcessKind::Combinational if *nonblocking => {
                        return Err(SemanticError::Invalid {
                            line: *line,
                            message: "combinational processes use only blocking assignments (=)".into(),
                        })
                    }
                    ProcessKind::Combinational if *delay > 0 => {
                        return Err(SemanticError::Invalid {
                            line: *line,
                            message: "delays inside always_comb are not supported; use a delayed assign".into(),
                        })
                    }
                    _ => {}
                }
                let lv = self.lvalue(target, scope)?;
                if self.is_net[lv.signal.index()] {
                    return Err(SemanticError::Invalid {
                        line: *line,
                        message: format!("procedural assignment to wire '{}'", target.name),
                    });
                }
                let value = self.lower(value, lv.width, scope)?;
                out.push(Stmt::Assign {
                    target: lv,
                    value,
                    nonblocking: *nonblocking,
                    delay: *delay,
                });
            }
        }
        Ok(())
    }

    fn check_drivers(&self) -> EResult<()> {
        let mut drivers: BTreeMap<SignalId, usize> = BTreeMap::new();
        for (pi, p) in self.processes.iter().enumerate() {
            for s in p.driven() {
                let decl = &self.signals[s.index()];
                if decl.kind == SignalKind::Input {
                    return Err(SemanticError::Invalid {
                        line: p.line,
                        message: format!("input '{}' cannot be driven", decl.name),
                    });
                }
                if let Some(&prev) = drivers.get(&s) {
                    if prev != pi {
                        return Err(SemanticError::MultipleDrivers {
                            signal: decl.name.clone(),
                            line: p.line,
                        });
                    }
                }
                drivers.insert(s, pi);
            }
        }
        Ok(())
    }
}
