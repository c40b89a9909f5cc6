// SPDX-License-Identifier: Apache-2.0
//! Recursive-descent parser for the HDL subset.

use super::ast::*;
use super::error::ParseError;
use super::ir::Edge;
use super::lexer::{Tok, Token};

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

const KEYWORDS: &[&str] = &[
    "module",
    "endmodule",
    "input",
    "output",
    "reg",
    "wire",
    "logic",
    "assign",
    "always",
    "always_comb",
    "always_ff",
    "begin",
    "end",
    "if",
    "else",
    "case",
    "endcase",
    "default",
    "posedge",
    "negedge",
    "or",
    "localparam",
    "parameter",
    "rom",
    "assert",
    "property",
];

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        let found = match &t.tok {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number { value, .. } => format!("number {value}"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(ParseError::syntax(t.line, t.column, format!("{}, found {found}", message.into())))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected '{s}'"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.error(format!("expected '{k}'"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("expected identifier"),
        }
    }

    fn number(&mut self) -> PResult<u128> {
        match *self.peek() {
            Tok::Number { value, .. } => {
                self.bump();
                Ok(value)
            }
            _ => self.error("expected number"),
        }
    }

    pub fn parse_source(&mut self) -> PResult<Vec<ModuleAst>> {
        let mut modules = Vec::new();
        while *self.peek() != Tok::Eof {
            modules.push(self.module()?);
        }
        if modules.is_empty() {
            return self.error("expected 'module'");
        }
        Ok(modules)
    }

    fn module(&mut self) -> PResult<ModuleAst> {
        let line = self.line();
        self.expect_kw("module")?;
        let name = self.ident()?;
        let mut ports = Vec::new();
        if self.eat_sym("(") {
            if !self.is_sym(")") {
                let mut current: Option<(DeclKind, Option<(ExprAst, ExprAst)>)> = None;
                loop {
                    let line = self.line();
                    if let Some(kind) = self.direction()? {
                        let range = self.opt_range()?;
                        current = Some((kind, range));
                    }
                    let Some((kind, range)) = current.clone() else {
                        return self.error("expected port direction");
                    };
                    let name = self.ident()?;
                    let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
                    ports.push(DeclAst { kind, range, name, init, line });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        let mut items = Vec::new();
        while !self.is_kw("endmodule") {
            if *self.peek() == Tok::Eof {
                return self.error("expected 'endmodule'");
            }
            self.item(&mut items)?;
        }
        self.bump();
        Ok(ModuleAst { name, ports, items, line })
    }

    fn direction(&mut self) -> PResult<Option<DeclKind>> {
        if self.eat_kw("input") {
            if !self.eat_kw("wire") {
                self.eat_kw("logic");
            }
            Ok(Some(DeclKind::Input))
        } else if self.eat_kw("output") {
            if self.eat_kw("reg") || self.eat_kw("logic") {
                Ok(Some(DeclKind::OutputReg))
            } else {
                self.eat_kw("wire");
                Ok(Some(DeclKind::Output))
            }
        } else {
            Ok(None)
        }
    }

    fn opt_range(&mut self) -> PResult<Option<(ExprAst, ExprAst)>> {
        if self.eat_sym("[") {
            let msb = self.expr()?;
            self.expect_sym(":")?;
            let lsb = self.expr()?;
            self.expect_sym("]")?;
            Ok(Some((msb, lsb)))
        } else {
            Ok(None)
        }
    }

    fn item(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        let line = self.line();
        if self.is_kw("reg") || self.is_kw("wire") || self.is_kw("logic") {
            let kind = if self.eat_kw("wire") {
                DeclKind::Wire
            } else {
                self.bump();
                DeclKind::Reg
            };
            return self.decl_list(kind, items);
        }
        if self.is_kw("input") || self.is_kw("output") {
            return self.error("port declarations belong in the module header");
        }
        if self.eat_kw("localparam") || self.eat_kw("parameter") {
            self.opt_range()?;
            loop {
                let line = self.line();
                let name = self.ident()?;
                self.expect_sym("=")?;
                let value = self.expr()?;
                items.push(Item::Param { name, value, line });
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.eat_kw("rom") {
            let range = self.opt_range()?;
            let name = self.ident()?;
            self.expect_sym("[")?;
            let lo = self.expr()?;
            self.expect_sym(":")?;
            let hi = self.expr()?;
            self.expect_sym("]")?;
            self.expect_sym("=")?;
            if !self.eat_sym("'{") {
                self.expect_sym("{")?;
            }
            let mut words = vec![self.expr()?];
            while self.eat_sym(",") {
                words.push(self.expr()?);
            }
            self.expect_sym("}")?;
            self.expect_sym(";")?;
            items.push(Item::Rom {
                name,
                range,
                depth: (lo, hi),
                words,
                line,
            });
            return Ok(());
        }
        if self.is_sym("#") || self.is_kw("assign") {
            let mut delay = self.opt_delay()?;
            self.expect_kw("assign")?;
            let inner = self.opt_delay()?;
            if delay != 0 && inner != 0 {
                return self.error("assignment has two delays");
            }
            delay = delay.max(inner);
            let target = self.lvalue()?;
            self.expect_sym("=")?;
            let value = self.expr()?;
            self.expect_sym(";")?;
            items.push(Item::Assign { delay, target, value, line });
            return Ok(());
        }
        if self.eat_kw("always_comb") {
            let body = self.stmt()?;
            items.push(Item::AlwaysComb { body, line });
            return Ok(());
        }
        if self.eat_kw("always") || self.eat_kw("always_ff") {
            self.expect_sym("@")?;
            if self.eat_sym("*") {
                let body = self.stmt()?;
                items.push(Item::AlwaysComb { body, line });
                return Ok(());
            }
            self.expect_sym("(")?;
            if self.eat_sym("*") {
                self.expect_sym(")")?;
                let body = self.stmt()?;
                items.push(Item::AlwaysComb { body, line });
                return Ok(());
            }
            let mut triggers = Vec::new();
            loop {
                let edge = if self.eat_kw("posedge") {
                    Edge::Rising
                } else if self.eat_kw("negedge") {
                    Edge::Falling
                } else {
                    return self.error("expected 'posedge' or 'negedge'");
                };
                triggers.push((edge, self.ident()?));
                if !(self.eat_kw("or") || self.eat_sym(",")) {
                    break;
                }
            }
            self.expect_sym(")")?;
            let body = self.stmt()?;
            items.push(Item::AlwaysFf { triggers, body, line });
            return Ok(());
        }
        // `label : assert property (expr);`
        if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Sym(":")) {
            let name = self.ident()?;
            self.expect_sym(":")?;
            self.expect_kw("assert")?;
            self.expect_kw("property")?;
            self.expect_sym("(")?;
            let expr = self.expr()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            items.push(Item::Assert { name, expr, line });
            return Ok(());
        }
        // `module_name instance_name ( .port(expr), ... );`
        if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Ident(_)) {
            let module = self.ident()?;
            let name = self.ident()?;
            self.expect_sym("(")?;
            let mut connections = Vec::new();
            if !self.is_sym(")") {
                loop {
                    self.expect_sym(".")?;
                    let port = self.ident()?;
                    self.expect_sym("(")?;
                    let e = if self.is_sym(")") { None } else { Some(self.expr()?) };
                    self.expect_sym(")")?;
                    connections.push((port, e));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            items.push(Item::Instance {
                module,
                name,
                connections,
                line,
            });
            return Ok(());
        }
        self.error("expected module item")
    }

    fn decl_list(&mut self, kind: DeclKind, items: &mut Vec<Item>) -> PResult<()> {
        let range = self.opt_range()?;
        loop {
            let line = self.line();
            let name = self.ident()?;
            let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
            items.push(Item::Decl(DeclAst {
                kind,
                range: range.clone(),
                name,
                init,
                line,
            }));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn opt_delay(&mut self) -> PResult<u32> {
        if self.eat_sym("#") {
            let n = self.number()?;
            u32::try_from(n).or_else(|_| self.error("delay too large"))
        } else {
            Ok(0)
        }
    }

    fn lvalue(&mut self) -> PResult<LvAst> {
        let line = self.line();
        let name = self.ident()?;
        let (mut msb, mut lsb) = (None, None);
        if self.eat_sym("[") {
            msb = Some(self.expr()?);
            if self.eat_sym(":") {
                lsb = Some(self.expr()?);
            }
            self.expect_sym("]")?;
        }
        Ok(LvAst { name, msb, lsb, line })
    }

    fn stmt(&mut self) -> PResult<StmtAst> {
        let line = self.line();
        if self.eat_kw("begin") {
            let mut body = Vec::new();
            while !self.eat_kw("end") {
                if *self.peek() == Tok::Eof {
                    return self.error("expected 'end'");
                }
                body.push(self.stmt()?);
            }
            return Ok(StmtAst::Block(body));
        }
        if self.eat_sym(";") {
            return Ok(StmtAst::Empty);
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then_branch = Box::new(self.stmt()?);
            let else_branch = if self.eat_kw("else") { Some(Box::new(self.stmt()?)) } else { None };
            return Ok(StmtAst::If {
                cond,
                then_branch,
                else_branch,
            });
        }
        if self.eat_kw("case") {
            self.expect_sym("(")?;
            let subject = self.expr()?;
            self.expect_sym(")")?;
            let mut arms = Vec::new();
            let mut default = None;
            while !self.eat_kw("endcase") {
                if self.eat_kw("default") {
                    self.eat_sym(":");
                    if default.is_some() {
                        return self.error("duplicate default arm");
                    }
                    default = Some(Box::new(self.stmt()?));
                    continue;
                }
                if *self.peek() == Tok::Eof {
                    return self.error("expected 'endcase'");
                }
                let mut labels = vec![self.expr()?];
                while self.eat_sym(",") {
                    labels.push(self.expr()?);
                }
                self.expect_sym(":")?;
                arms.push((labels, self.stmt()?));
            }
            return Ok(StmtAst::Case { subject, arms, default, line });
        }
        let target = self.lvalue()?;
        let nonblocking = if self.eat_sym("<=") {
            true
        } else if self.eat_sym("=") {
            false
        } else {
            return self.error("expected '=' or '<='");
        };
        let delay = self.opt_delay()?;
        let value = self.expr()?;
        self.expect_sym(";")?;
        Ok(StmtAst::Assign {
            target,
            nonblocking,
            delay,
            value,
            line,
        })
    }

    pub fn expr(&mut self) -> PResult<ExprAst> {
        let line = self.line();
        let cond = self.binary(0)?;
        if self.eat_sym("?") {
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(ExprAst {
                kind: ExprAstKind::Ternary(Box::new(cond), Box::new(a), Box::new(b)),
                line,
            });
        }
        Ok(cond)
    }

    fn binary(&mut self, min_level: usize) -> PResult<ExprAst> {
        const LEVELS: &[&[&str]] = &[
            &["||"],
            &["&&"],
            &["|"],
            &["^"],
            &["&"],
            &["==", "!="],
            &["<", "<=", ">", ">="],
            &["<<", ">>"],
            &["+", "-"],
            &["*"],
        ];
        if min_level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(min_level + 1)?;
        loop {
            let op = match self.peek() {
                Tok::Sym(s) if LEVELS[min_level].contains(s) => *s,
                _ => break,
            };
            let line = self.line();
            self.bump();
            let rhs = self.binary(min_level + 1)?;
            lhs = ExprAst {
                kind: ExprAstKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                line,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<ExprAst> {
        let line = self.line();
        for op in ["~&", "~|", "~^", "~", "!", "-", "&", "|", "^", "+"] {
            if self.eat_sym(op) {
                let inner = self.unary()?;
                if op == "+" {
                    return Ok(inner);
                }
                return Ok(ExprAst {
                    kind: ExprAstKind::Unary(op, Box::new(inner)),
                    line,
                });
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<ExprAst> {
        let line = self.line();
        match self.peek().clone() {
            Tok::Number { value, size } => {
                self.bump();
                Ok(ExprAst {
                    kind: ExprAstKind::Num { value, size },
                    line,
                })
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                let first = self.expr()?;
                if self.eat_sym("{") {
                    let mut parts = vec![self.expr()?];
                    while self.eat_sym(",") {
                        parts.push(self.expr()?);
                    }
                    self.expect_sym("}")?;
                    self.expect_sym("}")?;
                    return Ok(ExprAst {
                        kind: ExprAstKind::Repeat { count: Box::new(first), parts },
                        line,
                    });
                }
                let mut parts = vec![first];
                while self.eat_sym(",") {
                    parts.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(ExprAst {
                    kind: ExprAstKind::Concat(parts),
                    line,
                })
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat_sym("[") {
                    let first = self.expr()?;
                    if self.eat_sym(":") {
                        let lsb = self.expr()?;
                        self.expect_sym("]")?;
                        return Ok(ExprAst {
                            kind: ExprAstKind::Range {
                                name,
                                msb: Box::new(first),
                                lsb: Box::new(lsb),
                            },
                            line,
                        });
                    }
                    self.expect_sym("]")?;
                    return Ok(ExprAst {
                        kind: ExprAstKind::Index { name, index: Box::new(first) },
                        line,
                    });
                }
                Ok(ExprAst {
                    kind: ExprAstKind::Ident(name),
                    line,
                })
            }
            _ => self.error("expected expression"),
        }
    }
}
