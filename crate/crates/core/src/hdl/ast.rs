// SPDX-License-Identifier: Apache-2.0
//! Parse tree produced by [`super::parser`], before name resolution.

use super::ir::Edge;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprAst {
    pub kind: ExprAstKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprAstKind {
    Num { value: u128, size: Option<u32> },
    Ident(String),
    Index { name: String, index: Box<ExprAst> },
    Range { name: String, msb: Box<ExprAst>, lsb: Box<ExprAst> },
    Concat(Vec<ExprAst>),
    Repeat { count: Box<ExprAst>, parts: Vec<ExprAst> },
    Unary(&'static str, Box<ExprAst>),
    Binary(&'static str, Box<ExprAst>, Box<ExprAst>),
    Ternary(Box<ExprAst>, Box<ExprAst>, Box<ExprAst>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LvAst {
    pub name: String,
    pub msb: Option<ExprAst>,
    pub lsb: Option<ExprAst>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtAst {
    Block(Vec<StmtAst>),
    If {
        cond: ExprAst,
        then_branch: Box<StmtAst>,
        else_branch: Option<Box<StmtAst>>,
    },
    Case {
        subject: ExprAst,
        arms: Vec<(Vec<ExprAst>, StmtAst)>,
        default: Option<Box<StmtAst>>,
        line: usize,
    },
    Assign {
        target: LvAst,
        nonblocking: bool,
        delay: u32,
        value: ExprAst,
        line: usize,
    },
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    Input,
    Output,
    OutputReg,
    Reg,
    Wire,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclAst {
    pub kind: DeclKind,
    pub range: Option<(ExprAst, ExprAst)>,
    pub name: String,
    pub init: Option<ExprAst>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Decl(DeclAst),
    Param {
        name: String,
        value: ExprAst,
        line: usize,
    },
    Rom {
        name: String,
        range: Option<(ExprAst, ExprAst)>,
        depth: (ExprAst, ExprAst),
        words: Vec<ExprAst>,
        line: usize,
    },
    Assign {
        delay: u32,
        target: LvAst,
        value: ExprAst,
        line: usize,
    },
    AlwaysComb {
        body: StmtAst,
        line: usize,
    },
    AlwaysFf {
        triggers: Vec<(Edge, String)>,
        body: StmtAst,
        line: usize,
    },
    Instance {
        module: String,
        name: String,
        connections: Vec<(String, Option<ExprAst>)>,
        line: usize,
    },
    Assert {
        name: String,
        expr: ExprAst,
        line: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleAst {
    pub name: String,
    pub ports: Vec<DeclAst>,
    pub items: Vec<Item>,
    pub line: usize,
}
