// SPDX-License-Identifier: Apache-2.0
//! Masked signal updates and the reference process interpreter.

use crate::hdl::eval::Env;
use crate::hdl::SignalId;

/// A masked write of `value` into `signal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Update {
    pub signal: SignalId,
    pub mask: u128,
    pub value: u128,
}

impl Update {
    pub fn full(signal: SignalId, value: u128) -> Self {
        Update {
            signal,
            mask: u128::MAX,
            value,
        }
    }
}

pub(crate) struct Committed<'a>(pub &'a [u128]);

impl Env for Committed<'_> {
    #[inline]
    fn value(&self, s: SignalId) -> u128 {
        self.0[s.index()]
    }
}

/// Tree-walking interpreter: blocking semantics with a local overlay for
/// combinational processes, nonblocking updates for sequential ones.
#[cfg(test)]
pub(crate) mod reference {
    use super::{Committed, Update};
    use crate::bits::mask;
    use crate::hdl::eval::{eval, Env};
    use crate::hdl::{LValue, Process, ProcessKind, Rom, SignalId, Stmt};

    fn partial(lv: &LValue, value: u128) -> Update {
        let m = mask(lv.width) << lv.lsb;
        Update {
            signal: lv.signal,
            mask: m,
            value: (value << lv.lsb) & m,
        }
    }

    struct Overlay<'a> {
        base: &'a [u128],
        local: &'a [(SignalId, u128)],
    }

    impl Env for Overlay<'_> {
        #[inline]
        fn value(&self, s: SignalId) -> u128 {
            for &(id, v) in self.local {
                if id == s {
                    return v;
                }
            }
            self.base[s.index()]
        }
    }

    /// Reference interpreter for the compiled programs.
    ///
    /// Executes one process against committed `values`. Immediate results go
    /// to `updates`; delayed ones to `delayed` unless `zero_delay` is set.
    pub(crate) fn run_process(
        p: &Process,
        values: &[u128],
        roms: &[Rom],
        scratch: &mut Vec<(SignalId, u128)>,
        updates: &mut Vec<Update>,
        delayed: &mut Vec<(u32, Update)>,
        zero_delay: bool,
    ) {
        match p.kind {
            ProcessKind::Sequential => {
                let env = Committed(values);
                run_seq(&p.body, &env, roms, updates, delayed, zero_delay);
            }
            ProcessKind::Combinational => {
                if let [Stmt::Assign { target, value, delay, .. }] = p.body.as_slice() {
                    if *delay == 0 || zero_delay {
                        updates.push(partial(target, eval(value, &Committed(values), roms)));
                        return;
                    }
                }
                scratch.clear();
                run_comb(&p.body, values, roms, scratch, delayed, zero_delay);
                for &(s, v) in scratch.iter() {
                    updates.push(Update::full(s, v));
                }
            }
        }
    }

    fn select<'b>(stmt: &'b Stmt, env: &impl Env, roms: &[Rom]) -> Option<&'b [Stmt]> {
        match stmt {
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => Some(if eval(cond, env, roms) != 0 { then_branch } else { else_branch }),
            Stmt::Case { subject, arms, default } => {
                let v = eval(subject, env, roms);
                for arm in arms {
                    if arm.labels.iter().any(|l| eval(l, env, roms) == v) {
                        return Some(&arm.body);
                    }
                }
                Some(default)
            }
            Stmt::Assign { .. } => None,
        }
    }

    fn run_seq(body: &[Stmt], env: &Committed<'_>, roms: &[Rom], updates: &mut Vec<Update>, delayed: &mut Vec<(u32, Update)>, zero_delay: bool) {
        for stmt in body {
            match stmt {
                Stmt::Assign { target, value, delay, .. } => {
                    let u = partial(target, eval(value, env, roms));
                    if *delay == 0 || zero_delay {
                        updates.push(u);
                    } else {
                        delayed.push((*delay, u));
                    }
                }
                _ => {
                    if let Some(branch) = select(stmt, env, roms) {
                        run_seq(branch, env, roms, updates, delayed, zero_delay);
                    }
                }
            }
        }
    }

    fn run_comb(body: &[Stmt], values: &[u128], roms: &[Rom], local: &mut Vec<(SignalId, u128)>, delayed: &mut Vec<(u32, Update)>, zero_delay: bool) {
        for stmt in body {
            match stmt {
                Stmt::Assign { target, value, delay, .. } => {
                    let v = eval(value, &Overlay { base: values, local }, roms);
                    if *delay > 0 && !zero_delay {
                        delayed.push((*delay, partial(target, v)));
                        continue;
                    }
                    let slot = local.iter().position(|(s, _)| *s == target.signal);
                    let cur = match slot {
                        Some(i) => local[i].1,
                        None => values[target.signal.index()],
                    };
                    let u = partial(target, v);
                    let next = (cur & !u.mask) | u.value;
                    match slot {
                        Some(i) => local[i].1 = next,
                        None => local.push((target.signal, next)),
                    }
                }
                _ => {
                    let branch = select(stmt, &Overlay { base: values, local }, roms);
                    if let Some(branch) = branch {
                        run_comb(branch, values, roms, local, delayed, zero_delay);
                    }
                }
            }
        }
    }
}
