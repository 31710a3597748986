//! Plain-text instance format for regression corpora and the `solve` command.
//!
//! ```text
//! # comment
//! users 4
//! gamma 1e-9
//! protected 1 2 3
//! arc 1 2
//! arc 1 5
//! utility 1 2 1 123.5
//! interference 1 0 2e-7 0 0 4e-10
//! ```
//!
//! Nodes are numeric labels with the eNB at `users + 1`. `utility` lines are
//! `tx rx mode value`. An `interference` line gives the row of one
//! transmitter over all `users + 1` receivers; missing rows are zero. The
//! `users` line must come first.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Candidate, ModeAssignment, SelectionError, SelectionProblem};
use crate::model::{Arc, Mode, Node};
use crate::radio::InterferenceTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("instance has no `users` line")]
    MissingUsers,
    #[error(transparent)]
    Problem(#[from] SelectionError),
}

pub fn parse_instance(text: &str) -> Result<SelectionProblem, InstanceError> {
    let mut n_users: Option<usize> = None;
    let mut gamma: Option<f64> = None;
    let mut protected = Vec::new();
    let mut arcs = Vec::new();
    let mut candidates = Vec::new();
    let mut table: Option<InterferenceTable> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| InstanceError::Parse { line: line_no, msg };
        let mut fields = line.split_whitespace();
        let keyword = fields.next().unwrap_or_default();
        let rest: Vec<&str> = fields.collect();

        if keyword == "users" {
            if n_users.is_some() {
                return Err(err("duplicate `users` line".into()));
            }
            let [v] = rest.as_slice() else {
                return Err(err("expected `users N`".into()));
            };
            let n = v
                .parse()
                .map_err(|_| err(format!("bad user count `{v}`")))?;
            n_users = Some(n);
            table = Some(InterferenceTable::zeros(n));
            continue;
        }
        let n = n_users.ok_or(InstanceError::MissingUsers)?;
        let node = |s: &str| -> Result<Node, InstanceError> {
            s.parse::<usize>()
                .ok()
                .and_then(|l| Node::from_label(l, n))
                .ok_or_else(|| err(format!("bad node label `{s}`")))
        };
        let number = |s: &str| -> Result<f64, InstanceError> {
            s.parse::<f64>()
                .map_err(|_| err(format!("bad number `{s}`")))
        };
        let arc = |a: &str, b: &str| -> Result<Arc, InstanceError> {
            Arc::between(node(a)?, node(b)?).ok_or_else(|| err("self-loop arc".into()))
        };
        match (keyword, rest.as_slice()) {
            ("gamma", [g]) => gamma = Some(number(g)?),
            ("protected", ids) => {
                for id in ids {
                    match node(id)? {
                        Node::User(u) => protected.push(u),
                        Node::Enb => {}
                    }
                }
            }
            ("arc", [a, b]) => arcs.push(arc(a, b)?),
            ("utility", [a, b, m, u]) => {
                let mode = m
                    .parse::<u8>()
                    .ok()
                    .and_then(Mode::from_index)
                    .ok_or_else(|| err(format!("bad mode `{m}`")))?;
                candidates.push(Candidate {
                    arc: arc(a, b)?,
                    mode,
                    utility: number(u)?,
                });
            }
            ("interference", [from, values @ ..]) => {
                let from = node(from)?;
                if values.len() != n + 1 {
                    return Err(err(format!("expected {} values", n + 1)));
                }
                let t = table.as_mut().expect("table exists once users is set");
                for (to, v) in values.iter().enumerate() {
                    let v = number(v)?;
                    if !(v >= 0.0) {
                        return Err(err("interference must be >= 0".into()));
                    }
                    t.set(from, Node::from_label(to + 1, n).unwrap(), v);
                }
            }
            _ => return Err(err(format!("unrecognized line `{line}`"))),
        }
    }
    let n = n_users.ok_or(InstanceError::MissingUsers)?;
    let gamma = gamma.ok_or(InstanceError::Parse {
        line: 0,
        msg: "missing `gamma` line".into(),
    })?;
    Ok(SelectionProblem::new(
        n,
        arcs,
        candidates,
        table.expect("table exists once users is set"),
        gamma,
        protected,
    )?)
}

pub fn write_instance(p: &SelectionProblem) -> String {
    let n = p.n_users();
    let mut s = String::new();
    let _ = writeln!(s, "users {n}");
    let _ = writeln!(s, "gamma {:?}", p.gamma());
    let users: Vec<String> = p
        .protected()
        .iter()
        .filter_map(|x| x.user())
        .map(|u| u.to_string())
        .collect();
    let _ = writeln!(s, "protected {}", users.join(" "));
    for a in p.arcs() {
        let _ = writeln!(s, "arc {} {}", a.tx.label(n), a.rx.label(n));
    }
    for c in p.candidates() {
        let _ = writeln!(
            s,
            "utility {} {} {} {:?}",
            c.arc.tx.label(n),
            c.arc.rx.label(n),
            c.mode.index(),
            c.utility
        );
    }
    for (i, row) in p.interference().rows().enumerate() {
        if row.iter().any(|&v| v != 0.0) {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "interference {} {}", i + 1, vals.join(" "));
        }
    }
    s
}

/// Solver output as printed by the `solve` command.
pub fn format_assignment(p: &SelectionProblem, a: &ModeAssignment, solver: &str) -> String {
    let n = p.n_users();
    let mut s = String::new();
    let _ = writeln!(s, "solver {solver}");
    let _ = writeln!(s, "objective {}", a.objective);
    let _ = writeln!(s, "active {}", a.chosen.len());
    for (arc, mode) in &a.chosen {
        let u = p
            .candidate_index(arc, *mode)
            .map(|k| p.candidates()[k].utility)
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            "{} {} {} {}",
            arc.tx.label(n),
            arc.rx.label(n),
            mode.index(),
            u
        );
    }
    s
}
