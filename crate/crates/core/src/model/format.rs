//! Line-oriented text format for problems.
//!
//! ```text
//! agent a1
//! var x1 a1 R B G
//! con x1 x2 forbid R,R B,B G,G
//! con x5 allow G
//! ```
//!
//! `allow` lists the feasible tuples, `forbid` the infeasible ones. Blank
//! lines and `#` comments are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{for_each_tuple, ModelError, Problem, ProblemBuilder, VarId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.contains([',', '#']) && !s.chars().any(char::is_whitespace)
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let mut b = ProblemBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        let Some(head) = toks.first() else { continue };
        let syntax = |msg: &str| ParseError::Syntax { line, msg: msg.to_string() };
        let model = |source| ParseError::Model { line, source };
        match *head {
            "agent" => {
                if toks.len() != 2 {
                    return Err(syntax("expected `agent NAME`"));
                }
                b.agent(toks[1]).map_err(model)?;
            }
            "var" => {
                if toks.len() < 4 {
                    return Err(syntax("expected `var NAME AGENT VALUE...`"));
                }
                let owner = b
                    .problem
                    .agent_by_name(toks[2])
                    .ok_or_else(|| model(ModelError::UnknownAgent(toks[2].to_string())))?;
                if !valid_token(toks[1]) {
                    return Err(syntax("bad variable name"));
                }
                b.variable(toks[1], owner, toks[3..].iter().copied()).map_err(model)?;
            }
            "con" => {
                let mode_at = toks
                    .iter()
                    .position(|t| *t == "allow" || *t == "forbid")
                    .ok_or_else(|| syntax("expected `allow` or `forbid`"))?;
                let mut scope = Vec::new();
                for name in &toks[1..mode_at] {
                    let v = b.var_by_name(name).ok_or_else(|| model(ModelError::UnknownVariable(name.to_string())))?;
                    scope.push(v);
                }
                let mut tuples = Vec::new();
                for t in &toks[mode_at + 1..] {
                    let vals: Vec<&str> = t.split(',').collect();
                    if vals.len() != scope.len() {
                        return Err(syntax(&format!("tuple `{t}` does not match the scope arity")));
                    }
                    let mut idx = Vec::with_capacity(vals.len());
                    for (v, val) in scope.iter().zip(vals) {
                        idx.push(b.value_index(*v, val).map_err(model)?);
                    }
                    tuples.push(idx);
                }
                let allow = toks[mode_at] == "allow";
                let listed: std::collections::BTreeSet<Vec<usize>> = tuples.into_iter().collect();
                b.constraint_fn(&scope, |t| listed.contains(t) == allow).map_err(model)?;
            }
            other => return Err(syntax(&format!("unknown directive `{other}`"))),
        }
    }
    b.build().map_err(|source| ParseError::Model { line: 0, source })
}

/// Writes a problem in the text format. Each constraint lists whichever of its
/// feasible or infeasible tuples is shorter, so parsing the output yields an
/// identical problem.
pub fn write_problem(p: &Problem) -> String {
    let mut out = String::new();
    for a in p.agents() {
        let _ = writeln!(out, "agent {a}");
    }
    for v in p.variables() {
        let _ = writeln!(out, "var {} {} {}", v.name, p.agents()[v.owner.index()], v.domain.join(" "));
    }
    for c in p.constraints() {
        let names: Vec<&str> = c.scope().iter().map(|v| p.var(*v).name.as_str()).collect();
        let infeasible = c.count_infeasible();
        let allow = c.table().len() - infeasible < infeasible;
        let mut line = format!("con {} {}", names.join(" "), if allow { "allow" } else { "forbid" });
        for_each_tuple(c.dims(), |t| {
            if c.allows(t) == allow {
                let vals: Vec<&str> =
                    t.iter().zip(c.scope()).map(|(x, v): (&usize, &VarId)| p.var(*v).domain[*x].as_str()).collect();
                line.push(' ');
                line.push_str(&vals.join(","));
            }
        });
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::colouring_example;

    #[test]
    fn colouring_example_round_trips() {
        let p = colouring_example();
        let text = write_problem(&p);
        assert_eq!(parse_problem(&text).unwrap(), p);
        assert!(text.contains("con x5 allow G"));
        assert!(text.contains("con x1 x2 forbid R,R B,B G,G"));
    }

    #[test]
    fn rejects_unknown_value() {
        let text = "agent a\nvar x a 0 1\ncon x forbid 2\n";
        assert!(matches!(
            parse_problem(text),
            Err(ParseError::Model { line: 3, source: ModelError::UnknownValue { .. } })
        ));
    }

    #[test]
    fn rejects_arity_mismatch_and_garbage() {
        let text = "agent a\nvar x a 0 1\nvar y a 0 1\ncon x y forbid 0\n";
        assert!(matches!(parse_problem(text), Err(ParseError::Syntax { line: 4, .. })));
        assert!(matches!(parse_problem("frobnicate\n"), Err(ParseError::Syntax { line: 1, .. })));
    }

    #[test]
    fn comments_and_empty_allow() {
        let text = "# header\nagent a\nvar x a 0 1 # two values\ncon x allow\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.constraints()[0].table(), &[false, false]);
        assert_eq!(parse_problem(&write_problem(&p)).unwrap(), p);
    }
}
