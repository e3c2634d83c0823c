//! Plain-text LP export and import.
//!
//! ```text
//! MAXIMIZE
//!  obj: + 4 xv_0
//! SUBJECT TO
//!  task_0: + 1 xv_0 - 1 xa_0_0 = 0
//! BOUNDS
//!  0 <= xv_0 <= 1
//! BINARY
//!  xv_0
//! END
//! ```
//!
//! Every variable appears in BOUNDS, in declaration order, so the file alone
//! fixes the variable order. Numbers carry 12 significant digits.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Constraint, MilpModel, ModelError, Sense, VarKind, Variable};
use crate::domain::round_sig;

const DIGITS: usize = 12;

fn num(x: f64) -> String {
    let r = round_sig(x, DIGITS);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

fn terms(out: &mut String, coeffs: &[(usize, f64)], vars: &[Variable]) {
    if coeffs.is_empty() {
        out.push_str(" 0");
    }
    for &(j, a) in coeffs {
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", num(a.abs()), vars[j].name);
    }
}

/// Deterministic LP text of `model`.
pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} variables, {} constraints",
        model.variables.len(),
        model.constraints.len()
    );
    out.push_str("MAXIMIZE\n obj:");
    terms(&mut out, &model.objective, &model.variables);
    out.push_str("\nSUBJECT TO\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        terms(&mut out, &c.coeffs, &model.variables);
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", num(c.rhs));
    }
    out.push_str("BOUNDS\n");
    for v in &model.variables {
        let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper));
    }
    out.push_str("BINARY\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("END\n");
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpFormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Objective,
    Rows,
    Bounds,
    Binary,
    End,
}

struct RawRow {
    name: String,
    terms: Vec<(String, f64)>,
    sense: Sense,
    rhs: f64,
}

fn parse_terms(tokens: &[&str], line: usize) -> Result<Vec<(String, f64)>, LpFormatError> {
    let err = |m: &str| LpFormatError::Syntax {
        line,
        message: m.to_string(),
    };
    if tokens == ["0"] {
        return Ok(Vec::new());
    }
    if tokens.len() % 3 != 0 {
        return Err(err("expected `<sign> <coefficient> <name>` terms"));
    }
    tokens
        .chunks(3)
        .map(|t| {
            let sign = match t[0] {
                "+" => 1.0,
                "-" => -1.0,
                _ => return Err(err("term sign must be + or -")),
            };
            let a: f64 = t[1].parse().map_err(|_| err("bad coefficient"))?;
            Ok((t[2].to_string(), sign * a))
        })
        .collect()
}

/// Parses text produced by [`export_lp`].
pub fn import_lp(text: &str) -> Result<MilpModel, LpFormatError> {
    let mut section = Section::Start;
    let mut objective_terms = Vec::new();
    let mut rows: Vec<RawRow> = Vec::new();
    let mut variables: Vec<Variable> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |m: &str| LpFormatError::Syntax {
            line,
            message: m.to_string(),
        };
        let l = raw.trim();
        if l.is_empty() || l.starts_with('\\') {
            continue;
        }
        match l {
            "MAXIMIZE" => {
                section = Section::Objective;
                continue;
            }
            "SUBJECT TO" => {
                section = Section::Rows;
                continue;
            }
            "BOUNDS" => {
                section = Section::Bounds;
                continue;
            }
            "BINARY" => {
                section = Section::Binary;
                continue;
            }
            "END" => {
                section = Section::End;
                continue;
            }
            _ => {}
        }
        let tokens: Vec<&str> = l.split_whitespace().collect();
        match section {
            Section::Start | Section::End => return Err(err("content outside a section")),
            Section::Objective => {
                if tokens.first() != Some(&"obj:") {
                    return Err(err("objective must start with `obj:`"));
                }
                objective_terms = parse_terms(&tokens[1..], line)?;
            }
            Section::Rows => {
                let name = tokens
                    .first()
                    .and_then(|t| t.strip_suffix(':'))
                    .ok_or_else(|| err("row must start with `<name>:`"))?;
                if tokens.len() < 4 {
                    return Err(err("row too short"));
                }
                let k = tokens.len();
                let sense = match tokens[k - 2] {
                    "<=" => Sense::Le,
                    "=" => Sense::Eq,
                    ">=" => Sense::Ge,
                    _ => return Err(err("row sense must be <=, = or >=")),
                };
                let rhs: f64 = tokens[k - 1]
                    .parse()
                    .map_err(|_| err("bad right-hand side"))?;
                rows.push(RawRow {
                    name: name.to_string(),
                    terms: parse_terms(&tokens[1..k - 2], line)?,
                    sense,
                    rhs,
                });
            }
            Section::Bounds => {
                if tokens.len() != 5 || tokens[1] != "<=" || tokens[3] != "<=" {
                    return Err(err("bound must read `lo <= name <= hi`"));
                }
                let lower: f64 = tokens[0].parse().map_err(|_| err("bad lower bound"))?;
                let upper: f64 = tokens[4].parse().map_err(|_| err("bad upper bound"))?;
                let name = tokens[2].to_string();
                if by_name.insert(name.clone(), variables.len()).is_some() {
                    return Err(err("variable bounded twice"));
                }
                variables.push(Variable {
                    name,
                    kind: VarKind::Continuous,
                    lower,
                    upper,
                });
            }
            Section::Binary => {
                if tokens.len() != 1 {
                    return Err(err("one binary name per line"));
                }
                let j = *by_name
                    .get(tokens[0])
                    .ok_or_else(|| err("binary without bounds"))?;
                variables[j].kind = VarKind::Binary;
            }
        }
    }
    if section != Section::End {
        return Err(LpFormatError::Syntax {
            line: text.lines().count(),
            message: "missing END".into(),
        });
    }

    let resolve =
        |terms: Vec<(String, f64)>, owner: &str| -> Result<Vec<(usize, f64)>, LpFormatError> {
            terms
                .into_iter()
                .map(|(n, a)| {
                    by_name
                        .get(&n)
                        .map(|&j| (j, a))
                        .ok_or_else(|| ModelError::UndeclaredVariable(owner.to_string()).into())
                })
                .collect()
        };
    let objective = resolve(objective_terms, "obj")?;
    let mut constraints = Vec::with_capacity(rows.len());
    for r in rows {
        let coeffs = resolve(r.terms, &r.name)?;
        constraints.push(Constraint {
            name: r.name,
            coeffs,
            sense: r.sense,
            rhs: r.rhs,
        });
    }
    Ok(MilpModel::from_parts(variables, constraints, objective)?)
}
