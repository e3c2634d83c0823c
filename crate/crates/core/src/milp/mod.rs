//! Mixed-integer linear model of the scheduling problem.
//!
//! [`build_model`] turns an [`Instance`](crate::domain::Instance) into a
//! [`MilpModel`]; [`extract_schedule`] maps a solver assignment back to a
//! [`Schedule`](crate::domain::Schedule). Every variable carries an
//! [`Entity`] that is recoverable from its name alone, so a model re-read
//! from LP text keeps its meaning.

mod build;
mod extract;
mod lp_format;

pub use build::{build_model, build_model_masked, transition_time_s};
pub use extract::{extract_schedule, ExtractError, FEAS_TOL, INT_TOL};
pub use lp_format::{export_lp, import_lp, LpFormatError};

use std::collections::HashMap;
use std::fmt;

use crate::domain::{DtwKey, OtwKey, SatId, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse row, sorted by variable index, no duplicates.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Reference to one imaging slot: a window used for component 1 or 2 of its
/// task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotRef {
    pub key: OtwKey,
    pub component: u8,
}

/// Meaning of a model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entity {
    /// Task component performed at all (`xv`, `xv2`).
    TaskSelected {
        task: TaskId,
        component: u8,
    },
    /// Task component performed by a given satellite (`xa`, `xa2`).
    SatSelected {
        task: TaskId,
        sat: SatId,
        component: u8,
    },
    /// Window chosen for a component (`x`, `xs`).
    Window(SlotRef),
    /// Imaging start time (`t`, `ts`).
    Start(SlotRef),
    /// Pitch at imaging start (`th`, `ths`).
    Pitch(SlotRef),
    DownloadActive(DtwKey),
    DownloadStart(DtwKey),
    DownloadEnd(DtwKey),
    /// 1 when `first` precedes `second` on their common satellite.
    ObsOrder {
        first: SlotRef,
        second: SlotRef,
    },
    /// 1 when `first` precedes `second`.
    DownloadOrder {
        first: DtwKey,
        second: DtwKey,
    },
}

fn comp_suffix(c: u8) -> &'static str {
    if c == 2 {
        "2"
    } else {
        ""
    }
}

impl Entity {
    pub fn name(&self) -> String {
        match *self {
            Entity::TaskSelected { task, component } => {
                format!("xv{}_{task}", comp_suffix(component))
            }
            Entity::SatSelected {
                task,
                sat,
                component,
            } => {
                format!("xa{}_{task}_{sat}", comp_suffix(component))
            }
            Entity::Window(s) => slot_name(if s.component == 2 { "xs" } else { "x" }, s),
            Entity::Start(s) => slot_name(if s.component == 2 { "ts" } else { "t" }, s),
            Entity::Pitch(s) => slot_name(if s.component == 2 { "ths" } else { "th" }, s),
            Entity::DownloadActive(d) => dtw_name("z", d),
            Entity::DownloadStart(d) => dtw_name("ta", d),
            Entity::DownloadEnd(d) => dtw_name("tb", d),
            Entity::ObsOrder { first, second } => format!(
                "o_{}_{}_{}_{}_{}_{}_{}",
                first.key.sat,
                first.component,
                first.key.task,
                first.key.index,
                second.component,
                second.key.task,
                second.key.index
            ),
            Entity::DownloadOrder { first, second } => format!(
                "od_{}_{}_{}_{}_{}_{}",
                first.download, first.sat, first.index, second.download, second.sat, second.index
            ),
        }
    }

    /// Inverse of [`Entity::name`].
    pub fn parse(name: &str) -> Option<Entity> {
        let (kind, rest) = name.split_once('_')?;
        let nums: Vec<u32> = rest
            .split('_')
            .map(|p| p.parse().ok())
            .collect::<Option<_>>()?;
        let slot = |c: u8| match nums[..] {
            [v, s, k] => Some(SlotRef {
                key: OtwKey {
                    task: v,
                    sat: s,
                    index: k,
                },
                component: c,
            }),
            _ => None,
        };
        let dtw = || match nums[..] {
            [d, s, l] => Some(DtwKey {
                download: d,
                sat: s,
                index: l,
            }),
            _ => None,
        };
        let component_of = |c: u32| u8::try_from(c).ok().filter(|c| (1..=2).contains(c));
        let e = match kind {
            "xv" | "xv2" => match nums[..] {
                [v] => Entity::TaskSelected {
                    task: v,
                    component: if kind == "xv2" { 2 } else { 1 },
                },
                _ => return None,
            },
            "xa" | "xa2" => match nums[..] {
                [v, s] => Entity::SatSelected {
                    task: v,
                    sat: s,
                    component: if kind == "xa2" { 2 } else { 1 },
                },
                _ => return None,
            },
            "x" => Entity::Window(slot(1)?),
            "xs" => Entity::Window(slot(2)?),
            "t" => Entity::Start(slot(1)?),
            "ts" => Entity::Start(slot(2)?),
            "th" => Entity::Pitch(slot(1)?),
            "ths" => Entity::Pitch(slot(2)?),
            "z" => Entity::DownloadActive(dtw()?),
            "ta" => Entity::DownloadStart(dtw()?),
            "tb" => Entity::DownloadEnd(dtw()?),
            "o" => match nums[..] {
                [s, c1, v1, k1, c2, v2, k2] => Entity::ObsOrder {
                    first: SlotRef {
                        key: OtwKey {
                            task: v1,
                            sat: s,
                            index: k1,
                        },
                        component: component_of(c1)?,
                    },
                    second: SlotRef {
                        key: OtwKey {
                            task: v2,
                            sat: s,
                            index: k2,
                        },
                        component: component_of(c2)?,
                    },
                },
                _ => return None,
            },
            "od" => match nums[..] {
                [d1, s1, l1, d2, s2, l2] => Entity::DownloadOrder {
                    first: DtwKey {
                        download: d1,
                        sat: s1,
                        index: l1,
                    },
                    second: DtwKey {
                        download: d2,
                        sat: s2,
                        index: l2,
                    },
                },
                _ => return None,
            },
            _ => return None,
        };
        Some(e)
    }
}

fn slot_name(prefix: &str, s: SlotRef) -> String {
    format!("{prefix}_{}_{}_{}", s.key.task, s.key.sat, s.key.index)
}

fn dtw_name(prefix: &str, d: DtwKey) -> String {
    format!("{prefix}_{}_{}_{}", d.download, d.sat, d.index)
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Maximization MILP with a name index and a per-variable semantic map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Sparse objective, sorted by variable index.
    pub objective: Vec<(usize, f64)>,
    pub entities: Vec<Entity>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate variable name {0}")]
    DuplicateVariable(String),
    #[error("variable name {0} does not denote a model entity")]
    UnknownEntity(String),
    #[error("constraint {0} references an undeclared variable")]
    UndeclaredVariable(String),
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares the variable for `entity`, returning its index.
    pub fn add_var(&mut self, entity: Entity, kind: VarKind, lower: f64, upper: f64) -> usize {
        let name = entity.name();
        debug_assert!(!self.index.contains_key(&name), "duplicate variable {name}");
        let j = self.variables.len();
        self.index.insert(name.clone(), j);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.entities.push(entity);
        j
    }

    /// Adds a row; duplicate entries are merged and zeros dropped.
    pub fn add_row(&mut self, name: String, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut row: Vec<(usize, f64)> = coeffs.to_vec();
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (j, a) in row {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        self.constraints.push(Constraint {
            name,
            coeffs: merged,
            sense,
            rhs,
        });
    }

    pub fn set_objective(&mut self, coeffs: &[(usize, f64)]) {
        let mut obj = coeffs.to_vec();
        obj.sort_by_key(|e| e.0);
        obj.retain(|e| e.1 != 0.0);
        self.objective = obj;
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn var_of(&self, entity: &Entity) -> Option<usize> {
        self.var_index(&entity.name())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * values[j]).sum()
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
    }

    /// Whether every objective coefficient is integral, so any integer-
    /// feasible objective value is an integer.
    pub fn integral_objective(&self) -> bool {
        self.objective
            .iter()
            .all(|&(j, c)| c.fract() == 0.0 && self.variables[j].kind == VarKind::Binary)
    }

    /// Rebuilds a model from raw parts, recovering entities from names.
    pub fn from_parts(
        variables: Vec<Variable>,
        constraints: Vec<Constraint>,
        objective: Vec<(usize, f64)>,
    ) -> Result<Self, ModelError> {
        let mut index = HashMap::with_capacity(variables.len());
        let mut entities = Vec::with_capacity(variables.len());
        for (j, v) in variables.iter().enumerate() {
            if index.insert(v.name.clone(), j).is_some() {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
            entities.push(
                Entity::parse(&v.name).ok_or_else(|| ModelError::UnknownEntity(v.name.clone()))?,
            );
        }
        for c in &constraints {
            if c.coeffs.iter().any(|&(j, _)| j >= variables.len()) {
                return Err(ModelError::UndeclaredVariable(c.name.clone()));
            }
        }
        Ok(MilpModel {
            variables,
            constraints,
            objective,
            entities,
            index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_names_round_trip() {
        let s1 = SlotRef {
            key: OtwKey {
                task: 3,
                sat: 1,
                index: 2,
            },
            component: 1,
        };
        let s2 = SlotRef {
            component: 2,
            key: OtwKey { task: 7, ..s1.key },
        };
        let d = DtwKey {
            download: 4,
            sat: 1,
            index: 0,
        };
        let all = [
            Entity::TaskSelected {
                task: 3,
                component: 1,
            },
            Entity::TaskSelected {
                task: 3,
                component: 2,
            },
            Entity::SatSelected {
                task: 3,
                sat: 1,
                component: 2,
            },
            Entity::Window(s1),
            Entity::Window(s2),
            Entity::Start(s2),
            Entity::Pitch(s1),
            Entity::DownloadActive(d),
            Entity::DownloadStart(d),
            Entity::DownloadEnd(d),
            Entity::ObsOrder {
                first: s1,
                second: s2,
            },
            Entity::DownloadOrder {
                first: d,
                second: DtwKey { index: 1, ..d },
            },
        ];
        for e in all {
            assert_eq!(Entity::parse(&e.name()), Some(e), "{}", e.name());
            assert!(e.name().len() <= 64);
        }
        assert_eq!(Entity::parse("q_1_2"), None);
        assert_eq!(Entity::parse("x_1_2"), None);
    }

    #[test]
    fn rows_merge_duplicates_and_drop_zeros() {
        let mut m = MilpModel::new();
        let a = m.add_var(
            Entity::TaskSelected {
                task: 0,
                component: 1,
            },
            VarKind::Binary,
            0.0,
            1.0,
        );
        let b = m.add_var(
            Entity::TaskSelected {
                task: 1,
                component: 1,
            },
            VarKind::Binary,
            0.0,
            1.0,
        );
        m.add_row(
            "r".into(),
            &[(b, 1.0), (a, 2.0), (b, -1.0), (a, 1.0)],
            Sense::Le,
            3.0,
        );
        assert_eq!(m.constraints[0].coeffs, vec![(a, 3.0)]);
    }
}
