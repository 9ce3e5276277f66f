//! Backend-neutral 0-1 linear models: variables with symbolic identities,
//! linear constraints, exact feasibility checking, and LP/MPS export.

mod check;
mod int;
mod lp;
mod mps;

pub use check::{check_assignment, CheckReport, Violation};
pub use int::BitEvaluator;
pub(crate) use int::{integerize, IntRow};
pub use lp::{export_lp, import_lp, LpReadError};
pub use mps::export_mps;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which family of binary variable a key belongs to.
///
/// The declaration order here is the canonical block order of a model's
/// variable list.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum VarKind {
    /// `b_{i,j}`: vehicle `i` has feature `j`.
    B,
    /// `t_{i,j}`: vehicle `i` is of type `j`.
    T,
    /// `p_{i,j}`: vehicle `i` is used for test `j`.
    P,
    /// `pd_{i,j,d}`: vehicle `i` performs expanded test `j` on day `d`.
    Pd,
}

/// Symbolic identity of one binary variable.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct VariableKey {
    pub kind: VarKind,
    pub vehicle: u32,
    /// Feature index for `B`, type index for `T`, test index for `P`/`Pd`.
    pub second: u32,
    /// Day (1-based) for `Pd`; `None` otherwise.
    pub day: Option<u32>,
}

impl VariableKey {
    pub fn b(vehicle: u32, feature: u32) -> Self {
        VariableKey { kind: VarKind::B, vehicle, second: feature, day: None }
    }

    pub fn t(vehicle: u32, vtype: u32) -> Self {
        VariableKey { kind: VarKind::T, vehicle, second: vtype, day: None }
    }

    pub fn p(vehicle: u32, test: u32) -> Self {
        VariableKey { kind: VarKind::P, vehicle, second: test, day: None }
    }

    pub fn pd(vehicle: u32, test: u32, day: u32) -> Self {
        VariableKey { kind: VarKind::Pd, vehicle, second: test, day: Some(day) }
    }

    /// Canonical text rendering, e.g. `b_3_17` or `pd_3_41_6`.
    pub fn name(&self) -> String {
        match (self.kind, self.day) {
            (VarKind::B, _) => format!("b_{}_{}", self.vehicle, self.second),
            (VarKind::T, _) => format!("t_{}_{}", self.vehicle, self.second),
            (VarKind::P, _) => format!("p_{}_{}", self.vehicle, self.second),
            (VarKind::Pd, Some(d)) => format!("pd_{}_{}_{}", self.vehicle, self.second, d),
            (VarKind::Pd, None) => unreachable!("pd key without a day"),
        }
    }

    /// Inverse of [`VariableKey::name`].
    pub fn parse_name(name: &str) -> Option<Self> {
        let mut parts = name.split('_');
        let kind = parts.next()?;
        let mut nums = Vec::new();
        for p in parts {
            nums.push(p.parse::<u32>().ok()?);
        }
        match (kind, nums.as_slice()) {
            ("b", &[i, j]) => Some(VariableKey::b(i, j)),
            ("t", &[i, j]) => Some(VariableKey::t(i, j)),
            ("p", &[i, j]) => Some(VariableKey::p(i, j)),
            ("pd", &[i, j, d]) => Some(VariableKey::pd(i, j, d)),
            _ => None,
        }
    }
}

impl fmt::Display for VariableKey {
    fmt_display_via_name!();
}

macro_rules! fmt_display_via_name {
    () => {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str(&self.name())
        }
    };
}
use fmt_display_via_name;

/// One `coefficient * variable` term; the coefficient is never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub coefficient: Rational64,
    pub variable: VariableKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

impl ConstraintSense {
    pub fn holds(self, lhs: Rational64, rhs: Rational64) -> bool {
        match self {
            ConstraintSense::Le => lhs <= rhs,
            ConstraintSense::Eq => lhs == rhs,
            ConstraintSense::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ConstraintSense::Le => "<=",
            ConstraintSense::Eq => "=",
            ConstraintSense::Ge => ">=",
        }
    }
}

/// A linear constraint with a provenance tag naming what produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<LinearTerm>,
    pub sense: ConstraintSense,
    pub rhs: Rational64,
    pub tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: ObjectiveSense,
    pub terms: Vec<LinearTerm>,
}

/// A 0-1 linear model: an ordered variable list, constraints, and an
/// optional linear objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Canonical order: B block, then T, then P/PD, each sorted by indices.
    pub variables: Vec<VariableKey>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Option<Objective>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("variable list is not sorted canonically or has duplicates")]
    UnsortedVariables,
    #[error("constraint `{0}` references undeclared variable `{1}`")]
    UnknownVariable(String, String),
    #[error("constraint `{0}` has a zero coefficient on `{1}`")]
    ZeroCoefficient(String, String),
    #[error("constraint `{0}` repeats variable `{1}`")]
    DuplicateTerm(String, String),
}

impl LinearModel {
    pub fn new(
        mut variables: Vec<VariableKey>,
        constraints: Vec<LinearConstraint>,
        objective: Option<Objective>,
    ) -> Self {
        variables.sort();
        LinearModel { variables, constraints, objective }
    }

    /// Position of each variable in the canonical order.
    pub fn index_map(&self) -> BTreeMap<VariableKey, usize> {
        self.variables.iter().enumerate().map(|(i, &v)| (v, i)).collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.variables.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::UnsortedVariables);
        }
        let index = self.index_map();
        let check_terms = |tag: &str, terms: &[LinearTerm]| {
            let mut seen = std::collections::BTreeSet::new();
            for term in terms {
                if !index.contains_key(&term.variable) {
                    return Err(ModelError::UnknownVariable(
                        tag.to_string(),
                        term.variable.name(),
                    ));
                }
                if term.coefficient == Rational64::from_integer(0) {
                    return Err(ModelError::ZeroCoefficient(
                        tag.to_string(),
                        term.variable.name(),
                    ));
                }
                if !seen.insert(term.variable) {
                    return Err(ModelError::DuplicateTerm(
                        tag.to_string(),
                        term.variable.name(),
                    ));
                }
            }
            Ok(())
        };
        for c in &self.constraints {
            check_terms(&c.tag, &c.terms)?;
        }
        if let Some(obj) = &self.objective {
            check_terms("objective", &obj.terms)?;
        }
        Ok(())
    }
}

/// Accumulates terms for one constraint, merging duplicate variables and
/// dropping cancelled ones.
pub struct ConstraintBuilder {
    terms: BTreeMap<VariableKey, Rational64>,
    tag: String,
}

impl ConstraintBuilder {
    pub fn new(tag: impl Into<String>) -> Self {
        ConstraintBuilder { terms: BTreeMap::new(), tag: tag.into() }
    }

    pub fn add(&mut self, variable: VariableKey, coefficient: impl Into<Rational64>) -> &mut Self {
        let entry = self
            .terms
            .entry(variable)
            .or_insert_with(|| Rational64::from_integer(0));
        *entry += coefficient.into();
        self
    }

    pub fn build(self, sense: ConstraintSense, rhs: impl Into<Rational64>) -> LinearConstraint {
        let terms = self
            .terms
            .into_iter()
            .filter(|(_, c)| *c != Rational64::from_integer(0))
            .map(|(variable, coefficient)| LinearTerm { coefficient, variable })
            .collect();
        LinearConstraint { terms, sense, rhs: rhs.into(), tag: self.tag }
    }
}

/// A total 0/1 assignment keyed by variable identity.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment(pub BTreeMap<VariableKey, bool>);

impl Assignment {
    /// Pairs model-ordered bits with the model's variable list.
    pub fn from_bits(model: &LinearModel, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), model.variables.len());
        Assignment(model.variables.iter().copied().zip(bits.iter().copied()).collect())
    }

    pub fn get(&self, key: VariableKey) -> Option<bool> {
        self.0.get(&key).copied()
    }

    /// Model-ordered bits; `None` if any model variable is missing.
    pub fn to_bits(&self, model: &LinearModel) -> Option<Vec<bool>> {
        model.variables.iter().map(|v| self.get(*v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_names_round_trip() {
        for key in [
            VariableKey::b(3, 17),
            VariableKey::t(3, 2),
            VariableKey::p(3, 41),
            VariableKey::pd(3, 41, 6),
        ] {
            assert_eq!(VariableKey::parse_name(&key.name()), Some(key));
        }
        assert_eq!(VariableKey::b(3, 17).name(), "b_3_17");
        assert_eq!(VariableKey::pd(3, 41, 6).name(), "pd_3_41_6");
        assert_eq!(VariableKey::parse_name("q_1_2"), None);
        assert_eq!(VariableKey::parse_name("b_1"), None);
    }

    #[test]
    fn canonical_order_is_kind_major() {
        let mut keys = vec![
            VariableKey::p(0, 0),
            VariableKey::b(1, 0),
            VariableKey::t(0, 1),
            VariableKey::b(0, 2),
        ];
        keys.sort();
        assert_eq!(
            keys,
            vec![
                VariableKey::b(0, 2),
                VariableKey::b(1, 0),
                VariableKey::t(0, 1),
                VariableKey::p(0, 0),
            ]
        );
    }

    #[test]
    fn builder_merges_and_cancels() {
        let mut b = ConstraintBuilder::new("c");
        b.add(VariableKey::b(0, 0), Rational64::from_integer(2));
        b.add(VariableKey::b(0, 0), Rational64::from_integer(-1));
        b.add(VariableKey::b(0, 1), Rational64::from_integer(1));
        b.add(VariableKey::b(0, 1), Rational64::from_integer(-1));
        let c = b.build(ConstraintSense::Le, Rational64::from_integer(3));
        assert_eq!(c.terms.len(), 1);
        assert_eq!(c.terms[0].coefficient, Rational64::from_integer(1));
    }
}
