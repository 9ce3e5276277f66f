//! Problem-instance data model: features, vehicle types, buildability rules,
//! and test requirements, together with the instance file format, the
//! preprocessing simplifications, and a synthetic instance generator.

mod generate;
mod parse;
mod simplify;

pub use generate::{generate_synthetic, GeneratorParams};
pub use parse::{parse_dataset, serialize_dataset, ParseError};
pub use simplify::{simplify, SimplifyReport};

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a feature, dense in `[0, f)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct FeatureId(pub u32);

/// Index of a vehicle type, dense in `[0, o)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct TypeId(pub u32);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A feature or its negation, as it appears in a rule.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Literal {
    pub feature: FeatureId,
    pub negated: bool,
}

impl Literal {
    pub fn pos(feature: FeatureId) -> Self {
        Literal { feature, negated: false }
    }

    pub fn neg(feature: FeatureId) -> Self {
        Literal { feature, negated: true }
    }

    /// Truth value of the literal given whether the feature is present.
    pub fn eval(self, present: bool) -> bool {
        present != self.negated
    }
}

/// How the literals on one side of an implication are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connective {
    And,
    Or,
    /// Exactly one literal on this side.
    Single,
}

/// The 4-character rule class: negation pattern and connective for each side.
///
/// Character 1 is `0` when no left-hand literal is negated, `1` when all are,
/// `m` when mixed; character 2 is `&`, `|`, or `1` (single literal).
/// Characters 3 and 4 describe the right-hand side the same way.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassLabel([u8; 4]);

impl ClassLabel {
    pub fn new(chars: [u8; 4]) -> Self {
        ClassLabel(chars)
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("class label is ASCII")
    }

    pub fn lhs_negation(&self) -> u8 {
        self.0[0]
    }

    pub fn lhs_connective(&self) -> u8 {
        self.0[1]
    }

    pub fn rhs_negation(&self) -> u8 {
        self.0[2]
    }

    pub fn rhs_connective(&self) -> u8 {
        self.0[3]
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClassLabel({})", self.as_str())
    }
}

fn side_chars(literals: &[Literal], connective: Connective) -> [u8; 2] {
    let negation = if literals.iter().all(|l| !l.negated) {
        b'0'
    } else if literals.iter().all(|l| l.negated) {
        b'1'
    } else {
        b'm'
    };
    let conn = match connective {
        Connective::And => b'&',
        Connective::Or => b'|',
        Connective::Single => b'1',
    };
    [negation, conn]
}

/// Derives the 4-character class label from the literal lists and connectives.
///
/// An empty left-hand side (pure type-conditioned rule) is a vacuous
/// conjunction and classifies as `0&`.
pub fn classify_rule(
    lhs_literals: &[Literal],
    lhs_connective: Connective,
    rhs_literals: &[Literal],
    rhs_connective: Connective,
) -> ClassLabel {
    let lhs = side_chars(lhs_literals, lhs_connective);
    let rhs = side_chars(rhs_literals, rhs_connective);
    ClassLabel([lhs[0], lhs[1], rhs[0], rhs[1]])
}

/// One per-type implication rule: `type: LHS => RHS`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationRule {
    /// `None` means the rule applies to every type.
    pub rule_type: Option<TypeId>,
    pub lhs_literals: Vec<Literal>,
    pub lhs_connective: Connective,
    pub rhs_literals: Vec<Literal>,
    pub rhs_connective: Connective,
    pub class_label: ClassLabel,
}

impl ImplicationRule {
    /// Builds a rule, deriving the class label from the sides.
    pub fn new(
        rule_type: Option<TypeId>,
        lhs_literals: Vec<Literal>,
        lhs_connective: Connective,
        rhs_literals: Vec<Literal>,
        rhs_connective: Connective,
    ) -> Self {
        let class_label =
            classify_rule(&lhs_literals, lhs_connective, &rhs_literals, rhs_connective);
        ImplicationRule {
            rule_type,
            lhs_literals,
            lhs_connective,
            rhs_literals,
            rhs_connective,
            class_label,
        }
    }
}

/// A set of mutually exclusive features: at most one may be present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub members: BTreeSet<FeatureId>,
}

/// One test line: features that must be present/absent, an optional
/// disjunction, the number of cars needed, and a weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRequirement {
    /// Index of the test within its dataset.
    pub id: u32,
    pub required_present: BTreeSet<FeatureId>,
    pub required_absent: BTreeSet<FeatureId>,
    pub required_any_of: BTreeSet<FeatureId>,
    pub cars_needed: u32,
    pub weight: Rational64,
}

impl TestRequirement {
    /// The (present, absent, any-of) signature, ignoring id, multiplicity and
    /// weight. Tests with equal signatures are duplicates.
    pub fn signature(
        &self,
    ) -> (&BTreeSet<FeatureId>, &BTreeSet<FeatureId>, &BTreeSet<FeatureId>) {
        (&self.required_present, &self.required_absent, &self.required_any_of)
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub type_names: Vec<String>,
    /// Indexed by type: features not allowed for that type.
    pub forbidden_per_type: Vec<BTreeSet<FeatureId>>,
    pub groups: Vec<FeatureGroup>,
    pub rules: Vec<ImplicationRule>,
    pub tests: Vec<TestRequirement>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("duplicate type name `{0}`")]
    DuplicateType(String),
    #[error("feature index {0} out of range (f = {1})")]
    FeatureOutOfRange(u32, usize),
    #[error("type index {0} out of range (o = {1})")]
    TypeOutOfRange(u32, usize),
    #[error("forbidden-feature table has {0} entries for {1} types")]
    ForbiddenTableSize(usize, usize),
    #[error("group {0} has {1} members; groups need at least 2")]
    GroupTooSmall(usize, usize),
    #[error("rule {0}: class label `{1}` does not match literals/connectives (expected `{2}`)")]
    ClassLabelMismatch(usize, String, String),
    #[error("rule {0}: disjunctive left-hand side with negated literals is not supported")]
    MixedOrLhs(usize),
    #[error("rule {0}: empty right-hand side")]
    EmptyRhs(usize),
    #[error("rule {0}: empty left-hand side requires a rule type")]
    EmptyLhsUntyped(usize),
    #[error("rule {0}: connective `1` requires exactly one literal")]
    SingleArity(usize),
    #[error("rule {0}: empty left-hand side must use the AND connective")]
    EmptyLhsConnective(usize),
    #[error("test {0}: present/absent/any-of sets are not pairwise disjoint")]
    TestSetsOverlap(usize),
    #[error("test {0}: cars_needed must be at least 1")]
    TestZeroCars(usize),
    #[error("test {0}: negative weight")]
    TestNegativeWeight(usize),
    #[error("test {0}: id {1} does not match its position")]
    TestIdMismatch(usize, u32),
}

impl Dataset {
    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn type_count(&self) -> usize {
        self.type_names.len()
    }

    pub fn test_count(&self) -> usize {
        self.tests.len()
    }

    /// Sum of `cars_needed` over all tests: the trivial fleet-size upper bound.
    pub fn total_cars_needed(&self) -> u32 {
        self.tests.iter().map(|t| t.cars_needed).sum()
    }

    /// Checks every structural invariant of the instance.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let f = self.feature_count();
        let o = self.type_count();

        let mut seen = BTreeSet::new();
        for name in &self.feature_names {
            if !seen.insert(name) {
                return Err(DatasetError::DuplicateFeature(name.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for name in &self.type_names {
            if !seen.insert(name) {
                return Err(DatasetError::DuplicateType(name.clone()));
            }
        }

        let check_feature = |id: FeatureId| {
            if id.index() >= f {
                Err(DatasetError::FeatureOutOfRange(id.0, f))
            } else {
                Ok(())
            }
        };

        if self.forbidden_per_type.len() != o {
            return Err(DatasetError::ForbiddenTableSize(self.forbidden_per_type.len(), o));
        }
        for set in &self.forbidden_per_type {
            for &id in set {
                check_feature(id)?;
            }
        }

        for (g, group) in self.groups.iter().enumerate() {
            if group.members.len() < 2 {
                return Err(DatasetError::GroupTooSmall(g, group.members.len()));
            }
            for &id in &group.members {
                check_feature(id)?;
            }
        }

        for (r, rule) in self.rules.iter().enumerate() {
            if let Some(t) = rule.rule_type {
                if t.index() >= o {
                    return Err(DatasetError::TypeOutOfRange(t.0, o));
                }
            }
            for lit in rule.lhs_literals.iter().chain(&rule.rhs_literals) {
                check_feature(lit.feature)?;
            }
            if rule.rhs_literals.is_empty() {
                return Err(DatasetError::EmptyRhs(r));
            }
            if rule.lhs_literals.is_empty() {
                if rule.rule_type.is_none() {
                    return Err(DatasetError::EmptyLhsUntyped(r));
                }
                if rule.lhs_connective != Connective::And {
                    return Err(DatasetError::EmptyLhsConnective(r));
                }
            }
            for (lits, conn) in [
                (&rule.lhs_literals, rule.lhs_connective),
                (&rule.rhs_literals, rule.rhs_connective),
            ] {
                if conn == Connective::Single && lits.len() != 1 {
                    return Err(DatasetError::SingleArity(r));
                }
            }
            if rule.lhs_connective == Connective::Or
                && rule.lhs_literals.iter().any(|l| l.negated)
            {
                return Err(DatasetError::MixedOrLhs(r));
            }
            let expected = classify_rule(
                &rule.lhs_literals,
                rule.lhs_connective,
                &rule.rhs_literals,
                rule.rhs_connective,
            );
            if rule.class_label != expected {
                return Err(DatasetError::ClassLabelMismatch(
                    r,
                    rule.class_label.to_string(),
                    expected.to_string(),
                ));
            }
        }

        for (j, test) in self.tests.iter().enumerate() {
            if test.id as usize != j {
                return Err(DatasetError::TestIdMismatch(j, test.id));
            }
            for &id in test
                .required_present
                .iter()
                .chain(&test.required_absent)
                .chain(&test.required_any_of)
            {
                check_feature(id)?;
            }
            let disjoint = test.required_present.is_disjoint(&test.required_absent)
                && test.required_present.is_disjoint(&test.required_any_of)
                && test.required_absent.is_disjoint(&test.required_any_of);
            if !disjoint {
                return Err(DatasetError::TestSetsOverlap(j));
            }
            if test.cars_needed == 0 {
                return Err(DatasetError::TestZeroCars(j));
            }
            if test.weight < Rational64::from_integer(0) {
                return Err(DatasetError::TestNegativeWeight(j));
            }
        }

        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(spec: &[(u32, bool)]) -> Vec<Literal> {
        spec.iter()
            .map(|&(f, negated)| Literal { feature: FeatureId(f), negated })
            .collect()
    }

    #[test]
    fn classify_paper_example() {
        // F2 & !F4 & !F5 => F1 | F3
        let label = classify_rule(
            &lits(&[(2, false), (4, true), (5, true)]),
            Connective::And,
            &lits(&[(1, false), (3, false)]),
            Connective::Or,
        );
        assert_eq!(label.as_str(), "m&0|");
    }

    #[test]
    fn classify_single_literals() {
        let label = classify_rule(
            &lits(&[(1, false)]),
            Connective::Single,
            &lits(&[(2, true)]),
            Connective::Single,
        );
        assert_eq!(label.as_str(), "0111");
    }

    #[test]
    fn classify_or_lhs_negated_and_rhs() {
        let label = classify_rule(
            &lits(&[(1, false), (2, false)]),
            Connective::Or,
            &lits(&[(3, true), (4, true)]),
            Connective::And,
        );
        assert_eq!(label.as_str(), "0|1&");
    }

    #[test]
    fn classify_empty_lhs_is_vacuous_conjunction() {
        let label =
            classify_rule(&[], Connective::And, &lits(&[(0, false)]), Connective::Single);
        assert_eq!(label.as_str(), "0&01");
    }

    #[test]
    fn validate_rejects_mismatched_label() {
        let mut rule = ImplicationRule::new(
            None,
            lits(&[(0, false)]),
            Connective::Single,
            lits(&[(1, false)]),
            Connective::Single,
        );
        rule.class_label = ClassLabel::new(*b"1111");
        let d = Dataset {
            feature_names: vec!["a".into(), "b".into()],
            type_names: vec!["t".into()],
            forbidden_per_type: vec![BTreeSet::new()],
            groups: vec![],
            rules: vec![rule],
            tests: vec![],
        };
        assert!(matches!(d.validate(), Err(DatasetError::ClassLabelMismatch(0, _, _))));
    }

    #[test]
    fn validate_rejects_mixed_or_lhs() {
        let d = Dataset {
            feature_names: vec!["a".into(), "b".into(), "c".into()],
            type_names: vec!["t".into()],
            forbidden_per_type: vec![BTreeSet::new()],
            groups: vec![],
            rules: vec![ImplicationRule::new(
                None,
                lits(&[(0, false), (1, true)]),
                Connective::Or,
                lits(&[(2, false)]),
                Connective::Single,
            )],
            tests: vec![],
        };
        assert!(matches!(d.validate(), Err(DatasetError::MixedOrLhs(0))));
    }
}
