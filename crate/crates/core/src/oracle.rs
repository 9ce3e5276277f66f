//! Brute-force reference implementation for tiny instances.
//!
//! Everything here evaluates the Boolean problem semantics directly and
//! literally — never through linear constraints — so it can serve as ground
//! truth for the compiled models and the solvers. Keep it that way: the
//! whole point is that a compiler bug cannot hide behind shared code.

use std::collections::BTreeSet;

use num_rational::Rational64;
use thiserror::Error;

use crate::dataset::{Connective, Dataset, FeatureId, ImplicationRule, TestRequirement, TypeId};

/// One configured vehicle: its type and the features it carries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct VehicleConfig {
    pub vehicle_type: TypeId,
    pub features: BTreeSet<FeatureId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large to enumerate: {0}")]
    TooLarge(String),
}

/// Enumeration guard: o * 2^f must stay within this many configurations.
const MAX_CONFIG_SPACE: u64 = 1 << 22;
/// Fleet-enumeration guard: combinations with repetition must stay below this.
const MAX_FLEETS: u64 = 10_000_000;

fn literal_holds(lit: crate::dataset::Literal, present: impl Fn(FeatureId) -> bool) -> bool {
    lit.eval(present(lit.feature))
}

fn side_holds(
    literals: &[crate::dataset::Literal],
    connective: Connective,
    present: &impl Fn(FeatureId) -> bool,
) -> bool {
    match connective {
        // An empty conjunction is vacuously true.
        Connective::And => literals.iter().all(|&l| literal_holds(l, present)),
        Connective::Or => literals.iter().any(|&l| literal_holds(l, present)),
        Connective::Single => literal_holds(literals[0], present),
    }
}

/// Whether a rule holds for a vehicle of type `t` with the given features.
pub fn rule_holds(
    rule: &ImplicationRule,
    t: TypeId,
    present: &impl Fn(FeatureId) -> bool,
) -> bool {
    if let Some(rt) = rule.rule_type {
        if rt != t {
            return true;
        }
    }
    let lhs = side_holds(&rule.lhs_literals, rule.lhs_connective, present);
    !lhs || side_holds(&rule.rhs_literals, rule.rhs_connective, present)
}

/// Whether `(t, features)` satisfies every buildability constraint:
/// allowed features for the type, exclusive groups, and all rules.
pub fn config_is_buildable(d: &Dataset, t: TypeId, features: &BTreeSet<FeatureId>) -> bool {
    if features.iter().any(|f| d.forbidden_per_type[t.index()].contains(f)) {
        return false;
    }
    for group in &d.groups {
        if group.members.iter().filter(|f| features.contains(f)).count() > 1 {
            return false;
        }
    }
    let present = |f: FeatureId| features.contains(&f);
    d.rules.iter().all(|rule| rule_holds(rule, t, &present))
}

/// Whether a vehicle with the given features qualifies for a test.
pub fn config_meets_test(test: &TestRequirement, features: &BTreeSet<FeatureId>) -> bool {
    test.required_present.iter().all(|f| features.contains(f))
        && test.required_absent.iter().all(|f| !features.contains(f))
        && (test.required_any_of.is_empty()
            || test.required_any_of.iter().any(|f| features.contains(f)))
}

fn mask_to_set(mask: u64, f: usize) -> BTreeSet<FeatureId> {
    (0..f as u32).filter(|&j| mask & (1 << j) != 0).map(FeatureId).collect()
}

/// All `(type, feature set)` pairs satisfying the buildability constraints,
/// by direct enumeration of the full configuration space.
pub fn enumerate_configs(d: &Dataset) -> Result<Vec<VehicleConfig>, OracleError> {
    let f = d.feature_count();
    let o = d.type_count();
    let space = (o as u64).saturating_mul(1u64 << f.min(63));
    if f >= 63 || space > MAX_CONFIG_SPACE {
        return Err(OracleError::TooLarge(format!("o * 2^f = {o} * 2^{f}")));
    }
    let mut configs = Vec::new();
    for t in 0..o as u32 {
        for mask in 0..(1u64 << f) {
            let features = mask_to_set(mask, f);
            if config_is_buildable(d, TypeId(t), &features) {
                configs.push(VehicleConfig { vehicle_type: TypeId(t), features });
            }
        }
    }
    Ok(configs)
}

/// How many vehicles of `fleet` qualify for each test.
fn per_test_counts(d: &Dataset, fleet: &[&VehicleConfig]) -> Vec<u32> {
    d.tests
        .iter()
        .map(|test| {
            fleet.iter().filter(|v| config_meets_test(test, &v.features)).count() as u32
        })
        .collect()
}

/// Whether a fleet can host an assignment meeting every test's multiplicity.
///
/// Tests do not compete for vehicles (one vehicle may serve many tests), so
/// this is a per-test counting condition.
pub fn fleet_covers_all(d: &Dataset, fleet: &[&VehicleConfig]) -> bool {
    per_test_counts(d, fleet)
        .iter()
        .zip(&d.tests)
        .all(|(&count, test)| count >= test.cars_needed)
}

/// Weighted coverage of a fleet: sum of `w_j * min(k_j, qualifying vehicles)`.
pub fn fleet_coverage_value(d: &Dataset, fleet: &[&VehicleConfig]) -> Rational64 {
    per_test_counts(d, fleet)
        .iter()
        .zip(&d.tests)
        .map(|(&count, test)| {
            test.weight * Rational64::from_integer(count.min(test.cars_needed) as i64)
        })
        .sum()
}

fn combinations_with_repetition(m: u64, n: u64) -> u64 {
    // C(m + n - 1, n), saturating.
    let mut result: u64 = 1;
    for i in 0..n {
        result = result.saturating_mul(m + n - 1 - i);
        result /= i + 1;
        if result > MAX_FLEETS {
            return u64::MAX;
        }
    }
    result
}

fn for_each_fleet<F: FnMut(&[&VehicleConfig]) -> bool>(
    configs: &[VehicleConfig],
    n: usize,
    visit: &mut F,
) -> bool {
    fn rec<'a, F: FnMut(&[&'a VehicleConfig]) -> bool>(
        configs: &'a [VehicleConfig],
        start: usize,
        slots: usize,
        fleet: &mut Vec<&'a VehicleConfig>,
        visit: &mut F,
    ) -> bool {
        if slots == 0 {
            return visit(fleet);
        }
        for i in start..configs.len() {
            fleet.push(&configs[i]);
            if rec(configs, i, slots - 1, fleet, visit) {
                fleet.pop();
                return true;
            }
            fleet.pop();
        }
        false
    }
    rec(configs, 0, n, &mut Vec::with_capacity(n), visit)
}

fn guard_fleets(configs: usize, n: usize) -> Result<(), OracleError> {
    if combinations_with_repetition(configs as u64, n as u64) > MAX_FLEETS {
        return Err(OracleError::TooLarge(format!(
            "fleet space for {configs} configurations and {n} vehicles"
        )));
    }
    Ok(())
}

/// Smallest fleet size (up to `n_cap`) covering every test at its required
/// multiplicity, or `None` if no fleet of size `<= n_cap` works.
pub fn min_fleet(d: &Dataset, n_cap: usize) -> Result<Option<usize>, OracleError> {
    let configs = enumerate_configs(d)?;
    if d.tests.is_empty() {
        return Ok(Some(0));
    }
    guard_fleets(configs.len(), n_cap)?;
    for n in 1..=n_cap {
        let mut found = false;
        for_each_fleet(&configs, n, &mut |fleet| {
            if fleet_covers_all(d, fleet) {
                found = true;
                return true;
            }
            false
        });
        if found {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Maximum weighted coverage achievable by any fleet of exactly `n` vehicles.
pub fn max_coverage(d: &Dataset, n: usize) -> Result<Rational64, OracleError> {
    if n == 0 {
        return Ok(Rational64::from_integer(0));
    }
    let configs = enumerate_configs(d)?;
    guard_fleets(configs.len(), n)?;
    let mut best = Rational64::from_integer(0);
    for_each_fleet(&configs, n, &mut |fleet| {
        let value = fleet_coverage_value(d, fleet);
        if value > best {
            best = value;
        }
        false
    });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_dataset;

    #[test]
    fn two_features_one_type_no_rules() {
        let d = parse_dataset("[features]\na\nb\n[types]\nt\n").unwrap();
        let configs = enumerate_configs(&d).unwrap();
        assert_eq!(configs.len(), 4);
    }

    #[test]
    fn group_excludes_pairs() {
        let d = parse_dataset("[features]\na\nb\n[types]\nt\n[groups]\na b\n").unwrap();
        let configs = enumerate_configs(&d).unwrap();
        // {}, {a}, {b} remain; {a, b} is excluded.
        assert_eq!(configs.len(), 3);
    }

    #[test]
    fn forbidden_features_respected() {
        let d =
            parse_dataset("[features]\na\nb\n[types]\nt1\nt2\n[forbidden]\nt1: a\n").unwrap();
        let configs = enumerate_configs(&d).unwrap();
        assert!(configs
            .iter()
            .filter(|c| c.vehicle_type == TypeId(0))
            .all(|c| !c.features.contains(&FeatureId(0))));
        assert_eq!(configs.len(), 2 + 4);
    }

    #[test]
    fn rules_filter_configs() {
        // a => b leaves {}, {b}, {a,b}.
        let d = parse_dataset("[features]\na\nb\n[types]\nt\n[rules]\n*: a => b\n").unwrap();
        let configs = enumerate_configs(&d).unwrap();
        assert_eq!(configs.len(), 3);
    }

    #[test]
    fn typed_rule_only_binds_its_type() {
        let d = parse_dataset(
            "[features]\na\nb\n[types]\nt1\nt2\n[rules]\nt1: a => b\n",
        )
        .unwrap();
        let configs = enumerate_configs(&d).unwrap();
        let t1 = configs.iter().filter(|c| c.vehicle_type == TypeId(0)).count();
        let t2 = configs.iter().filter(|c| c.vehicle_type == TypeId(1)).count();
        assert_eq!((t1, t2), (3, 4));
    }

    #[test]
    fn min_fleet_single_test() {
        let d = parse_dataset("[features]\na\n[types]\nt\n[tests]\nneed=a k=1 w=1\n")
            .unwrap();
        assert_eq!(min_fleet(&d, 3).unwrap(), Some(1));
    }

    #[test]
    fn min_fleet_contradictory_tests() {
        let d = parse_dataset(
            "[features]\na\n[types]\nt\n[tests]\nneed=a k=1 w=1\nnot=a k=1 w=1\n",
        )
        .unwrap();
        assert_eq!(min_fleet(&d, 3).unwrap(), Some(2));
    }

    #[test]
    fn max_coverage_zero_vehicles() {
        let d = parse_dataset("[features]\na\n[types]\nt\n[tests]\nneed=a k=1 w=1\n")
            .unwrap();
        assert_eq!(max_coverage(&d, 0).unwrap(), Rational64::from_integer(0));
    }

    #[test]
    fn max_coverage_saturates_at_total_units() {
        let d = parse_dataset(
            "[features]\na\nb\n[types]\nt\n[tests]\nneed=a k=2 w=1\nneed=b k=1 w=1\n",
        )
        .unwrap();
        // 3 vehicles with both features cover all 3 units.
        assert_eq!(max_coverage(&d, 3).unwrap(), Rational64::from_integer(3));
    }

    #[test]
    fn any_of_requires_intersection() {
        let d = parse_dataset(
            "[features]\na\nb\nc\n[types]\nt\n[tests]\nany=a,b k=1 w=1\n",
        )
        .unwrap();
        let t = &d.tests[0];
        assert!(config_meets_test(t, &[FeatureId(0)].into_iter().collect()));
        assert!(!config_meets_test(t, &[FeatureId(2)].into_iter().collect()));
        assert!(!config_meets_test(t, &BTreeSet::new()));
    }
}
