//! Instance file format.
//!
//! A structured-text document, UTF-8, `#` comments, with sections:
//!
//! ```text
//! [features]   one feature name per line
//! [types]      one type name per line
//! [forbidden]  lines `TYPE: FEAT FEAT ...` (features not allowed for TYPE)
//! [groups]     lines `FEAT FEAT ...` (at most one may be present)
//! [rules]      lines `TYPE: LHS => RHS` or `*: LHS => RHS` for all types;
//!              LHS/RHS are literals (`!` negates) joined by all `&` or all `|`;
//!              LHS may be empty for a pure type-conditioned rule
//! [tests]      lines `need=F,F not=F any=F,F k=N w=W`; empty lists omitted;
//!              W is an integer, fraction `N/D`, or decimal
//! [schedule]   optional: `horizon D`, `capacity K`, `window TEST START END`,
//!              `group TEST G`, `distinct TEST TEST ...`
//! ```
//!
//! Names may use letters, digits, `_`, `-` and `.`. `serialize_dataset`
//! produces the canonical form, and `parse_dataset` inverts it exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_rational::Rational64;
use thiserror::Error;

use super::{
    classify_rule, Connective, Dataset, DatasetError, FeatureGroup, FeatureId,
    ImplicationRule, Literal, TestRequirement, TypeId,
};

/// The optional `[schedule]` section, uninterpreted: test references are
/// indices into the dataset's test list.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScheduleSection {
    pub horizon_days: u32,
    pub daily_capacity: u32,
    /// (test index, first day, last day)
    pub windows: Vec<(u32, u32, u32)>,
    /// (test index, order-group id)
    pub groups: Vec<(u32, u32)>,
    /// Sets of test indices whose cars must be distinct vehicles.
    pub distinct: Vec<Vec<u32>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undeclared feature `{name}`")]
    UndeclaredFeature { line: usize, name: String },
    #[error("line {line}: undeclared type `{name}`")]
    UndeclaredType { line: usize, name: String },
    #[error("line {line}: duplicate name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: invalid name `{name}`")]
    InvalidName { line: usize, name: String },
    #[error("line {line}: group needs at least 2 features")]
    GroupTooSmall { line: usize },
    #[error("line {line}: literals must all be joined by `&` or all by `|`")]
    MixedConnectives { line: usize },
    #[error("line {line}: disjunctive left-hand side with negated literals is not supported")]
    MixedOrLhs { line: usize },
    #[error("invalid dataset: {0}")]
    Invalid(#[from] DatasetError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Features,
    Types,
    Forbidden,
    Groups,
    Rules,
    Tests,
    Schedule,
}

struct NameTable {
    ids: BTreeMap<String, u32>,
    names: Vec<String>,
}

impl NameTable {
    fn new() -> Self {
        NameTable { ids: BTreeMap::new(), names: Vec::new() }
    }

    fn insert(&mut self, name: &str, line: usize) -> Result<(), ParseError> {
        if !valid_name(name) {
            return Err(ParseError::InvalidName { line, name: name.to_string() });
        }
        if self.ids.contains_key(name) {
            return Err(ParseError::DuplicateName { line, name: name.to_string() });
        }
        self.ids.insert(name.to_string(), self.names.len() as u32);
        self.names.push(name.to_string());
        Ok(())
    }
}

fn parse_weight(s: &str, line: usize) -> Result<Rational64, ParseError> {
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.parse().map_err(|_| syntax(line, format!("bad weight `{s}`")))?;
        let d: i64 = d.parse().map_err(|_| syntax(line, format!("bad weight `{s}`")))?;
        if d == 0 {
            return Err(syntax(line, "weight denominator is zero"));
        }
        return Ok(Rational64::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let (negative, int) = match int.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, int),
        };
        let digits_ok = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits_ok(int) || !digits_ok(frac) || frac.len() > 9 {
            return Err(syntax(line, format!("bad weight `{s}`")));
        }
        let scale = 10i64.pow(frac.len() as u32);
        let int: i64 = int.parse().unwrap();
        let frac: i64 = frac.parse().unwrap();
        let value = Rational64::new(int * scale + frac, scale);
        return Ok(if negative { -value } else { value });
    }
    let n: i64 = s.parse().map_err(|_| syntax(line, format!("bad weight `{s}`")))?;
    Ok(Rational64::from_integer(n))
}

fn render_weight(w: Rational64) -> String {
    if w.is_integer() {
        w.numer().to_string()
    } else {
        format!("{}/{}", w.numer(), w.denom())
    }
}

struct Parser {
    features: NameTable,
    types: NameTable,
    forbidden: BTreeMap<TypeId, BTreeSet<FeatureId>>,
    forbidden_seen: BTreeSet<TypeId>,
    groups: Vec<FeatureGroup>,
    rules: Vec<ImplicationRule>,
    tests: Vec<TestRequirement>,
    schedule: Option<ScheduleSection>,
}

impl Parser {
    fn feature(&self, name: &str, line: usize) -> Result<FeatureId, ParseError> {
        self.features
            .ids
            .get(name)
            .map(|&i| FeatureId(i))
            .ok_or_else(|| ParseError::UndeclaredFeature { line, name: name.to_string() })
    }

    fn vtype(&self, name: &str, line: usize) -> Result<TypeId, ParseError> {
        self.types
            .ids
            .get(name)
            .map(|&i| TypeId(i))
            .ok_or_else(|| ParseError::UndeclaredType { line, name: name.to_string() })
    }

    fn feature_list(
        &self,
        text: &str,
        sep: char,
        line: usize,
    ) -> Result<BTreeSet<FeatureId>, ParseError> {
        let mut set = BTreeSet::new();
        for tok in text.split(sep).map(str::trim).filter(|t| !t.is_empty()) {
            set.insert(self.feature(tok, line)?);
        }
        Ok(set)
    }

    /// Parses one side of a rule: literals joined by a uniform connective.
    fn side(
        &self,
        text: &str,
        line: usize,
    ) -> Result<(Vec<Literal>, Connective), ParseError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok((Vec::new(), Connective::And));
        }
        let has_and = text.contains('&');
        let has_or = text.contains('|');
        if has_and && has_or {
            return Err(ParseError::MixedConnectives { line });
        }
        let (sep, conn) = if has_and {
            ('&', Connective::And)
        } else if has_or {
            ('|', Connective::Or)
        } else {
            (' ', Connective::Single)
        };
        let mut literals = Vec::new();
        for tok in text.split(sep).map(str::trim) {
            if tok.is_empty() {
                return Err(syntax(line, "empty literal"));
            }
            let (negated, name) = match tok.strip_prefix('!') {
                Some(rest) => (true, rest.trim()),
                None => (false, tok),
            };
            literals.push(Literal { feature: self.feature(name, line)?, negated });
        }
        if conn == Connective::Single && literals.len() != 1 {
            return Err(syntax(line, "literals must be joined by `&` or `|`"));
        }
        Ok((literals, conn))
    }

    fn rule_line(&mut self, body: &str, line: usize) -> Result<(), ParseError> {
        let (type_part, rest) = body
            .split_once(':')
            .ok_or_else(|| syntax(line, "rule must start with `TYPE:` or `*:`"))?;
        let type_part = type_part.trim();
        let rule_type = if type_part == "*" {
            None
        } else {
            Some(self.vtype(type_part, line)?)
        };
        let (lhs_text, rhs_text) = rest
            .split_once("=>")
            .ok_or_else(|| syntax(line, "rule is missing `=>`"))?;
        let (lhs, lhs_conn) = self.side(lhs_text, line)?;
        let (rhs, rhs_conn) = self.side(rhs_text, line)?;
        if rhs.is_empty() {
            return Err(syntax(line, "rule has an empty right-hand side"));
        }
        if lhs.is_empty() && rule_type.is_none() {
            return Err(syntax(line, "type-independent rule needs a left-hand side"));
        }
        if lhs_conn == Connective::Or && lhs.iter().any(|l| l.negated) {
            return Err(ParseError::MixedOrLhs { line });
        }
        self.rules.push(ImplicationRule::new(rule_type, lhs, lhs_conn, rhs, rhs_conn));
        Ok(())
    }

    fn test_line(&mut self, body: &str, line: usize) -> Result<(), ParseError> {
        let mut present = BTreeSet::new();
        let mut absent = BTreeSet::new();
        let mut any_of = BTreeSet::new();
        let mut cars = 1u32;
        let mut weight = Rational64::from_integer(1);
        let mut seen = BTreeSet::new();
        for tok in body.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| syntax(line, format!("expected key=value, got `{tok}`")))?;
            if !seen.insert(key.to_string()) {
                return Err(syntax(line, format!("duplicate field `{key}`")));
            }
            match key {
                "need" => present = self.feature_list(value, ',', line)?,
                "not" => absent = self.feature_list(value, ',', line)?,
                "any" => any_of = self.feature_list(value, ',', line)?,
                "k" => {
                    cars = value
                        .parse()
                        .map_err(|_| syntax(line, format!("bad car count `{value}`")))?;
                }
                "w" => weight = parse_weight(value, line)?,
                other => {
                    return Err(syntax(line, format!("unknown test field `{other}`")));
                }
            }
        }
        self.tests.push(TestRequirement {
            id: self.tests.len() as u32,
            required_present: present,
            required_absent: absent,
            required_any_of: any_of,
            cars_needed: cars,
            weight,
        });
        Ok(())
    }

    fn schedule_line(&mut self, body: &str, line: usize) -> Result<(), ParseError> {
        let section = self.schedule.get_or_insert_with(ScheduleSection::default);
        let mut words = body.split_whitespace();
        let key = words.next().unwrap_or("");
        let mut num = |w: Option<&str>| -> Result<u32, ParseError> {
            w.ok_or_else(|| syntax(line, "missing number"))?
                .parse()
                .map_err(|_| syntax(line, "bad number"))
        };
        match key {
            "horizon" => section.horizon_days = num(words.next())?,
            "capacity" => section.daily_capacity = num(words.next())?,
            "window" => {
                let t = num(words.next())?;
                let start = num(words.next())?;
                let end = num(words.next())?;
                section.windows.push((t, start, end));
            }
            "group" => {
                let t = num(words.next())?;
                let g = num(words.next())?;
                section.groups.push((t, g));
            }
            "distinct" => {
                let mut set = Vec::new();
                for w in words {
                    set.push(
                        w.parse().map_err(|_| syntax(line, "bad test index"))?,
                    );
                }
                if set.is_empty() {
                    return Err(syntax(line, "empty distinct set"));
                }
                section.distinct.push(set);
                return Ok(());
            }
            other => {
                return Err(syntax(line, format!("unknown schedule field `{other}`")));
            }
        }
        if words.next().is_some() {
            return Err(syntax(line, "trailing tokens"));
        }
        Ok(())
    }
}

/// Parses an instance file into a dataset plus its optional schedule section.
pub fn parse_instance(
    text: &str,
) -> Result<(Dataset, Option<ScheduleSection>), ParseError> {
    let mut p = Parser {
        features: NameTable::new(),
        types: NameTable::new(),
        forbidden: BTreeMap::new(),
        forbidden_seen: BTreeSet::new(),
        groups: Vec::new(),
        rules: Vec::new(),
        tests: Vec::new(),
        schedule: None,
    };
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, "unterminated section header"))?;
            section = match name {
                "features" => Section::Features,
                "types" => Section::Types,
                "forbidden" => Section::Forbidden,
                "groups" => Section::Groups,
                "rules" => Section::Rules,
                "tests" => Section::Tests,
                "schedule" => Section::Schedule,
                other => {
                    return Err(ParseError::UnknownSection {
                        line,
                        section: other.to_string(),
                    })
                }
            };
            continue;
        }
        match section {
            Section::None => {
                return Err(syntax(line, "content before the first section header"));
            }
            Section::Features => p.features.insert(body, line)?,
            Section::Types => p.types.insert(body, line)?,
            Section::Forbidden => {
                let (type_name, feats) = body
                    .split_once(':')
                    .ok_or_else(|| syntax(line, "expected `TYPE: FEAT ...`"))?;
                let t = p.vtype(type_name.trim(), line)?;
                if !p.forbidden_seen.insert(t) {
                    return Err(ParseError::DuplicateName {
                        line,
                        name: type_name.trim().to_string(),
                    });
                }
                let set = p.feature_list(feats, ' ', line)?;
                p.forbidden.insert(t, set);
            }
            Section::Groups => {
                let set = p.feature_list(body, ' ', line)?;
                if set.len() < 2 {
                    return Err(ParseError::GroupTooSmall { line });
                }
                p.groups.push(FeatureGroup { members: set });
            }
            Section::Rules => p.rule_line(body, line)?,
            Section::Tests => p.test_line(body, line)?,
            Section::Schedule => p.schedule_line(body, line)?,
        }
    }

    let o = p.types.names.len();
    let forbidden_per_type = (0..o as u32)
        .map(|t| p.forbidden.remove(&TypeId(t)).unwrap_or_default())
        .collect();
    let dataset = Dataset {
        feature_names: p.features.names,
        type_names: p.types.names,
        forbidden_per_type,
        groups: p.groups,
        rules: p.rules,
        tests: p.tests,
    };
    dataset.validate()?;

    if let Some(section) = &p.schedule {
        let q = dataset.tests.len() as u32;
        let refs = section
            .windows
            .iter()
            .map(|w| w.0)
            .chain(section.groups.iter().map(|g| g.0))
            .chain(section.distinct.iter().flatten().copied());
        for t in refs {
            if t >= q {
                return Err(syntax(0, format!("schedule references test {t}, but there are {q} tests")));
            }
        }
    }

    Ok((dataset, p.schedule))
}

/// Parses an instance file, ignoring any `[schedule]` section.
pub fn parse_dataset(text: &str) -> Result<Dataset, ParseError> {
    parse_instance(text).map(|(d, _)| d)
}

fn render_literal(d: &Dataset, lit: Literal, out: &mut String) {
    if lit.negated {
        out.push('!');
    }
    out.push_str(&d.feature_names[lit.feature.index()]);
}

fn render_side(d: &Dataset, literals: &[Literal], connective: Connective) -> String {
    let sep = match connective {
        Connective::And => " & ",
        Connective::Or => " | ",
        Connective::Single => " ",
    };
    let mut out = String::new();
    for (i, &lit) in literals.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        render_literal(d, lit, &mut out);
    }
    out
}

fn render_feature_csv(d: &Dataset, set: &BTreeSet<FeatureId>) -> String {
    set.iter()
        .map(|f| d.feature_names[f.index()].as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// Renders a dataset in canonical form; `parse_dataset` inverts it exactly.
pub fn serialize_dataset(d: &Dataset) -> String {
    serialize_instance(d, None)
}

/// Renders a dataset and an optional schedule section in canonical form.
pub fn serialize_instance(d: &Dataset, schedule: Option<&ScheduleSection>) -> String {
    let mut out = String::new();
    out.push_str("[features]\n");
    for name in &d.feature_names {
        out.push_str(name);
        out.push('\n');
    }
    out.push_str("\n[types]\n");
    for name in &d.type_names {
        out.push_str(name);
        out.push('\n');
    }
    out.push_str("\n[forbidden]\n");
    for (t, set) in d.forbidden_per_type.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let feats = set
            .iter()
            .map(|f| d.feature_names[f.index()].as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(out, "{}: {}", d.type_names[t], feats);
    }
    out.push_str("\n[groups]\n");
    for group in &d.groups {
        let feats = group
            .members
            .iter()
            .map(|f| d.feature_names[f.index()].as_str())
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&feats);
        out.push('\n');
    }
    out.push_str("\n[rules]\n");
    for rule in &d.rules {
        let type_name = match rule.rule_type {
            Some(t) => d.type_names[t.index()].as_str(),
            None => "*",
        };
        let lhs = render_side(d, &rule.lhs_literals, rule.lhs_connective);
        let rhs = render_side(d, &rule.rhs_literals, rule.rhs_connective);
        if lhs.is_empty() {
            let _ = writeln!(out, "{}: => {}", type_name, rhs);
        } else {
            let _ = writeln!(out, "{}: {} => {}", type_name, lhs, rhs);
        }
    }
    out.push_str("\n[tests]\n");
    for test in &d.tests {
        let mut fields = Vec::new();
        if !test.required_present.is_empty() {
            fields.push(format!("need={}", render_feature_csv(d, &test.required_present)));
        }
        if !test.required_absent.is_empty() {
            fields.push(format!("not={}", render_feature_csv(d, &test.required_absent)));
        }
        if !test.required_any_of.is_empty() {
            fields.push(format!("any={}", render_feature_csv(d, &test.required_any_of)));
        }
        fields.push(format!("k={}", test.cars_needed));
        fields.push(format!("w={}", render_weight(test.weight)));
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    if let Some(s) = schedule {
        out.push_str("\n[schedule]\n");
        let _ = writeln!(out, "horizon {}", s.horizon_days);
        let _ = writeln!(out, "capacity {}", s.daily_capacity);
        for &(t, start, end) in &s.windows {
            let _ = writeln!(out, "window {} {} {}", t, start, end);
        }
        for &(t, g) in &s.groups {
            let _ = writeln!(out, "group {} {}", t, g);
        }
        for set in &s.distinct {
            let ids =
                set.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
            let _ = writeln!(out, "distinct {}", ids);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_instance() {
        let text = "[features]\nengine\n[types]\nbase\n[tests]\nneed=engine k=1 w=1\n";
        let d = parse_dataset(text).unwrap();
        assert_eq!(d.feature_count(), 1);
        assert_eq!(d.type_count(), 1);
        assert_eq!(d.tests.len(), 1);
        assert_eq!(d.tests[0].cars_needed, 1);
        assert!(d.tests[0].required_present.contains(&FeatureId(0)));
    }

    #[test]
    fn undeclared_feature_in_rule() {
        let text = "[features]\na\n[types]\nt\n[rules]\nt: a => F9\n";
        let err = parse_dataset(text).unwrap_err();
        assert!(matches!(err, ParseError::UndeclaredFeature { line: 5, ref name } if name == "F9"));
    }

    #[test]
    fn group_of_one_rejected() {
        let text = "[features]\na\nb\n[types]\nt\n[groups]\na\n";
        assert!(matches!(
            parse_dataset(text).unwrap_err(),
            ParseError::GroupTooSmall { line: 6 }
        ));
    }

    #[test]
    fn duplicate_feature_name_rejected() {
        let text = "[features]\na\na\n";
        assert!(matches!(
            parse_dataset(text).unwrap_err(),
            ParseError::DuplicateName { line: 3, .. }
        ));
    }

    #[test]
    fn mixed_or_lhs_rejected() {
        let text = "[features]\na\nb\nc\n[types]\nt\n[rules]\nt: a | !b => c\n";
        assert!(matches!(
            parse_dataset(text).unwrap_err(),
            ParseError::MixedOrLhs { line: 8 }
        ));
    }

    #[test]
    fn rule_classes_round_trip() {
        let text = "\
[features]
a
b
c
d
[types]
t1
t2
[rules]
t1: a & !b => c | d
*: a => !b
t2: => !a
t1: a | b => !c & !d
";
        let d = parse_dataset(text).unwrap();
        assert_eq!(d.rules[0].class_label.as_str(), "m&0|");
        assert_eq!(d.rules[1].class_label.as_str(), "0111");
        assert_eq!(d.rules[2].class_label.as_str(), "0&11");
        assert_eq!(d.rules[3].class_label.as_str(), "0|1&");
        let text2 = serialize_dataset(&d);
        let d2 = parse_dataset(&text2).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn weights_parse_exactly() {
        assert_eq!(parse_weight("3", 1).unwrap(), Rational64::from_integer(3));
        assert_eq!(parse_weight("5/2", 1).unwrap(), Rational64::new(5, 2));
        assert_eq!(parse_weight("2.5", 1).unwrap(), Rational64::new(5, 2));
        assert_eq!(parse_weight("0.25", 1).unwrap(), Rational64::new(1, 4));
        assert!(parse_weight("x", 1).is_err());
    }

    #[test]
    fn schedule_section_parses() {
        let text = "\
[features]
a
[types]
t
[tests]
need=a k=2 w=1
any=a k=1 w=1
[schedule]
horizon 3
capacity 2
window 0 1 2
group 1 1
distinct 0
";
        let (_, schedule) = parse_instance(text).unwrap();
        let s = schedule.unwrap();
        assert_eq!(s.horizon_days, 3);
        assert_eq!(s.daily_capacity, 2);
        assert_eq!(s.windows, vec![(0, 1, 2)]);
        assert_eq!(s.groups, vec![(1, 1)]);
        assert_eq!(s.distinct, vec![vec![0]]);
    }

    #[test]
    fn schedule_bad_test_reference() {
        let text = "[features]\na\n[types]\nt\n[tests]\nneed=a k=1 w=1\n[schedule]\nhorizon 2\ncapacity 1\nwindow 5 1 2\n";
        assert!(parse_instance(text).is_err());
    }

    #[test]
    fn empty_rules_section_serializes() {
        let d = parse_dataset("[features]\na\n[types]\nt\n").unwrap();
        let text = serialize_dataset(&d);
        assert!(text.contains("[rules]\n"));
        assert!(text.contains("[tests]\n"));
    }
}
