//! Static back-end selection: a first-match rule table of comparison
//! predicates over the feature vector, with a required default row. The
//! table is user-editable JSON so a learned policy can be dropped in
//! without touching the feature schema.

use std::fmt;

use serde::Deserialize;

use crate::features::FeatureVector;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RawRule {
    When { when: String, r#use: String },
    Default { default: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Op {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

#[derive(Clone, Debug)]
struct Comparison {
    feature: String,
    op: Op,
    value: f64,
}

#[derive(Clone, Debug)]
enum Rule {
    When { conjuncts: Vec<Comparison>, solver: String },
    Default { solver: String },
}

#[derive(Clone, Debug)]
pub struct SelectionTable {
    rules: Vec<Rule>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectError {
    EmptyTable,
    BadPredicate(String),
    UnknownFeature(String),
    NoMatch,
    Json(String),
}

impl fmt::Display for SelectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectError::EmptyTable => write!(f, "selection table is empty"),
            SelectError::BadPredicate(p) => write!(f, "cannot parse predicate `{p}`"),
            SelectError::UnknownFeature(name) => write!(f, "unknown feature `{name}`"),
            SelectError::NoMatch => write!(f, "no rule matched and no default row present"),
            SelectError::Json(msg) => write!(f, "selection table: {msg}"),
        }
    }
}

impl std::error::Error for SelectError {}

fn parse_comparison(text: &str) -> Result<Comparison, SelectError> {
    let bad = || SelectError::BadPredicate(text.trim().to_string());
    let ops = [
        ("==", Op::Eq),
        ("!=", Op::Ne),
        ("<=", Op::Le),
        (">=", Op::Ge),
        ("<", Op::Lt),
        (">", Op::Gt),
    ];
    for (symbol, op) in ops {
        if let Some(pos) = text.find(symbol) {
            let feature = text[..pos].trim().to_string();
            let value: f64 = text[pos + symbol.len()..].trim().parse().map_err(|_| bad())?;
            if feature.is_empty() {
                return Err(bad());
            }
            return Ok(Comparison { feature, op, value });
        }
    }
    Err(bad())
}

impl SelectionTable {
    pub fn from_json(text: &str) -> Result<Self, SelectError> {
        let raw: Vec<RawRule> =
            serde_json::from_str(text).map_err(|e| SelectError::Json(e.to_string()))?;
        if raw.is_empty() {
            return Err(SelectError::EmptyTable);
        }
        let mut rules = Vec::with_capacity(raw.len());
        for entry in raw {
            match entry {
                RawRule::When { when, r#use } => {
                    let conjuncts = when
                        .split("&&")
                        .map(parse_comparison)
                        .collect::<Result<Vec<_>, _>>()?;
                    rules.push(Rule::When { conjuncts, solver: r#use });
                }
                RawRule::Default { default } => rules.push(Rule::Default { solver: default }),
            }
        }
        Ok(SelectionTable { rules })
    }
}

/// Routes cheap instances: no universal levels means a SAT-shaped problem
/// for a QDIMACS back-end, large alternating instances go to the
/// expansion-based solver, everything else to the circuit-level default.
pub const DEFAULT_TABLE_JSON: &str = r#"[
  {"when": "QF == 0", "use": "depqbf"},
  {"when": "QL >= 2 && A >= 200", "use": "rareqs"},
  {"default": "quabs"}
]"#;

pub fn default_table() -> SelectionTable {
    SelectionTable::from_json(DEFAULT_TABLE_JSON).expect("shipped table parses")
}

/// First matching rule wins; the default row matches unconditionally.
pub fn select_backend(
    features: &FeatureVector,
    table: &SelectionTable,
) -> Result<String, SelectError> {
    if table.rules.is_empty() {
        return Err(SelectError::EmptyTable);
    }
    for rule in &table.rules {
        match rule {
            Rule::When { conjuncts, solver } => {
                let mut all = true;
                for c in conjuncts {
                    let value = features
                        .get(&c.feature)
                        .ok_or_else(|| SelectError::UnknownFeature(c.feature.clone()))?;
                    let holds = match c.op {
                        Op::Eq => value == c.value,
                        Op::Ne => value != c.value,
                        Op::Le => value <= c.value,
                        Op::Ge => value >= c.value,
                        Op::Lt => value < c.value,
                        Op::Gt => value > c.value,
                    };
                    if !holds {
                        all = false;
                        break;
                    }
                }
                if all {
                    return Ok(solver.clone());
                }
            }
            Rule::Default { solver } => return Ok(solver.clone()),
        }
    }
    Err(SelectError::NoMatch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;
    use quantasp_core::textio::parse;

    fn features(text: &str) -> FeatureVector {
        extract_features(&parse(text).unwrap())
    }

    #[test]
    fn first_match_wins() {
        let table =
            SelectionTable::from_json(r#"[{"when":"QF==0","use":"s1"},{"default":"s2"}]"#).unwrap();
        let f = features("%@exists\na.\n%@constraint\n");
        assert_eq!(select_backend(&f, &table).unwrap(), "s1");
    }

    #[test]
    fn falls_through_to_default() {
        let table =
            SelectionTable::from_json(r#"[{"when":"QF==0","use":"s1"},{"default":"s2"}]"#).unwrap();
        let f = features("%@forall\na.\n%@constraint\n");
        assert_eq!(select_backend(&f, &table).unwrap(), "s2");
    }

    #[test]
    fn empty_table_is_an_error() {
        assert_eq!(SelectionTable::from_json("[]").unwrap_err(), SelectError::EmptyTable);
    }

    #[test]
    fn conjunction_and_comparison_operators() {
        let table = SelectionTable::from_json(
            r#"[{"when":"QL >= 2 && A < 10","use":"s1"},{"default":"s2"}]"#,
        )
        .unwrap();
        let two_level = features("%@exists\na.\n%@forall\nb.\n%@constraint\n");
        assert_eq!(select_backend(&two_level, &table).unwrap(), "s1");
        let one_level = features("%@exists\na.\n%@constraint\n");
        assert_eq!(select_backend(&one_level, &table).unwrap(), "s2");
    }

    #[test]
    fn unknown_feature_is_reported() {
        let table =
            SelectionTable::from_json(r#"[{"when":"ZZ==0","use":"s1"},{"default":"s2"}]"#).unwrap();
        let f = features("%@exists\na.\n%@constraint\n");
        assert_eq!(
            select_backend(&f, &table).unwrap_err(),
            SelectError::UnknownFeature("ZZ".to_string())
        );
    }

    #[test]
    fn shipped_table_routes_the_worked_example_to_the_default() {
        // the worked two-level program: QF=1 and small, so neither the
        // SAT-shaped nor the large-alternation row matches
        let f = features(
            "%@exists\n{a;b}.\n:- a, not b.\n%@forall\nc :- not a, not b.\nd :- a, b.\n{e}.\n%@constraint\n:- e, c.\n:- e, d.\n",
        );
        assert_eq!(select_backend(&f, &default_table()).unwrap(), "quabs");
    }
}
