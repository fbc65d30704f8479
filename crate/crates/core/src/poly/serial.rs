use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Monomial, PolyError, Polynomial, Scope, VarId};

/// One term in the textual form `{"exps": {"x3": 2, "u1": 1}, "coef": -0.45}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    #[serde(default)]
    pub exps: BTreeMap<String, u32>,
    pub coef: f64,
}

impl Polynomial {
    /// Terms in monomial order.
    pub fn to_records(&self) -> Vec<PolyTerm> {
        self.terms()
            .map(|(m, c)| PolyTerm {
                exps: m.iter().map(|(v, e)| (v.to_string(), e)).collect(),
                coef: c,
            })
            .collect()
    }

    pub fn from_records(scope: &Scope, records: &[PolyTerm]) -> Result<Polynomial, PolyError> {
        let mut terms = Vec::with_capacity(records.len());
        for r in records {
            let mut pairs = Vec::with_capacity(r.exps.len());
            for (name, &e) in &r.exps {
                pairs.push((VarId::parse(name)?, e));
            }
            terms.push((Monomial::from_pairs(pairs), r.coef));
        }
        Polynomial::from_terms(scope, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip() {
        let s = Scope::states_and_inputs(3, 1);
        let recs: Vec<PolyTerm> =
            serde_json::from_str(r#"[{"exps":{"x3":2,"u1":1},"coef":-0.45},{"exps":{},"coef":2.0}]"#).unwrap();
        let p = Polynomial::from_records(&s, &recs).unwrap();
        assert_eq!(p.num_terms(), 2);
        let back = Polynomial::from_records(&s, &p.to_records()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn unknown_variable_rejected() {
        let s = Scope::states_and_inputs(1, 0);
        let recs = vec![PolyTerm {
            exps: BTreeMap::from([("x2".to_string(), 1)]),
            coef: 1.0,
        }];
        assert!(matches!(
            Polynomial::from_records(&s, &recs),
            Err(PolyError::NotInScope(_))
        ));
    }
}
