use super::Polynomial;

/// A polynomial flattened for repeated evaluation at points aligned with its scope.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseEval {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl DenseEval {
    pub fn new(p: &Polynomial) -> Self {
        let scope = p.scope();
        let terms = p
            .terms()
            .map(|(m, c)| {
                let factors = m
                    .iter()
                    .map(|(v, e)| (scope.position(v).expect("variable in scope"), e as i32))
                    .collect();
                (c, factors)
            })
            .collect();
        DenseEval { terms }
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, f)| f.iter().fold(*c, |acc, &(k, e)| acc * values[k].powi(e)))
            .sum()
    }
}
