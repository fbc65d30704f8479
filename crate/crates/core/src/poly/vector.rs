use super::{PolyError, Polynomial, Scope};

/// Column of polynomials sharing one scope.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVector {
    scope: Scope,
    entries: Vec<Polynomial>,
}

impl PolyVector {
    pub fn new(scope: &Scope, entries: Vec<Polynomial>) -> Result<Self, PolyError> {
        if entries.iter().any(|p| p.scope() != scope) {
            return Err(PolyError::ScopeDiffers);
        }
        Ok(PolyVector {
            scope: scope.clone(),
            entries,
        })
    }

    pub fn zeros(scope: &Scope, len: usize) -> Self {
        PolyVector {
            scope: scope.clone(),
            entries: vec![Polynomial::zero(scope); len],
        }
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> &Polynomial {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[Polynomial] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Polynomial> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Polynomial> {
        self.entries.iter()
    }

    pub fn checked_add(&self, other: &PolyVector) -> Result<PolyVector, PolyError> {
        if self.len() != other.len() {
            return Err(PolyError::Shape(format!(
                "vector lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.checked_add(b))
            .collect::<Result<Vec<_>, _>>()?;
        PolyVector::new(&self.scope, entries)
    }

    pub fn with_scope(&self, scope: &Scope) -> Result<PolyVector, PolyError> {
        let entries = self
            .entries
            .iter()
            .map(|p| p.with_scope(scope))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyVector {
            scope: scope.clone(),
            entries,
        })
    }

    pub fn eval_with<F: Fn(super::VarId) -> f64>(&self, value: F) -> Vec<f64> {
        self.entries.iter().map(|p| p.eval_with(&value)).collect()
    }
}

/// Row-major rectangular array of polynomials sharing one scope.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    scope: Scope,
    rows: usize,
    cols: usize,
    entries: Vec<Polynomial>,
}

impl PolyMatrix {
    pub fn new(scope: &Scope, rows: usize, cols: usize, entries: Vec<Polynomial>) -> Result<Self, PolyError> {
        if entries.len() != rows * cols {
            return Err(PolyError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|p| p.scope() != scope) {
            return Err(PolyError::ScopeDiffers);
        }
        Ok(PolyMatrix {
            scope: scope.clone(),
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(scope: &Scope, rows: usize, cols: usize) -> Self {
        PolyMatrix {
            scope: scope.clone(),
            rows,
            cols,
            entries: vec![Polynomial::zero(scope); rows * cols],
        }
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> &Polynomial {
        &self.entries[r * self.cols + c]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Polynomial::is_zero)
    }

    pub fn with_scope(&self, scope: &Scope) -> Result<PolyMatrix, PolyError> {
        let entries = self
            .entries
            .iter()
            .map(|p| p.with_scope(scope))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyMatrix {
            scope: scope.clone(),
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn mul_vector(&self, v: &PolyVector) -> Result<PolyVector, PolyError> {
        if v.len() != self.cols {
            return Err(PolyError::Shape(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc = Polynomial::zero(&self.scope);
            for c in 0..self.cols {
                acc = acc.checked_add(&self.get(r, c).checked_mul(v.get(c))?)?;
            }
            out.push(acc);
        }
        PolyVector::new(&self.scope, out)
    }
}
