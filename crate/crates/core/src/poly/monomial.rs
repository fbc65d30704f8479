use std::fmt;

use super::VarId;

/// Product of variable powers, stored sorted by variable with no zero exponents.
///
/// The derived ordering compares `(variable, exponent)` pairs lexicographically,
/// which gives the constant monomial first and a deterministic order everywhere else.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId, exponent: u32) -> Self {
        if exponent == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, exponent)])
        }
    }

    /// Builds from arbitrary pairs; repeated variables are merged and zeros dropped.
    pub fn from_pairs<I: IntoIterator<Item = (VarId, u32)>>(pairs: I) -> Self {
        let mut out = Monomial::one();
        for (v, e) in pairs {
            out = out.mul(&Monomial::var(v, e));
        }
        out
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.0
            .binary_search_by_key(&v, |(w, _)| *w)
            .map(|k| self.0[k].1)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|(v, _)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Exact quotient when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        for &(v, e) in &self.0 {
            let d = other.exponent(v);
            if d > e {
                return None;
            }
            if e > d {
                out.push((v, e - d));
            }
        }
        if other.vars().any(|v| self.exponent(v) == 0) {
            return None;
        }
        Some(Monomial(out))
    }

    /// Returns `(k, m')` with `d/dv self = k * m'`, or `None` when `v` is absent.
    pub fn derivative(&self, v: VarId) -> Option<(u32, Monomial)> {
        let k = self.0.binary_search_by_key(&v, |(w, _)| *w).ok()?;
        let e = self.0[k].1;
        let mut rest = self.0.clone();
        if e == 1 {
            rest.remove(k);
        } else {
            rest[k].1 = e - 1;
        }
        Some((e, Monomial(rest)))
    }

    pub fn eval_with<F: Fn(VarId) -> f64>(&self, value: &F) -> f64 {
        self.0.iter().fold(1.0, |acc, (v, e)| acc * value(*v).powi(*e as i32))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, (v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// All monomials in `vars` of total degree at most `max_degree`, sorted.
pub fn monomial_basis(vars: &[VarId], max_degree: u32) -> Vec<Monomial> {
    let mut vars = vars.to_vec();
    vars.sort();
    vars.dedup();
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill(&vars, max_degree, &mut current, &mut out);
    out.sort();
    out
}

fn fill(vars: &[VarId], budget: u32, current: &mut Vec<(VarId, u32)>, out: &mut Vec<Monomial>) {
    let Some((&v, rest)) = vars.split_first() else {
        out.push(Monomial(current.clone()));
        return;
    };
    for e in 0..=budget {
        if e > 0 {
            current.push((v, e));
        }
        fill(rest, budget - e, current, out);
        if e > 0 {
            current.pop();
        }
    }
}
