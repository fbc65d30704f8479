use crate::poly::{Polynomial, VarId};

/// Regular grid over a box, optionally restricted to `{p >= 0}` for every filter polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyDomainSampler {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
    pub filter: Vec<Polynomial>,
}

impl SafetyDomainSampler {
    pub fn new(bounds: &[(f64, f64)], resolution: usize) -> Self {
        assert!(resolution >= 2, "grid resolution must be at least 2 per axis");
        SafetyDomainSampler {
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
            resolution: vec![resolution; bounds.len()],
            filter: Vec::new(),
        }
    }

    pub fn with_filter(mut self, filter: Vec<Polynomial>) -> Self {
        self.filter = filter;
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn axis(&self, k: usize) -> Vec<f64> {
        let n = self.resolution[k];
        (0..n)
            .map(|t| {
                if t + 1 == n {
                    self.hi[k]
                } else {
                    self.lo[k] + (self.hi[k] - self.lo[k]) * t as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// Accepts a point whose leading coordinates are states `x1..`; other variables read as zero.
    pub fn accepts(&self, x: &[f64]) -> bool {
        self.filter
            .iter()
            .all(|h| h.eval_with(|v: VarId| if v.is_state() { x[v.index as usize] } else { 0.0 }) >= 0.0)
    }

    /// Grid points in lexicographic order (first axis slowest) that pass the filter.
    pub fn points(&self) -> GridPoints<'_> {
        GridPoints {
            sampler: self,
            axes: (0..self.dim()).map(|k| self.axis(k)).collect(),
            idx: vec![0; self.dim()],
            done: false,
            started: false,
        }
    }
}

pub struct GridPoints<'a> {
    sampler: &'a SafetyDomainSampler,
    axes: Vec<Vec<f64>>,
    idx: Vec<usize>,
    done: bool,
    started: bool,
}

impl GridPoints<'_> {
    fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            return true;
        }
        for k in (0..self.idx.len()).rev() {
            self.idx[k] += 1;
            if self.idx[k] < self.axes[k].len() {
                return true;
            }
            self.idx[k] = 0;
        }
        false
    }
}

impl Iterator for GridPoints<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        while !self.done {
            if !self.advance() {
                self.done = true;
                break;
            }
            let p: Vec<f64> = self.idx.iter().enumerate().map(|(k, &t)| self.axes[k][t]).collect();
            if self.sampler.accepts(&p) {
                return Some(p);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Scope;

    #[test]
    fn counts_and_filter() {
        let s = SafetyDomainSampler::new(&[(-1.0, 1.0), (0.0, 1.0)], 3);
        assert_eq!(s.points().count(), 9);
        let scope = Scope::states_and_inputs(2, 0);
        let x1 = Polynomial::var(&scope, VarId::state(0)).unwrap();
        let s = s.with_filter(vec![x1]);
        let pts: Vec<Vec<f64>> = s.points().collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, 0.0]);
    }
}
