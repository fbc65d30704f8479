//! Detection of linearly dependent equality rows by modified Gram-Schmidt.

use super::sdp::LinearFunctional;

pub(crate) struct KeptRows {
    pub rows: Vec<usize>,
    /// First dependent row whose right-hand side contradicts the others.
    pub inconsistent: Option<usize>,
}

pub(crate) fn independent_rows(
    block_sizes: &[usize],
    nfree: usize,
    constraints: &[(LinearFunctional, f64)],
    tol: f64,
) -> KeptRows {
    let mut offsets = Vec::with_capacity(block_sizes.len());
    let mut total = 0;
    for &n in block_sizes {
        offsets.push(total);
        total += n * (n + 1) / 2;
    }
    let free_offset = total;
    total += nfree;
    let index = |block: usize, i: usize, j: usize| {
        // Upper triangle, row-major: row i holds columns i..n.
        let n = block_sizes[block];
        offsets[block] + i * n - i * i.saturating_sub(1) / 2 + (j - i)
    };

    let mut basis: Vec<(Vec<usize>, Vec<f64>, f64)> = Vec::new();
    let mut kept = Vec::new();
    for (r, (f, rhs)) in constraints.iter().enumerate() {
        let mut a = vec![0.0; total];
        for e in &f.entries {
            a[index(e.block, e.i, e.j)] += e.coef;
        }
        for &(k, c) in &f.free {
            a[free_offset + k] += c;
        }
        let norm0 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut beta = *rhs;
        if norm0 == 0.0 {
            if rhs.abs() > tol {
                return KeptRows {
                    rows: kept,
                    inconsistent: Some(r),
                };
            }
            continue;
        }
        for _ in 0..2 {
            for (support, q, rho) in &basis {
                let coef: f64 = support.iter().map(|&k| a[k] * q[k]).sum();
                if coef != 0.0 {
                    for &k in support {
                        a[k] -= coef * q[k];
                    }
                    beta -= coef * rho;
                }
            }
        }
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= tol * norm0 {
            if beta.abs() > 1e-8 * (1.0 + rhs.abs()) * norm0.max(1.0) {
                return KeptRows {
                    rows: kept,
                    inconsistent: Some(r),
                };
            }
            continue;
        }
        let support: Vec<usize> = (0..total).filter(|&k| a[k] != 0.0).collect();
        let q: Vec<f64> = a.iter().map(|v| v / norm).collect();
        basis.push((support, q, beta / norm));
        kept.push(r);
    }
    KeptRows {
        rows: kept,
        inconsistent: None,
    }
}
