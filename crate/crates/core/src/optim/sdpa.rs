//! Export to the SDPA sparse text format.
//!
//! Problems are written as SDPA's dual form: maximize F0 . Y subject to
//! Fi . Y = ci, Y PSD, with Y holding every block. Free scalars become a
//! diagonal block of nonnegative pairs (v+, v-).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::sdp::{LinearFunctional, SdpProblem, Sense};
use super::OptimError;

pub fn export_sdpa(p: &SdpProblem, path: &Path) -> Result<(), OptimError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_sdpa(p, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn write_sdpa<W: Write>(p: &SdpProblem, out: &mut W) -> Result<(), OptimError> {
    let m = p.constraints().len();
    if m == 0 {
        return Err(OptimError::Invalid(
            "SDPA export requires at least one constraint".into(),
        ));
    }
    let sizes = p.block_sizes();
    let nf = p.free_names().len();
    let free_block = sizes.len();
    let nblocks = sizes.len() + usize::from(nf > 0);
    let sign = match p.sense() {
        Sense::Minimize => -1.0,
        Sense::Maximize => 1.0,
    };

    // (matno, blkno, i, j) -> value, all one-based.
    let mut entries: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    let mut put = |matno: usize, f: &LinearFunctional, scale: f64| {
        for e in &f.entries {
            let v = if e.i == e.j { e.coef } else { 0.5 * e.coef };
            *entries.entry((matno, e.block + 1, e.i + 1, e.j + 1)).or_insert(0.0) += scale * v;
        }
        for &(k, c) in &f.free {
            *entries
                .entry((matno, free_block + 1, 2 * k + 1, 2 * k + 1))
                .or_insert(0.0) += scale * c;
            *entries
                .entry((matno, free_block + 1, 2 * k + 2, 2 * k + 2))
                .or_insert(0.0) -= scale * c;
        }
    };
    put(0, p.objective(), sign);
    for (i, (f, _)) in p.constraints().iter().enumerate() {
        put(i + 1, f, 1.0);
    }

    writeln!(
        out,
        "\"exported by rsi-core: {} constraints, {} blocks, {} free scalars",
        m,
        sizes.len(),
        nf
    )?;
    writeln!(out, "{m}")?;
    writeln!(out, "{nblocks}")?;
    let mut structure: Vec<String> = sizes.iter().map(|n| n.to_string()).collect();
    if nf > 0 {
        structure.push(format!("-{}", 2 * nf));
    }
    writeln!(out, "{}", structure.join(" "))?;
    let c: Vec<String> = p.constraints().iter().map(|(_, b)| format!("{b:e}")).collect();
    writeln!(out, "{}", c.join(" "))?;
    for ((matno, blk, i, j), v) in entries {
        if v != 0.0 {
            writeln!(out, "{matno} {blk} {i} {j} {v:e}")?;
        }
    }
    Ok(())
}
