use std::io::{BufRead, BufReader, Read, Write};

use super::{SimError, Trajectory};

/// Parsed numeric CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Columns `t, x1.., u1.., h1.., avg_state`, one row per time point. The final
/// row repeats the last applied input.
pub fn write_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<(), SimError> {
    let n = traj.states.first().map_or(0, Vec::len);
    let r = traj.inputs.first().map_or(0, Vec::len);
    let k = traj.safety.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|j| format!("x{j}")));
    header.extend((1..=r).map(|j| format!("u{j}")));
    header.extend((1..=k).map(|j| format!("h{j}")));
    header.push("avg_state".into());
    writeln!(out, "{}", header.join(","))?;
    let avg = traj.average_state();
    for (t, x) in traj.states.iter().enumerate() {
        let mut row = vec![fmt(traj.time[t])];
        row.extend(x.iter().map(|&v| fmt(v)));
        if let Some(u) = traj.inputs.get(t).or_else(|| traj.inputs.last()) {
            row.extend(u.iter().map(|&v| fmt(v)));
        }
        row.extend(traj.safety[t].iter().map(|&v| fmt(v)));
        row.push(fmt(avg[t]));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<CsvTable, SimError> {
    let mut lines = BufReader::new(input).lines();
    let header: Vec<String> = match lines.next() {
        Some(l) => l?.split(',').map(str::to_string).collect(),
        None => return Err(SimError::Invalid("empty CSV".into())),
    };
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| SimError::Invalid(format!("row {}: {e}", ln + 2)))?;
        if row.len() != header.len() {
            return Err(SimError::Invalid(format!("row {} has {} fields", ln + 2, row.len())));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}
