//! Plain-text output shared by the front ends.

use std::io::{self, BufRead, Write};

use serde_json::{json, Value};

use crate::dynamics::Trajectory;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column names of [`write_trajectory_csv`].
pub fn trajectory_columns(traj: &Trajectory) -> Vec<String> {
    std::iter::once("t".to_string()).chain(traj.state_names()).chain(traj.monitor_names.iter().cloned()).collect()
}

/// One `# {json}` line with the flow spec and couplings, then a header row
/// `t, <state>, <monitors>` and one row per stored time.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    let header = json!({ "flow": traj.spec, "params": traj.params });
    writeln!(out, "# {header}")?;
    writeln!(out, "{}", trajectory_columns(traj).join(","))?;
    for ((t, x), m) in traj.times.iter().zip(&traj.states).zip(&traj.monitors) {
        let row: Vec<String> = std::iter::once(t).chain(x).chain(m).map(|v| format_real(*v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Parsed trajectory CSV: header JSON, column names and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub header: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TrajectoryTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_trajectory_csv<R: BufRead>(input: R) -> io::Result<TrajectoryTable> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| bad("empty trajectory file".into()))??;
    let header: Value = first
        .strip_prefix("# ")
        .ok_or_else(|| bad("missing '# ' header line".into()))
        .and_then(|s| serde_json::from_str(s).map_err(|e| bad(e.to_string())))?;
    let columns: Vec<String> =
        lines.next().ok_or_else(|| bad("missing column row".into()))??.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row = line.split(',').map(|v| v.parse::<f64>().map_err(|e| bad(format!("{v}: {e}")))).collect::<io::Result<Vec<_>>>()?;
        if row.len() != columns.len() {
            return Err(bad(format!("row has {} fields, expected {}", row.len(), columns.len())));
        }
        rows.push(row);
    }
    Ok(TrajectoryTable { header, columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, FlowSpec, System};
    use crate::params::CouplingParams;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let p = CouplingParams::from_rsvd(1.0, 2.0, 0.5, 1).unwrap();
        let tr = integrate(&FlowSpec::new(System::SutherlandH1, 1e-2, 0.1), &[0.7, 0.3], &p).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&tr, &mut buf).unwrap();
        let table = read_trajectory_csv(&buf[..]).unwrap();
        assert_eq!(table.columns, trajectory_columns(&tr));
        assert_eq!(table.rows.len(), tr.times.len());
        assert_eq!(table.column("q1").unwrap(), tr.states.iter().map(|s| s[0]).collect::<Vec<_>>());
        assert_eq!(table.header["flow"]["T"], json!(0.1));
    }
}
