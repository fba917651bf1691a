//! Problem files, grid dumps and convergence logs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoundarySpec, Grid, GridProblem, LogEntry, RhsSpec, SolveOutcome};
use crate::error::{Error, Result};
use crate::geometry::Signature;

/// Mesh width: one value for every axis or one per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshWidth {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

/// JSON problem description.
///
/// ```json
/// {"n": 2, "box": [[0, 1], [0, 1]], "h": 0.0625, "signature": "euclidean",
///  "boundary": {"preset": "quadratic"}, "f": {"preset": "constant", "value": 2}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Dimension; defaults to the number of box axes.
    #[serde(default)]
    pub n: Option<usize>,
    /// Per-axis `[lo, hi]`; defaults to the unit box.
    #[serde(rename = "box", default)]
    pub bounds: Option<Vec<[f64; 2]>>,
    pub h: MeshWidth,
    #[serde(default = "euclidean")]
    pub signature: Signature,
    pub boundary: BoundarySpec,
    pub f: RhsSpec,
}

fn euclidean() -> Signature {
    Signature::Euclidean
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn into_problem(self) -> Result<GridProblem> {
        let bounds = match (self.bounds, self.n) {
            (Some(b), Some(n)) if b.len() != n => {
                return Err(Error::InvalidInput(format!("box has {} axes but n = {n}", b.len())))
            }
            (Some(b), _) => b,
            (None, Some(n)) => vec![[0.0, 1.0]; n],
            (None, None) => return Err(Error::InvalidInput("problem needs `n` or `box`".into())),
        };
        let h = match self.h {
            MeshWidth::Uniform(h) => vec![h; bounds.len()],
            MeshWidth::PerAxis(h) => h,
        };
        GridProblem::new(&bounds, &h, self.signature, self.f, self.boundary)
    }
}

/// Text dump: header lines `n`, `dims`, `box`, `h`, then one value per line
/// in row-major order (axis 0 slowest).
pub fn format_grid_dump(grid: &Grid, u: &[f64]) -> String {
    let join = |v: &[String]| v.join(" ");
    let mut s = String::new();
    let _ = writeln!(s, "n {}", grid.ndim());
    let _ = writeln!(s, "dims {}", join(&grid.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>()));
    let bounds: Vec<String> = grid.lo.iter().zip(&grid.hi).map(|(l, h)| format!("{l:.17e} {h:.17e}")).collect();
    let _ = writeln!(s, "box {}", join(&bounds));
    let _ = writeln!(s, "h {}", join(&grid.h.iter().map(|h| format!("{h:.17e}")).collect::<Vec<_>>()));
    for v in u {
        let _ = writeln!(s, "{v:.17e}");
    }
    s
}

/// Inverse of [`format_grid_dump`].
pub fn parse_grid_dump(text: &str) -> Result<(Grid, Vec<f64>)> {
    let bad = |what: &str| Error::InvalidInput(format!("grid dump: {what}"));
    let mut lines = text.lines();
    let mut field = |name: &str| -> Result<Vec<f64>> {
        let line = lines.next().ok_or_else(|| bad("truncated header"))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(name) {
            return Err(bad(&format!("expected `{name}` line")));
        }
        parts.map(|p| p.parse::<f64>().map_err(|_| bad("malformed number"))).collect()
    };
    let n = field("n")?;
    field("dims")?;
    let b = field("box")?;
    let h = field("h")?;
    if n.len() != 1 || b.len() != 2 * n[0] as usize || h.len() != n[0] as usize {
        return Err(bad("inconsistent header"));
    }
    let bounds: Vec<[f64; 2]> = b.chunks(2).map(|c| [c[0], c[1]]).collect();
    let grid = Grid::new(&bounds, &h)?;
    let u: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|_| bad("malformed value")))
        .collect::<Result<_>>()?;
    if u.len() != grid.len() {
        return Err(bad("value count does not match dims"));
    }
    Ok((grid, u))
}

/// Convergence log written next to the grid dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub schema_version: u32,
    pub converged: bool,
    #[serde(with = "crate::report::json_float")]
    pub final_residual: f64,
    #[serde(with = "crate::report::json_float")]
    pub seed_alpha: f64,
    pub t_values: Vec<f64>,
    pub iterations: Vec<LogEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ConvergenceLog {
    pub fn from_outcome(outcome: &SolveOutcome) -> Self {
        Self {
            schema_version: crate::report::SCHEMA_VERSION,
            converged: true,
            final_residual: outcome.state.residual_norm,
            seed_alpha: outcome.seed_alpha,
            t_values: outcome.t_values.clone(),
            iterations: outcome.log.clone(),
            error: None,
        }
    }

    pub fn failure(err: &Error) -> Self {
        Self {
            schema_version: crate::report::SCHEMA_VERSION,
            converged: false,
            final_residual: f64::NAN,
            seed_alpha: f64::NAN,
            t_values: Vec::new(),
            iterations: Vec::new(),
            error: Some(err.to_string()),
        }
    }
}

/// Writes `<prefix>.grid` and `<prefix>.log.json`.
pub fn write_solution(prefix: &Path, grid: &Grid, u: &[f64], log: &ConvergenceLog) -> Result<()> {
    fs::write(with_suffix(prefix, ".grid"), format_grid_dump(grid, u))?;
    fs::write(with_suffix(prefix, ".log.json"), serde_json::to_string_pretty(log)?)?;
    Ok(())
}

/// `prefix` with `suffix` appended to the file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_file_variants() {
        let p = ProblemFile::from_json(
            r#"{"n": 2, "h": 0.25, "boundary": {"preset": "quadratic"}, "f": {"preset": "constant", "value": 2}}"#,
        )
        .unwrap()
        .into_problem()
        .unwrap();
        assert_eq!(p.grid.dims, vec![5, 5]);
        assert_eq!(p.signature, Signature::Euclidean);
        let q = ProblemFile::from_json(
            r#"{"box": [[0, 1], [0, 2], [0, 1]], "h": [0.5, 0.5, 0.25], "signature": "minkowski",
                "boundary": {"expr": "0.1*x*y"}, "f": {"preset": "constant", "value": 1}}"#,
        )
        .unwrap()
        .into_problem()
        .unwrap();
        assert_eq!(q.grid.dims, vec![3, 5, 5]);
        assert_eq!(q.cone_k, 2);
        assert!(ProblemFile::from_json(
            r#"{"h": 0.5, "boundary": {"preset": "zero"}, "f": {"preset": "constant", "value": 1}}"#
        )
        .unwrap()
        .into_problem()
        .is_err());
    }

    #[test]
    fn grid_dump_round_trip() {
        let g = Grid::new(&[[0.0, 1.0], [-1.0, 1.0]], &[0.5, 0.5]).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|i| (i as f64).sqrt() / 3.0).collect();
        let (g2, u2) = parse_grid_dump(&format_grid_dump(&g, &u)).unwrap();
        assert_eq!(g2, g);
        assert_eq!(u2, u);
    }

    #[test]
    fn failure_log_round_trip() {
        let log = ConvergenceLog::failure(&Error::NoRoot { r1: 1.0, r2: 2.0 });
        let back: ConvergenceLog = serde_json::from_str(&serde_json::to_string(&log).unwrap()).unwrap();
        assert!(back.final_residual.is_nan() && !back.converged);
    }
}
