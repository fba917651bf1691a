//! Per-trial CSV rows and JSON run summaries.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// Version of the CSV columns and summary layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Whether a row is a pass/fail check or a recorded observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Check,
    Observation,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub check: String,
    pub role: Role,
    pub n: usize,
    pub kappa: Vec<f64>,
    pub params: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl TrialRow {
    pub fn check(trial: u64, check: &str, kappa: &[f64], lhs: f64, rhs: f64, satisfied: bool) -> Self {
        Self {
            trial,
            check: check.to_string(),
            role: Role::Check,
            n: kappa.len(),
            kappa: kappa.to_vec(),
            params: BTreeMap::new(),
            lhs,
            rhs,
            satisfied,
        }
    }

    pub fn observation(trial: u64, check: &str, kappa: &[f64], lhs: f64, rhs: f64, satisfied: bool) -> Self {
        Self { role: Role::Observation, ..Self::check(trial, check, kappa, lhs, rhs, satisfied) }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn is_violation(&self) -> bool {
        self.role == Role::Check && !self.satisfied
    }
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

pub const CSV_HEADER: [&str; 9] = ["trial", "check", "role", "n", "kappa", "params", "lhs", "rhs", "satisfied"];

/// Sorts by trial (stable, so rows of one trial keep their order).
pub fn sort_rows(rows: &mut [TrialRow]) {
    rows.sort_by_key(|r| r.trial);
}

/// Header plus one line per row; `kappa` entries are `;`-separated and
/// `params` are `key=value` pairs separated by `;`.
pub fn write_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let kappa: Vec<String> = r.kappa.iter().map(|&v| fmt_float(v)).collect();
        let params: Vec<String> = r.params.iter().map(|(k, &v)| format!("{k}={}", fmt_float(v))).collect();
        let role = match r.role {
            Role::Check => "check",
            Role::Observation => "observation",
        };
        w.write_record([
            r.trial.to_string(),
            r.check.clone(),
            role.to_string(),
            r.n.to_string(),
            kappa.join(";"),
            params.join(";"),
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            r.satisfied.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON has no NaN or infinity: such values are written as the strings
/// `"NaN"`, `"inf"` and `"-inf"` and read back from strings or `null`.
pub mod json_float {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
        Null(()),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Number(v)
        } else {
            Repr::Text(super::fmt_float(v))
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Number(v) => Ok(v),
            Repr::Null(()) => Ok(f64::NAN),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(E::custom(format!("not a float: {t}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|&x| to_repr(x)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }

    pub mod map {
        use super::*;

        pub fn serialize<S: Serializer>(v: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            s.collect_map(v.iter().map(|(k, &x)| (k, to_repr(x))))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            BTreeMap::<String, Repr>::deserialize(d)?.into_iter().map(|(k, r)| Ok((k, from_repr(r)?))).collect()
        }
    }
}

/// A failed check, pointing at its CSV line (1-based, header is line 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: u64,
    pub csv_line: usize,
    pub check: String,
    #[serde(with = "json_float::vec")]
    pub kappa: Vec<f64>,
    #[serde(with = "json_float::map")]
    pub params: BTreeMap<String, f64>,
    #[serde(with = "json_float")]
    pub lhs: f64,
    #[serde(with = "json_float")]
    pub rhs: f64,
}

/// Listed violations are capped; `violation_count` is exact.
pub const MAX_LISTED_VIOLATIONS: usize = 100;

/// JSON run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub samples: usize,
    pub dims: Vec<usize>,
    pub rows: usize,
    pub checks: usize,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    #[serde(with = "json_float::map")]
    pub params: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, Value>,
    pub csv: Option<String>,
    pub runtime_ms: u64,
}

impl Summary {
    pub fn new(command: &str, seed: u64, samples: usize, dims: &[usize], rows: &[TrialRow]) -> Self {
        let mut violations = Vec::new();
        let mut count = 0;
        for (j, r) in rows.iter().enumerate() {
            if r.is_violation() {
                count += 1;
                if violations.len() < MAX_LISTED_VIOLATIONS {
                    violations.push(Violation {
                        trial: r.trial,
                        csv_line: j + 2,
                        check: r.check.clone(),
                        kappa: r.kappa.clone(),
                        params: r.params.clone(),
                        lhs: r.lhs,
                        rhs: r.rhs,
                    });
                }
            }
        }
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            samples,
            dims: dims.to_vec(),
            rows: rows.len(),
            checks: rows.iter().filter(|r| r.role == Role::Check).count(),
            violation_count: count,
            violations,
            params: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            csv: None,
            runtime_ms: 0,
        }
    }
}
