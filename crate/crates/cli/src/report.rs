//! Report schema and atomic output.

use std::io::Write;
use std::path::Path;

use pq_core::integrability::{IntegrabilityReport, Verdict};
use serde::Serialize;
use serde_json::Value;

use crate::scenario::{Expect, StructureSource};

pub const SCHEMA: &str = "pqcheck-report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// Failed as the scenario predicted.
    ExpectedFail,
    /// Passed although the scenario predicted a failure.
    UnexpectedPass,
    /// The computation itself raised an error.
    Error,
}

impl Outcome {
    pub fn from_verdict(verdict: Verdict, expect: Expect) -> Self {
        match (verdict, expect) {
            (Verdict::Pass, Expect::Pass) => Outcome::Pass,
            (Verdict::Fail, Expect::Pass) => Outcome::Fail,
            (Verdict::Fail, Expect::Fail) => Outcome::ExpectedFail,
            (Verdict::Pass, Expect::Fail) => Outcome::UnexpectedPass,
        }
    }

    pub fn ok(self) -> bool {
        matches!(self, Outcome::Pass | Outcome::ExpectedFail)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub expect: Expect,
    pub tol: f64,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<IntegrabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub spec: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: u32,
    pub toolkit_version: &'static str,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub seed: u64,
    pub tol: f64,
    pub structure: StructureSource,
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

/// Writes `text` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expect_fail_semantics() {
        assert!(Outcome::from_verdict(Verdict::Fail, Expect::Fail).ok());
        assert!(!Outcome::from_verdict(Verdict::Pass, Expect::Fail).ok());
        assert!(Outcome::from_verdict(Verdict::Pass, Expect::Pass).ok());
        assert!(!Outcome::from_verdict(Verdict::Fail, Expect::Pass).ok());
        assert!(!Outcome::Error.ok());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "bb").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "bb");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
