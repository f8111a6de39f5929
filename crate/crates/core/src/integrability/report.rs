use serde::{Deserialize, Serialize};

use super::SugCase;
use crate::expr::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The identity's hypothesis does not hold at the samples; not evaluated.
    HypothesisUnmet,
    /// Reported for context, not compared against the tolerance.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResidual {
    pub name: String,
    pub value: f64,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub check: String,
    pub verdict: Verdict,
    pub tol: f64,
    pub residuals: Vec<CheckResidual>,
    pub samples: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<SugCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Running maximum with the point where it was attained.
#[derive(Clone, Debug, Default)]
pub(crate) struct Worst {
    pub value: f64,
    pub point: Option<Vec<f64>>,
}

impl Worst {
    pub fn update(&mut self, v: f64, p: &Point) {
        // a NaN residual sticks so that it cannot hide behind max
        let worse = v > self.value || (v.is_nan() && !self.value.is_nan());
        if self.point.is_none() || worse {
            self.value = v;
            self.point = Some(p.coords.clone());
        }
    }

    pub fn from_residual(r: &CheckResidual) -> Self {
        Worst {
            value: r.value,
            point: r.worst_point.clone(),
        }
    }
}

impl IntegrabilityReport {
    pub(crate) fn new(check: &str, tol: f64, samples: &[Point]) -> Self {
        IntegrabilityReport {
            check: check.to_string(),
            verdict: Verdict::Pass,
            tol,
            residuals: Vec::new(),
            samples: samples.iter().map(|p| p.coords.clone()).collect(),
            case: None,
            notes: Vec::new(),
        }
    }

    pub(crate) fn push_checked(&mut self, name: &str, w: Worst) {
        let status = if w.value <= self.tol {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self.residuals.push(CheckResidual {
            name: name.to_string(),
            value: w.value,
            status,
            worst_point: w.point,
            detail: None,
        });
    }

    pub(crate) fn push_failed(&mut self, name: &str, value: f64, detail: Option<String>) {
        self.residuals.push(CheckResidual {
            name: name.to_string(),
            value,
            status: CheckStatus::Fail,
            worst_point: None,
            detail,
        });
    }

    pub(crate) fn push_info(&mut self, name: &str, value: f64, point: Option<Vec<f64>>) {
        self.residuals.push(CheckResidual {
            name: name.to_string(),
            value,
            status: CheckStatus::Info,
            worst_point: point,
            detail: None,
        });
    }

    pub(crate) fn push_unmet(&mut self, name: &str, hypothesis: &str, value: f64, point: Option<Vec<f64>>) {
        self.residuals.push(CheckResidual {
            name: name.to_string(),
            value,
            status: CheckStatus::HypothesisUnmet,
            worst_point: point,
            detail: Some(format!("hypothesis unmet: {hypothesis}")),
        });
    }

    pub(crate) fn finish(mut self) -> Self {
        self.verdict = if self.residuals.iter().any(|r| r.status == CheckStatus::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Largest residual among the entries compared against the tolerance.
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| matches!(r.status, CheckStatus::Pass | CheckStatus::Fail))
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }

    pub fn residual(&self, name: &str) -> Option<&CheckResidual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn status(&self, name: &str) -> Option<CheckStatus> {
        self.residual(name).map(|r| r.status)
    }
}
