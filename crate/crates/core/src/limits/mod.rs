//! Sampled and exact limit-set estimators, and the verification suites
//! built on them.
//!
//! Every verifier returns a [`VerificationReport`] whose `status` is judged
//! against a tolerance recorded in the report itself. A `FAIL` means the
//! implementation disagrees with a theorem instance, so it points at a bug
//! here, never at a counterexample.

mod cloud;
mod verify;

pub use cloud::{s_limsup_estimate, CloudMode, LimsupCloud, LimsupConfig, Provenance, CLUSTER_TOL};
pub use verify::{
    face_inclusion_report, lower_bound_check, operator_equality_test, support_formula_estimate,
    trajectory_check, verify_face_inclusion, verify_representation, VerifyConfig,
};

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    DegenerateDomain,
    HypothesisViolation,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::DegenerateDomain => "DEGENERATE_DOMAIN",
            Status::HypothesisViolation => "HYPOTHESIS_VIOLATION",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    FaceInclusion,
    Representation,
    SupportFormula,
    LowerBound,
    OperatorEquality,
    Trajectory,
}

impl TheoremId {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::FaceInclusion => "face_inclusion",
            TheoremId::Representation => "representation",
            TheoremId::SupportFormula => "support_formula",
            TheoremId::LowerBound => "lower_bound",
            TheoremId::OperatorEquality => "operator_equality",
            TheoremId::Trajectory => "trajectory",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An extended real. Serializes non-finite values as `"inf"`, `"-inf"`, `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtReal(pub f64);

impl ExtReal {
    pub const INF: ExtReal = ExtReal(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            x if x == f64::INFINITY => f.write_str("inf"),
            x if x == f64::NEG_INFINITY => f.write_str("-inf"),
            x if x.is_nan() => f.write_str("nan"),
            x => write!(f, "{x:e}"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ExtReal(x)),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" | "INF" | "+INF" => Ok(ExtReal(f64::INFINITY)),
                "-inf" | "-INF" => Ok(ExtReal(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
            },
        }
    }
}

/// One level of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub level: usize,
    pub t_or_radius: f64,
    pub value: ExtReal,
    pub gap: ExtReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub theorem_id: TheoremId,
    pub status: Status,
    pub pass: bool,
    pub point: Vector,
    pub direction: Option<Vector>,
    pub tolerance: f64,
    /// The judged quantity: a support gap, a distance or an estimation error.
    pub max_support_gap: ExtReal,
    /// The estimate itself where that differs from the gap.
    pub value: Option<ExtReal>,
    pub expected: Option<ExtReal>,
    pub direction_grid_size: usize,
    pub per_direction_gaps: Vec<ExtReal>,
    pub convergence_table: Vec<TableRow>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub(crate) fn new(theorem_id: TheoremId, point: &Vector, direction: Option<&Vector>, tolerance: f64) -> Self {
        VerificationReport {
            theorem_id,
            status: Status::Inconclusive,
            pass: false,
            point: point.clone(),
            direction: direction.cloned(),
            tolerance,
            max_support_gap: ExtReal(f64::NAN),
            value: None,
            expected: None,
            direction_grid_size: 0,
            per_direction_gaps: Vec::new(),
            convergence_table: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// A `FAIL` report for a check that could not run, e.g. after a solver failure.
    pub fn failed(theorem_id: TheoremId, point: &Vector, direction: Option<&Vector>, tolerance: f64, reason: impl Into<String>) -> Self {
        let mut r = VerificationReport::new(theorem_id, point, direction, tolerance);
        r.max_support_gap = ExtReal::INF;
        r.notes.push(reason.into());
        r.finish(Status::Fail)
    }

    pub(crate) fn finish(mut self, status: Status) -> Self {
        let nan = self.max_support_gap.0.is_nan()
            || self.per_direction_gaps.iter().any(|g| g.0.is_nan())
            || self.convergence_table.iter().any(|r| r.value.0.is_nan() || r.gap.0.is_nan());
        self.status = if status == Status::Pass && nan { Status::Fail } else { status };
        if status == Status::Pass && nan {
            self.notes.push("NaN in report".into());
        }
        self.pass = self.status == Status::Pass;
        self
    }

    pub(crate) fn violation(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self.finish(Status::HypothesisViolation)
    }
}
