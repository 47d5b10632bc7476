//! Scenario files and the batch runner behind the `maxmono` binary.
//!
//! A scenario names a space, a set of operators and a list of checks:
//!
//! ```json
//! {
//!   "name": "e1_abs",
//!   "space": {"n": 1, "p": 2.0},
//!   "seed": 7,
//!   "operators": {
//!     "abs": {"kind": "SUBDIFF_POLY", "pieces": [{"slope": [1.0], "intercept": 0.0},
//!                                                {"slope": [-1.0], "intercept": 0.0}]}
//!   },
//!   "checks": [
//!     {"theorem": "representation", "operator": "abs", "point": [0.0]},
//!     {"theorem": "support_formula", "operator": "abs", "point": [0.0],
//!      "direction": [1.0], "expected_sigma": 1.0}
//!   ]
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use maxmono::limits::{
    lower_bound_check, operator_equality_test, support_formula_estimate, trajectory_check, verify_face_inclusion,
    verify_representation, ExtReal, Status, TheoremId, VerificationReport, VerifyConfig,
};
use maxmono::{MonotoneOperator, NormedSpace, Vector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// One requested verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub theorem: TheoremId,
    pub operator: String,
    /// Second operator of an equality check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vector>,
    /// Sample points of an equality check; seeded domain samples if empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xstar: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_sigma: Option<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Overrides the tolerance the check is judged against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub space: NormedSpace,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub operators: BTreeMap<String, MonotoneOperator>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
    parse_scenario(&text).map_err(|e| match e {
        ScenarioError::Parse { source, .. } => ScenarioError::Parse { path: path.into(), source },
        other => other,
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let s: Scenario =
        serde_json::from_str(text).map_err(|source| ScenarioError::Parse { path: PathBuf::from("<scenario>"), source })?;
    s.validate()?;
    Ok(s)
}

fn check_schedule(label: &str, s: &[f64]) -> Result<(), String> {
    if s.is_empty() || s.iter().any(|&x| !(x > 0.0 && x.is_finite())) || s.windows(2).any(|w| w[1] >= w[0]) {
        return Err(format!("{label} must be a nonempty, positive, strictly decreasing list"));
    }
    Ok(())
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.space.dim();
        for (key, op) in &self.operators {
            if op.dim() != n {
                return Err(invalid(format!("operators.{key}: dimension {} does not match space.n = {n}", op.dim())));
            }
        }
        for (i, c) in self.checks.iter().enumerate() {
            let at = |field: &str| format!("checks[{i}].{field}");
            let dim_ok = |field: &str, v: &Vector| {
                if v.dim() == n {
                    Ok(())
                } else {
                    Err(invalid(format!("{}: dimension {} does not match space.n = {n}", at(field), v.dim())))
                }
            };
            if !self.operators.contains_key(&c.operator) {
                return Err(invalid(format!("{}: unknown operator {:?}", at("operator"), c.operator)));
            }
            match c.theorem {
                TheoremId::OperatorEquality => {
                    let other = c.other.as_ref().ok_or_else(|| invalid(format!("{} is required", at("other"))))?;
                    if !self.operators.contains_key(other) {
                        return Err(invalid(format!("{}: unknown operator {other:?}", at("other"))));
                    }
                    for (j, p) in c.points.iter().enumerate() {
                        dim_ok(&format!("points[{j}]"), p)?;
                    }
                }
                _ => {
                    let p = c.point.as_ref().ok_or_else(|| invalid(format!("{} is required", at("point"))))?;
                    dim_ok("point", p)?;
                }
            }
            if matches!(c.theorem, TheoremId::FaceInclusion | TheoremId::SupportFormula | TheoremId::LowerBound) {
                let d = c.direction.as_ref().ok_or_else(|| invalid(format!("{} is required", at("direction"))))?;
                dim_ok("direction", d)?;
                if d.is_zero() {
                    return Err(invalid(format!("{}: must be nonzero", at("direction"))));
                }
            }
            if let Some(x) = &c.xstar {
                dim_ok("xstar", x)?;
            }
            if let Some(t) = c.tolerance {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(invalid(format!("{}: must be positive", at("tolerance"))));
                }
            }
            for (label, s) in [("t_schedule", &c.t_schedule), ("radii", &c.radii), ("lambda_schedule", &c.lambda_schedule)] {
                if let Some(s) = s {
                    check_schedule(&at(label), s).map_err(invalid)?;
                }
            }
            if c.radii.as_ref().is_some_and(|r| r.len() < 3) {
                return Err(invalid(format!("{}: needs at least 3 radii", at("radii"))));
            }
            if c.exact == Some(true) && n > 3 {
                return Err(invalid(format!("{}: exact mode needs n ≤ 3", at("exact"))));
            }
        }
        Ok(())
    }
}

/// Command-line overrides applied to every check.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tol_scale: f64,
    pub exact: bool,
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: None, tol_scale: 1.0, exact: false, jobs: 1 }
    }
}

/// Per-check seed, stable under reordering of unrelated checks' contents.
pub fn check_seed(scenario_seed: u64, index: usize) -> u64 {
    let mut z = scenario_seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub scenario: String,
    pub check_id: usize,
    pub check: CheckSpec,
    pub seed: u64,
    pub config: VerifyConfig,
    pub report: VerificationReport,
}

fn config_for(c: &CheckSpec, seed: u64, opts: &RunOptions) -> VerifyConfig {
    let exact = opts.exact || c.exact.unwrap_or(false);
    let mut cfg = if exact { VerifyConfig::exact() } else { VerifyConfig::default() };
    cfg = cfg.with_seed(seed).scale_tolerances(opts.tol_scale);
    if let Some(t) = &c.t_schedule {
        cfg.t_schedule = t.clone();
    }
    if let Some(r) = &c.radii {
        cfg.limsup.radii = r.clone();
    }
    if let Some(l) = &c.lambda_schedule {
        cfg.lambda_schedule = l.clone();
    }
    if let Some(w) = c.w_budget {
        cfg.w_budget = w;
    }
    if let Some(s) = c.samples_per_radius {
        cfg.limsup.samples_per_radius = s;
    }
    if let Some(s) = c.samples {
        cfg.equality_samples = s;
    }
    if let Some(t) = c.tolerance {
        let t = t * opts.tol_scale;
        match c.theorem {
            TheoremId::FaceInclusion => cfg.face_tol = t,
            TheoremId::Representation => cfg.rep_tol = t,
            TheoremId::SupportFormula => cfg.sf_tol = t,
            TheoremId::LowerBound => cfg.lower_bound_tol = t,
            TheoremId::OperatorEquality => cfg.equality_tol = t,
            TheoremId::Trajectory => cfg.traj_tol = t,
        }
    }
    cfg
}

fn tolerance_of(theorem: TheoremId, cfg: &VerifyConfig) -> f64 {
    match theorem {
        TheoremId::FaceInclusion => cfg.face_tol,
        TheoremId::Representation => cfg.rep_tol,
        TheoremId::SupportFormula => cfg.sf_tol,
        TheoremId::LowerBound => cfg.lower_bound_tol,
        TheoremId::OperatorEquality => cfg.equality_tol,
        TheoremId::Trajectory => cfg.traj_tol,
    }
}

fn run_check(s: &Scenario, index: usize, opts: &RunOptions) -> CheckOutcome {
    let c = &s.checks[index];
    let seed = check_seed(opts.seed.unwrap_or(s.seed), index);
    let cfg = config_for(c, seed, opts);
    let op = &s.operators[&c.operator];
    let space = &s.space;
    let origin = Vector::zeros(space.dim());
    let x = c.point.clone().or_else(|| c.points.first().cloned()).unwrap_or(origin);
    let v = c.direction.as_ref();
    let result = match c.theorem {
        TheoremId::FaceInclusion => verify_face_inclusion(op, &x, v.unwrap(), space, &cfg),
        TheoremId::Representation => verify_representation(op, &x, space, None, &cfg),
        TheoremId::SupportFormula => support_formula_estimate(op, &x, v.unwrap(), space, c.expected_sigma, &cfg),
        TheoremId::LowerBound => {
            lower_bound_check(op, &x, v.unwrap(), c.xstar.as_ref(), space, c.samples.unwrap_or(1000), &cfg)
        }
        TheoremId::OperatorEquality => {
            let other = &s.operators[c.other.as_ref().unwrap()];
            operator_equality_test(op, other, space, &c.points, None, &cfg)
        }
        TheoremId::Trajectory => trajectory_check(op, &x, space, &cfg),
    };
    let report = result.unwrap_or_else(|e| {
        VerificationReport::failed(c.theorem, &x, v, tolerance_of(c.theorem, &cfg), e.to_string())
    });
    CheckOutcome { scenario: s.name.clone(), check_id: index, check: c.clone(), seed, config: cfg, report }
}

/// Runs every check, at most `opts.jobs` at a time, in check order.
pub fn run_checks(s: &Scenario, opts: &RunOptions) -> anyhow::Result<Vec<CheckOutcome>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build()?;
    Ok(pool.install(|| (0..s.checks.len()).into_par_iter().map(|i| run_check(s, i, opts)).collect()))
}

pub const CSV_HEADER: [&str; 8] = ["scenario", "check_id", "theorem_id", "level", "value", "gap", "tolerance", "status"];

/// The aggregate convergence table: every table row of every check,
/// followed by one `final` row carrying the judged quantity.
pub fn convergence_csv(outcomes: &[CheckOutcome]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for o in outcomes {
        let r = &o.report;
        let common = |level: String, value: ExtReal, gap: ExtReal| {
            vec![
                o.scenario.clone(),
                o.check_id.to_string(),
                r.theorem_id.to_string(),
                level,
                value.to_string(),
                gap.to_string(),
                format!("{:e}", r.tolerance),
                r.status.to_string(),
            ]
        };
        for row in &r.convergence_table {
            w.write_record(common(row.level.to_string(), row.value, row.gap))?;
        }
        w.write_record(common("final".into(), r.value.unwrap_or(r.max_support_gap), r.max_support_gap))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summary_text(name: &str, outcomes: &[CheckOutcome]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {name}");
    let _ = writeln!(out, "{:>5}  {:<18} {:<10} {:<28} {:>12} {:>10}  status", "check", "theorem", "operator", "point", "max gap", "tol");
    for o in outcomes {
        let r = &o.report;
        let point = format!("{:?}", r.point);
        let _ = writeln!(
            out,
            "{:>5}  {:<18} {:<10} {:<28} {:>12} {:>10.1e}  {}",
            o.check_id,
            r.theorem_id.as_str(),
            o.check.operator,
            point,
            r.max_support_gap.to_string(),
            r.tolerance,
            r.status
        );
    }
    let mut counts: BTreeMap<Status, usize> = BTreeMap::new();
    for o in outcomes {
        *counts.entry(o.report.status).or_default() += 1;
    }
    let tally: Vec<String> = counts.iter().map(|(s, c)| format!("{s} {c}")).collect();
    let _ = writeln!(out, "{} checks: {}", outcomes.len(), if tally.is_empty() { "none".into() } else { tally.join(", ") });
    out
}

/// 0 iff no check failed.
pub fn exit_code(outcomes: &[CheckOutcome]) -> i32 {
    i32::from(outcomes.iter().any(|o| o.report.status == Status::Fail))
}

/// Writes per-check JSON reports, `convergence.csv` and `summary.txt`.
pub fn write_artifacts(dir: &Path, name: &str, outcomes: &[CheckOutcome]) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    for o in outcomes {
        let file = dir.join(format!("check_{:03}_{}.json", o.check_id, o.report.theorem_id));
        fs::write(file, serde_json::to_string_pretty(o)? + "\n")?;
    }
    fs::write(dir.join("convergence.csv"), convergence_csv(outcomes)?)?;
    fs::write(dir.join("summary.txt"), summary_text(name, outcomes))?;
    Ok(())
}

#[derive(Debug)]
pub struct SuiteResult {
    pub outcomes: Vec<CheckOutcome>,
    pub summary: String,
    pub exit_code: i32,
    pub warnings: Vec<String>,
}

/// Runs a scenario and writes its artifacts to `out` (or the scenario's
/// `output_dir`, if any).
pub fn run_suite(s: &Scenario, out: Option<&Path>, opts: &RunOptions) -> anyhow::Result<SuiteResult> {
    let mut warnings = Vec::new();
    if s.checks.is_empty() {
        warnings.push(format!("scenario {} has no checks", s.name));
    }
    let outcomes = run_checks(s, opts)?;
    if let Some(dir) = out.map(Path::to_path_buf).or_else(|| s.output_dir.clone()) {
        write_artifacts(&dir, &s.name, &outcomes)?;
    }
    Ok(SuiteResult { summary: summary_text(&s.name, &outcomes), exit_code: exit_code(&outcomes), outcomes, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "space": {"n": 1, "p": 2.0},
        "operators": {"abs": {"kind": "SUBDIFF_POLY", "pieces": [{"slope": [1.0], "intercept": 0.0},
                                                                 {"slope": [-1.0], "intercept": 0.0}]}},
        "checks": [{"theorem": "representation", "operator": "abs", "point": [0.0]}]
    }"#;

    #[test]
    fn parses_and_validates() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.checks.len(), 1);
        assert_eq!(s.seed, 0);
    }

    #[test]
    fn rejects_p_one() {
        let bad = MINIMAL.replace("\"p\": 2.0", "\"p\": 1.0");
        let err = parse_scenario(&bad).unwrap_err().to_string();
        assert!(err.contains("p must lie in (1, ∞)"), "{err}");
    }

    #[test]
    fn names_the_offending_check() {
        let bad = MINIMAL.replace("\"point\": [0.0]", "\"point\": [0.0, 1.0]");
        let err = parse_scenario(&bad).unwrap_err().to_string();
        assert!(err.contains("checks[0].point"), "{err}");
        let bad = MINIMAL.replace("\"operator\": \"abs\"", "\"operator\": \"nope\"");
        assert!(parse_scenario(&bad).unwrap_err().to_string().contains("checks[0].operator"));
        let bad = MINIMAL.replace("\"point\": [0.0]", "\"point\": [0.0], \"tolerance\": -1");
        assert!(parse_scenario(&bad).unwrap_err().to_string().contains("checks[0].tolerance"));
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_scenario("{\"name\": 3}").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn seeds_differ_per_check() {
        assert_ne!(check_seed(1, 0), check_seed(1, 1));
        assert_eq!(check_seed(5, 3), check_seed(5, 3));
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
