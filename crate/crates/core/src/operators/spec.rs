//! JSON descriptors for operators.

use serde::{Deserialize, Serialize};

use super::{Kind, MonotoneOperator};
use crate::convex_sets::Polytope;
use crate::error::{Error, Result};
use crate::vector::Vector;

/// One affine piece `y ↦ ⟨slope, y⟩ + intercept` of a max-affine function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vector,
    pub intercept: f64,
}

impl AffinePiece {
    pub fn new(slope: impl Into<Vector>, intercept: f64) -> Self {
        AffinePiece { slope: slope.into(), intercept }
    }

    pub fn eval(&self, y: &Vector) -> f64 {
        self.slope.dot(y) + self.intercept
    }
}

/// Serialized operator.
///
/// ```json
/// {"kind": "SUBDIFF_POLY", "pieces": [{"slope": [1.0], "intercept": 0.0},
///                                     {"slope": [-1.0], "intercept": 0.0}]}
/// {"kind": "NORMAL_CONE", "domain": {"rows": [{"normal": [1.0], "offset": 1.0}]}}
/// {"kind": "LINEAR", "matrix": [[1.0]], "shift": [1.0]}
/// {"kind": "DUALITY_MAP", "dim": 2, "p": 3.0}
/// {"kind": "SUM", "parts": [ ... ]}
/// ```
///
/// Every kind also accepts an optional `domain`, which restricts the
/// operator (adds the normal cone of that polytope).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum OperatorSpec {
    SubdiffPoly {
        pieces: Vec<AffinePiece>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Polytope>,
    },
    NormalCone {
        domain: Polytope,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vector>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Polytope>,
    },
    DualityMap {
        dim: usize,
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Polytope>,
    },
    Sum {
        parts: Vec<OperatorSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Polytope>,
    },
}

impl TryFrom<OperatorSpec> for MonotoneOperator {
    type Error = Error;

    fn try_from(spec: OperatorSpec) -> Result<Self> {
        let (op, domain) = match spec {
            OperatorSpec::SubdiffPoly { pieces, domain } => (MonotoneOperator::subdiff_poly(pieces)?, domain),
            OperatorSpec::NormalCone { domain } => (MonotoneOperator::normal_cone(domain)?, None),
            OperatorSpec::Linear { matrix, shift, domain } => {
                let n = matrix.len();
                let shift = shift.unwrap_or_else(|| Vector::zeros(n));
                (MonotoneOperator::linear(matrix, shift)?, domain)
            }
            OperatorSpec::DualityMap { dim, p, domain } => (MonotoneOperator::duality_map(dim, p)?, domain),
            OperatorSpec::Sum { parts, domain } => {
                let parts = parts.into_iter().map(MonotoneOperator::try_from).collect::<Result<Vec<_>>>()?;
                (MonotoneOperator::sum(parts)?, domain)
            }
        };
        match domain {
            Some(d) => op.restricted_to(d),
            None => Ok(op),
        }
    }
}

impl From<MonotoneOperator> for OperatorSpec {
    fn from(op: MonotoneOperator) -> Self {
        let domain = (!op.domain.is_whole_space()).then(|| op.domain.clone());
        match op.kind {
            Kind::SubdiffPoly(pieces) => OperatorSpec::SubdiffPoly { pieces, domain },
            Kind::NormalCone => OperatorSpec::NormalCone { domain: op.domain },
            Kind::Linear { matrix, shift } => OperatorSpec::Linear {
                matrix: (0..op.dim).map(|i| (0..op.dim).map(|j| matrix[(i, j)]).collect()).collect(),
                shift: (!shift.is_zero()).then_some(shift),
                domain,
            },
            Kind::DualityMap { p } => OperatorSpec::DualityMap { dim: op.dim, p, domain },
            Kind::Sum(parts) => OperatorSpec::Sum {
                parts: parts.into_iter().map(OperatorSpec::from).collect(),
                // The parts already carry their own domains.
                domain: None,
            },
        }
    }
}
