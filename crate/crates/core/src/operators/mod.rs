//! The maximal monotone operator catalog.
//!
//! Every operator carries a polyhedral domain `D` and evaluates to its
//! kind-specific value plus `N_D(x)`, so `Ax = Ax + N_{D(A)}(x)` holds by
//! construction:
//!
//! | kind           | value at `x ∈ D`                              |
//! |----------------|-----------------------------------------------|
//! | `SUBDIFF_POLY` | `co{a_j : j active} + N_D(x)` for `f = max_j ⟨a_j,·⟩ + c_j` |
//! | `NORMAL_CONE`  | `N_D(x)`                                      |
//! | `LINEAR`       | `{Mx + b} + N_D(x)`, `M + Mᵀ ⪰ 0`              |
//! | `DUALITY_MAP`  | `{J_p(x)} + N_D(x)`                           |
//! | `SUM`          | Minkowski sum of the parts                    |

mod resolvent;
mod spec;
mod trajectory;

pub use resolvent::{ResolventSolution, RESOLVENT_TOL};
pub use spec::{AffinePiece, OperatorSpec};
pub use trajectory::{default_lambda_schedule, displacement_bound, Trajectory, TrajectoryRecord, BOUND_SLACK, TRAJECTORY_TOL};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convex_sets::{ConvexSet, Polytope, GEOM_TOL};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{lp_duality, NormedSpace};
use crate::linalg::min_symmetric_eigenvalue;
use crate::vector::Vector;

/// Minimum Chebyshev radius of the common domain accepted for a `SUM`.
pub const SUM_INTERIOR_MARGIN: f64 = 1e-6;

/// Tolerance of the symmetric-part eigenvalue certificate for `LINEAR`.
pub const LINEAR_PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Kind {
    SubdiffPoly(Vec<AffinePiece>),
    NormalCone,
    Linear { matrix: DMatrix<f64>, shift: Vector },
    DualityMap { p: f64 },
    Sum(Vec<MonotoneOperator>),
}

/// A validated maximal monotone operator `R^n ⇉ R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorSpec", into = "OperatorSpec")]
pub struct MonotoneOperator {
    dim: usize,
    domain: Polytope,
    kind: Kind,
}

impl MonotoneOperator {
    /// `∂f` for `f(y) = max_j ⟨slope_j, y⟩ + intercept_j` on all of `R^n`.
    pub fn subdiff_poly(pieces: Vec<AffinePiece>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::InvalidInput("SUBDIFF_POLY needs at least one piece".into()))?;
        let dim = first.slope.dim();
        for p in &pieces {
            check_dim(dim, p.slope.dim())?;
            if !p.intercept.is_finite() {
                return Err(Error::InvalidInput("non-finite intercept".into()));
            }
        }
        Ok(MonotoneOperator { dim, domain: Polytope::whole_space(dim), kind: Kind::SubdiffPoly(pieces) })
    }

    /// `N_D` for a nonempty polytope `D`.
    pub fn normal_cone(domain: Polytope) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::InvalidInput("NORMAL_CONE domain is empty".into()));
        }
        Ok(MonotoneOperator { dim: domain.dim(), domain, kind: Kind::NormalCone })
    }

    /// `y ↦ My + b`, accepted only if the symmetric part of `M` is positive semidefinite.
    pub fn linear(matrix: Vec<Vec<f64>>, shift: Vector) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("LINEAR matrix must be square and nonempty".into()));
        }
        check_dim(n, shift.dim())?;
        if matrix.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
        let min_eigenvalue = min_symmetric_eigenvalue(&m);
        if min_eigenvalue < -LINEAR_PSD_TOL {
            return Err(Error::NotMonotone { min_eigenvalue });
        }
        Ok(MonotoneOperator { dim: n, domain: Polytope::whole_space(n), kind: Kind::Linear { matrix: m, shift } })
    }

    /// The duality map `J_p` of `ℓ^p(n)`.
    pub fn duality_map(dim: usize, p: f64) -> Result<Self> {
        NormedSpace::new(dim, p)?;
        Ok(MonotoneOperator { dim, domain: Polytope::whole_space(dim), kind: Kind::DualityMap { p } })
    }

    /// `A_1 + … + A_k` on the intersection of the domains.
    ///
    /// When two or more parts have proper domains, their intersection must
    /// contain a ball of radius [`SUM_INTERIOR_MARGIN`].
    pub fn sum(parts: Vec<MonotoneOperator>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("SUM needs at least one part".into()))?;
        let dim = first.dim;
        let mut domain = Polytope::whole_space(dim);
        let mut proper = 0;
        for p in &parts {
            check_dim(dim, p.dim)?;
            if !p.domain.is_whole_space() {
                proper += 1;
            }
            domain = domain.intersect(&p.domain)?;
        }
        let (_, margin) = domain.chebyshev_center();
        if proper >= 2 && margin < SUM_INTERIOR_MARGIN {
            return Err(Error::DomainOverlap { margin });
        }
        if margin < -GEOM_TOL {
            return Err(Error::DomainOverlap { margin });
        }
        Ok(MonotoneOperator { dim, domain, kind: Kind::Sum(parts) })
    }

    /// Restricts the operator to `self.domain ∩ domain`, i.e. adds `N_domain`.
    pub fn restricted_to(self, domain: Polytope) -> Result<Self> {
        check_dim(self.dim, domain.dim())?;
        let restricted = self.domain.intersect(&domain)?;
        let proper = !self.domain.is_whole_space() && !domain.is_whole_space();
        let (_, margin) = restricted.chebyshev_center();
        if margin < -GEOM_TOL || (proper && !matches!(self.kind, Kind::NormalCone) && margin < SUM_INTERIOR_MARGIN) {
            return Err(Error::DomainOverlap { margin });
        }
        Ok(MonotoneOperator { domain: restricted, ..self })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// H-representation of the closure of `D(A)`.
    pub fn domain(&self) -> &Polytope {
        &self.domain
    }

    pub fn in_domain(&self, x: &Vector) -> bool {
        self.domain.contains(x, GEOM_TOL)
    }

    /// `Ax` as a polyhedral set; empty outside the domain.
    pub fn evaluate(&self, x: &Vector) -> Result<ConvexSet> {
        check_dim(self.dim, x.dim())?;
        if !self.in_domain(x) {
            return Ok(ConvexSet::empty(self.dim));
        }
        let own_normals = self.domain.normal_cone(x)?;
        let value = match &self.kind {
            Kind::SubdiffPoly(pieces) => {
                let active = active_pieces(pieces, x);
                let slopes: Vec<Vector> = active.iter().map(|&j| pieces[j].slope.clone()).collect();
                ConvexSet::new(self.dim, slopes, own_normals.cone_generators().to_vec())?
            }
            Kind::NormalCone => own_normals,
            Kind::Linear { matrix, shift } => {
                ConvexSet::point(apply(matrix, x, shift)).with_cone(own_normals.cone_generators())?
            }
            Kind::DualityMap { p } => {
                ConvexSet::point(lp_duality(x.as_slice(), *p)).with_cone(own_normals.cone_generators())?
            }
            Kind::Sum(parts) => {
                let mut acc = ConvexSet::point(Vector::zeros(self.dim));
                for part in parts {
                    acc = acc.minkowski_sum(&part.evaluate(x)?)?;
                }
                acc.with_cone(own_normals.cone_generators())?
            }
        };
        Ok(value)
    }

    /// `A°x`, the element of `Ax` of least dual norm.
    pub fn min_norm_selection(&self, x: &Vector, space: &NormedSpace) -> Result<Vector> {
        check_dim(space.dim(), self.dim)?;
        let value = self.evaluate(x)?;
        if value.is_empty() {
            return Err(Error::NoSelection);
        }
        Ok(value.min_norm_point(space)?.0)
    }

    /// The value set along `x + t d` for all sufficiently small `t > 0`.
    ///
    /// Requires `d` to be a tangent direction of the domain at `x`. Pieces
    /// and constraints inactive at `x` stay inactive nearby; among the active
    /// ones, those maximizing (resp. orthogonal to) `d` survive. Continuous
    /// parts contribute their value at `x`.
    pub fn directional_limit(&self, x: &Vector, d: &Vector) -> Result<ConvexSet> {
        check_dim(self.dim, x.dim())?;
        check_dim(self.dim, d.dim())?;
        if !self.in_domain(x) {
            return Ok(ConvexSet::empty(self.dim));
        }
        let rows = self.domain.rows();
        let tangent_normals: Vec<Vector> = self
            .domain
            .active_rows(x, GEOM_TOL)
            .into_iter()
            .filter(|&i| rows[i].normal.dot(d).abs() <= GEOM_TOL)
            .map(|i| rows[i].normal.clone())
            .collect();
        let value = match &self.kind {
            Kind::SubdiffPoly(pieces) => {
                let active = active_pieces(pieces, x);
                let best = active
                    .iter()
                    .map(|&j| pieces[j].slope.dot(d))
                    .fold(f64::NEG_INFINITY, f64::max);
                let slopes: Vec<Vector> = active
                    .iter()
                    .filter(|&&j| pieces[j].slope.dot(d) >= best - GEOM_TOL)
                    .map(|&j| pieces[j].slope.clone())
                    .collect();
                ConvexSet::new(self.dim, slopes, tangent_normals)?
            }
            Kind::NormalCone => ConvexSet::cone(self.dim, tangent_normals)?,
            Kind::Linear { matrix, shift } => {
                ConvexSet::point(apply(matrix, x, shift)).with_cone(&tangent_normals)?
            }
            Kind::DualityMap { p } => {
                ConvexSet::point(lp_duality(x.as_slice(), *p)).with_cone(&tangent_normals)?
            }
            Kind::Sum(parts) => {
                let mut acc = ConvexSet::point(Vector::zeros(self.dim));
                for part in parts {
                    acc = acc.minkowski_sum(&part.directional_limit(x, d)?)?;
                }
                acc.with_cone(&tangent_normals)?
            }
        };
        Ok(value)
    }

    /// Normals of the hyperplanes through `x` across which the value set
    /// can change: differences of active pieces and active domain normals.
    pub fn arrangement_normals(&self, x: &Vector) -> Vec<Vector> {
        let mut out: Vec<Vector> = Vec::new();
        let rows = self.domain.rows();
        for i in self.domain.active_rows(x, GEOM_TOL) {
            out.push(rows[i].normal.clone());
        }
        match &self.kind {
            Kind::SubdiffPoly(pieces) => {
                let active = active_pieces(pieces, x);
                for (a, &i) in active.iter().enumerate() {
                    for &j in &active[a + 1..] {
                        let diff = &pieces[i].slope - &pieces[j].slope;
                        if !diff.is_zero() {
                            out.push(diff);
                        }
                    }
                }
            }
            Kind::Sum(parts) => {
                for part in parts {
                    out.extend(part.arrangement_normals(x));
                }
            }
            _ => {}
        }
        out
    }

    /// Whether every value is a polyhedral function of the active sets
    /// only (no continuous parts).
    pub fn is_polyhedral(&self) -> bool {
        match &self.kind {
            Kind::SubdiffPoly(_) | Kind::NormalCone => true,
            Kind::Linear { matrix, .. } => matrix.iter().all(|&c| c == 0.0),
            Kind::DualityMap { .. } => false,
            Kind::Sum(parts) => parts.iter().all(MonotoneOperator::is_polyhedral),
        }
    }

    /// Samples graph pairs `(x, x*)`, `(y, y*)` and records the smallest
    /// `⟨x* - y*, x - y⟩`.
    pub fn check_monotone(&self, samples: usize, seed: u64) -> Result<MonotonicityReport> {
        if samples < 2 {
            return Err(Error::InvalidInput("check_monotone needs at least 2 samples".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph: Vec<(Vector, Vector)> = (0..samples)
            .map(|_| {
                let x = self.sample_domain_point(&mut rng)?;
                let value = self.evaluate(&x)?;
                Ok((x, sample_element(&value, &mut rng)))
            })
            .collect::<Result<_>>()?;
        let mut min_inner = f64::INFINITY;
        let mut pairs = 0;
        for i in 0..graph.len() {
            for j in i + 1..graph.len() {
                let (x, xs) = &graph[i];
                let (y, ys) = &graph[j];
                min_inner = min_inner.min((xs - ys).dot(&(x - y)));
                pairs += 1;
            }
        }
        Ok(MonotonicityReport { pairs, min_inner, pass: min_inner >= -MONOTONE_TOL })
    }

    /// A point of the domain inside `[-3, 3]^n`; half of the draws are
    /// snapped to the grid `Z/4` so that kinks and faces get hit.
    pub fn sample_domain_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector> {
        let (lo, hi) = self
            .domain
            .bounding_box(3.0)
            .ok_or_else(|| Error::InvalidInput("domain does not meet the sampling box".into()))?;
        for _ in 0..10_000 {
            let snap = rng.random_bool(0.5);
            let x = Vector::from(
                (0..self.dim)
                    .map(|i| {
                        let t = if hi[i] > lo[i] { rng.random_range(lo[i]..=hi[i]) } else { lo[i] };
                        if snap { (t * 4.0).round() / 4.0 } else { t }
                    })
                    .collect::<Vec<_>>(),
            );
            if self.in_domain(&x) {
                return Ok(x);
            }
        }
        let (c, _) = self.domain.chebyshev_center();
        Ok(c)
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.kind
    }
}

pub const MONOTONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub pairs: usize,
    pub min_inner: f64,
    pub pass: bool,
}

/// A random element of a nonempty polyhedral set: a random convex
/// combination of vertices plus random multiples of the generators.
pub fn sample_element<R: Rng + ?Sized>(set: &ConvexSet, rng: &mut R) -> Vector {
    let verts = set.vertices();
    let mut w: Vec<f64> = verts.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    if rng.random_bool(0.3) {
        // Vertices themselves are the interesting extreme cases.
        let k = rng.random_range(0..verts.len());
        w = (0..verts.len()).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
    }
    let s: f64 = w.iter().sum();
    let mut x = Vector::zeros(set.dim());
    for (v, wi) in verts.iter().zip(&w) {
        x = x.axpy(wi / s, v);
    }
    for g in set.cone_generators() {
        x = x.axpy(rng.random_range(0.0..2.0), g);
    }
    x
}

pub(crate) fn active_pieces(pieces: &[AffinePiece], x: &Vector) -> Vec<usize> {
    let vals: Vec<f64> = pieces.iter().map(|p| p.eval(x)).collect();
    let fx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..pieces.len()).filter(|&j| fx - vals[j] <= GEOM_TOL).collect()
}

pub(crate) fn apply(m: &DMatrix<f64>, x: &Vector, b: &Vector) -> Vector {
    let n = x.dim();
    Vector::from((0..n).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum::<f64>() + b[i]).collect::<Vec<_>>())
}
