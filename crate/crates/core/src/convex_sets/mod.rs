//! Polyhedral convex sets `co(V) + cone(G)` in V-representation.
//!
//! Operator values in the catalog (subdifferentials of max-affine functions,
//! normal cones of polytopes, singletons) are all of this form, so sets are
//! stored by generators. H-representations appear only as operator domains,
//! see [`Polytope`].
//!
//! Redundancy elimination and membership go through Euclidean minimum-norm
//! point computations, so no LP solver is involved. Exactness is only
//! claimed at desk scale (`n ≤ 4`, a few dozen generators).

mod distance;
mod min_norm;
mod polytope;

pub use distance::{direction_grid, facet_normals, set_distance_report, uniform_directions, SetDistanceReport};
pub use min_norm::MinNormSolution;
pub use polytope::{Halfspace, Polytope};

pub(crate) use min_norm::min_norm;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::NormedSpace;
use crate::vector::Vector;

/// Active-set tolerance for faces, normal cones and piece activity.
pub const GEOM_TOL: f64 = 1e-9;

/// Threshold on `⟨g, v⟩` above which a recession direction makes `σ(v) = +∞`.
pub const CONE_TOL: f64 = 1e-12;

/// The closed convex set `co(vertices) + cone(cone)`, or the empty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetDescriptor", into = "SetDescriptor")]
pub struct ConvexSet {
    dim: usize,
    vertices: Vec<Vector>,
    cone: Vec<Vector>,
}

#[derive(Serialize, Deserialize)]
struct SetDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    vertices: Vec<Vector>,
    #[serde(default)]
    cone: Vec<Vector>,
}

impl TryFrom<SetDescriptor> for ConvexSet {
    type Error = Error;
    fn try_from(d: SetDescriptor) -> Result<Self> {
        let dim = d
            .dim
            .or_else(|| d.vertices.first().or(d.cone.first()).map(Vector::dim))
            .ok_or_else(|| Error::InvalidInput("empty set needs an explicit dim".into()))?;
        if d.vertices.is_empty() && !d.cone.is_empty() {
            return Err(Error::InvalidInput("cone generators without a vertex".into()));
        }
        ConvexSet::new(dim, d.vertices, d.cone)
    }
}

impl From<ConvexSet> for SetDescriptor {
    fn from(s: ConvexSet) -> Self {
        SetDescriptor { dim: Some(s.dim), vertices: s.vertices, cone: s.cone }
    }
}

impl ConvexSet {
    /// Builds and canonicalizes `co(vertices) + cone(cone)`.
    ///
    /// An empty vertex list gives the empty set (the cone list is then ignored).
    pub fn new(dim: usize, vertices: Vec<Vector>, cone: Vec<Vector>) -> Result<Self> {
        for v in vertices.iter().chain(&cone) {
            check_dim(dim, v.dim())?;
        }
        if vertices.is_empty() {
            return Ok(Self::empty(dim));
        }
        Ok(ConvexSet { dim, vertices, cone }.canonicalized())
    }

    pub fn empty(dim: usize) -> Self {
        ConvexSet { dim, vertices: Vec::new(), cone: Vec::new() }
    }

    pub fn point(p: Vector) -> Self {
        ConvexSet { dim: p.dim(), vertices: vec![p], cone: Vec::new() }
    }

    /// `cone(generators)`, with apex at the origin.
    pub fn cone(dim: usize, generators: Vec<Vector>) -> Result<Self> {
        Self::new(dim, vec![Vector::zeros(dim)], generators)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn cone_generators(&self) -> &[Vector] {
        &self.cone
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_bounded(&self) -> bool {
        self.cone.is_empty()
    }

    /// `σ_C(v) = sup_{c ∈ C} ⟨c, v⟩`; `-∞` for the empty set.
    pub fn support_function(&self, v: &Vector) -> f64 {
        if self.is_empty() {
            return f64::NEG_INFINITY;
        }
        if self.cone.iter().any(|g| g.dot(v) > CONE_TOL) {
            return f64::INFINITY;
        }
        self.vertices.iter().map(|x| x.dot(v)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// The exposed face `{c ∈ C : ⟨c, v⟩ = σ_C(v)}`.
    pub fn face(&self, v: &Vector) -> Result<ConvexSet> {
        check_dim(self.dim, v.dim())?;
        if v.is_zero() {
            return Err(Error::InvalidInput("face direction must be nonzero".into()));
        }
        if self.is_empty() {
            return Err(Error::NoSelection);
        }
        let sigma = self.support_function(v);
        if sigma == f64::INFINITY {
            return Err(Error::FaceUndefined);
        }
        let vertices = self
            .vertices
            .iter()
            .filter(|x| x.dot(v) >= sigma - GEOM_TOL)
            .cloned()
            .collect();
        let cone = self.cone.iter().filter(|g| g.dot(v).abs() <= CONE_TOL).cloned().collect();
        ConvexSet::new(self.dim, vertices, cone)
    }

    pub fn minkowski_sum(&self, other: &ConvexSet) -> Result<ConvexSet> {
        check_dim(self.dim, other.dim)?;
        if self.is_empty() || other.is_empty() {
            return Ok(Self::empty(self.dim));
        }
        let mut vertices = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                vertices.push(a + b);
            }
        }
        let cone = self.cone.iter().chain(&other.cone).cloned().collect();
        ConvexSet::new(self.dim, vertices, cone)
    }

    pub fn translate(&self, t: &Vector) -> ConvexSet {
        ConvexSet {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v + t).collect(),
            cone: self.cone.clone(),
        }
    }

    /// Adds recession directions to a nonempty set.
    pub fn with_cone(&self, extra: &[Vector]) -> Result<ConvexSet> {
        let cone = self.cone.iter().chain(extra).cloned().collect();
        ConvexSet::new(self.dim, self.vertices.clone(), cone)
    }

    /// The minimizer of the dual norm `‖·‖_q` over the set, and its value.
    pub fn min_norm_point(&self, space: &NormedSpace) -> Result<(Vector, f64)> {
        check_dim(space.dim(), self.dim)?;
        let sol = self.min_norm_solution(space.q())?;
        Ok((sol.point, sol.value))
    }

    /// Full solution record of the `ℓ^q` minimum-norm problem.
    pub fn min_norm_solution(&self, q: f64) -> Result<MinNormSolution> {
        if self.is_empty() {
            return Err(Error::NoSelection);
        }
        min_norm(&self.vertices, &self.cone, q)
    }

    /// `ℓ^q` distance from `x` to the set; `+∞` for the empty set.
    pub fn distance(&self, x: &Vector, q: f64) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        if self.is_empty() {
            return Ok(f64::INFINITY);
        }
        let shifted: Vec<Vector> = self.vertices.iter().map(|v| v - x).collect();
        Ok(min_norm(&shifted, &self.cone, q)?.value)
    }

    /// Euclidean membership test with an absolute tolerance.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.distance(x, 2.0)? <= tol)
    }

    /// Removes zero and redundant generators, then duplicate and redundant vertices.
    fn canonicalized(self) -> ConvexSet {
        let dim = self.dim;
        let scale = self
            .vertices
            .iter()
            .map(Vector::max_abs)
            .fold(1.0_f64, f64::max);
        let tol = GEOM_TOL * scale;

        // Generators: drop zeros, then anything in the cone of the others.
        let mut cone: Vec<Vector> = self
            .cone
            .into_iter()
            .filter(|g| g.norm2() > 1e-14)
            .collect();
        let mut i = 0;
        while i < cone.len() {
            let g = cone[i].scale(1.0 / cone[i].norm2());
            let others: Vec<Vector> = cone
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, h)| h.clone())
                .collect();
            let shifted = vec![-&g];
            let redundant = !others.is_empty()
                && min_norm(&shifted, &others, 2.0).map(|s| s.value <= 1e-10).unwrap_or(false);
            if redundant {
                cone.remove(i);
            } else {
                i += 1;
            }
        }

        // Vertices: exact-ish duplicates first, then hull/cone redundancy.
        let mut vertices: Vec<Vector> = Vec::with_capacity(self.vertices.len());
        for v in self.vertices {
            if !vertices.iter().any(|w| w.dist2(&v) <= tol) {
                vertices.push(v);
            }
        }
        let mut i = 0;
        while i < vertices.len() {
            let others: Vec<Vector> = vertices
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, w)| w - &vertices[i])
                .collect();
            let redundant = if others.is_empty() {
                false
            } else {
                min_norm(&others, &cone, 2.0).map(|s| s.value <= tol).unwrap_or(false)
            };
            if redundant {
                vertices.remove(i);
            } else {
                i += 1;
            }
        }
        ConvexSet { dim, vertices, cone }
    }
}

/// `co(points)` in minimal V-representation.
pub fn convex_hull(points: &[Vector]) -> Result<ConvexSet> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("convex hull of an empty list".into()))?;
    ConvexSet::new(first.dim(), points.to_vec(), Vec::new())
}
