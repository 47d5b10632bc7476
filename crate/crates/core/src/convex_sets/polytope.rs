use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ConvexSet, GEOM_TOL};
use crate::error::{check_dim, Error, Result};
use crate::vector::Vector;

/// Box half-width used to make LP-by-enumeration bounded.
const BIG: f64 = 1e6;

/// `{y : ⟨normal, y⟩ ≤ offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Self {
        Halfspace { normal, offset }
    }

    fn slack(&self, y: &Vector) -> f64 {
        self.offset - self.normal.dot(y)
    }
}

/// A polyhedron in H-representation. No rows means all of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeDescriptor", into = "PolytopeDescriptor")]
pub struct Polytope {
    dim: usize,
    rows: Vec<Halfspace>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default)]
    rows: Vec<Halfspace>,
}

impl TryFrom<PolytopeDescriptor> for Polytope {
    type Error = Error;
    fn try_from(d: PolytopeDescriptor) -> Result<Self> {
        let dim = d
            .dim
            .or_else(|| d.rows.first().map(|r| r.normal.dim()))
            .ok_or_else(|| Error::InvalidInput("polytope without rows needs an explicit dim".into()))?;
        Polytope::new(dim, d.rows)
    }
}

impl From<Polytope> for PolytopeDescriptor {
    fn from(p: Polytope) -> Self {
        PolytopeDescriptor { dim: Some(p.dim), rows: p.rows }
    }
}

impl Polytope {
    pub fn new(dim: usize, rows: Vec<Halfspace>) -> Result<Self> {
        for r in &rows {
            check_dim(dim, r.normal.dim())?;
            if r.normal.is_zero() || !r.offset.is_finite() {
                return Err(Error::InvalidInput("degenerate halfspace row".into()));
            }
        }
        Ok(Polytope { dim, rows })
    }

    pub fn whole_space(dim: usize) -> Self {
        Polytope { dim, rows: Vec::new() }
    }

    /// The box `Π [lower_i, upper_i]`.
    pub fn boxed(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        let n = lower.len();
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            rows.push(Halfspace::new(Vector::basis(n, i), upper[i]));
            rows.push(Halfspace::new(-&Vector::basis(n, i), -lower[i]));
        }
        Polytope::new(n, rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Halfspace] {
        &self.rows
    }

    pub fn is_whole_space(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn intersect(&self, other: &Polytope) -> Result<Polytope> {
        check_dim(self.dim, other.dim)?;
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Polytope { dim: self.dim, rows })
    }

    pub fn contains(&self, y: &Vector, tol: f64) -> bool {
        y.dim() == self.dim && self.rows.iter().all(|r| r.slack(y) >= -tol)
    }

    /// Indices of rows tight at `y` within `tol`.
    pub fn active_rows(&self, y: &Vector, tol: f64) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&i| self.rows[i].slack(y).abs() <= tol)
            .collect()
    }

    /// `N_D(x)`: the cone of normals of the constraints active at `x`.
    pub fn normal_cone(&self, x: &Vector) -> Result<ConvexSet> {
        check_dim(self.dim, x.dim())?;
        if !self.contains(x, GEOM_TOL) {
            return Err(Error::InvalidInput("normal cone requested outside the domain".into()));
        }
        let gens = self
            .active_rows(x, GEOM_TOL)
            .into_iter()
            .map(|i| self.rows[i].normal.clone())
            .collect();
        ConvexSet::cone(self.dim, gens)
    }

    /// Vertices of the polytope intersected with the box `[-bound, bound]^n`.
    pub fn vertices_in_box(&self, bound: f64) -> Vec<Vector> {
        let n = self.dim;
        let mut all = self.rows.clone();
        for i in 0..n {
            all.push(Halfspace::new(Vector::basis(n, i), bound));
            all.push(Halfspace::new(-&Vector::basis(n, i), bound));
        }
        let mut out: Vec<Vector> = Vec::new();
        for subset in (0..all.len()).combinations(n) {
            let a = DMatrix::from_fn(n, n, |r, c| all[subset[r]].normal[c]);
            let b = DVector::from_iterator(n, subset.iter().map(|&i| all[i].offset));
            let Some(sol) = a.lu().solve(&b) else { continue };
            let y = Vector::from(sol.as_slice().to_vec());
            let scale = 1.0 + y.max_abs();
            if all.iter().all(|r| r.slack(&y) >= -1e-9 * scale)
                && !out.iter().any(|w| w.dist2(&y) <= 1e-9 * scale)
            {
                out.push(y);
            }
        }
        out
    }

    /// `sup ⟨c, y⟩` over the polytope intersected with a large box;
    /// `-∞` when empty.
    pub fn max_linear(&self, c: &Vector) -> f64 {
        self.vertices_in_box(BIG)
            .iter()
            .map(|y| c.dot(y))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Chebyshev center and radius (capped at a large constant for
    /// unbounded sets). A negative radius means the polytope is empty.
    pub fn chebyshev_center(&self) -> (Vector, f64) {
        let n = self.dim;
        if self.rows.is_empty() {
            return (Vector::zeros(n), BIG);
        }
        // Variables (c, r): ⟨a, c⟩ + r‖a‖ ≤ b, box on c, -BIG ≤ r ≤ BIG.
        let mut a_rows: Vec<(Vec<f64>, f64)> = self
            .rows
            .iter()
            .map(|h| {
                let mut a = h.normal.as_slice().to_vec();
                a.push(h.normal.norm2());
                (a, h.offset)
            })
            .collect();
        for i in 0..n {
            let mut up = vec![0.0; n + 1];
            up[i] = 1.0;
            a_rows.push((up.clone(), BIG));
            up[i] = -1.0;
            a_rows.push((up, BIG));
        }
        let mut r_up = vec![0.0; n + 1];
        r_up[n] = 1.0;
        a_rows.push((r_up.clone(), BIG));
        r_up[n] = -1.0;
        a_rows.push((r_up, BIG));

        let m = n + 1;
        let mut best: Option<(Vector, f64)> = None;
        for subset in (0..a_rows.len()).combinations(m) {
            let a = DMatrix::from_fn(m, m, |r, c| a_rows[subset[r]].0[c]);
            let b = DVector::from_iterator(m, subset.iter().map(|&i| a_rows[i].1));
            let Some(sol) = a.lu().solve(&b) else { continue };
            let feasible = a_rows.iter().all(|(row, off)| {
                let lhs: f64 = row.iter().zip(sol.iter()).map(|(x, y)| x * y).sum();
                lhs <= off + 1e-9 * (1.0 + off.abs())
            });
            if feasible && best.as_ref().map_or(true, |(_, r)| sol[n] > *r) {
                best = Some((Vector::from(sol.as_slice()[..n].to_vec()), sol[n]));
            }
        }
        best.unwrap_or((Vector::zeros(n), f64::NEG_INFINITY))
    }

    pub fn is_empty(&self) -> bool {
        self.chebyshev_center().1 < -GEOM_TOL
    }

    /// Whether every row of `other` is implied by `self`.
    pub fn implies(&self, other: &Polytope, tol: f64) -> bool {
        other
            .rows
            .iter()
            .all(|r| self.max_linear(&r.normal) <= r.offset + tol * (1.0 + r.offset.abs()))
    }

    /// Equality as sets (each H-representation implies the other).
    pub fn equivalent(&self, other: &Polytope, tol: f64) -> bool {
        self.dim == other.dim && self.implies(other, tol) && other.implies(self, tol)
    }

    /// Axis-aligned bounding box of the polytope clipped to `[-bound, bound]^n`.
    pub fn bounding_box(&self, bound: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let verts = self.vertices_in_box(bound);
        if verts.is_empty() {
            return None;
        }
        let n = self.dim;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for v in &verts {
            for i in 0..n {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        Some((lo, hi))
    }
}
