//! Set comparison through support functions.
//!
//! Two polyhedral sets are equal iff their support functions agree on the
//! facet normals of both (together with the coordinate directions, which
//! pin down lower-dimensional affine hulls). [`direction_grid`] adds a
//! uniform grid on top of those candidates.

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ConvexSet;
use crate::error::{check_dim, Result};
use crate::linalg::null_line;
use crate::sampling;
use crate::vector::Vector;

/// Support-function comparison of two sets over a direction grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetDistanceReport {
    pub directions: usize,
    /// `max |σ_A(v) - σ_B(v)|` with matching infinities counted as 0 and
    /// mismatched finiteness as `+∞`.
    pub max_gap: f64,
    /// Direction attaining `max_gap`.
    pub worst_direction: Option<Vector>,
    /// `max (σ_A(v) - σ_B(v))`; nonpositive iff `A ⊆ B` on the grid.
    pub max_excess: f64,
    /// Directions where exactly one side is `+∞`.
    pub unbounded_mismatch: Vec<Vector>,
    pub gaps: Vec<f64>,
}

impl SetDistanceReport {
    /// Largest gap over directions where both support values are finite.
    pub fn max_finite_gap(&self) -> f64 {
        self.gaps
            .iter()
            .filter(|g| g.is_finite())
            .fold(0.0_f64, |m, &g| m.max(g))
    }
}

pub(crate) fn support_gap(sa: f64, sb: f64) -> f64 {
    if sa == sb {
        0.0
    } else if sa.is_infinite() || sb.is_infinite() {
        f64::INFINITY
    } else {
        (sa - sb).abs()
    }
}

pub fn set_distance_report(a: &ConvexSet, b: &ConvexSet, grid: &[Vector]) -> Result<SetDistanceReport> {
    check_dim(a.dim(), b.dim())?;
    let mut gaps = Vec::with_capacity(grid.len());
    let mut max_gap = 0.0_f64;
    let mut worst = None;
    let mut max_excess = f64::NEG_INFINITY;
    let mut unbounded_mismatch = Vec::new();
    for v in grid {
        check_dim(a.dim(), v.dim())?;
        let (sa, sb) = (a.support_function(v), b.support_function(v));
        let gap = support_gap(sa, sb);
        if gap.is_infinite() && (sa == f64::INFINITY) != (sb == f64::INFINITY) {
            unbounded_mismatch.push(v.clone());
        }
        let excess = if sa == sb { 0.0 } else { sa - sb };
        max_excess = max_excess.max(excess);
        if gap > max_gap || worst.is_none() {
            max_gap = max_gap.max(gap);
            worst = Some(v.clone());
        }
        gaps.push(gap);
    }
    Ok(SetDistanceReport {
        directions: grid.len(),
        max_gap,
        worst_direction: worst,
        max_excess: if grid.is_empty() { 0.0 } else { max_excess },
        unbounded_mismatch,
        gaps,
    })
}

/// Candidate facet normals of `co(V) + cone(G)`: unit normals to every
/// `(n-1)`-subset of edge vectors, recession directions and coordinate
/// axes, with both signs.
pub fn facet_normals(set: &ConvexSet) -> Vec<Vector> {
    let n = set.dim();
    if n == 1 {
        return vec![Vector::from([1.0]), Vector::from([-1.0])];
    }
    let mut spanning: Vec<Vector> = Vec::new();
    let verts = set.vertices();
    for (i, j) in (0..verts.len()).tuple_combinations() {
        spanning.push(&verts[j] - &verts[i]);
    }
    spanning.extend(set.cone_generators().iter().cloned());
    spanning.extend((0..n).map(|i| Vector::basis(n, i)));
    let mut out: Vec<Vector> = Vec::new();
    for subset in (0..spanning.len()).combinations(n - 1) {
        let rows: Vec<&Vector> = subset.iter().map(|&i| &spanning[i]).collect();
        if let Some(u) = null_line(&rows, n) {
            for cand in [u.clone(), -&u] {
                if !out.iter().any(|w| w.dist2(&cand) < 1e-10) {
                    out.push(cand);
                }
            }
        }
    }
    out
}

/// Uniform unit directions: `±1` for `n = 1`, 360 angles for `n = 2`, a
/// 1000-point Fibonacci sphere for `n = 3`, and 2000 seeded Gaussian
/// directions beyond.
pub fn uniform_directions(n: usize) -> Vec<Vector> {
    match n {
        1 => vec![Vector::from([1.0]), Vector::from([-1.0])],
        2 => (0..360)
            .map(|k| {
                let a = (k as f64).to_radians();
                Vector::from([a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            let m = 1000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * i as f64;
                    Vector::from([r * th.cos(), r * th.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..2000).map(|_| sampling::unit_sphere(&mut rng, n, 2.0)).collect()
        }
    }
}

/// Facet normals of every listed set followed by the uniform grid.
pub fn direction_grid(sets: &[&ConvexSet], n: usize) -> Vec<Vector> {
    let mut grid: Vec<Vector> = Vec::new();
    for s in sets {
        for u in facet_normals(s) {
            if !grid.iter().any(|w| w.dist2(&u) < 1e-10) {
                grid.push(u);
            }
        }
    }
    grid.extend(uniform_directions(n));
    grid
}

#[cfg(test)]
mod tests {
    use super::super::convex_hull;
    use super::*;

    fn rect(a: f64, b: f64) -> ConvexSet {
        convex_hull(&[
            Vector::from([-a, -b]),
            Vector::from([a, -b]),
            Vector::from([a, b]),
            Vector::from([-a, b]),
        ])
        .unwrap()
    }

    #[test]
    fn distance_examples() {
        let sq = rect(1.0, 1.0);
        let grid = direction_grid(&[&sq], 2);
        assert_eq!(set_distance_report(&sq, &sq, &grid).unwrap().max_gap, 0.0);

        let tall = rect(1.0, 2.0);
        let grid = direction_grid(&[&sq, &tall], 2);
        let r = set_distance_report(&sq, &tall, &grid).unwrap();
        assert!((r.max_gap - 1.0).abs() < 1e-12);
        let w = r.worst_direction.unwrap();
        assert!(w.dist2(&Vector::from([0.0, 1.0])) < 1e-12 || w.dist2(&Vector::from([0.0, -1.0])) < 1e-12);
        assert!(r.max_excess <= 0.0);

        let ray = ConvexSet::cone(2, vec![Vector::basis(2, 0)]).unwrap();
        let r = set_distance_report(&sq, &ray, &direction_grid(&[&sq, &ray], 2)).unwrap();
        assert_eq!(r.max_gap, f64::INFINITY);
        assert!(r.unbounded_mismatch.iter().all(|v| v[0] > 0.0));
    }

    #[test]
    fn facet_normals_separate_lower_dimensional_sets() {
        // A vertical segment and a shorter one on the same line in R^3.
        let a = convex_hull(&[Vector::from([0.0, 0.0, 0.0]), Vector::from([0.0, 0.0, 1.0])]).unwrap();
        let b = convex_hull(&[Vector::from([0.0, 0.0, 0.0]), Vector::from([0.0, 0.0, 0.5])]).unwrap();
        let normals: Vec<Vector> = facet_normals(&a).into_iter().chain(facet_normals(&b)).collect();
        let r = set_distance_report(&a, &b, &normals).unwrap();
        assert!((r.max_gap - 0.5).abs() < 1e-12);
        // A point off the segment's line.
        let c = ConvexSet::point(Vector::from([1e-3, 0.0, 0.0]));
        let r = set_distance_report(&a, &c, &facet_normals(&a)).unwrap();
        assert!(r.max_gap > 0.5);
    }
}
