//! Minimum `ℓ^q`-norm point of `co(V) + cone(G)`.
//!
//! Wolfe's active-set scheme, generalized in two ways: recession directions
//! enter the active set with free nonnegative weights, and for `q ≠ 2` the
//! affine-hull minimization is a damped Newton solve on `½‖·‖_q²` instead of
//! a linear least-squares problem. Atoms are chosen by the linear
//! minimization oracle of conditional gradient, and the loop stops on the
//! Frank–Wolfe duality gap.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{lp_duality, lp_duality_jacobian, lp_norm};
use crate::linalg::lstsq;
use crate::vector::Vector;

/// Accepted duality gap (relative to the squared scale of the data).
const GAP_ACCEPT: f64 = 1e-8;
const GAP_STOP: f64 = 1e-14;
const MAX_MAJOR: usize = 500;
const MAX_MINOR: usize = 200;
const WEIGHT_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinNormSolution {
    pub point: Vector,
    /// `‖point‖_q`.
    pub value: f64,
    /// Barycentric weights over the input vertices.
    pub vertex_weights: Vec<f64>,
    /// Nonnegative weights over the input cone generators.
    pub cone_weights: Vec<f64>,
    /// Final Frank–Wolfe gap of `½‖·‖_q²`.
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Atom {
    Vertex(usize),
    Ray(usize),
}

struct Problem<'a> {
    vertices: &'a [Vector],
    cone: &'a [Vector],
    q: f64,
}

impl Problem<'_> {
    fn atom(&self, a: Atom) -> &Vector {
        match a {
            Atom::Vertex(i) => &self.vertices[i],
            Atom::Ray(i) => &self.cone[i],
        }
    }

    fn combine(&self, atoms: &[Atom], w: &[f64]) -> Vector {
        let n = self.vertices[0].dim();
        let mut c = Vector::zeros(n);
        for (a, &wi) in atoms.iter().zip(w) {
            c = c.axpy(wi, self.atom(*a));
        }
        c
    }

    /// Minimizes `½‖c‖_q²` over the affine span of the active atoms (vertex
    /// weights summing to one, ray weights free), warm-started at `w0`.
    fn affine_minimizer(&self, atoms: &[Atom], w0: &[f64]) -> Vec<f64> {
        let n = self.vertices[0].dim();
        let base_idx = atoms
            .iter()
            .position(|a| matches!(a, Atom::Vertex(_)))
            .expect("active set keeps a vertex");
        let base = self.atom(atoms[base_idx]).clone();
        let free: Vec<usize> = (0..atoms.len()).filter(|&i| i != base_idx).collect();
        let k = free.len();
        let mut d = DMatrix::zeros(n, k);
        for (col, &i) in free.iter().enumerate() {
            let a = atoms[i];
            let dir = match a {
                Atom::Vertex(_) => self.atom(a) - &base,
                Atom::Ray(_) => self.atom(a).clone(),
            };
            for r in 0..n {
                d[(r, col)] = dir[r];
            }
        }
        let to_weights = |t: &DVector<f64>| {
            let mut w = vec![0.0; atoms.len()];
            let mut vsum = 0.0;
            for (col, &i) in free.iter().enumerate() {
                w[i] = t[col];
                if matches!(atoms[i], Atom::Vertex(_)) {
                    vsum += t[col];
                }
            }
            w[base_idx] = 1.0 - vsum;
            w
        };
        if k == 0 {
            return to_weights(&DVector::zeros(0));
        }
        let b = DVector::from_column_slice(base.as_slice());
        if self.q == 2.0 {
            let t = lstsq(&d, &(-&b));
            return to_weights(&t);
        }

        // Damped Newton on t ↦ ½‖base + D t‖_q² with an exact line search on
        // the directional derivative; function values lose resolution where
        // the norm is flat.
        let mut t = DVector::from_iterator(k, free.iter().map(|&i| w0[i]));
        let grad_at = |t: &DVector<f64>| {
            let c = &b + &d * t;
            let g = DVector::from_column_slice(lp_duality(c.as_slice(), self.q).as_slice());
            (c, d.transpose() * g)
        };
        for _ in 0..200 {
            let (c, grad) = grad_at(&t);
            if grad.norm() == 0.0 {
                break;
            }
            let h = lp_duality_jacobian(c.as_slice(), self.q);
            let mut ht = d.transpose() * h * &d;
            let damp = 1e-14 * ht.trace().abs().max(1e-300);
            for i in 0..k {
                ht[(i, i)] += damp;
            }
            let mut step = lstsq(&ht, &(-&grad));
            if !(grad.dot(&step) < 0.0) {
                step = -&grad;
            }
            let slope = |alpha: f64| grad_at(&(&t + &step * alpha)).1.dot(&step);
            let alpha = if slope(1.0) <= 0.0 {
                1.0
            } else {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if slope(mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            let moved = (&d * &step).norm() * alpha;
            t += &step * alpha;
            if moved <= 1e-16 * (1.0 + c.norm()) {
                break;
            }
        }
        to_weights(&t)
    }
}

/// Minimum `ℓ^q`-norm point of `co(vertices) + cone(cone)`; `vertices` must be nonempty.
pub(crate) fn min_norm(vertices: &[Vector], cone: &[Vector], q: f64) -> Result<MinNormSolution> {
    if vertices.is_empty() {
        return Err(Error::NoSelection);
    }
    let prob = Problem { vertices, cone, q };
    let scale = vertices
        .iter()
        .map(|v| v.norm2().powi(2))
        .fold(1.0_f64, f64::max);
    let rays: Vec<Vector> = cone.iter().map(|g| g.scale(1.0 / g.norm2())).collect();

    let start = (0..vertices.len())
        .min_by(|&i, &j| {
            lp_norm(vertices[i].as_slice(), q).total_cmp(&lp_norm(vertices[j].as_slice(), q))
        })
        .expect("nonempty");
    let mut atoms = vec![Atom::Vertex(start)];
    let mut w = vec![1.0];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..MAX_MAJOR {
        iterations += 1;
        let c = prob.combine(&atoms, &w);
        let g = lp_duality(c.as_slice(), q);
        let gc = g.dot(&c);
        let (jv, best_v) = (0..vertices.len())
            .map(|j| (j, g.dot(&vertices[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let vertex_gap = gc - best_v;
        let ray_pick = (0..rays.len())
            .map(|k| (k, g.dot(&rays[k])))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let ray_viol = ray_pick.map_or(0.0, |(_, s)| (-s).max(0.0));
        let c_scale = c.norm2().max(scale.sqrt());
        gap = vertex_gap.max(ray_viol * c_scale).max(0.0);
        if gap <= GAP_STOP * scale {
            break;
        }
        let next = if vertex_gap >= ray_viol * c_scale {
            Atom::Vertex(jv)
        } else {
            Atom::Ray(ray_pick.expect("violation implies a ray").0)
        };
        if atoms.contains(&next) {
            // The affine minimizer already accounts for this atom; remaining
            // gap is round-off.
            break;
        }
        atoms.push(next);
        w.push(0.0);

        for _ in 0..MAX_MINOR {
            let target = prob.affine_minimizer(&atoms, &w);
            if target.iter().all(|&t| t >= 0.0) {
                w = target;
                prune(&mut atoms, &mut w);
                break;
            }
            // Step from w toward the affine minimizer until a weight hits zero.
            let mut theta = 1.0_f64;
            for (wi, ti) in w.iter().zip(&target) {
                if *ti < 0.0 {
                    theta = theta.min(wi / (wi - ti));
                }
            }
            for (wi, ti) in w.iter_mut().zip(&target) {
                *wi += theta * (ti - *wi);
            }
            let before = atoms.len();
            prune(&mut atoms, &mut w);
            if atoms.len() == before {
                // Drop the smallest weight to guarantee progress.
                if let Some((i, _)) = w
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| can_drop(&atoms, *i))
                    .min_by(|a, b| a.1.total_cmp(b.1))
                {
                    atoms.remove(i);
                    w.remove(i);
                    renormalize(&atoms, &mut w);
                }
            }
        }
    }

    let point = prob.combine(&atoms, &w);
    let value = lp_norm(point.as_slice(), q);
    if !(gap <= GAP_ACCEPT * scale) {
        return Err(Error::SolverFail { residual: gap, iterations });
    }
    let mut vertex_weights = vec![0.0; vertices.len()];
    let mut cone_weights = vec![0.0; cone.len()];
    for (a, wi) in atoms.iter().zip(&w) {
        match *a {
            Atom::Vertex(i) => vertex_weights[i] += wi,
            Atom::Ray(i) => cone_weights[i] += wi,
        }
    }
    let point_from_weights = {
        let mut c = Vector::zeros(point.dim());
        for (v, wi) in vertices.iter().zip(&vertex_weights) {
            c = c.axpy(*wi, v);
        }
        for (g, wi) in cone.iter().zip(&cone_weights) {
            c = c.axpy(*wi, g);
        }
        c
    };
    debug_assert!(point_from_weights.dist2(&point) <= 1e-9 * scale.sqrt());
    Ok(MinNormSolution { point, value, vertex_weights, cone_weights, gap, iterations })
}

fn can_drop(atoms: &[Atom], i: usize) -> bool {
    match atoms[i] {
        Atom::Ray(_) => true,
        Atom::Vertex(_) => atoms.iter().filter(|a| matches!(a, Atom::Vertex(_))).count() > 1,
    }
}

fn prune(atoms: &mut Vec<Atom>, w: &mut Vec<f64>) {
    let mut i = 0;
    while i < atoms.len() {
        if w[i] <= WEIGHT_EPS && can_drop(atoms, i) {
            atoms.remove(i);
            w.remove(i);
        } else {
            i += 1;
        }
    }
    renormalize(atoms, w);
}

fn renormalize(atoms: &[Atom], w: &mut [f64]) {
    for wi in w.iter_mut() {
        *wi = wi.max(0.0);
    }
    let s: f64 = atoms
        .iter()
        .zip(w.iter())
        .filter(|(a, _)| matches!(a, Atom::Vertex(_)))
        .map(|(_, wi)| *wi)
        .sum();
    if s > 0.0 {
        for (a, wi) in atoms.iter().zip(w.iter_mut()) {
            if matches!(a, Atom::Vertex(_)) {
                *wi /= s;
            }
        }
    } else if let Some(i) = atoms.iter().position(|a| matches!(a, Atom::Vertex(_))) {
        w[i] = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute force over a fine barycentric grid of a triangle.
    fn grid_min(v: &[Vector; 3], q: f64) -> f64 {
        let m = 600;
        let mut best = f64::INFINITY;
        for i in 0..=m {
            for j in 0..=(m - i) {
                let (a, b) = (i as f64 / m as f64, j as f64 / m as f64);
                let c = v[0].scale(a).axpy(b, &v[1]).axpy(1.0 - a - b, &v[2]);
                best = best.min(lp_norm(c.as_slice(), q));
            }
        }
        best
    }

    #[test]
    fn triangle_against_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &q in &[1.5, 2.0, 4.0 / 3.0, 3.0] {
            for _ in 0..5 {
                let tri: [Vector; 3] = std::array::from_fn(|_| {
                    Vector::from([rng.random_range(0.2..3.0), rng.random_range(-3.0..3.0)])
                });
                let sol = min_norm(&tri, &[], q).unwrap();
                let oracle = grid_min(&tri, q);
                assert!(sol.value <= oracle + 1e-12, "q={q}");
                assert!(oracle - sol.value < 2e-2, "q={q} sol={} oracle={}", sol.value, oracle);
                assert!(sol.gap <= 1e-8);
            }
        }
    }

    #[test]
    fn weights_reproduce_point() {
        let v = [Vector::from([2.0, 1.0, 0.0]), Vector::from([1.0, 2.0, 1.0]), Vector::from([1.5, -1.0, 2.0])];
        let g = [Vector::from([1.0, 0.0, 0.0])];
        let sol = min_norm(&v, &g, 2.0).unwrap();
        let s: f64 = sol.vertex_weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(sol.vertex_weights.iter().chain(&sol.cone_weights).all(|&w| w >= 0.0));
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &q in &[1.5, 2.0, 3.0] {
            let mut pts: Vec<Vector> = (0..7)
                .map(|_| Vector::from([rng.random_range(0.5..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]))
                .collect();
            let a = min_norm(&pts, &[], q).unwrap();
            pts.reverse();
            pts.rotate_left(3);
            let b = min_norm(&pts, &[], q).unwrap();
            assert!(a.point.dist2(&b.point) < 1e-8, "q={q}");
        }
    }
}
