//! Norm geometry of `(R^n, ‖·‖_p)` and its dual `(R^n, ‖·‖_q)`.
//!
//! For `1 < p < ∞` the primal, dual and bidual unit spheres contain no
//! segments, so the duality map `J = ∂(½‖·‖_p²)` is single valued and has the
//! closed form
//!
//! ```text
//! J(x)_k = ‖x‖_p^(2-p) |x_k|^(p-1) sign(x_k),   J(0) = 0,
//! ```
//!
//! and `J*` is the same expression with `q` in place of `p`. `J*` inverts `J`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sampling;
use crate::vector::Vector;

/// `(R^n, ‖·‖_p)` with its conjugate exponent `q = p / (p - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDescriptor", into = "SpaceDescriptor")]
pub struct NormedSpace {
    n: usize,
    p: f64,
    q: f64,
}

#[derive(Serialize, Deserialize)]
struct SpaceDescriptor {
    n: usize,
    p: f64,
}

impl TryFrom<SpaceDescriptor> for NormedSpace {
    type Error = Error;
    fn try_from(d: SpaceDescriptor) -> Result<Self> {
        NormedSpace::new(d.n, d.p)
    }
}

impl From<NormedSpace> for SpaceDescriptor {
    fn from(s: NormedSpace) -> Self {
        SpaceDescriptor { n: s.n, p: s.p }
    }
}

impl NormedSpace {
    /// Rejects `n = 0` and any `p` outside the open interval `(1, ∞)`.
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(NormedSpace { n, p, q: conjugate_exponent(p) })
    }

    /// The Euclidean space `R^n`.
    pub fn euclidean(n: usize) -> Self {
        NormedSpace { n, p: 2.0, q: 2.0 }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The dual space, `(R^n, ‖·‖_q)`.
    pub fn dual(&self) -> NormedSpace {
        NormedSpace { n: self.n, p: self.q, q: self.p }
    }

    pub fn norm(&self, x: &Vector) -> Result<f64> {
        check_dim(self.n, x.dim())?;
        Ok(lp_norm(x.as_slice(), self.p))
    }

    pub fn dual_norm(&self, xstar: &Vector) -> Result<f64> {
        check_dim(self.n, xstar.dim())?;
        Ok(lp_norm(xstar.as_slice(), self.q))
    }

    /// `J(x)`, the gradient of `½‖·‖_p²` at `x`.
    pub fn duality_map(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.n, x.dim())?;
        Ok(lp_duality(x.as_slice(), self.p))
    }

    /// `J*(x*)`, the gradient of `½‖·‖_q²` at `x*`.
    pub fn dual_duality_map(&self, xstar: &Vector) -> Result<Vector> {
        check_dim(self.n, xstar.dim())?;
        Ok(lp_duality(xstar.as_slice(), self.q))
    }

    /// `½‖x‖_p² + ½‖x*‖_q² - ⟨x*, x⟩`, nonnegative by Fenchel–Young.
    pub fn fenchel_gap(&self, x: &Vector, xstar: &Vector) -> Result<f64> {
        check_dim(self.n, x.dim())?;
        check_dim(self.n, xstar.dim())?;
        Ok(fenchel_gap_unchecked(x, xstar, self.p, self.q))
    }

    /// Membership `x* ∈ J_ε(x)` in the ε-subdifferential of `½‖·‖²`.
    ///
    /// Decided by the Fenchel gap. A relative allowance of `1e-12` on the
    /// magnitudes involved absorbs cancellation in the gap evaluation.
    pub fn eps_subdiff_contains(&self, x: &Vector, xstar: &Vector, eps: f64) -> Result<bool> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidInput(format!("eps must be nonnegative, got {eps}")));
        }
        check_dim(self.n, x.dim())?;
        check_dim(self.n, xstar.dim())?;
        let a = 0.5 * lp_norm(x.as_slice(), self.p).powi(2);
        let b = 0.5 * lp_norm(xstar.as_slice(), self.q).powi(2);
        let gap = a + b - xstar.dot(x);
        Ok(gap <= eps + GAP_ROUNDING * (a + b))
    }

    /// Some element of `J_ε(x)`.
    ///
    /// With `eps = 0` this is `J(x)`. Otherwise `J(x)` is pushed along the
    /// hint (normalized in the dual norm) until the Fenchel gap reaches `eps`.
    /// A zero hint falls back to the direction of `J(x)`, or `e₁` at the origin.
    pub fn eps_subdiff_element(&self, x: &Vector, eps: f64, direction_hint: &Vector) -> Result<Vector> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidInput(format!("eps must be nonnegative, got {eps}")));
        }
        check_dim(self.n, x.dim())?;
        check_dim(self.n, direction_hint.dim())?;
        let jx = lp_duality(x.as_slice(), self.p);
        if eps == 0.0 {
            return Ok(jx);
        }
        let mut h = direction_hint.clone();
        if h.is_zero() {
            h = if jx.is_zero() { Vector::basis(self.n, 0) } else { jx.clone() };
        }
        let h = h.scale(1.0 / lp_norm(h.as_slice(), self.q));
        let gap = |t: f64| fenchel_gap_unchecked(x, &jx.axpy(t, &h), self.p, self.q);

        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while gap(hi) <= eps {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) <= eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(jx.axpy(lo, &h))
    }

    /// Samples pairs of distinct unit vectors and records `2 - ‖x + y‖_p`.
    pub fn strict_convexity_probe(&self, trials: usize, seed: u64) -> Result<ConvexityProbe> {
        if trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min_margin = f64::INFINITY;
        let mut resampled = 0;
        let mut positive = 0;
        for _ in 0..trials {
            let (x, y) = loop {
                let x = sampling::unit_sphere(&mut rng, self.n, self.p);
                let y = sampling::unit_sphere(&mut rng, self.n, self.p);
                if lp_norm((&x - &y).as_slice(), self.p) > 1e-9 {
                    break (x, y);
                }
                resampled += 1;
            };
            let margin = 2.0 - lp_norm((&x + &y).as_slice(), self.p);
            if margin > 0.0 {
                positive += 1;
            }
            min_margin = min_margin.min(margin);
        }
        Ok(ConvexityProbe { trials, positive, resampled, min_margin })
    }
}

/// Outcome of [`NormedSpace::strict_convexity_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityProbe {
    pub trials: usize,
    /// Number of sampled pairs with a strictly positive margin.
    pub positive: usize,
    /// Pairs rejected because the two samples coincided.
    pub resampled: usize,
    pub min_margin: f64,
}

impl ConvexityProbe {
    pub fn all_positive(&self) -> bool {
        self.positive == self.trials
    }
}

const GAP_ROUNDING: f64 = 1e-12;

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `(Σ |x_k|^p)^(1/p)`, evaluated with max-abs scaling.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return m * x.iter().map(|c| (c / m) * (c / m)).sum::<f64>().sqrt();
    }
    m * x.iter().map(|c| (c.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Gradient of `½‖·‖_p²`.
pub fn lp_duality(x: &[f64], p: f64) -> Vector {
    let s = lp_norm(x, p);
    if s == 0.0 {
        return Vector::zeros(x.len());
    }
    if p == 2.0 {
        return Vector::from(x.to_vec());
    }
    Vector::from(
        x.iter()
            .map(|&c| s * (c.abs() / s).powf(p - 1.0) * c.signum())
            .collect::<Vec<_>>(),
    )
}

/// Jacobian of [`lp_duality`] (the Hessian of `½‖·‖_p²`).
///
/// With `u = x / ‖x‖_p` and `a_k = |u_k|^(p-1) sign(u_k)` this is
/// `(2 - p) a aᵀ + (p - 1) diag(|u_k|^(p-2))`. Coordinates at zero are
/// clamped for `p < 2`, where the true curvature is unbounded.
pub(crate) fn lp_duality_jacobian(x: &[f64], p: f64) -> DMatrix<f64> {
    let n = x.len();
    let s = lp_norm(x, p);
    if p == 2.0 || s == 0.0 {
        return DMatrix::identity(n, n);
    }
    let u: Vec<f64> = x.iter().map(|c| c / s).collect();
    let a: Vec<f64> = u.iter().map(|c| c.abs().powf(p - 1.0) * c.signum()).collect();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = (2.0 - p) * a[i] * a[j];
        }
        let ui = u[i].abs().max(1e-12);
        h[(i, i)] += (p - 1.0) * ui.powf(p - 2.0);
    }
    h
}

fn fenchel_gap_unchecked(x: &Vector, xstar: &Vector, p: f64, q: f64) -> f64 {
    0.5 * lp_norm(x.as_slice(), p).powi(2) + 0.5 * lp_norm(xstar.as_slice(), q).powi(2) - xstar.dot(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_non_strictly_convex_exponents() {
        assert_eq!(NormedSpace::new(2, 1.0), Err(Error::InvalidExponent(1.0)));
        assert!(NormedSpace::new(2, f64::INFINITY).is_err());
        assert!(NormedSpace::new(0, 2.0).is_err());
        let s = NormedSpace::new(3, 4.0).unwrap();
        assert_relative_eq!(s.q(), 4.0 / 3.0, max_relative = 1e-15);
        assert!(serde_json::from_str::<NormedSpace>(r#"{"n": 2, "p": 1.0}"#).is_err());
    }

    #[test]
    fn norm_examples() {
        let e = NormedSpace::euclidean(2);
        assert_eq!(e.norm(&Vector::from([3.0, 4.0])).unwrap(), 5.0);
        let s3 = NormedSpace::new(2, 3.0).unwrap();
        assert_eq!(s3.norm(&Vector::from([1.0, 0.0])).unwrap(), 1.0);
        // 2^(1/4) via two square roots.
        let s4 = NormedSpace::new(2, 4.0).unwrap();
        assert_relative_eq!(s4.norm(&Vector::from([1.0, 1.0])).unwrap(), 2f64.sqrt().sqrt(), max_relative = 1e-15);
        assert!(matches!(e.norm(&Vector::from([1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dual_norm_examples() {
        let s4 = NormedSpace::new(2, 4.0).unwrap();
        assert_eq!(NormedSpace::euclidean(2).dual_norm(&Vector::from([3.0, 4.0])).unwrap(), 5.0);
        assert_relative_eq!(s4.dual_norm(&Vector::from([1.0, 0.0])).unwrap(), 1.0);
        let h = 0.5f64.sqrt();
        assert_relative_eq!(s4.dual_norm(&Vector::from([h, h])).unwrap(), 2f64.powf(0.25), max_relative = 1e-14);
    }

    /// Central differences of `½‖·‖_p²` as an independent gradient oracle.
    fn fd_gradient(x: &[f64], p: f64) -> Vec<f64> {
        let h = 1e-6;
        let f = |y: &[f64]| 0.5 * y.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(2.0 / p);
        (0..x.len())
            .map(|k| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[k] += h;
                b[k] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn duality_map_examples() {
        let e = NormedSpace::euclidean(2);
        assert_eq!(e.duality_map(&Vector::from([3.0, 4.0])).unwrap(), Vector::from([3.0, 4.0]));
        let s4 = NormedSpace::new(2, 4.0).unwrap();
        assert!(s4.duality_map(&Vector::zeros(2)).unwrap().is_zero());
        let j = s4.duality_map(&Vector::from([1.0, 1.0])).unwrap();
        let fd = fd_gradient(&[1.0, 1.0], 4.0);
        for k in 0..2 {
            assert!((j[k] - fd[k]).abs() < 1e-8);
            assert_relative_eq!(j[k], 0.5f64.sqrt(), max_relative = 1e-14);
        }
    }

    #[test]
    fn duality_map_matches_finite_differences() {
        for &p in &[1.5, 3.0, 4.0] {
            let x = [0.7, -1.3, 0.4];
            let j = lp_duality(&x, p);
            let fd = fd_gradient(&x, p);
            for k in 0..3 {
                assert!((j[k] - fd[k]).abs() < 1e-7, "p={p} k={k}");
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for &p in &[1.5, 2.0, 3.0] {
            let x = [0.7, -1.3, 0.4];
            let jac = lp_duality_jacobian(&x, p);
            let h = 1e-6;
            for l in 0..3 {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[l] += h;
                b[l] -= h;
                let (ja, jb) = (lp_duality(&a, p), lp_duality(&b, p));
                for k in 0..3 {
                    let fd = (ja[k] - jb[k]) / (2.0 * h);
                    assert!((jac[(k, l)] - fd).abs() < 1e-6, "p={p} ({k},{l})");
                }
            }
        }
    }

    #[test]
    fn dual_duality_map_examples() {
        let e = NormedSpace::euclidean(2);
        assert_eq!(e.dual_duality_map(&Vector::from([1.0, 2.0])).unwrap(), Vector::from([1.0, 2.0]));
        let s4 = NormedSpace::new(2, 4.0).unwrap();
        let h = 0.5f64.sqrt();
        let x = s4.dual_duality_map(&Vector::from([h, h])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        assert!(s4.dual_duality_map(&Vector::zeros(2)).unwrap().is_zero());
    }

    #[test]
    fn eps_membership_examples() {
        let e = NormedSpace::euclidean(2);
        let x = Vector::from([1.0, 0.0]);
        assert!(e.eps_subdiff_contains(&x, &e.duality_map(&x).unwrap(), 0.0).unwrap());
        assert!(e.eps_subdiff_contains(&x, &Vector::from([1.1, 0.0]), 0.005).unwrap());
        assert!(!e.eps_subdiff_contains(&x, &Vector::from([1.2, 0.0]), 0.005).unwrap());
        assert!(e.eps_subdiff_contains(&x, &x, -1.0).is_err());
    }

    #[test]
    fn eps_element_examples() {
        let e = NormedSpace::euclidean(2);
        let x = Vector::from([1.0, 0.0]);
        let e1 = Vector::basis(2, 0);
        assert_eq!(e.eps_subdiff_element(&x, 0.0, &e1).unwrap(), x);
        let a = e.eps_subdiff_element(&x, 0.005, &e1).unwrap();
        assert!((a[0] - 1.1).abs() < 1e-12 && a[1].abs() < 1e-15);
        let b = e.eps_subdiff_element(&Vector::zeros(2), 0.02, &e1).unwrap();
        assert!((b[0] - 0.2).abs() < 1e-12 && b[1].abs() < 1e-15);
    }

    #[test]
    fn eps_element_gap_is_in_target_band() {
        let s = NormedSpace::new(3, 3.0).unwrap();
        let x = Vector::from([0.3, -2.0, 1.0]);
        let hint = Vector::from([1.0, 1.0, -0.5]);
        for &eps in &[1e-6, 1e-3, 0.5] {
            let xs = s.eps_subdiff_element(&x, eps, &hint).unwrap();
            let gap = s.fenchel_gap(&x, &xs).unwrap();
            assert!(gap <= eps && gap >= 0.9 * eps, "eps={eps} gap={gap}");
        }
    }

    /// The Fenchel-gap predicate against the defining inequality
    /// `½‖y‖² ≥ ½‖x‖² + ⟨x*, y - x⟩ - ε` on a cloud of `y`.
    #[test]
    fn membership_agrees_with_sampled_definition() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &p in &[1.5, 2.0, 4.0] {
            let s = NormedSpace::new(2, p).unwrap();
            for _ in 0..200 {
                let x = Vector::from([rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
                let xs = Vector::from([rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
                let eps = rng.random_range(0.0..0.5);
                let member = s.eps_subdiff_contains(&x, &xs, eps).unwrap();
                let nx2 = 0.5 * s.norm(&x).unwrap().powi(2);
                let holds = |y: &Vector| 0.5 * s.norm(y).unwrap().powi(2) >= nx2 + xs.dot(&(y - &x)) - eps - 1e-12;
                let mut cloud: Vec<Vector> = (0..200)
                    .map(|_| Vector::from([rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]))
                    .collect();
                // The maximizer of ⟨x*, y⟩ - ½‖y‖² certifies non-membership.
                cloud.push(s.dual_duality_map(&xs).unwrap());
                let all = cloud.iter().all(holds);
                assert_eq!(member, all, "p={p} x={x:?} x*={xs:?} eps={eps}");
            }
        }
    }

    #[test]
    fn probe_examples() {
        let r = NormedSpace::euclidean(2).strict_convexity_probe(200, 1).unwrap();
        assert!(r.all_positive() && r.min_margin > 0.0);
        let r = NormedSpace::new(3, 4.0).unwrap().strict_convexity_probe(1000, 2).unwrap();
        assert!(r.all_positive());
        // In one dimension the only distinct unit pair is {1, -1}; equal draws are resampled.
        let r = NormedSpace::new(1, 3.0).unwrap().strict_convexity_probe(50, 3).unwrap();
        assert!(r.resampled > 0 && r.all_positive());
        assert!(NormedSpace::euclidean(2).strict_convexity_probe(0, 1).is_err());
    }
}
