//! Exact resolvents `0 ∈ λ⁻¹J(y - x) + Ay` by active-set enumeration.
//!
//! On a fixed active set (pieces `S_i` of every max-affine part, tight
//! domain rows `T`) the inclusion becomes a square smooth system in
//! `(y, μ, ν)` that Levenberg–Marquardt solves to machine precision. The
//! candidate sets are tried smallest first; the first one whose solution
//! is feasible, has nonnegative multipliers and passes the independent
//! residual check is the (unique) resolvent point.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{AffinePiece, Kind, MonotoneOperator};
use crate::convex_sets::Halfspace;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{lp_duality, lp_duality_jacobian, NormedSpace};
use crate::linalg::lstsq;
use crate::vector::Vector;

/// Accepted inclusion residual `min_{a ∈ Ay} ‖λ⁻¹J(y - x) + a‖_q`.
pub const RESOLVENT_TOL: f64 = 1e-8;

/// Multipliers may be this negative.
const FEAS_TOL: f64 = 1e-9;
/// Primal slack: absolute rounding plus a fraction of the displacement `‖y - x‖∞`.
const PRIMAL_ABS_TOL: f64 = 1e-13;
const PRIMAL_REL_TOL: f64 = 1e-9;
const MAX_CANDIDATES: usize = 200_000;
const LM_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventSolution {
    pub x_lambda: Vector,
    /// `J(x - x_λ)`; `λ⁻¹ zstar` lies in `A x_λ`.
    pub zstar: Vector,
    pub residual: f64,
    /// Active sets tried before acceptance.
    pub candidates: usize,
}

struct Flat {
    polys: Vec<Vec<AffinePiece>>,
    matrix: DMatrix<f64>,
    shift: Vector,
    dualities: Vec<f64>,
    rows: Vec<Halfspace>,
}

impl Flat {
    fn new(op: &MonotoneOperator) -> Flat {
        let n = op.dim();
        let mut flat = Flat {
            polys: Vec::new(),
            matrix: DMatrix::zeros(n, n),
            shift: Vector::zeros(n),
            dualities: Vec::new(),
            rows: Vec::new(),
        };
        flat.collect(op);
        flat
    }

    fn collect(&mut self, op: &MonotoneOperator) {
        for r in op.domain().rows() {
            if !self.rows.contains(r) {
                self.rows.push(r.clone());
            }
        }
        match op.kind() {
            Kind::SubdiffPoly(pieces) => self.polys.push(pieces.clone()),
            Kind::NormalCone => {}
            Kind::Linear { matrix, shift } => {
                self.matrix += matrix;
                self.shift = &self.shift + shift;
            }
            Kind::DualityMap { p } => self.dualities.push(*p),
            Kind::Sum(parts) => parts.iter().for_each(|p| self.collect(p)),
        }
    }
}

/// One active set: chosen pieces per max-affine part and tight rows.
#[derive(Debug, Clone)]
struct ActiveSet {
    pieces: Vec<Vec<usize>>,
    rows: Vec<usize>,
}

fn enumerate(flat: &Flat, n: usize) -> Vec<ActiveSet> {
    // Per part: every nonempty subset with at most n + 1 elements, keyed
    // by the number of equations it adds beyond the first.
    let mut per_part: Vec<Vec<Vec<usize>>> = Vec::new();
    for pieces in &flat.polys {
        let mut subsets = Vec::new();
        for k in 1..=pieces.len().min(n + 1) {
            subsets.extend(itertools::Itertools::combinations(0..pieces.len(), k));
        }
        per_part.push(subsets);
    }
    let mut row_sets: Vec<Vec<usize>> = Vec::new();
    for k in 0..=flat.rows.len().min(n) {
        row_sets.extend(itertools::Itertools::combinations(0..flat.rows.len(), k));
    }
    let mut out: Vec<(usize, ActiveSet)> = Vec::new();
    let mut stack: Vec<(usize, Vec<Vec<usize>>, usize)> = vec![(0, Vec::new(), 0)];
    while let Some((i, chosen, used)) = stack.pop() {
        if out.len() >= MAX_CANDIDATES {
            break;
        }
        if i == per_part.len() {
            for rows in &row_sets {
                if used + rows.len() <= n {
                    out.push((used + rows.len(), ActiveSet { pieces: chosen.clone(), rows: rows.clone() }));
                }
            }
            continue;
        }
        for s in per_part[i].iter().rev() {
            if used + s.len() - 1 <= n {
                let mut next = chosen.clone();
                next.push(s.clone());
                stack.push((i + 1, next, used + s.len() - 1));
            }
        }
    }
    out.sort_by_key(|(k, _)| *k);
    out.into_iter().map(|(_, a)| a).collect()
}

struct System<'a> {
    flat: &'a Flat,
    set: &'a ActiveSet,
    x: &'a Vector,
    inv_lambda: f64,
    p: f64,
    n: usize,
}

impl System<'_> {
    fn unknowns(&self) -> usize {
        self.n + self.set.pieces.iter().map(Vec::len).sum::<usize>() + self.set.rows.len()
    }

    /// For `p < 2` the leading block holds `ξ = J(y - x)` instead of `y`,
    /// which keeps the Jacobian bounded.
    fn dual_mode(&self) -> bool {
        self.p < 2.0
    }

    fn point(&self, z: &DVector<f64>) -> Vector {
        let lead: Vec<f64> = z.rows(0, self.n).iter().cloned().collect();
        if self.dual_mode() {
            let q = self.p / (self.p - 1.0);
            let u = lp_duality(&lead, q);
            Vector::from((0..self.n).map(|i| self.x[i] + u[i]).collect::<Vec<_>>())
        } else {
            Vector::from(lead)
        }
    }

    fn residual_and_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let (f, mut jac) = self.residual_and_point_jacobian(z);
        let lead: Vec<f64> = z.rows(0, n).iter().cloned().collect();
        if self.dual_mode() {
            let q = self.p / (self.p - 1.0);
            let dy = lp_duality_jacobian(&lead, q);
            let chained = jac.columns(0, n) * &dy;
            jac.columns_mut(0, n).copy_from(&chained);
            for i in 0..n {
                jac[(i, i)] += self.inv_lambda;
            }
        } else {
            let u: Vec<f64> = (0..n).map(|i| lead[i] - self.x[i]).collect();
            let dju = lp_duality_jacobian(&u, self.p);
            for i in 0..n {
                for j in 0..n {
                    jac[(i, j)] += self.inv_lambda * dju[(i, j)];
                }
            }
        }
        (f, jac)
    }

    /// `F(z)` and its Jacobian, the leading block taken with respect to `y`
    /// and without the `λ⁻¹J(y - x)` term.
    fn residual_and_point_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let m = self.unknowns();
        let yv = self.point(z);
        let y = yv.as_slice();
        let lead: Vec<f64> = z.rows(0, n).iter().cloned().collect();
        let ju = if self.dual_mode() {
            lead
        } else {
            lp_duality(&(0..n).map(|i| y[i] - self.x[i]).collect::<Vec<_>>(), self.p).into_vec()
        };
        let mut f = DVector::zeros(m);
        let mut jac = DMatrix::zeros(m, m);
        for i in 0..n {
            f[i] = self.inv_lambda * ju[i] + self.flat.shift[i];
            for j in 0..n {
                f[i] += self.flat.matrix[(i, j)] * y[j];
                jac[(i, j)] = self.flat.matrix[(i, j)];
            }
        }
        for &pk in &self.flat.dualities {
            let jy = lp_duality(y, pk);
            let djy = lp_duality_jacobian(y, pk);
            for i in 0..n {
                f[i] += jy[i];
                for j in 0..n {
                    jac[(i, j)] += djy[(i, j)];
                }
            }
        }
        let mut col = n;
        let mut row = n;
        for (part, chosen) in self.set.pieces.iter().enumerate() {
            let pieces = &self.flat.polys[part];
            let base = &pieces[chosen[0]];
            for &j in chosen {
                let a = &pieces[j].slope;
                for i in 0..n {
                    f[i] += z[col] * a[i];
                    jac[(i, col)] = a[i];
                }
                jac[(row + chosen.len() - 1, col)] = 1.0;
                col += 1;
            }
            for &j in &chosen[1..] {
                let pj = &pieces[j];
                f[row] = pj.eval(&yv) - base.eval(&yv);
                for i in 0..n {
                    jac[(row, i)] = pj.slope[i] - base.slope[i];
                }
                row += 1;
            }
            let start = col - chosen.len();
            f[row] = (start..col).map(|c| z[c]).sum::<f64>() - 1.0;
            row += 1;
        }
        for &t in &self.set.rows {
            let h = &self.flat.rows[t];
            for i in 0..n {
                f[i] += z[col] * h.normal[i];
                jac[(i, col)] = h.normal[i];
                jac[(row, i)] = h.normal[i];
            }
            f[row] = h.normal.dot(&yv) - h.offset;
            col += 1;
            row += 1;
        }
        (f, jac)
    }

    /// Projection of `x` onto the affine constraints of the set.
    fn projected_start(&self) -> Vector {
        let n = self.n;
        let m = self.unknowns();
        let mut z = self.start_without_multipliers(self.x);
        if self.dual_mode() {
            z.rows_mut(0, n).fill(0.0);
        }
        let (f, jac) = self.residual_and_point_jacobian(&z);
        let cons: Vec<usize> = (n..m).filter(|&r| (0..n).any(|i| jac[(r, i)] != 0.0)).collect();
        let mut dy = DVector::zeros(n);
        if !cons.is_empty() {
            let e = DMatrix::from_fn(cons.len(), n, |r, i| jac[(cons[r], i)]);
            let rhs = DVector::from_iterator(cons.len(), cons.iter().map(|&r| -f[r]));
            dy = lstsq(&e, &rhs);
        }
        Vector::from((0..n).map(|i| self.x[i] + dy[i]).collect::<Vec<_>>())
    }

    fn start_without_multipliers(&self, y: &Vector) -> DVector<f64> {
        let n = self.n;
        let mut z = DVector::zeros(self.unknowns());
        let lead = if self.dual_mode() { lp_duality((y - self.x).as_slice(), self.p) } else { y.clone() };
        for i in 0..n {
            z[i] = lead[i];
        }
        let mut col = n;
        for chosen in &self.set.pieces {
            for _ in chosen {
                z[col] = 1.0 / chosen.len() as f64;
                col += 1;
            }
        }
        z
    }

    /// Start at `y` with least-squares multipliers.
    fn start_at(&self, y: &Vector) -> DVector<f64> {
        let n = self.n;
        let m = self.unknowns();
        let mut z = self.start_without_multipliers(y);
        if m > n {
            let (f, jac) = self.residual_and_jacobian(&z);
            let k = jac.columns(n, m - n).into_owned();
            let dm = lstsq(&k, &(-&f));
            for c in 0..m - n {
                z[n + c] += dm[c];
            }
        }
        z
    }

    /// Best of the projected start and, for `p ≠ 2`, a start at the
    /// Euclidean solution of the same system.
    fn solve(&self) -> DVector<f64> {
        let proj = self.projected_start();
        let mut best = self.refine(self.start_at(&proj));
        if self.p != 2.0 {
            let euclid = System { p: 2.0, ..*self };
            let ye = euclid.point(&euclid.refine(euclid.start_at(&proj)));
            if ye.iter().all(|c| c.is_finite()) {
                let warm = self.refine(self.start_at(&ye));
                if self.residual_and_jacobian(&warm).0.norm() < self.residual_and_jacobian(&best).0.norm() {
                    best = warm;
                }
            }
        }
        best
    }

    /// Levenberg–Marquardt on `F(z) = 0`.
    fn refine(&self, start: DVector<f64>) -> DVector<f64> {
        let mut z = start;
        let (f0, j0) = self.residual_and_jacobian(&z);
        let w = DVector::from_iterator(f0.len(), j0.row_iter().map(|r| 1.0 / r.norm().max(1.0)));
        let scaled = |z: &DVector<f64>| {
            let (f, j) = self.residual_and_jacobian(z);
            (f.component_mul(&w), DMatrix::from_diagonal(&w) * j)
        };
        let (mut f, mut jac) = scaled(&z);
        let mut fnorm = f.norm();
        let m = z.len();
        let mut mu = 1e-12 * (1.0 + jac.norm_squared());
        for _ in 0..LM_ITERS {
            if fnorm <= 4.0 * f64::EPSILON * (1.0 + z.rows(0, self.n).amax()) {
                break;
            }
            let mut aug = DMatrix::zeros(2 * m, m);
            aug.view_mut((0, 0), (m, m)).copy_from(&jac);
            let mut rhs = DVector::zeros(2 * m);
            rhs.rows_mut(0, m).copy_from(&(-&f));
            let mut accepted = false;
            for _ in 0..40 {
                for i in 0..m {
                    aug[(m + i, i)] = mu.sqrt();
                }
                let step = lstsq(&aug, &rhs);
                let trial = &z + &step;
                let (ft, jt) = scaled(&trial);
                let tnorm = ft.norm();
                if tnorm < fnorm {
                    z = trial;
                    f = ft;
                    jac = jt;
                    fnorm = tnorm;
                    mu = (mu / 4.0).max(1e-300);
                    accepted = true;
                    break;
                }
                mu *= 8.0;
            }
            if !accepted {
                break;
            }
        }
        z
    }

    fn admissible(&self, z: &DVector<f64>) -> bool {
        let n = self.n;
        let y = self.point(z);
        if z.iter().any(|c| !c.is_finite()) {
            return false;
        }
        let step = (&y - self.x).max_abs();
        let ymax = y.max_abs();
        let slack = |scale: f64, offset: f64| {
            PRIMAL_ABS_TOL * (1.0 + offset.abs() + scale * ymax) + PRIMAL_REL_TOL * scale * step
        };
        let mut col = n;
        for (part, chosen) in self.set.pieces.iter().enumerate() {
            let pieces = &self.flat.polys[part];
            let fy = pieces.iter().map(|p| p.eval(&y)).fold(f64::NEG_INFINITY, f64::max);
            let scale = pieces.iter().map(|p| p.slope.iter().map(|c| c.abs()).sum::<f64>()).fold(0.0, f64::max);
            for &j in chosen {
                if z[col] < -FEAS_TOL || fy - pieces[j].eval(&y) > slack(2.0 * scale, fy) {
                    return false;
                }
                col += 1;
            }
        }
        for _ in &self.set.rows {
            if z[col] < -FEAS_TOL {
                return false;
            }
            col += 1;
        }
        self.flat.rows.iter().all(|h| {
            let scale = h.normal.iter().map(|c| c.abs()).sum::<f64>();
            h.normal.dot(&y) <= h.offset + slack(scale, h.offset)
        })
    }
}

impl MonotoneOperator {
    /// Solves `0 ∈ λ⁻¹J(x_λ - x) + A x_λ` exactly in `space`.
    pub fn resolvent_solve(&self, x: &Vector, lambda: f64, space: &NormedSpace) -> Result<ResolventSolution> {
        check_dim(self.dim(), x.dim())?;
        check_dim(self.dim(), space.dim())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        let n = self.dim();
        let flat = Flat::new(self);
        let sets = enumerate(&flat, n);
        let mut best = f64::INFINITY;
        for (k, set) in sets.iter().enumerate() {
            let sys = System { flat: &flat, set, x, inv_lambda: 1.0 / lambda, p: space.p(), n };
            let z = sys.solve();
            if !sys.admissible(&z) {
                continue;
            }
            let y = sys.point(&z);
            let xi = if sys.dual_mode() {
                Vector::from(z.rows(0, n).iter().cloned().collect::<Vec<_>>())
            } else {
                space.duality_map(&(&y - x))?
            };
            let residual = self.residual_at(&y, &xi.scale(1.0 / lambda), space)?;
            if residual <= RESOLVENT_TOL {
                let zstar = -&xi;
                return Ok(ResolventSolution { x_lambda: y, zstar, residual, candidates: k + 1 });
            }
            best = best.min(residual);
        }
        Err(Error::SolverFail { residual: best, iterations: sets.len() })
    }

    /// `min_{a ∈ Ay} ‖λ⁻¹J(y - x) + a‖_q`, or `+∞` for `y ∉ D(A)`.
    pub fn inclusion_residual(&self, x: &Vector, y: &Vector, lambda: f64, space: &NormedSpace) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        let g = space.duality_map(&(y - x))?.scale(1.0 / lambda);
        self.residual_at(y, &g, space)
    }

    /// `min_{a ∈ Ay} ‖g + a‖_q`.
    fn residual_at(&self, y: &Vector, g: &Vector, space: &NormedSpace) -> Result<f64> {
        let value = self.evaluate(y)?;
        if value.is_empty() {
            return Ok(f64::INFINITY);
        }
        Ok(value.translate(g).min_norm_point(space)?.1)
    }
}
