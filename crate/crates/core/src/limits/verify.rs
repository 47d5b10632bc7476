//! Theorem-instance verifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cloud::{s_limsup_estimate, LimsupCloud, LimsupConfig};
use super::{ExtReal, Status, TableRow, TheoremId, VerificationReport};
use crate::convex_sets::{direction_grid, facet_normals, set_distance_report, uniform_directions, ConvexSet, GEOM_TOL};
use crate::error::{check_dim, Error, Result};
use crate::geometry::NormedSpace;
use crate::operators::{
    default_lambda_schedule, sample_element, MonotoneOperator, BOUND_SLACK, TRAJECTORY_TOL,
};
use crate::sampling;
use crate::vector::Vector;

/// Schedules and tolerances shared by the verifiers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub limsup: LimsupConfig,
    pub face_tol: f64,
    pub rep_tol: f64,
    pub sf_tol: f64,
    /// Support-formula tolerance for operators with continuous parts, whose
    /// liminf converges only at rate `t`.
    pub sf_tol_continuous: f64,
    /// One-sided `σ_RHS ≤ σ_LHS` slack in the representation check.
    pub inclusion_tol: f64,
    pub lower_bound_tol: f64,
    pub membership_tol: f64,
    pub equality_tol: f64,
    pub traj_tol: f64,
    pub bound_slack: f64,
    pub t_schedule: Vec<f64>,
    pub w_budget: usize,
    pub lambda_schedule: Vec<f64>,
    pub equality_samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            limsup: LimsupConfig::default(),
            face_tol: 1e-3,
            rep_tol: 1e-3,
            sf_tol: 1e-3,
            sf_tol_continuous: 1e-3,
            inclusion_tol: 1e-8,
            lower_bound_tol: 1e-9,
            membership_tol: 1e-8,
            equality_tol: 1e-6,
            traj_tol: TRAJECTORY_TOL,
            bound_slack: BOUND_SLACK,
            t_schedule: (4..=16).map(|k| 0.5f64.powi(k)).collect(),
            w_budget: 64,
            lambda_schedule: default_lambda_schedule(),
            equality_samples: 32,
            seed: 0,
        }
    }
}

impl VerifyConfig {
    /// Exact arrangement enumeration with tolerances tightened to `1e-6`.
    pub fn exact() -> Self {
        let mut c = VerifyConfig::default();
        c.limsup.exact = true;
        c.face_tol = 1e-6;
        c.rep_tol = 1e-6;
        c.sf_tol = 1e-6;
        c
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.limsup.seed = seed;
        self
    }

    /// Multiplies every tolerance by `s`.
    pub fn scale_tolerances(mut self, s: f64) -> Self {
        for t in [
            &mut self.face_tol,
            &mut self.rep_tol,
            &mut self.sf_tol,
            &mut self.sf_tol_continuous,
            &mut self.inclusion_tol,
            &mut self.lower_bound_tol,
            &mut self.membership_tol,
            &mut self.equality_tol,
            &mut self.traj_tol,
            &mut self.bound_slack,
        ] {
            *t *= s;
        }
        self
    }
}

fn require_nonzero(v: &Vector) -> Result<()> {
    if v.is_zero() {
        Err(Error::InvalidInput("direction must be nonzero".into()))
    } else {
        Ok(())
    }
}

/// Every vertex of the face `A(x; v)` lies near the limsup cloud, and every
/// recession direction of the face is generated by the cloud's ray tags.
pub fn verify_face_inclusion(
    op: &MonotoneOperator,
    x: &Vector,
    v: &Vector,
    space: &NormedSpace,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_dim(op.dim(), x.dim())?;
    if !op.in_domain(x) {
        return Ok(VerificationReport::new(TheoremId::FaceInclusion, x, Some(v), cfg.face_tol)
            .violation("point outside the domain"));
    }
    let cloud = s_limsup_estimate(op, x, space, &cfg.limsup)?;
    face_inclusion_report(op, x, v, space, &cloud, cfg)
}

/// [`verify_face_inclusion`] against a precomputed cloud.
pub fn face_inclusion_report(
    op: &MonotoneOperator,
    x: &Vector,
    v: &Vector,
    space: &NormedSpace,
    cloud: &LimsupCloud,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_dim(op.dim(), x.dim())?;
    check_dim(op.dim(), v.dim())?;
    require_nonzero(v)?;
    let tol = cfg.face_tol;
    let mut rep = VerificationReport::new(TheoremId::FaceInclusion, x, Some(v), tol);
    let ax = op.evaluate(x)?;
    if ax.is_empty() {
        return Ok(rep.violation("point outside the domain"));
    }
    let sigma = ax.support_function(v);
    rep.value = Some(ExtReal(sigma));
    if sigma == f64::INFINITY {
        return Ok(rep.violation("support value is +inf, the face is undefined"));
    }
    if cloud.is_degenerate() {
        rep.max_support_gap = ExtReal::INF;
        rep.notes.push("no sampled point y ≠ x in the domain near x".into());
        return Ok(rep.finish(Status::DegenerateDomain));
    }
    let face = ax.face(v)?;
    let q = space.q();
    let mut worst = 0.0_f64;
    for (i, f) in face.vertices().iter().enumerate() {
        let d = cloud.distance(f, q);
        worst = worst.max(d);
        rep.convergence_table.push(TableRow { level: i, t_or_radius: 0.0, value: ExtReal(d), gap: ExtReal(d) });
    }
    let tag_cone = ConvexSet::cone(op.dim(), cloud.ray_tags.clone())?;
    for g in face.cone_generators() {
        let u = g.scale(1.0 / g.norm2());
        if !tag_cone.contains(&u, GEOM_TOL)? {
            worst = f64::INFINITY;
            rep.notes.push(format!("face direction {u:?} not generated by the cloud ray tags"));
        }
    }
    rep.max_support_gap = ExtReal(worst);
    rep.notes.push(format!(
        "face has {} vertices and {} directions; cloud has {} points and {} ray tags",
        face.vertices().len(),
        face.cone_generators().len(),
        cloud.points.len(),
        cloud.ray_tags.len()
    ));
    if worst > tol {
        return Ok(rep.finish(Status::Fail));
    }
    if cfg.limsup.exact {
        // Witness (λ_k, w_k) → (0, v), w_k = v + λ_k² d, with values at
        // x + λ_k w_k reaching each face vertex.
        let jv = space.duality_map(v)?;
        let mut ok = true;
        let base = rep.convergence_table.len();
        for f in face.vertices() {
            let expose = exposing_direction(&face, f);
            let mut last = (f64::INFINITY, f64::INFINITY);
            for k in 1..=12 {
                let lambda = 0.5f64.powi(k);
                let mut w = v.axpy(lambda * lambda, &expose);
                if !op.in_domain(&x.axpy(lambda, &w)) {
                    w = v.clone();
                }
                let y = x.axpy(lambda, &w);
                let d = if op.in_domain(&y) { op.evaluate(&y)?.distance(f, q)? } else { f64::INFINITY };
                let jgap = space.dual_norm(&(&space.duality_map(&w)? - &jv))?;
                last = (d, jgap);
                rep.convergence_table.push(TableRow {
                    level: rep.convergence_table.len(),
                    t_or_radius: lambda,
                    value: ExtReal(d),
                    gap: ExtReal(jgap),
                });
            }
            ok &= last.0 <= tol && last.1 <= tol;
        }
        rep.notes.push(format!("rows from {base} on are witness sequences (λ_k, w_k)"));
        if !ok {
            rep.notes.push("witness sequence did not reach every face vertex".into());
            return Ok(rep.finish(Status::Inconclusive));
        }
    }
    Ok(rep.finish(Status::Pass))
}

/// A direction exposing the vertex `f` of a bounded face, or zero.
fn exposing_direction(face: &ConvexSet, f: &Vector) -> Vector {
    let n = face.dim();
    if face.vertices().len() <= 1 {
        return Vector::zeros(n);
    }
    facet_normals(face)
        .into_iter()
        .chain(uniform_directions(n))
        .map(|c| c.scale(1.0 / c.norm2()))
        .find(|c| {
            face.support_function(c).is_finite()
                && face.face(c).map(|s| s.vertices().len() == 1 && s.vertices()[0].dist2(f) <= GEOM_TOL).unwrap_or(false)
        })
        .unwrap_or_else(|| Vector::zeros(n))
}

/// `Ax = co(cloud) + cone(N_D(x) ∪ tags)` compared over a direction grid.
pub fn verify_representation(
    op: &MonotoneOperator,
    x: &Vector,
    space: &NormedSpace,
    grid: Option<&[Vector]>,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_dim(op.dim(), x.dim())?;
    let n = op.dim();
    let tol = cfg.rep_tol;
    let mut rep = VerificationReport::new(TheoremId::Representation, x, None, tol);
    let lhs = op.evaluate(x)?;
    if lhs.is_empty() {
        return Ok(rep.violation("point outside the domain"));
    }
    let cloud = s_limsup_estimate(op, x, space, &cfg.limsup)?;
    let normals = op.domain().normal_cone(x)?;
    let (rhs, degenerate) = if cloud.is_degenerate() {
        let sel = lhs.min_norm_point(space)?.0;
        (ConvexSet::point(sel).with_cone(normals.cone_generators())?, true)
    } else {
        (cloud.hull_with_cone(n, normals.cone_generators())?, false)
    };
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = direction_grid(&[&lhs, &rhs], n);
            &owned
        }
    };
    let d = set_distance_report(&lhs, &rhs, grid)?;
    let inclusion = set_distance_report(&rhs, &lhs, grid)?.max_excess;
    let incl_tol = cfg.inclusion_tol + cloud.max_uncertainty();
    rep.direction_grid_size = grid.len();
    rep.per_direction_gaps = d.gaps.iter().map(|&g| ExtReal(g)).collect();
    rep.max_support_gap = ExtReal(if d.unbounded_mismatch.is_empty() { d.max_finite_gap() } else { f64::INFINITY });
    rep.value = Some(ExtReal(inclusion));
    for (k, &(r, dev)) in cloud.level_deviation.iter().enumerate() {
        rep.convergence_table.push(TableRow { level: k, t_or_radius: r, value: ExtReal(dev), gap: ExtReal(dev) });
    }
    rep.notes.push(format!(
        "cloud: {} points, {} ray tags, {} rays, {} unsettled chains{}",
        cloud.points.len(),
        cloud.ray_tags.len(),
        cloud.rays_used,
        cloud.unsettled_chains,
        if cloud.face_fallback { ", face rays only" } else { "" }
    ));
    if !d.unbounded_mismatch.is_empty() {
        rep.notes.push(format!("unbounded directions differ at {} grid directions", d.unbounded_mismatch.len()));
    }
    if inclusion > incl_tol {
        rep.notes.push(format!("RHS exceeds LHS by {inclusion:e} (slack {incl_tol:e})"));
    }
    let ok = rep.max_support_gap.0 <= tol && inclusion <= incl_tol;
    if degenerate {
        rep.notes.push("empty punctured neighbourhood: compared Ax with A°x + N(x)".into());
        return Ok(rep.finish(if ok { Status::DegenerateDomain } else { Status::Fail }));
    }
    Ok(rep.finish(if ok { Status::Pass } else { Status::Fail }))
}

/// Estimates `liminf ⟨A°(x + tw), w⟩` over `t ↓ 0`, `w → v` and compares it
/// with `σ_{Ax}(v)` (or with `expected` when given).
///
/// Level `k` takes the infimum over `v` and `w_budget` points drawn
/// uniformly from the `ℓ^p` ball of radius `t_k²` around `v`.
pub fn support_formula_estimate(
    op: &MonotoneOperator,
    x: &Vector,
    v: &Vector,
    space: &NormedSpace,
    expected: Option<ExtReal>,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_dim(op.dim(), x.dim())?;
    check_dim(op.dim(), v.dim())?;
    check_dim(op.dim(), space.dim())?;
    require_nonzero(v)?;
    let tol = if op.is_polyhedral() { cfg.sf_tol } else { cfg.sf_tol.max(cfg.sf_tol_continuous) };
    let mut rep = VerificationReport::new(TheoremId::SupportFormula, x, Some(v), tol);
    let ax = op.evaluate(x)?;
    if ax.is_empty() {
        return Ok(rep.violation("point outside the domain"));
    }
    let sigma = ax.support_function(v);
    let target = expected.map(ExtReal::value).unwrap_or(sigma);
    rep.expected = Some(ExtReal(target));
    let mut mismatch = false;
    if expected.is_some() && sigma != target && (!sigma.is_finite() || !target.is_finite() || (sigma - target).abs() > tol) {
        rep.notes.push(format!("expected value {} disagrees with the support value {}", ExtReal(target), ExtReal(sigma)));
        mismatch = true;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut infima = Vec::with_capacity(cfg.t_schedule.len());
    let mut skipped = 0;
    for (k, &t) in cfg.t_schedule.iter().enumerate() {
        let delta = t * t;
        let mut inf = f64::INFINITY;
        for i in 0..=cfg.w_budget {
            let w = if i == 0 { v.clone() } else { v.axpy(delta, &sampling::unit_ball(&mut rng, op.dim(), space.p())) };
            let y = x.axpy(t, &w);
            if op.in_domain(&y) {
                inf = inf.min(op.min_norm_selection(&y, space)?.dot(&w));
            }
        }
        if inf == f64::INFINITY {
            skipped += 1;
        }
        let gap = if inf == target { 0.0 } else { (inf - target).abs() };
        rep.convergence_table.push(TableRow { level: k, t_or_radius: t, value: ExtReal(inf), gap: ExtReal(gap) });
        infima.push(inf);
    }
    if skipped > 0 {
        rep.notes.push(format!("{skipped} of {} levels had every sample outside the domain", infima.len()));
    }
    let last = *infima.last().ok_or_else(|| Error::InvalidInput("empty t schedule".into()))?;
    rep.value = Some(ExtReal(last));

    if target == f64::INFINITY {
        let diverged = last >= 1.0 / tol;
        rep.max_support_gap = ExtReal(if diverged { 0.0 } else { f64::INFINITY });
        let status = if diverged && !mismatch { Status::Pass } else { Status::Fail };
        return Ok(rep.finish(status));
    }
    let finite: Vec<f64> = infima.iter().cloned().filter(|f| f.is_finite()).collect();
    if finite.is_empty() {
        rep.max_support_gap = ExtReal::INF;
        rep.notes.push("all levels skipped".into());
        return Ok(rep.finish(Status::Inconclusive));
    }
    let est = *finite.last().unwrap();
    rep.value = Some(ExtReal(est));
    let err = (est - target).abs();
    rep.max_support_gap = ExtReal(err);
    let tail = &finite[finite.len().saturating_sub(4)..];
    let cauchy = tail.len() == 4 && tail.windows(2).all(|w| (w[1] - w[0]).abs() <= tol / 10.0);
    let status = if err > tol || mismatch {
        Status::Fail
    } else if cauchy {
        Status::Pass
    } else {
        rep.notes.push("per-level infima have not settled".into());
        Status::Inconclusive
    };
    Ok(rep.finish(status))
}

/// Sample-wise `⟨x*, w⟩ ≤ ⟨A°(x + tw), w⟩` for `x* ∈ Ax`.
///
/// With `xstar = None` a fresh element of `Ax` is drawn for each sample.
pub fn lower_bound_check(
    op: &MonotoneOperator,
    x: &Vector,
    v: &Vector,
    xstar: Option<&Vector>,
    space: &NormedSpace,
    samples: usize,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_dim(op.dim(), x.dim())?;
    check_dim(op.dim(), v.dim())?;
    let tol = cfg.lower_bound_tol;
    let mut rep = VerificationReport::new(TheoremId::LowerBound, x, Some(v), tol);
    let ax = op.evaluate(x)?;
    if ax.is_empty() {
        return Ok(rep.violation("point outside the domain"));
    }
    if let Some(xs) = xstar {
        check_dim(op.dim(), xs.dim())?;
        if !ax.contains(xs, cfg.membership_tol)? {
            return Ok(rep.violation("x* is not an element of Ax"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    const BUCKETS: usize = 16;
    let mut bucket_worst = [f64::NEG_INFINITY; BUCKETS];
    let (mut used, mut violations) = (0usize, 0usize);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let e: f64 = rng.random_range(0.0..BUCKETS as f64);
        let t = 0.5f64.powf(e);
        let w = v + &sampling::unit_ball(&mut rng, op.dim(), space.p());
        let y = x.axpy(t, &w);
        let xs = match xstar {
            Some(xs) => xs.clone(),
            None => sample_element(&ax, &mut rng),
        };
        if !op.domain().contains(&y, 0.0) {
            continue;
        }
        let excess = xs.dot(&w) - op.min_norm_selection(&y, space)?.dot(&w);
        used += 1;
        if excess > tol {
            violations += 1;
        }
        worst = worst.max(excess);
        let b = (e as usize).min(BUCKETS - 1);
        bucket_worst[b] = bucket_worst[b].max(excess);
    }
    for (b, &wv) in bucket_worst.iter().enumerate() {
        if wv > f64::NEG_INFINITY {
            rep.convergence_table.push(TableRow {
                level: b,
                t_or_radius: 0.5f64.powi(b as i32),
                value: ExtReal(wv),
                gap: ExtReal(wv.max(0.0)),
            });
        }
    }
    rep.value = Some(ExtReal(worst));
    rep.max_support_gap = ExtReal(worst.max(0.0));
    rep.notes.push(format!("{used} samples in the domain, {violations} violations"));
    let status = if used == 0 {
        rep.max_support_gap = ExtReal::INF;
        Status::Inconclusive
    } else if violations == 0 {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(rep.finish(status))
}

/// If `A°₁x ∈ A₂x` at every sampled `x`, then `A₁x = A₂x` there.
///
/// An empty `points` list is replaced by `cfg.equality_samples` seeded
/// domain samples of `a1`.
pub fn operator_equality_test(
    a1: &MonotoneOperator,
    a2: &MonotoneOperator,
    space: &NormedSpace,
    points: &[Vector],
    grid: Option<&[Vector]>,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_dim(a1.dim(), a2.dim())?;
    check_dim(a1.dim(), space.dim())?;
    let n = a1.dim();
    let tol = cfg.equality_tol;
    let owned_points;
    let points = if points.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        owned_points = (0..cfg.equality_samples)
            .map(|_| a1.sample_domain_point(&mut rng))
            .collect::<Result<Vec<_>>>()?;
        &owned_points[..]
    } else {
        points
    };
    let origin = Vector::zeros(n);
    let mut rep = VerificationReport::new(TheoremId::OperatorEquality, points.first().unwrap_or(&origin), None, tol);
    if !a1.domain().equivalent(a2.domain(), GEOM_TOL) {
        return Ok(rep.violation("domains differ"));
    }
    for x in points {
        check_dim(n, x.dim())?;
        if !a1.in_domain(x) {
            continue;
        }
        let s = a1.min_norm_selection(x, space)?;
        if !a2.evaluate(x)?.contains(&s, cfg.membership_tol)? {
            rep.max_support_gap = ExtReal(a2.evaluate(x)?.distance(&s, 2.0)?);
            return Ok(rep.violation(format!("phase 1: A°₁x = {s:?} is not in A₂x at x = {x:?}")));
        }
    }
    let mut worst = 0.0_f64;
    for (i, x) in points.iter().enumerate() {
        if !a1.in_domain(x) {
            continue;
        }
        let (l, r) = (a1.evaluate(x)?, a2.evaluate(x)?);
        let owned;
        let g = match grid {
            Some(g) => g,
            None => {
                owned = direction_grid(&[&l, &r], n);
                &owned
            }
        };
        let d = set_distance_report(&l, &r, g)?;
        let gap = if d.unbounded_mismatch.is_empty() { d.max_finite_gap() } else { f64::INFINITY };
        worst = worst.max(gap);
        rep.direction_grid_size = rep.direction_grid_size.max(g.len());
        rep.convergence_table.push(TableRow { level: i, t_or_radius: 0.0, value: ExtReal(gap), gap: ExtReal(gap) });
    }
    rep.max_support_gap = ExtReal(worst);
    rep.notes.push(format!("phase 1 held at {} points", points.len()));
    if worst > tol {
        rep.notes.push("phase 2: values differ".into());
        return Ok(rep.finish(Status::Fail));
    }
    Ok(rep.finish(Status::Pass))
}

/// Per-step displacement bound and terminal convergence `λ⁻¹z* → A°x`.
pub fn trajectory_check(
    op: &MonotoneOperator,
    x: &Vector,
    space: &NormedSpace,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    check_dim(op.dim(), x.dim())?;
    let tol = cfg.traj_tol;
    let mut rep = VerificationReport::new(TheoremId::Trajectory, x, None, tol);
    if !op.in_domain(x) {
        return Ok(rep.violation("point outside the domain"));
    }
    let t = op.yosida_trajectory(x, &cfg.lambda_schedule, space)?;
    for (k, r) in t.records.iter().enumerate() {
        let gap = space.dual_norm(&(&r.yosida_value - &t.limit_selection))?;
        rep.convergence_table.push(TableRow {
            level: k,
            t_or_radius: r.lambda,
            value: ExtReal(r.norm_yosida),
            gap: ExtReal(gap),
        });
    }
    rep.value = Some(ExtReal(t.terminal_error));
    rep.expected = Some(ExtReal(t.limit_norm));
    rep.max_support_gap = ExtReal(t.terminal_error);
    let excess = t.max_bound_excess();
    rep.notes.push(format!("max excess over the displacement bound: {}", ExtReal(excess)));
    let bounds = t.bounds_hold(cfg.bound_slack);
    if !bounds {
        rep.notes.push(format!("displacement bound violated (slack {:e})", cfg.bound_slack));
    }
    Ok(rep.finish(if bounds && t.converged(tol) { Status::Pass } else { Status::Fail }))
}
