//! Estimating `s-Limsup_{y→x, y≠x} Ay`.
//!
//! Sampled mode follows rays `y = x + r d` through a halving radius
//! schedule and extrapolates each chain of values to `r = 0`. Exact mode
//! (`n ≤ 3`) walks the extreme rays of the local hyperplane arrangement and
//! reads off the limiting value set along each one.

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::convex_sets::{ConvexSet, GEOM_TOL};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{lp_norm, NormedSpace};
use crate::linalg::{null_line, null_space};
use crate::operators::MonotoneOperator;
use crate::sampling;
use crate::vector::Vector;

/// Two limits closer than this (in the dual norm) are the same cloud point.
pub const CLUSTER_TOL: f64 = 1e-6;

const MAX_FACE_FAMILIES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimsupConfig {
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub cluster_tol: f64,
    pub seed: u64,
    pub exact: bool,
}

impl Default for LimsupConfig {
    fn default() -> Self {
        LimsupConfig {
            radii: (3..=12).map(|k| 0.5f64.powi(k)).collect(),
            samples_per_radius: 64,
            cluster_tol: CLUSTER_TOL,
            seed: 0,
            exact: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub y: Vector,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudMode {
    Sampled,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimsupCloud {
    pub points: Vec<Vector>,
    /// Sample points `y ≠ x` approaching `x` whose values approach each point.
    pub provenance: Vec<Vec<Provenance>>,
    /// Dual-norm error estimate per point; zero when the values recur exactly.
    pub uncertainty: Vec<f64>,
    /// Unit recession directions recurring along the rays.
    pub ray_tags: Vec<Vector>,
    pub radii_schedule: Vec<f64>,
    pub mode: CloudMode,
    pub rays_used: usize,
    /// Number of value chains that did not settle and were discarded.
    pub unsettled_chains: usize,
    /// Only rays inside faces of the domain were feasible.
    pub face_fallback: bool,
    /// Per radius: largest distance between a chain value and its limit.
    pub level_deviation: Vec<(f64, f64)>,
}

impl LimsupCloud {
    pub fn is_degenerate(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_uncertainty(&self) -> f64 {
        self.uncertainty.iter().cloned().fold(0.0, f64::max)
    }

    /// `ℓ^q` distance from `xstar` to the nearest cloud point.
    pub fn distance(&self, xstar: &Vector, q: f64) -> f64 {
        self.points
            .iter()
            .map(|p| lp_norm((p - xstar).as_slice(), q))
            .fold(f64::INFINITY, f64::min)
    }

    /// `co(points) + cone(extra ∪ ray_tags)`.
    pub fn hull_with_cone(&self, dim: usize, extra: &[Vector]) -> Result<ConvexSet> {
        if self.points.is_empty() {
            return Ok(ConvexSet::empty(dim));
        }
        let cone = extra.iter().chain(&self.ray_tags).cloned().collect();
        ConvexSet::new(dim, self.points.clone(), cone)
    }
}

/// Estimates the strong upper limit of `Ay` as `y → x`, `y ≠ x`.
pub fn s_limsup_estimate(
    op: &MonotoneOperator,
    x: &Vector,
    space: &NormedSpace,
    config: &LimsupConfig,
) -> Result<LimsupCloud> {
    check_dim(op.dim(), x.dim())?;
    check_dim(op.dim(), space.dim())?;
    if !op.in_domain(x) {
        return Err(Error::InvalidInput("limsup point must lie in the closed domain".into()));
    }
    if config.radii.len() < 3 || config.radii.windows(2).any(|w| w[1] >= w[0]) || config.radii[0] <= 0.0 {
        return Err(Error::InvalidInput("radii must be a strictly decreasing schedule of length ≥ 3".into()));
    }
    if config.exact {
        exact(op, x, space, config)
    } else {
        sampled(op, x, space, config)
    }
}

fn unit_tags(set: &ConvexSet) -> Vec<Vector> {
    set.cone_generators().iter().map(|g| g.scale(1.0 / g.norm2())).collect()
}

fn push_unique(into: &mut Vec<Vector>, v: Vector, tol: f64) {
    if !into.iter().any(|w| w.dist2(&v) <= tol) {
        into.push(v);
    }
}

fn sampled(op: &MonotoneOperator, x: &Vector, space: &NormedSpace, config: &LimsupConfig) -> Result<LimsupCloud> {
    let n = op.dim();
    let p = space.p();
    let q = space.q();
    let ctol = config.cluster_tol;
    let radii = &config.radii;
    let levels = radii.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Full-dimensional rays, then rays confined to each face of the domain through x.
    let mut families: Vec<Vec<Vector>> = vec![(0..config.samples_per_radius)
        .map(|_| sampling::unit_sphere(&mut rng, n, p))
        .collect()];
    let rows = op.domain().rows();
    let active = op.domain().active_rows(x, GEOM_TOL);
    let per_face = (config.samples_per_radius / 4).max(8);
    'faces: for k in 1..=active.len() {
        for subset in active.iter().combinations(k) {
            if families.len() > MAX_FACE_FAMILIES {
                break 'faces;
            }
            let normals: Vec<&Vector> = subset.iter().map(|&&i| &rows[i].normal).collect();
            let basis = null_space(&normals, n);
            if basis.is_empty() {
                continue;
            }
            let fam = (0..per_face)
                .map(|_| {
                    let mut d = Vector::zeros(n);
                    for b in &basis {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        d = d.axpy(g, b);
                    }
                    let s = lp_norm(d.as_slice(), p);
                    d.scale(1.0 / s)
                })
                .collect();
            families.push(fam);
        }
    }

    let probe = radii[levels - 3];
    let mut limits: Vec<(Vector, f64, Vec<Provenance>)> = Vec::new();
    let mut tags: Vec<Vector> = Vec::new();
    let mut deviation = vec![0.0_f64; levels];
    let mut rays_used = 0;
    let mut unsettled = 0;
    let mut full_rays = 0;
    for (fi, family) in families.iter().enumerate() {
        for d in family {
            if !op.domain().contains(&x.axpy(probe, d), 1e-12) {
                continue;
            }
            let first = (0..levels)
                .find(|&k| op.domain().contains(&x.axpy(radii[k], d), 1e-12))
                .unwrap_or(levels - 3);
            let ys: Vec<Vector> = (first..levels).map(|k| x.axpy(radii[k], d)).collect();
            let values = ys.iter().map(|y| op.evaluate(y)).collect::<Result<Vec<_>>>()?;
            if values.iter().any(ConvexSet::is_empty) {
                continue;
            }
            rays_used += 1;
            if fi == 0 {
                full_rays += 1;
            }
            let m = values.len();

            for v_last in values[m - 1].vertices() {
                // Chain backwards through nearest neighbours.
                let mut chain = vec![v_last.clone()];
                for k in (0..m - 1).rev() {
                    let prev = chain.last().unwrap();
                    let next = values[k]
                        .vertices()
                        .iter()
                        .min_by(|a, b| lp_norm((*a - prev).as_slice(), q).total_cmp(&lp_norm((*b - prev).as_slice(), q)))
                        .unwrap()
                        .clone();
                    chain.push(next);
                }
                let d1 = lp_norm((&chain[0] - &chain[1]).as_slice(), q);
                let d2 = lp_norm((&chain[1] - &chain[2]).as_slice(), q);
                let (limit, unc) = if d1 <= ctol {
                    (chain[0].clone(), d1)
                } else if d1 <= 0.75 * d2 {
                    let windows: Vec<Vector> =
                        (0..chain.len().saturating_sub(2).min(3)).map(|j| extrapolate(&chain[j], &chain[j + 1], &chain[j + 2])).collect();
                    let r0 = windows[0].clone();
                    let unc = match windows.as_slice() {
                        [a, b, c] => {
                            let d0 = lp_norm((a - b).as_slice(), q);
                            let d1 = lp_norm((b - c).as_slice(), q);
                            let rho = if d1 > 0.0 { (d0 / d1).min(0.9) } else { 0.0 };
                            d0 * (rho / (1.0 - rho)).max(1.0)
                        }
                        [a, b] => lp_norm((a - b).as_slice(), q),
                        _ => d1,
                    };
                    (r0, unc)
                } else {
                    unsettled += 1;
                    continue;
                };
                for (j, c) in chain.iter().enumerate() {
                    let k = first + (m - 1 - j);
                    deviation[k] = deviation[k].max(lp_norm((c - &limit).as_slice(), q));
                }
                let prov = (0..m)
                    .map(|j| Provenance { y: ys[j].clone(), radius: radii[first + j] })
                    .collect();
                limits.push((limit, unc, prov));
            }

            let last = unit_tags(&values[m - 1]);
            let before = unit_tags(&values[m - 2]);
            let earlier = unit_tags(&values[m - 3]);
            for g in last {
                let recurs = |set: &[Vector]| set.iter().any(|h| h.dist2(&g) <= ctol);
                if recurs(&before) && recurs(&earlier) {
                    push_unique(&mut tags, g, ctol);
                }
            }
        }
    }

    // Cluster the limits in a fixed order; centers are member means, and
    // limits indistinguishable within their uncertainty merge.
    let mut clusters: Vec<(Vec<Vector>, f64, Vec<Provenance>)> = Vec::new();
    for (limit, unc, prov) in limits {
        let hit = clusters.iter_mut().find(|(members, u, _)| {
            let c = mean(members);
            lp_norm((&c - &limit).as_slice(), q) <= ctol + u.max(unc)
        });
        match hit {
            Some((members, u, _)) => {
                members.push(limit);
                *u = u.max(unc);
            }
            None => clusters.push((vec![limit], unc, prov)),
        }
    }
    let effective = |members: &[Vector], unc: f64| {
        let c = mean(members);
        let spread = members.iter().map(|m| lp_norm((m - &c).as_slice(), q)).fold(0.0, f64::max);
        (c, if spread > ctol { unc + spread } else { unc })
    };
    while let Some((i, j)) = (0..clusters.len()).tuple_combinations().find(|&(i, j)| {
        let (ca, ua) = effective(&clusters[i].0, clusters[i].1);
        let (cb, ub) = effective(&clusters[j].0, clusters[j].1);
        lp_norm((&ca - &cb).as_slice(), q) <= ctol + ua.max(ub)
    }) {
        let (members, u, _) = clusters.remove(j);
        clusters[i].0.extend(members);
        clusters[i].1 = clusters[i].1.max(u);
    }
    let mut points = Vec::new();
    let mut provenance = Vec::new();
    let mut uncertainty = Vec::new();
    for (members, unc, prov) in clusters {
        let (c, u) = effective(&members, unc);
        uncertainty.push(u);
        points.push(c);
        provenance.push(prov);
    }
    Ok(LimsupCloud {
        points,
        provenance,
        uncertainty,
        ray_tags: tags,
        radii_schedule: radii.clone(),
        mode: CloudMode::Sampled,
        rays_used,
        unsettled_chains: unsettled,
        face_fallback: full_rays == 0 && rays_used > 0,
        level_deviation: radii.iter().cloned().zip(deviation).collect(),
    })
}

/// Per-coordinate geometric extrapolation of `c2, c1, c0` (finest first
/// is `c0`); ratio `½` gives `2c0 - c1`.
fn extrapolate(c0: &Vector, c1: &Vector, c2: &Vector) -> Vector {
    let coords = (0..c0.dim())
        .map(|i| {
            let d1 = c0[i] - c1[i];
            let d2 = c1[i] - c2[i];
            if d1 == 0.0 {
                return c0[i];
            }
            let rho = d1 / d2;
            if rho.is_finite() && rho > 0.0 && rho <= 0.9 {
                c0[i] + d1 * rho / (1.0 - rho)
            } else {
                c0[i] + d1
            }
        })
        .collect::<Vec<f64>>();
    Vector::from(coords)
}

fn mean(vs: &[Vector]) -> Vector {
    let mut acc = Vector::zeros(vs[0].dim());
    for v in vs {
        acc = &acc + v;
    }
    acc.scale(1.0 / vs.len() as f64)
}

/// Extreme rays of the local arrangement cut by the coordinate hyperplanes,
/// restricted to the tangent cone of the domain.
pub(crate) fn arrangement_rays(op: &MonotoneOperator, x: &Vector) -> Vec<Vector> {
    let n = op.dim();
    let mut normals: Vec<Vector> = Vec::new();
    for h in op.arrangement_normals(x).into_iter().chain((0..n).map(|i| Vector::basis(n, i))) {
        let u = h.scale(1.0 / h.norm2());
        if !normals.iter().any(|w| w.dist2(&u) < 1e-12 || w.dist2(&-&u) < 1e-12) {
            normals.push(u);
        }
    }
    let mut rays: Vec<Vector> = Vec::new();
    if n == 1 {
        rays = vec![Vector::from([1.0]), Vector::from([-1.0])];
    } else {
        for subset in (0..normals.len()).combinations(n - 1) {
            let rows: Vec<&Vector> = subset.iter().map(|&i| &normals[i]).collect();
            if let Some(d) = null_line(&rows, n) {
                push_unique(&mut rays, d.clone(), 1e-12);
                push_unique(&mut rays, -&d, 1e-12);
            }
        }
    }
    let dom_rows = op.domain().rows();
    let active = op.domain().active_rows(x, GEOM_TOL);
    rays.retain(|d| active.iter().all(|&i| dom_rows[i].normal.dot(d) <= GEOM_TOL));
    rays
}

fn exact(op: &MonotoneOperator, x: &Vector, space: &NormedSpace, config: &LimsupConfig) -> Result<LimsupCloud> {
    let n = op.dim();
    if n > 3 {
        return Err(Error::InvalidInput(format!("exact mode needs n ≤ 3, got {n}")));
    }
    let q = space.q();
    let rays = arrangement_rays(op, x);
    let radii = &config.radii;
    let mut points: Vec<Vector> = Vec::new();
    let mut provenance: Vec<Vec<Provenance>> = Vec::new();
    let mut sources: Vec<Vector> = Vec::new();
    let mut tags: Vec<Vector> = Vec::new();
    let mut rays_used = 0;
    for d in &rays {
        let value = op.directional_limit(x, d)?;
        if value.is_empty() {
            continue;
        }
        rays_used += 1;
        for v in value.vertices() {
            if !points.iter().any(|w| w.dist2(v) <= 1e-12) {
                points.push(v.clone());
                sources.push(d.clone());
                provenance.push(radii.iter().map(|&r| Provenance { y: x.axpy(r, d), radius: r }).collect());
            }
        }
        for g in unit_tags(&value) {
            push_unique(&mut tags, g, 1e-12);
        }
    }
    let deviation = radii
        .iter()
        .map(|&r| {
            let worst = points
                .iter()
                .zip(&sources)
                .map(|(pt, d)| op.evaluate(&x.axpy(r, d)).and_then(|s| s.distance(pt, q)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((r, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimsupCloud {
        uncertainty: vec![0.0; points.len()],
        points,
        provenance,
        ray_tags: tags,
        radii_schedule: radii.clone(),
        mode: CloudMode::Exact,
        rays_used,
        unsettled_chains: 0,
        face_fallback: false,
        level_deviation: deviation,
    })
}
