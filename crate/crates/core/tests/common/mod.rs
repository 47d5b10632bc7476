#![allow(dead_code)]

use maxmono::operators::{AffinePiece, OperatorSpec};
use maxmono::{MonotoneOperator, Polytope, Vector};
use proptest::prelude::*;

pub fn pieces() -> impl Strategy<Value = Vec<AffinePiece>> {
    prop::collection::vec(((-2.0f64..2.0, -2.0f64..2.0), -1.0f64..1.0), 1..4)
        .prop_map(|ps| ps.into_iter().map(|((a, b), c)| AffinePiece::new(Vector::from([a, b]), c)).collect())
}

pub fn boxed() -> impl Strategy<Value = Polytope> {
    (-2i32..=0, 1i32..=2, -2i32..=0, 1i32..=2).prop_map(|(a, b, c, d)| {
        Polytope::boxed(&[a as f64 * 0.5, c as f64 * 0.5], &[b as f64 * 0.5, d as f64 * 0.5]).unwrap()
    })
}

pub fn linear() -> impl Strategy<Value = MonotoneOperator> {
    (prop::collection::vec(-1.0f64..1.0, 4), -2.0f64..2.0, prop::collection::vec(-1.0f64..1.0, 2)).prop_map(
        |(b, skew, shift)| {
            let m = vec![
                vec![b[0] * b[0] + b[2] * b[2], b[0] * b[1] + b[2] * b[3] + skew],
                vec![b[0] * b[1] + b[2] * b[3] - skew, b[1] * b[1] + b[3] * b[3]],
            ];
            MonotoneOperator::linear(m, Vector::from(shift)).unwrap()
        },
    )
}

pub fn polyhedral_operator() -> impl Strategy<Value = MonotoneOperator> {
    prop_oneof![
        pieces().prop_map(|p| MonotoneOperator::subdiff_poly(p).unwrap()),
        boxed().prop_map(|d| MonotoneOperator::normal_cone(d).unwrap()),
        linear(),
        (pieces(), boxed()).prop_map(|(p, d)| MonotoneOperator::subdiff_poly(p).unwrap().restricted_to(d).unwrap()),
        (pieces(), boxed()).prop_map(|(p, d)| MonotoneOperator::sum(vec![
            MonotoneOperator::subdiff_poly(p).unwrap(),
            MonotoneOperator::normal_cone(d).unwrap(),
        ])
        .unwrap()),
    ]
}

pub fn operator() -> impl Strategy<Value = MonotoneOperator> {
    prop_oneof![
        4 => polyhedral_operator(),
        1 => prop::sample::select(vec![1.5, 3.0]).prop_map(|p| MonotoneOperator::duality_map(2, p).unwrap()),
        1 => (linear(), prop::sample::select(vec![1.5, 3.0]))
            .prop_map(|(l, p)| MonotoneOperator::sum(vec![l, MonotoneOperator::duality_map(2, p).unwrap()]).unwrap()),
    ]
}

pub fn exponent() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.5, 2.0, 3.0])
}

/// Euclidean distance from `x` to the nearest kink or domain face that is
/// not active at `x`.
pub fn inactive_structure_distance(op: &MonotoneOperator, x: &Vector) -> f64 {
    spec_distance(&OperatorSpec::from(op.clone()), x)
}

fn spec_distance(spec: &OperatorSpec, x: &Vector) -> f64 {
    let rows = |d: &Option<Polytope>| d.as_ref().map_or(f64::INFINITY, |d| polytope_distance(d, x));
    match spec {
        OperatorSpec::SubdiffPoly { pieces, domain } => {
            let vals: Vec<f64> = pieces.iter().map(|p| p.eval(x)).collect();
            let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut best = rows(domain);
            for (j, pj) in pieces.iter().enumerate() {
                if top - vals[j] <= 1e-9 {
                    continue;
                }
                for (i, pi) in pieces.iter().enumerate() {
                    if top - vals[i] <= 1e-9 {
                        best = best.min((top - vals[j]) / (&pj.slope - &pi.slope).norm2());
                    }
                }
            }
            best
        }
        OperatorSpec::NormalCone { domain } => polytope_distance(domain, x),
        OperatorSpec::Linear { domain, .. } | OperatorSpec::DualityMap { domain, .. } => rows(domain),
        OperatorSpec::Sum { parts, domain } => parts.iter().map(|p| spec_distance(p, x)).fold(rows(domain), f64::min),
    }
}

fn polytope_distance(d: &Polytope, x: &Vector) -> f64 {
    d.rows()
        .iter()
        .map(|h| (h.offset - h.normal.dot(x), h.normal.norm2()))
        .filter(|(slack, _)| *slack > 1e-9)
        .map(|(slack, norm)| slack / norm)
        .fold(f64::INFINITY, f64::min)
}
