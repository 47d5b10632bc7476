//! The six canonical operators used throughout the tests, fixtures and book.

use crate::convex_sets::Polytope;
use crate::operators::{AffinePiece, MonotoneOperator};
use crate::vector::Vector;

/// E1: `∂|·|` on `R`.
pub fn e1_abs() -> MonotoneOperator {
    scaled_abs(1.0)
}

/// `∂(c|·|)` on `R`.
pub fn scaled_abs(c: f64) -> MonotoneOperator {
    MonotoneOperator::subdiff_poly(vec![AffinePiece::new([c], 0.0), AffinePiece::new([-c], 0.0)])
        .expect("valid pieces")
}

/// E2: `∂ max(2y, 3y)` on `R`.
pub fn e2_max_slopes() -> MonotoneOperator {
    MonotoneOperator::subdiff_poly(vec![AffinePiece::new([2.0], 0.0), AffinePiece::new([3.0], 0.0)])
        .expect("valid pieces")
}

/// E3: `N_{[0,1]²}`.
pub fn e3_box_normal_cone() -> MonotoneOperator {
    MonotoneOperator::normal_cone(Polytope::boxed(&[0.0, 0.0], &[1.0, 1.0]).expect("valid box"))
        .expect("nonempty box")
}

/// E4: rotation of the plane by a quarter turn.
pub fn e4_rotation() -> MonotoneOperator {
    MonotoneOperator::linear(vec![vec![0.0, -1.0], vec![1.0, 0.0]], Vector::zeros(2)).expect("skew matrix")
}

/// E5: `y ↦ y + 1` on `R`.
pub fn e5_affine() -> MonotoneOperator {
    MonotoneOperator::linear(vec![vec![1.0]], Vector::from([1.0])).expect("identity")
}

/// E6: `∂ max(y₁, -y₁, y₂) + N_{[-1,1]²}`.
pub fn e6_sum() -> MonotoneOperator {
    let f = MonotoneOperator::subdiff_poly(vec![
        AffinePiece::new([1.0, 0.0], 0.0),
        AffinePiece::new([-1.0, 0.0], 0.0),
        AffinePiece::new([0.0, 1.0], 0.0),
    ])
    .expect("valid pieces");
    let nc = MonotoneOperator::normal_cone(Polytope::boxed(&[-1.0, -1.0], &[1.0, 1.0]).expect("valid box"))
        .expect("nonempty box");
    MonotoneOperator::sum(vec![f, nc]).expect("full-domain part")
}

/// All six, labelled `E1`..`E6`.
pub fn canonical() -> Vec<(&'static str, MonotoneOperator)> {
    vec![
        ("E1", e1_abs()),
        ("E2", e2_max_slopes()),
        ("E3", e3_box_normal_cone()),
        ("E4", e4_rotation()),
        ("E5", e5_affine()),
        ("E6", e6_sum()),
    ]
}
