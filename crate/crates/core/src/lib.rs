pub mod catalog;
pub mod convex_sets;
pub mod error;
pub mod geometry;
pub mod limits;
mod linalg;
pub mod operators;
pub mod sampling;
mod vector;

pub use convex_sets::{convex_hull, ConvexSet, Halfspace, Polytope};
pub use error::{Error, Result};
pub use geometry::NormedSpace;
pub use operators::{MonotoneOperator, OperatorSpec};
pub use vector::Vector;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/convex_sets.md")]
    mod convex_sets {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
}
