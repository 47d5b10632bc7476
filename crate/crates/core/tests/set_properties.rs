use maxmono::convex_sets::{direction_grid, set_distance_report};
use maxmono::{convex_hull, ConvexSet, NormedSpace, Polytope, Vector};
use proptest::prelude::*;

fn points(n: usize) -> impl Strategy<Value = Vec<Vector>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n).prop_map(Vector::from), 1..7)
}

fn direction(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-1.0f64..1.0, n)
        .prop_filter("nonzero", |v| v.iter().any(|c| c.abs() > 1e-3))
        .prop_map(Vector::from)
}

fn set_with_cone(n: usize) -> impl Strategy<Value = ConvexSet> {
    (points(n), prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n).prop_map(Vector::from), 0..3))
        .prop_map(move |(v, g)| ConvexSet::new(n, v, g).unwrap())
}

proptest! {
    #[test]
    fn hull_support_is_max_over_points(pts in points(2), v in direction(2)) {
        let hull = convex_hull(&pts).unwrap();
        let brute = pts.iter().map(|p| p.dot(&v)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((hull.support_function(&v) - brute).abs() <= 1e-9);
    }

    #[test]
    fn face_is_inside_and_attains_the_support(set in set_with_cone(2), v in direction(2)) {
        let sigma = set.support_function(&v);
        prop_assume!(sigma.is_finite());
        let face = set.face(&v).unwrap();
        prop_assert!((face.support_function(&v) - sigma).abs() <= 1e-8);
        for p in face.vertices() {
            prop_assert!(set.contains(p, 1e-8).unwrap());
        }
    }

    #[test]
    fn minkowski_support_is_additive(a in set_with_cone(2), b in set_with_cone(2), v in direction(2)) {
        let sum = a.minkowski_sum(&b).unwrap();
        let (sa, sb, ss) = (a.support_function(&v), b.support_function(&v), sum.support_function(&v));
        if sa.is_finite() && sb.is_finite() {
            prop_assert!((ss - (sa + sb)).abs() <= 1e-10 * (1.0 + sa.abs() + sb.abs()));
        } else {
            prop_assert_eq!(ss, f64::INFINITY);
        }
    }

    #[test]
    fn min_norm_point_is_optimal_and_order_free(pts in points(3), q in prop::sample::select(vec![1.5, 2.0, 3.0])) {
        let space = NormedSpace::new(3, q / (q - 1.0)).unwrap();
        let hull = convex_hull(&pts).unwrap();
        let (x, value) = hull.min_norm_point(&space).unwrap();
        prop_assert!(hull.contains(&x, 1e-9).unwrap());
        for v in hull.vertices() {
            prop_assert!(value <= space.dual_norm(v).unwrap() + 1e-12);
        }
        let mut rev = pts.clone();
        rev.reverse();
        let (y, _) = convex_hull(&rev).unwrap().min_norm_point(&space).unwrap();
        prop_assert!(x.dist2(&y) <= 1e-8);
    }

    #[test]
    fn normal_cone_generators_satisfy_the_definition(w in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], 3)) {
        let d = Polytope::new(2, vec![
            maxmono::Halfspace::new(Vector::from([1.0, 1.0]), 1.0),
            maxmono::Halfspace::new(Vector::from([-1.0, 0.0]), 0.0),
            maxmono::Halfspace::new(Vector::from([0.0, -1.0]), 0.0),
        ]).unwrap();
        let total: f64 = w.iter().sum();
        prop_assume!(total > 1e-3);
        let x = Vector::from([w[1] / total, w[2] / total]);
        let nc = d.normal_cone(&x).unwrap();
        for g in nc.cone_generators() {
            for y in d.vertices_in_box(10.0) {
                prop_assert!(g.dot(&(&y - &x)) <= 1e-8);
            }
        }
    }

    #[test]
    fn set_distance_is_symmetric_and_zero_on_equal_sets(a in set_with_cone(2), b in set_with_cone(2)) {
        let grid = direction_grid(&[&a, &b], 2);
        let ab = set_distance_report(&a, &b, &grid).unwrap();
        let ba = set_distance_report(&b, &a, &grid).unwrap();
        prop_assert_eq!(ab.max_gap, ba.max_gap);
        prop_assert_eq!(set_distance_report(&a, &a, &grid).unwrap().max_gap, 0.0);
    }
}
