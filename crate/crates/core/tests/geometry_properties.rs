use maxmono::geometry::lp_norm;
use maxmono::{NormedSpace, Vector};
use proptest::prelude::*;

fn space_and_point() -> impl Strategy<Value = (NormedSpace, Vector)> {
    (1usize..=3, prop::sample::select(vec![1.5, 2.0, 3.0, 4.0]))
        .prop_flat_map(|(n, p)| (Just(NormedSpace::new(n, p).unwrap()), prop::collection::vec(-3.0f64..3.0, n)))
        .prop_map(|(s, x)| (s, Vector::from(x)))
}

proptest! {
    #[test]
    fn duality_round_trip((space, x) in space_and_point()) {
        let j = space.duality_map(&x).unwrap();
        let back = space.dual_duality_map(&j).unwrap();
        for i in 0..x.dim() {
            prop_assert!((back[i] - x[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn duality_map_norm_identities((space, x) in space_and_point()) {
        let j = space.duality_map(&x).unwrap();
        let nx = space.norm(&x).unwrap();
        prop_assert!((space.dual_norm(&j).unwrap() - nx).abs() <= 1e-10 * (1.0 + nx));
        prop_assert!((j.dot(&x) - nx * nx).abs() <= 1e-10 * (1.0 + nx * nx));
        prop_assert!(space.fenchel_gap(&x, &j).unwrap().abs() <= 1e-10 * (1.0 + nx * nx));
    }

    #[test]
    fn symmetry_and_scaling_of_membership(
        (space, x) in space_and_point(),
        eps in 0.0f64..0.5,
        lambda in 0.1f64..4.0,
        hint in prop::collection::vec(-1.0f64..1.0, 3),
        noise in prop::collection::vec(-0.5f64..0.5, 3),
    ) {
        let n = space.dim();
        let hint = Vector::from(hint[..n].to_vec());
        let member = space.eps_subdiff_element(&x, eps, &hint).unwrap();
        let probe = &member + &Vector::from(noise[..n].to_vec());
        for xs in [member, probe] {
            let inside = space.eps_subdiff_contains(&x, &xs, eps).unwrap();
            prop_assert_eq!(space.eps_subdiff_contains(&-&x, &-&xs, eps).unwrap(), inside);
            prop_assert_eq!(
                space.eps_subdiff_contains(&x.scale(lambda), &xs.scale(lambda), lambda * lambda * eps).unwrap(),
                inside
            );
        }
    }

    #[test]
    fn generated_elements_satisfy_the_bounds(
        (space, x) in space_and_point(),
        eps in 0.0f64..1.0,
        hint in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let n = space.dim();
        let xs = space.eps_subdiff_element(&x, eps, &Vector::from(hint[..n].to_vec())).unwrap();
        prop_assert!(space.eps_subdiff_contains(&x, &xs, eps).unwrap());
        let nx = space.norm(&x).unwrap();
        let nxs = space.dual_norm(&xs).unwrap();
        prop_assert!((nx - nxs).abs() <= (2.0 * eps).sqrt() + 1e-10);
        prop_assert!((xs.dot(&x) - nx * nx).abs() <= eps.sqrt() * (1.0 + 0.5 * nx * nx) + 1e-10);
    }

    #[test]
    fn norm_is_absolutely_homogeneous((space, x) in space_and_point(), c in -5.0f64..5.0) {
        let lhs = lp_norm(x.scale(c).as_slice(), space.p());
        let rhs = c.abs() * lp_norm(x.as_slice(), space.p());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }
}

#[test]
fn strict_convexity_probe_is_positive() {
    for p in [1.5, 2.0, 3.0, 4.0] {
        for n in 1..=3 {
            let probe = NormedSpace::new(n, p).unwrap().strict_convexity_probe(200, 9).unwrap();
            assert!(probe.all_positive(), "n={n} p={p}: {probe:?}");
        }
    }
}
