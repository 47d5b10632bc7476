mod common;

use common::{exponent, operator, polyhedral_operator};
use maxmono::convex_sets::{direction_grid, set_distance_report};
use maxmono::operators::{default_lambda_schedule, sample_element, BOUND_SLACK, TRAJECTORY_TOL};
use maxmono::{NormedSpace, Vector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_pairs_are_monotone(op in operator(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..8 {
            let x = op.sample_domain_point(&mut rng).unwrap();
            let y = op.sample_domain_point(&mut rng).unwrap();
            let xs = sample_element(&op.evaluate(&x).unwrap(), &mut rng);
            let ys = sample_element(&op.evaluate(&y).unwrap(), &mut rng);
            let inner = (&xs - &ys).dot(&(&x - &y));
            prop_assert!(inner >= -1e-9, "inner product {inner} at x={x:?} y={y:?}");
        }
    }

    #[test]
    fn values_absorb_the_normal_cone_of_the_domain(op in operator(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = op.sample_domain_point(&mut rng).unwrap();
        let ax = op.evaluate(&x).unwrap();
        let widened = ax.minkowski_sum(&op.domain().normal_cone(&x).unwrap()).unwrap();
        let grid = direction_grid(&[&ax, &widened], 2);
        let rep = set_distance_report(&ax, &widened, &grid).unwrap();
        prop_assert!(rep.max_gap <= 1e-9, "gap {}", rep.max_gap);
    }

    #[test]
    fn minimal_norm_selection_is_a_value(op in operator(), p in exponent(), seed in any::<u64>()) {
        let space = NormedSpace::new(2, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = op.sample_domain_point(&mut rng).unwrap();
        let ax = op.evaluate(&x).unwrap();
        let sel = op.min_norm_selection(&x, &space).unwrap();
        prop_assert!(ax.contains(&sel, 1e-8).unwrap());
        let other = sample_element(&ax, &mut rng);
        prop_assert!(space.dual_norm(&sel).unwrap() <= space.dual_norm(&other).unwrap() + 1e-9);
    }

    #[test]
    fn resolvent_satisfies_its_inclusion(
        op in operator(),
        p in exponent(),
        lambda in prop::sample::select(vec![1.0, 0.25, 1e-3, 1e-6]),
        x in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        let space = NormedSpace::new(2, p).unwrap();
        let x = Vector::from(x);
        let sol = op.resolvent_solve(&x, lambda, &space).unwrap();
        prop_assert!(sol.residual <= 1e-8);
        prop_assert!(op.in_domain(&sol.x_lambda));
        let value = sol.zstar.scale(1.0 / lambda);
        let tol = 1e-7 * (1.0 + value.max_abs());
        prop_assert!(op.evaluate(&sol.x_lambda).unwrap().contains(&value, tol).unwrap());
        let u = &x - &sol.x_lambda;
        let gap = space.fenchel_gap(&u, &sol.zstar).unwrap();
        prop_assert!(gap <= 1e-12 * (1.0 + space.norm(&u).unwrap().powi(2)), "gap {gap}");
    }

    #[test]
    fn yosida_values_approach_the_minimal_norm_selection(
        op in polyhedral_operator(),
        p in exponent(),
        seed in any::<u64>(),
    ) {
        let space = NormedSpace::new(2, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = op.sample_domain_point(&mut rng).unwrap();
        let traj = op.yosida_trajectory(&x, &default_lambda_schedule(), &space).unwrap();
        prop_assert!(traj.bounds_hold(BOUND_SLACK), "excess {}", traj.max_bound_excess());
        prop_assert!(traj.converged(TRAJECTORY_TOL), "terminal error {}", traj.terminal_error);
    }
}
