mod common;

use common::{exponent, inactive_structure_distance, linear, operator};
use maxmono::convex_sets::{direction_grid, set_distance_report};
use maxmono::limits::{lower_bound_check, s_limsup_estimate, verify_representation, LimsupConfig, Status, VerifyConfig};
use maxmono::{MonotoneOperator, NormedSpace, Vector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The sampled estimator cannot see past structure closer than its probe
/// radius; such points are skipped.
fn resolved(op: &MonotoneOperator, x: &Vector, config: &LimsupConfig) -> bool {
    inactive_structure_distance(op, x) > 4.0 * config.radii[config.radii.len() - 3]
}

fn setup(op: &MonotoneOperator, p: f64, seed: u64) -> (NormedSpace, Vector, LimsupConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = op.sample_domain_point(&mut rng).unwrap();
    let config = LimsupConfig { seed, ..LimsupConfig::default() };
    (NormedSpace::new(2, p).unwrap(), x, config)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cloud_points_are_values(op in operator(), p in exponent(), seed in any::<u64>()) {
        let (space, x, config) = setup(&op, p, seed);
        prop_assume!(resolved(&op, &x, &config));
        let cloud = s_limsup_estimate(&op, &x, &space, &config).unwrap();
        let ax = op.evaluate(&x).unwrap();
        for (pt, unc) in cloud.points.iter().zip(&cloud.uncertainty) {
            prop_assert!(ax.contains(pt, 1e-6 + 2.0 * unc).unwrap(), "{pt:?} (uncertainty {unc}) not in {ax:?}");
        }
    }

    #[test]
    fn represented_set_is_inside_the_value(op in operator(), p in exponent(), seed in any::<u64>()) {
        let (space, x, config) = setup(&op, p, seed);
        prop_assume!(resolved(&op, &x, &config));
        let cloud = s_limsup_estimate(&op, &x, &space, &config).unwrap();
        prop_assume!(!cloud.is_degenerate());
        let ax = op.evaluate(&x).unwrap();
        let normals = op.domain().normal_cone(&x).unwrap();
        let rhs = cloud.hull_with_cone(2, normals.cone_generators()).unwrap();
        let grid = direction_grid(&[&ax, &rhs], 2);
        let rep = set_distance_report(&rhs, &ax, &grid).unwrap();
        prop_assert!(rep.max_excess <= 1e-8 + cloud.max_uncertainty(), "excess {}", rep.max_excess);
    }

    #[test]
    fn lower_bound_never_fails(
        op in operator(),
        p in exponent(),
        seed in any::<u64>(),
        v in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let v = Vector::from(v);
        prop_assume!(v.max_abs() > 1e-3);
        let (space, x, _) = setup(&op, p, seed);
        let cfg = VerifyConfig::default().with_seed(seed);
        let rep = lower_bound_check(&op, &x, &v, None, &space, 200, &cfg).unwrap();
        if op.domain().is_whole_space() {
            prop_assert_eq!(rep.status, Status::Pass, "{:?}", rep.notes);
        } else {
            prop_assert!(matches!(rep.status, Status::Pass | Status::Inconclusive), "{:?}", rep);
        }
    }

    #[test]
    fn continuous_operators_have_singleton_clouds(
        lin in linear(),
        q in prop::sample::select(vec![0.0, 1.5, 3.0]),
        p in exponent(),
        seed in any::<u64>(),
    ) {
        let op = if q == 0.0 {
            lin
        } else {
            MonotoneOperator::sum(vec![lin, MonotoneOperator::duality_map(2, q).unwrap()]).unwrap()
        };
        let (space, x, config) = setup(&op, p, seed);
        let cloud = s_limsup_estimate(&op, &x, &space, &config).unwrap();
        prop_assert_eq!(cloud.points.len(), 1);
        prop_assert!(cloud.ray_tags.is_empty());
        let value = op.evaluate(&x).unwrap();
        let tol = 1e-6 + 2.0 * cloud.uncertainty[0];
        prop_assert!(value.contains(&cloud.points[0], tol).unwrap(), "{:?} vs {:?}", cloud.points[0], value);
    }

    #[test]
    fn estimates_are_deterministic(op in operator(), p in exponent(), seed in any::<u64>()) {
        let (space, x, config) = setup(&op, p, seed);
        let a = s_limsup_estimate(&op, &x, &space, &config).unwrap();
        let b = s_limsup_estimate(&op, &x, &space, &config).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        let cfg = VerifyConfig::default().with_seed(seed);
        let r1 = verify_representation(&op, &x, &space, None, &cfg).unwrap();
        let r2 = verify_representation(&op, &x, &space, None, &cfg).unwrap();
        prop_assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }
}
