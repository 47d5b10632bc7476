//! Seeded samplers on ℓ^p spheres and balls.
//!
//! Coordinates drawn with density proportional to `exp(-|t|^p)` and then
//! normalized give the cone measure on the unit sphere; dividing by
//! `(‖X‖_p^p + E)^(1/p)` with `E ~ Exp(1)` instead gives the uniform
//! distribution on the unit ball.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::geometry::lp_norm;
use crate::vector::Vector;

fn generalized_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Vec<f64> {
    let gamma = Gamma::new(1.0 / p, 1.0).expect("valid shape");
    (0..n)
        .map(|_| {
            let mag: f64 = gamma.sample(rng);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * mag.powf(1.0 / p)
        })
        .collect()
}

pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Vector {
    loop {
        let x = generalized_gaussian(rng, n, p);
        let s = lp_norm(&x, p);
        if s > 1e-300 {
            return Vector::from(x.iter().map(|c| c / s).collect::<Vec<_>>());
        }
    }
}

pub fn unit_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Vector {
    let x = generalized_gaussian(rng, n, p);
    let e: f64 = Exp1.sample(rng);
    let denom = (x.iter().map(|c| c.abs().powf(p)).sum::<f64>() + e).powf(1.0 / p);
    Vector::from(x.iter().map(|c| c / denom).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_and_ball_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for &p in &[1.5, 2.0, 4.0] {
            for _ in 0..100 {
                assert!((lp_norm(unit_sphere(&mut rng, 3, p).as_slice(), p) - 1.0).abs() < 1e-12);
                assert!(lp_norm(unit_ball(&mut rng, 3, p).as_slice(), p) < 1.0);
            }
        }
    }

    #[test]
    fn ball_radius_distribution_is_uniform() {
        // For the uniform law on the unit ball of R^n, ‖X‖^n is uniform on [0, 1].
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 2;
        let mean: f64 = (0..20000)
            .map(|_| lp_norm(unit_ball(&mut rng, n, 3.0).as_slice(), 3.0).powi(n as i32))
            .sum::<f64>()
            / 20000.0;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }
}
