use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracpoincare::exponents::{critical_q_sjohn, mushroom_energy_exponent};
use fracpoincare::fit::log_log;
use fracpoincare::geometry::{lens_area, sample_interior};
use fracpoincare::quasihyperbolic::QhGraph;
use fracpoincare::seminorm::{fractional_energy, truncate, GridFunction};
use fracpoincare::whitney::decompose;
use fracpoincare::{Domain, ExponentParams, MushroomSpec, NodeSet, Point};

fn grid() -> Arc<NodeSet> {
    Arc::new(sample_interior(&Domain::unit_square(), 1.0 / 16.0).unwrap())
}

fn random_values(nodes: &Arc<NodeSet>, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridFunction::new(Arc::clone(nodes), (0..nodes.len()).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn power_laws_are_recovered(a in -3.0f64..3.0, c in 0.1f64..10.0) {
        let xs: Vec<f64> = (0..6).map(|k| 2f64.powi(-k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(a)).collect();
        let fit = log_log(&xs, &ys).unwrap();
        prop_assert!((fit.slope - a).abs() < 1e-10);
        prop_assert!(fit.rms < 1e-10);
    }

    #[test]
    fn lens_area_is_symmetric_and_bounded(r1 in 0.01f64..2.0, r2 in 0.01f64..2.0, d in 0.0f64..5.0) {
        let a = lens_area(r1, r2, d);
        prop_assert!((a - lens_area(r2, r1, d)).abs() <= 1e-12 * (1.0 + a));
        prop_assert!(a >= 0.0);
        prop_assert!(a <= std::f64::consts::PI * r1.min(r2).powi(2) * (1.0 + 1e-12));
        if d >= r1 + r2 {
            prop_assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn energy_ignores_constants_and_scales(seed in any::<u64>(), c in -5.0f64..5.0, lambda in 0.1f64..4.0, p in 1.2f64..3.0) {
        let nodes = grid();
        let params = ExponentParams::new(2, p, p, 0.5, 0.5).unwrap();
        let u = random_values(&nodes, seed);
        let e = fractional_energy(&u, &params).total;
        let shifted = fractional_energy(&u.map(|v| v + c), &params).total;
        let scaled = fractional_energy(&u.map(|v| lambda * v), &params).total;
        prop_assert!((shifted - e).abs() <= 1e-9 * e);
        prop_assert!((scaled - lambda.powf(p) * e).abs() <= 1e-9 * lambda.powf(p) * e);
    }

    #[test]
    fn clamping_does_not_raise_energy(seed in any::<u64>(), p in 1.2f64..3.0) {
        let nodes = grid();
        let params = ExponentParams::new(2, p, p, 0.5, 0.5).unwrap();
        let u = random_values(&nodes, seed);
        let e = fractional_energy(&u, &params).total;
        let clamped = fractional_energy(&u.map(|v| v.clamp(0.0, 1.0)), &params).total;
        prop_assert!(clamped <= e * (1.0 + 1e-12));
    }

    #[test]
    fn truncation_is_a_contraction(seed in any::<u64>(), j in -4i32..4) {
        let nodes = grid();
        let u = random_values(&nodes, seed).map(|v| (4.0 * v).exp2());
        let t = truncate(&u, j);
        let t_j = (j as f64).exp2();
        for (a, b) in t.values.iter().zip(&u.values) {
            prop_assert!(*a >= 0.0 && *a <= t_j);
            prop_assert_eq!(*a, b.clamp(t_j, 2.0 * t_j) - t_j);
        }
        for (a, b) in [(0usize, 1usize), (3, 40), (7, 200)] {
            prop_assert!((t.values[a] - t.values[b]).abs() <= (u.values[a] - u.values[b]).abs());
        }
    }

    #[test]
    fn qh_distance_is_a_metric(s in any::<u64>()) {
        let domain = Domain::unit_square();
        let graph = QhGraph::new(&domain, 1.0 / 32.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        // Lattice nodes, so the three distances come from one shortest-path metric.
        let mut pick = || Point::new(rng.gen_range(3..29) as f64 / 32.0, rng.gen_range(3..29) as f64 / 32.0);
        let (x, y, z) = (pick(), pick(), pick());
        let dxy = graph.distance(x, y).unwrap();
        let dyx = graph.distance(y, x).unwrap();
        let dxz = graph.distance(x, z).unwrap();
        let dzy = graph.distance(z, y).unwrap();
        prop_assert_eq!(dxy, dyx);
        prop_assert!(dxy <= dxz + dzy + 1e-12);
        // k(x, y) >= |log(d(x)/d(y))| up to quadrature error.
        let lower = (domain.dist_to_boundary(x) / domain.dist_to_boundary(y)).ln().abs();
        prop_assert!(dxy >= lower - 0.05 * (1.0 + lower));
    }

    #[test]
    fn critical_q_decreases_with_s(t1 in 0.0f64..0.99, t2 in 0.0f64..0.99, delta in 0.1f64..0.9) {
        let params = ExponentParams::new(2, 2.0, 2.0, delta, 0.5).unwrap();
        let s_max = 2.0 / params.energy_scaling();
        let (s1, s2) = (1.0 + t1 * (s_max - 1.0), 1.0 + t2 * (s_max - 1.0));
        let (a, b) = (critical_q_sjohn(&params, s1).unwrap(), critical_q_sjohn(&params, s2).unwrap());
        if s1 < s2 {
            prop_assert!(a >= b);
        }
        let conj = params.sobolev_conjugate().unwrap();
        prop_assert!((critical_q_sjohn(&params, 1.0).unwrap() - conj).abs() < 1e-12);
        // Energy exponent at sigma = s, h = 1 is n p / (critical q).
        prop_assert!((mushroom_energy_exponent(&params, s1, 1.0) - 2.0 * 2.0 / a).abs() < 1e-9);
    }

    #[test]
    fn whitney_on_random_rectangles(w in 0.3f64..3.0, h in 0.3f64..3.0) {
        let d = Domain::rectangle(Point::new(0.0, 0.0), Point::new(w, h)).unwrap();
        let rep = decompose(&d, 6).unwrap().verify(&d);
        prop_assert_eq!(rep.violations, 0);
        prop_assert_eq!(rep.overlaps, 0);
    }
}

/// Monte Carlo estimate of the mushroom domain area against the exact value.
#[test]
fn mushroom_area_matches_sampling() {
    let d = Domain::mushroom(&MushroomSpec { side: 2.0, radii: vec![0.25, 0.125], sigma: 1.5, h: 1.0, positions: None }).unwrap();
    let b = d.bbox();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 400_000;
    let hits = (0..n)
        .filter(|_| d.contains_closed(Point::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y))))
        .count();
    let frac = hits as f64 / n as f64;
    let estimate = frac * b.area();
    let sd = (frac * (1.0 - frac) / n as f64).sqrt() * b.area();
    assert!((estimate - d.measure()).abs() < 4.0 * sd, "{estimate} vs {}", d.measure());
}
