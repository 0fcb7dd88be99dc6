use proptest::prelude::*;
use proxsplit::fourpoint::cap_convexity_constant;
use proxsplit::linalg::matmul;
use proxsplit::{Point, SpaceKind, SpaceParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spaces() -> [(SpaceParams, usize); 3] {
    [
        (SpaceParams::euclidean(), 4),
        (SpaceParams::sphere(), 3),
        (SpaceParams::spd(), 3),
    ]
}

#[test]
fn triangle_inequality_on_random_triples() {
    for (space, dim) in spaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = space.random_point_with(&mut rng, dim).unwrap();
            let y = space.random_point_with(&mut rng, dim).unwrap();
            let z = space.random_point_with(&mut rng, dim).unwrap();
            let (xy, yz, xz) = (
                space.distance(&x, &y).unwrap(),
                space.distance(&y, &z).unwrap(),
                space.distance(&x, &z).unwrap(),
            );
            assert!(
                xz <= xy + yz + 1e-10,
                "{:?}: {xz} > {xy} + {yz}",
                space.kind
            );
        }
    }
}

#[test]
fn uniform_convexity_in_hadamard_spaces() {
    for (space, dim) in [(SpaceParams::euclidean(), 3), (SpaceParams::spd(), 3)] {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let x = space.random_point_with(&mut rng, dim).unwrap();
            let y = space.random_point_with(&mut rng, dim).unwrap();
            let z = space.random_point_with(&mut rng, dim).unwrap();
            let tau: f64 = rng.random();
            let m = space.geodesic(&x, &y, tau).unwrap();
            let lhs = space.distance_pow(&z, &m).unwrap();
            let rhs = (1.0 - tau) * space.distance_pow(&z, &x).unwrap()
                + tau * space.distance_pow(&z, &y).unwrap()
                - tau * (1.0 - tau) * space.distance_pow(&x, &y).unwrap();
            assert!(lhs <= rhs + 1e-8, "{:?}: {lhs} > {rhs}", space.kind);
        }
    }
}

#[test]
fn uniform_convexity_on_sphere_caps() {
    for delta in [0.2, 0.5, 0.75] {
        let space = SpaceParams::sphere_cap(1.0, delta).unwrap();
        assert_eq!(space.c, cap_convexity_constant(1.0, delta).unwrap());
        let pole = Point::sphere(vec![0.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draw = |rng: &mut ChaCha8Rng| space.random_cap_point_with(rng, &pole, delta).unwrap();
        for _ in 0..10_000 {
            let (x, y, z) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            assert!(space.distance(&pole, &x).unwrap() < delta);
            let tau: f64 = rng.random();
            let m = space.geodesic(&x, &y, tau).unwrap();
            let lhs = space.distance_pow(&z, &m).unwrap();
            let rhs = (1.0 - tau) * space.distance_pow(&z, &x).unwrap()
                + tau * space.distance_pow(&z, &y).unwrap()
                - 0.5 * space.c * tau * (1.0 - tau) * space.distance_pow(&x, &y).unwrap();
            assert!(lhs <= rhs + 1e-8, "delta {delta}: {lhs} > {rhs}");
        }
    }
}

fn geodesic_consistency(space: SpaceParams, dim: usize, seed: u64, tol: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = space.random_point_with(&mut rng, dim).unwrap();
    let y = space.random_point_with(&mut rng, dim).unwrap();
    let d = space.distance(&x, &y).unwrap();
    if space.kind == SpaceKind::Sphere && d > 3.1 {
        return;
    }
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let g = space.geodesic(&x, &y, t).unwrap();
        let dg = space.distance(&x, &g).unwrap();
        assert!(
            (dg - t * d).abs() < tol,
            "{:?} dim {dim} t {t}: {dg} vs {}",
            space.kind,
            t * d
        );
        if space.kind == SpaceKind::Sphere {
            let norm = g.data().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geodesics_are_distance_consistent(seed in any::<u64>(), dim in 2usize..7) {
        geodesic_consistency(SpaceParams::euclidean(), dim, seed, 1e-8);
        geodesic_consistency(SpaceParams::sphere(), dim, seed, 1e-8);
        geodesic_consistency(SpaceParams::spd(), dim, seed, if dim >= 5 { 1e-6 } else { 1e-8 });
    }

    #[test]
    fn sphere_geodesic_stays_on_sphere(seed in any::<u64>(), dim in 2usize..8, t in 0.0f64..=1.0) {
        let space = SpaceParams::sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = space.random_point_with(&mut rng, dim).unwrap();
        let y = space.random_point_with(&mut rng, dim).unwrap();
        prop_assume!(space.distance(&x, &y).unwrap() < 3.1);
        let g = space.geodesic(&x, &y, t).unwrap();
        let norm = g.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spd_distance_is_congruence_invariant(seed in any::<u64>(), dim in 2usize..5) {
        let space = SpaceParams::spd();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = space.random_point_with(&mut rng, dim).unwrap();
        let b = space.random_point_with(&mut rng, dim).unwrap();
        // diagonally dominant, hence invertible
        let mut m: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for i in 0..dim {
            m[i * dim + i] += dim as f64 + 1.0;
        }
        let mt: Vec<f64> = (0..dim * dim).map(|k| m[(k % dim) * dim + k / dim]).collect();
        let congruent = |p: &Point| {
            let mut data = matmul(dim, &matmul(dim, &mt, p.data()), &m);
            for i in 0..dim {
                for j in 0..i {
                    let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                    data[i * dim + j] = avg;
                    data[j * dim + i] = avg;
                }
            }
            Point::spd(dim, data).unwrap()
        };
        let before = space.distance(&a, &b).unwrap();
        let after = space.distance(&congruent(&a), &congruent(&b)).unwrap();
        prop_assert!((before - after).abs() < 1e-8, "{} vs {}", before, after);
    }

    #[test]
    fn distance_is_symmetric_and_zero_on_diagonal(seed in any::<u64>()) {
        for (space, dim) in spaces() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = space.random_point_with(&mut rng, dim).unwrap();
            let y = space.random_point_with(&mut rng, dim).unwrap();
            prop_assert!(space.distance(&x, &x).unwrap().abs() < 1e-12);
            let (xy, yx) = (space.distance(&x, &y).unwrap(), space.distance(&y, &x).unwrap());
            prop_assert_eq!(xy, yx);
        }
    }
}
