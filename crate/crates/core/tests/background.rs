use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vvlab::background::*;

fn random_affine(rng: &mut ChaCha8Rng, dim: usize) -> InitialVelocity {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            m[i * dim + j] = if i == j { rng.gen_range(0.5..2.0) } else { rng.gen_range(-0.15..0.15) };
        }
    }
    let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    InitialVelocity::affine(dim, &m, &b).unwrap()
}

#[test]
fn affine_transport_residual_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    for _ in 0..100 {
        let u0 = random_affine(&mut rng, 3);
        u0.check_spectral_condition(0.1, &box_samples(3, 3, 1.0)).unwrap();
        let f = BackgroundFlow::new(u0);
        let t = rng.gen_range(h..10.0);
        let x = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let u = f.eval(t, &x).unwrap();
        let ut = (f.eval(t + h, &x).unwrap() - f.eval(t - h, &x).unwrap()) / (2.0 * h);
        let mut adv = Vec3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            let dj = (f.eval(t, &(x + e)).unwrap() - f.eval(t, &(x - e)).unwrap()) / (2.0 * h);
            adv += u[j] * dj;
        }
        assert!((ut + adv).norm() < 1e-6, "residual {}", (ut + adv).norm());
    }
}

#[test]
fn semigroup_on_affine_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let u0 = random_affine(&mut rng, 3);
        let f = BackgroundFlow::new(u0.clone());
        let t1 = rng.gen_range(0.0..5.0);
        let s = rng.gen_range(0.0..5.0);
        // û(t1, ·) is affine with matrix ∇û(t1) and shift û(t1, 0).
        let zero = Vec3::zeros();
        let g = f.grad(t1, &zero).unwrap();
        let c = f.eval(t1, &zero).unwrap();
        let m: Vec<f64> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| g[(i, j)]).collect();
        let restarted = BackgroundFlow::new(InitialVelocity::affine(3, &m, c.as_slice()).unwrap());
        for _ in 0..5 {
            let x = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let a = restarted.eval(s, &x).unwrap();
            let b = f.eval(t1 + s, &x).unwrap();
            assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn gradient_matches_differences_at_second_order() {
    let f = BackgroundFlow::new(InitialVelocity::expanding(2, 1.0).with_perturbation(PerturbationKind::SinBump, 0.2));
    let (t, x) = (1.3, Vec3::new(0.4, -0.7, 0.0));
    let g = f.grad(t, &x).unwrap();
    let err = |h: f64| {
        let mut e: f64 = 0.0;
        for k in 0..2 {
            let mut d = Vec3::zeros();
            d[k] = h;
            let fd = (f.eval(t, &(x + d)).unwrap() - f.eval(t, &(x - d)).unwrap()) / (2.0 * h);
            for i in 0..2 {
                e = e.max((fd[i] - g[(i, k)]).abs());
            }
        }
        e
    };
    let (e1, e2) = (err(0.02), err(0.01));
    assert!(e1 / e2 > 3.5, "{e1} -> {e2}");
}

#[test]
fn velocity_bounded_by_gradient_times_distance() {
    let f = BackgroundFlow::new(InitialVelocity::expanding(3, 1.0).with_perturbation(PerturbationKind::SinBump, 0.2));
    let pts = box_samples(3, 7, 3.0);
    for &t in &time_samples(6.0, 7) {
        let sup = pts.iter().map(|x| f.grad(t, x).unwrap().norm()).fold(0.0, f64::max);
        for x in &pts {
            assert!(f.eval(t, x).unwrap().norm() <= sup * x.norm() + 1e-12);
        }
    }
}

#[test]
fn invertibility_along_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u0 = random_affine(&mut rng, 3);
    for &t in &time_samples(50.0, 26) {
        for x in box_samples(3, 3, 1.0) {
            let j = Mat3::identity() + t * u0.gradient(&x);
            assert!(j.determinant().abs() > 1e-8);
        }
    }
}

proptest! {
    #[test]
    fn characteristic_consistency(t in 0.0f64..10.0, x0 in -3.0f64..3.0, y0 in -3.0f64..3.0, amp in 0.0f64..0.3) {
        let u0 = InitialVelocity::expanding(2, 1.0).with_perturbation(PerturbationKind::SinBump, amp);
        let f = BackgroundFlow::new(u0.clone());
        let p0 = Vec3::new(x0, y0, 0.0);
        let v0 = u0.value(&p0);
        let x = p0 + t * v0;
        let u = f.eval(t, &x).unwrap();
        prop_assert!((u - v0).norm() < 1e-9 * (1.0 + v0.norm()));
    }
}
