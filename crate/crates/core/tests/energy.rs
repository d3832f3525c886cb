use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use vvlab::background::{BackgroundFlow, InitialVelocity};
use vvlab::constants::ModelParameters;
use vvlab::energy::*;
use vvlab::grid::{BoundaryMode, Grid};
use vvlab::scenarios::{make_initial_data, DensityProfile};
use vvlab::solver::*;

fn smooth_state(grid: &Grid, amp: f64) -> State {
    let mut s = State::zeros(grid);
    s.sound = grid.sample(|x| amp * (-x[0] * x[0]).exp());
    s.visc = grid.sample(|x| amp * amp * (-2.0 * x[0] * x[0]).exp());
    s.vel[0] = grid.sample(|x| amp * x[0] * (-x[0] * x[0]).exp());
    s
}

#[test]
fn unit_weights_at_initial_time() {
    let g = Grid::centered(1, 128, 6.0, BoundaryMode::PeriodicTest).unwrap();
    let e = compute(&g, &smooth_state(&g, 0.7), 0.3);
    let plain: f64 = e.y.iter().chain(&e.u).map(|v| v * v).sum();
    assert!((e.z * e.z - plain).abs() < 1e-12 * plain);
}

#[test]
fn energy_dominates_each_part() {
    let g = Grid::centered(1, 128, 6.0, BoundaryMode::PeriodicTest).unwrap();
    let mut s = smooth_state(&g, 0.7);
    s.t = 2.5;
    let e = compute(&g, &s, 0.3);
    for k in 0..4 {
        assert!(e.z * e.z >= e.weighted_y_sq(k));
        assert!(e.z * e.z >= e.weighted_u_sq(k));
    }
}

#[test]
fn noisy_power_law_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let t: Vec<f64> = (0..64).map(|i| i as f64 * 0.25).collect();
    let z: Vec<f64> = t.iter().map(|t| 3.0 * (1.0 + t).powf(-1.8) * (1.0 + noise.sample(&mut rng))).collect();
    let f = fit_decay(&t, &z, None).unwrap();
    assert!((f.slope + 1.8).abs() < 0.05, "{}", f.slope);
    assert_eq!(f.used, 64);
}

#[test]
fn nonpositive_samples_are_skipped() {
    let t: Vec<f64> = (0..8).map(|i| i as f64).collect();
    let mut z: Vec<f64> = t.iter().map(|t| (1.0 + t).powf(-2.0)).collect();
    z[3] = 0.0;
    z[5] = -1.0;
    let f = fit_decay(&t, &z, Some(2.0)).unwrap();
    assert_eq!(f.used, 6);
    assert!((f.slope + 2.0).abs() < 1e-10);
    assert!((f.sup_weighted - 1.0).abs() < 1e-12);
}

#[test]
fn dissipation_is_nondecreasing() {
    let p = ModelParameters::default().with_epsilon(0.1);
    let grid = Grid::centered(1, 256, 8.0, BoundaryMode::TruncatedSupport).unwrap();
    let flow = BackgroundFlow::new(InitialVelocity::expanding(1, 0.5));
    let data = make_initial_data(&grid, &DensityProfile::bump(1e-4, 3.2, 2.0), &p).unwrap();
    let m = Model::new(grid, p, Some(flow), SolverOptions::default()).unwrap();
    let mut settings = RunSettings::new(1.0);
    settings.energy_times = (0..=10).map(|i| i as f64 * 0.1).collect();
    settings.track_dissipation = true;
    let out = m.run(&data.state, &settings).unwrap();
    let d = &out.energy.dissipation;
    assert_eq!(d.len(), 11);
    assert_eq!(d[0], 0.0);
    assert!(d.windows(2).all(|w| w[1] >= w[0]));
    assert!(d[10] > 0.0);
}

#[test]
fn csv_layout() {
    let g = Grid::centered(1, 64, 6.0, BoundaryMode::PeriodicTest).unwrap();
    let mut r = EnergyReport::default();
    for i in 0..6 {
        let mut s = smooth_state(&g, 0.5);
        s.t = i as f64;
        let e = compute(&g, &s, 0.1);
        r.push(e, 0.0);
    }
    r.fit_envelope(None).unwrap();
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,Y0,Y1,Y2,Y3,U0,U1,U2,U3,Z,dissipation,envelope");
    assert_eq!(lines.len(), 7);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 12));
}

proptest! {
    #[test]
    fn energy_is_homogeneous(lambda in 0.01f64..10.0, t in 0.0f64..20.0, eps in 0.0f64..1.0) {
        let g = Grid::centered(1, 64, 6.0, BoundaryMode::PeriodicTest).unwrap();
        let mut s = smooth_state(&g, 0.5);
        s.t = t;
        let mut scaled = s.clone();
        for (a, b) in scaled.fields_mut().zip(s.fields()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = lambda * y;
            }
        }
        let (e, es) = (compute(&g, &s, eps), compute(&g, &scaled, eps));
        prop_assert!((es.z - lambda * e.z).abs() <= 1e-12 * es.z.max(1e-300));
    }
}
