use proptest::prelude::*;

use vvlab::constants::{derive_constants, ModelParameters};
use vvlab::ode::*;

fn bernoulli(z0: f64) -> OdeParams {
    OdeParams { b: 1.8, a: 3.0, c1: 1.0, c2: 0.0, d1: 1.5, d2: -2.0, z0 }
}

fn max_rel_gap(p: &OdeParams, t_end: f64, dt: f64) -> f64 {
    let s = solve_closed_form(p).unwrap();
    let n = solve_numeric(p, t_end, dt).unwrap();
    assert!(n.blow_up.is_none());
    n.times
        .iter()
        .zip(&n.values)
        .map(|(&t, &z)| {
            let exact = s.eval(t).unwrap();
            (z - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}

#[test]
fn numeric_matches_homogeneous_decay() {
    let p = OdeParams { b: 2.0, a: 3.0, c1: 0.0, c2: 0.0, d1: 0.0, d2: -2.0, z0: 1.0 };
    let n = solve_numeric(&p, 10.0, 1e-3).unwrap();
    for (t, z) in n.times.iter().zip(&n.values) {
        assert!((z - (1.0 + t).powi(-2)).abs() < 1e-8);
    }
}

#[test]
fn numeric_matches_linear_term() {
    let p = OdeParams { b: 1.5, a: 3.0, c1: 0.0, c2: 1.0, d1: 0.0, d2: -2.0, z0: 0.7 };
    let n = solve_numeric(&p, 10.0, 1e-2).unwrap();
    for (&t, &z) in n.times.iter().zip(&n.values) {
        let exact = 0.7 * (1.0 + t).powf(-1.5) * (1.0 - 1.0 / (1.0 + t)).exp();
        assert!((z - exact).abs() < 1e-6 * exact);
    }
    assert!(max_rel_gap(&p, 10.0, 1e-2) < 1e-6);
}

#[test]
fn numeric_matches_global_bernoulli() {
    assert!(max_rel_gap(&bernoulli(0.5), 100.0, 1e-2) < 1e-6);
    let mixed = OdeParams { b: 1.8, a: 3.0, c1: 0.5, c2: 0.4, d1: 1.2, d2: -1.5, z0: 0.3 };
    assert!(max_rel_gap(&mixed, 20.0, 1e-2) < 1e-6);
}

#[test]
fn global_solution_decays_at_rate_b() {
    let s = solve_closed_form(&bernoulli(0.5)).unwrap();
    let w: Vec<f64> = (0..=100).map(|t| s.eval(t as f64).unwrap() * (1.0 + t as f64).powf(1.8)).collect();
    assert!(w.iter().all(|&v| v > 0.0 && v < 10.0));
}

#[test]
fn numeric_blow_up_time() {
    let dt = 1e-3;
    let closed = solve_closed_form(&bernoulli(1.0)).unwrap().blow_up.unwrap();
    assert!((closed - 1.0666).abs() < 1e-3);
    let n = solve_numeric(&bernoulli(1.0), 2.0, dt).unwrap();
    let t = n.blow_up.unwrap();
    assert!((1.0646..=1.0686).contains(&t), "{t}");
    assert!((t - closed).abs() <= 2.0 * dt);
}

#[test]
fn key_inequality_for_p1() {
    let dc = derive_constants(&ModelParameters::default()).unwrap();
    let p = OdeParams::from_constants(&dc, 1.0, 1.0, 0.1);
    assert_eq!(p.b, (1.0 - dc.eta_star) * dc.b_star);
    let lhs = p.d1 - (p.a - 1.0) * p.b;
    assert!((lhs - key_exponent(&dc)).abs() < 1e-15);
    assert!((lhs - (-2.1)).abs() < 1e-12);
    assert!(lhs < -1.0 && p.d2 < -1.0);
    let s = solve_closed_form(&p).unwrap();
    assert!(s.tail_integrable && s.lambda > 0.0 && s.lambda.is_finite());
}

proptest! {
    #[test]
    fn larger_c1_never_helps(c1 in 0.1f64..3.0, extra in 0.0f64..3.0, z0 in 0.1f64..3.0, c2 in 0.0f64..1.0) {
        let base = OdeParams { b: 1.8, a: 3.0, c1, c2, d1: 1.5, d2: -1.5, z0 };
        let more = OdeParams { c1: c1 + extra, ..base };
        let (s, m) = (solve_closed_form(&base).unwrap(), solve_closed_form(&more).unwrap());
        prop_assert!(m.lambda <= s.lambda * (1.0 + 1e-9));
        if let Some(ts) = s.blow_up {
            prop_assert!(m.blow_up.unwrap() <= ts * (1.0 + 1e-9));
        }
        if s.global {
            prop_assert!(m.global || m.blow_up.is_some());
        } else {
            prop_assert!(!m.global);
        }
    }
}
