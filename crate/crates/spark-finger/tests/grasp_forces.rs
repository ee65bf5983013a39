use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use spark_finger::statics::*;

fn geom(theta2: f64, theta3: f64, d2: f64, d3: f64) -> ContactGeometry {
    ContactGeometry { d1: 0.0, d2, d3, theta1: 0.0, theta2, theta3 }
}

fn random_case(rng: &mut impl Rng) -> (ActuationInput, ContactGeometry, f64) {
    let act = ActuationInput { torque: rng.random_range(-50.0..50.0), k: rng.random_range(0.0..100.0) };
    let g = geom(
        rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
        rng.random_range(-0.8..0.8),
        rng.random_range(1.0..40.0),
        rng.random_range(1.0..28.8),
    );
    (act, g, rng.random_range(10.0..60.0))
}

#[test]
fn closed_form_equals_linear_solve() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(21);
    for _ in 0..1000 {
        let (act, g, l2) = random_case(&mut rng);
        let a = scoop_forces(&act, &g, l2).unwrap();
        let b = scoop_forces_via_system(&act, &g, l2).unwrap();
        let scale = a.f2.hypot(a.f3);
        assert!((a.f2 - b.f2).hypot(a.f3 - b.f3) <= 1e-10 * scale, "{a:?} {b:?}");
        assert!(virtual_work_check(&act, &g, l2, &a) <= 1e-8);
        assert!(virtual_work_check(&act, &g, l2, &b) <= 1e-8);
    }
}

#[test]
fn documented_scoop_case() {
    let act = ActuationInput { torque: 20.0, k: 10.0 };
    let g = geom(1.0, 0.3, 30.0, 15.0);
    let a = scoop_forces(&act, &g, 40.0).unwrap();
    // independent solve of [T, -k θ3] = [F2, F3] J by Cramer's rule
    let j = [[30.0, 0.0], [40.0 * (1.0f64 - 0.3).cos(), 15.0]];
    let (r1, r2) = (20.0, -10.0 * 0.3);
    let det = j[0][0] * j[1][1] - j[1][0] * j[0][1];
    let f2 = (r1 * j[1][1] - r2 * j[1][0]) / det;
    let f3 = (j[0][0] * r2 - j[0][1] * r1) / det;
    assert!((a.f2 - f2).abs() <= 1e-12 && (a.f3 - f3).abs() <= 1e-12);
}

#[test]
fn corrupted_forces_are_detected() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(22);
    for _ in 0..100 {
        let (mut act, g, l2) = random_case(&mut rng);
        act.torque = act.torque.abs().max(5.0);
        let mut f = scoop_forces(&act, &g, l2).unwrap();
        f.f2 *= 1.1;
        assert!(virtual_work_check(&act, &g, l2, &f) > 1e-3);
    }
}

#[test]
fn pinch_curve_increases_to_ninety_degrees() {
    for d3 in [1.0, 5.0, 14.4, 28.8] {
        let spec: SweepSpec = "theta2=0:89.999:2000".parse().unwrap();
        let rows = force_sweep(
            GraspMode::Pinch,
            ActuationInput { torque: 20.0, k: 0.0 },
            &spec,
            geom(0.0, 0.0, 20.0, d3),
            40.0,
        );
        assert_eq!(rows[0].f3, Some(20.0 / (d3 + 40.0)));
        assert!(rows.windows(2).all(|w| w[1].f3.unwrap() > w[0].f3.unwrap()));
    }
}

#[test]
fn scoop_theta3_sweep_is_linear() {
    let spec: SweepSpec = "theta3=-20:20:41".parse().unwrap();
    let k = 50.0;
    let d3 = 14.4;
    let rows = force_sweep(GraspMode::Scoop, ActuationInput { torque: 20.0, k }, &spec, geom(1.0, 0.0, 20.0, d3), 40.0);
    for r in &rows {
        let f3 = r.f3.unwrap();
        let slope_form = -k * r.value.to_radians() / d3;
        assert!((f3 - slope_form).abs() <= 1e-12 * slope_form.abs().max(1.0));
    }
    let zero_k = force_sweep(GraspMode::Scoop, ActuationInput { torque: 20.0, k: 0.0 }, &spec, geom(1.0, 0.0, 20.0, d3), 40.0);
    assert!(zero_k.iter().all(|r| r.f3 == Some(0.0)));
}

proptest! {
    #[test]
    fn f3_bilinear_in_theta3_and_k(
        t3 in -0.8f64..0.8, k in 0.0f64..100.0, a in 0.1f64..4.0, d3 in 1.0f64..28.8
    ) {
        let act = ActuationInput { torque: 20.0, k };
        let f = |act: &ActuationInput, t3: f64| scoop_forces(act, &geom(1.0, t3, 20.0, d3), 40.0).unwrap().f3;
        let base = f(&act, t3);
        let tol = 1e-12 * (base.abs() * a).max(1e-300);
        prop_assert!((f(&act, a * t3) - a * base).abs() <= tol);
        let stiffer = ActuationInput { k: a * k, ..act };
        prop_assert!((f(&stiffer, t3) - a * base).abs() <= tol);
    }

    #[test]
    fn forces_scale_with_torque_without_spring(
        t in -50.0f64..50.0, s in 0.1f64..10.0, t2 in 0.0f64..1.5, t3 in -0.8f64..0.8,
        d2 in 1.0f64..40.0, d3 in 1.0f64..28.8
    ) {
        let g = geom(t2, t3, d2, d3);
        let act = ActuationInput { torque: t, k: 0.0 };
        let scaled = ActuationInput { torque: s * t, k: 0.0 };
        let a = scoop_forces(&act, &g, 40.0).unwrap();
        let b = scoop_forces(&scaled, &g, 40.0).unwrap();
        prop_assert!((b.f2 - s * a.f2).abs() <= 1e-12 * (s * a.f2).abs().max(1e-300));
        let p = pinch_force(t, &g, 40.0).unwrap();
        let q = pinch_force(s * t, &g, 40.0).unwrap();
        prop_assert!((q - s * p).abs() <= 1e-12 * (s * p).abs().max(1e-300));
    }

    #[test]
    fn sweep_spec_display_round_trips(
        var in 0usize..6, start in -1e3f64..1e3, stop in -1e3f64..1e3, n in 1usize..5000
    ) {
        let spec = SweepSpec { var: SweepVar::ALL[var], start, stop, n };
        prop_assert_eq!(spec.to_string().parse::<SweepSpec>().unwrap(), spec);
    }
}
