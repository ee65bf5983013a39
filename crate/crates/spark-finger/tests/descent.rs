use proptest::prelude::*;
use spark_finger::modeswitch::*;
use spark_finger::FingerParams;

fn flat() -> SurfaceScenario {
    SurfaceScenario::default()
}

#[test]
fn table_endpoints() {
    let p = FingerParams::default();
    for d in mode_trace(&p, &flat(), 15.8, 159).unwrap() {
        assert_eq!(d.distal_rotation, 0.0);
    }
    let end = descend(&p, &flat(), 30.4).unwrap();
    assert!((end.distal_rotation - 22.8).abs() <= 1e-9);
    assert_eq!(end.mode, Mode::ScoopComplete);
    let half = descend(&p, &flat(), 15.8 + 7.3).unwrap();
    assert!((half.distal_rotation - 11.4).abs() <= 1e-9);
}

#[test]
fn fifteen_degree_tilt_separates_fingers() {
    let p = FingerParams::default();
    let s = SurfaceScenario { tilt_deg: 15.0, asymmetric: true, ..flat() };
    let differs = depth_samples(30.4, 100)
        .unwrap()
        .into_iter()
        .map(|d| asymmetric_pose(&p, &s, d).unwrap())
        .any(|(a, b)| a.mode != b.mode);
    assert!(differs);
}

#[test]
fn custom_profile_hook() {
    let p = FingerParams::default();
    let s = descend_with(&p, &flat(), 15.8 + 7.3, |x| x * x).unwrap();
    assert!((s.distal_rotation - 22.8 / 4.0).abs() < 1e-9);
    let end = descend_with(&p, &flat(), 30.4, |x| x * x).unwrap();
    assert_eq!(end.distal_rotation, 22.8);
}

fn params_strategy() -> impl Strategy<Value = FingerParams> {
    (1.0f64..25.0, 1.0f64..30.0, 0.0f64..60.0, 0.0f64..200.0, 0.0f64..200.0).prop_map(|(dh1, dh2, rot, k1, k2)| {
        FingerParams { dh1, dh2, dtheta_c1_deg: rot, k1, k2, ..FingerParams::default() }
    })
}

proptest! {
    #[test]
    fn rotation_nondecreasing(p in params_strategy(), a in 0.0f64..80.0, b in 0.0f64..80.0, tilt in 0.0f64..45.0) {
        let s = SurfaceScenario { tilt_deg: tilt, ..flat() };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let x = descend(&p, &s, lo).unwrap();
        let y = descend(&p, &s, hi).unwrap();
        prop_assert!(x.distal_rotation <= y.distal_rotation);
        prop_assert!(y.distal_rotation <= p.dtheta_c1_deg);
    }

    #[test]
    fn invariants_hold(p in params_strategy(), d in 0.0f64..80.0) {
        let s = descend(&p, &flat(), d).unwrap();
        prop_assert!(s.depth >= 0.0);
        prop_assert!(s.distal_rotation >= 0.0 && s.distal_rotation <= p.dtheta_c1_deg);
        let full = p.dh1 + p.dh2;
        match s.mode {
            Mode::PinchContact => {
                prop_assert!(d < p.dh1);
                prop_assert_eq!(s.distal_segment_angle_deg(&p), p.q2_deg);
            }
            Mode::StopperEngaged | Mode::Scooping => prop_assert!(d >= p.dh1 - DEPTH_TOL && d < full),
            Mode::ScoopComplete => prop_assert!(d >= full - DEPTH_TOL),
        }
        if d <= p.dh1 {
            prop_assert_eq!(s.distal_rotation, 0.0);
        }
        let (m1, m2) = spring_moments(&p, &s);
        prop_assert!(m1 >= 0.0 && m2 >= 0.0);
    }

    #[test]
    fn state_is_pure_function_of_inputs(p in params_strategy(), d in 0.0f64..80.0) {
        prop_assert_eq!(descend(&p, &flat(), d).unwrap(), descend(&p.clone(), &flat(), d).unwrap());
    }

    #[test]
    fn phase_boundaries_exact(p in params_strategy()) {
        prop_assert_eq!(descend(&p, &flat(), p.dh1).unwrap().distal_rotation, 0.0);
        let end = descend(&p, &flat(), p.dh1 + p.dh2).unwrap();
        prop_assert!((end.distal_rotation - p.dtheta_c1_deg).abs() <= 1e-9);
    }

    #[test]
    fn level_wrist_gives_twin_states(p in params_strategy(), d in 0.0f64..60.0) {
        let s = SurfaceScenario { asymmetric: true, ..flat() };
        let (a, b) = asymmetric_pose(&p, &s, d).unwrap();
        prop_assert_eq!(a, b);
    }
}
