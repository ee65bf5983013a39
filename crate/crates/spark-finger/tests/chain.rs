use rand::{Rng, SeedableRng};
use spark_finger::kinematics::*;
use spark_finger::mechanism::{solve_sequence, spark_preset, stroke_limits, driver_samples, Stroke};
use spark_finger::FingerParams;

fn chain() -> Vec<DhRow> {
    spark_chain(&FingerParams::default())
}

/// Central differences of tip position and orientation.
fn fd_jacobian(q: [f64; 3], h: f64) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        let (mut qp, mut qm) = (q, q);
        qp[k] += h;
        qm[k] -= h;
        let a = forward_kinematics(&chain(), &qp).unwrap();
        let b = forward_kinematics(&chain(), &qm).unwrap();
        out[0][k] = (a.tip.x - b.tip.x) / (2.0 * h);
        out[1][k] = (a.tip.y - b.tip.y) / (2.0 * h);
        out[2][k] = (a.orientation - b.orientation) / (2.0 * h);
    }
    out
}

#[test]
fn jacobian_against_central_differences() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = [0; 3].map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let j = jacobian(&chain(), &q).unwrap();
        let fd = fd_jacobian(q, 1e-6);
        let scale = j.amax();
        for k in 0..3 {
            for (r, row) in [0, 1, 5].into_iter().enumerate() {
                worst = worst.max((j[(row, k)] - fd[r][k]).abs() / scale);
            }
            for row in [2, 3, 4] {
                assert_eq!(j[(row, k)], 0.0);
            }
        }
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn constrained_motion_matches_linkage_tip() {
    let p = FingerParams::default();
    let top = spark_preset(&p).unwrap();
    let stroke = stroke_limits(&top).unwrap();
    let reference = chain_reference(&p).unwrap();
    let (lo, hi) = height_limits(&p).unwrap();
    let shared = Stroke {
        min: stroke.min.max(lo - reference.height),
        max: stroke.max.min(hi - reference.height - 1e-3),
    };
    assert!(shared.len() > 30.0);
    let drivers = driver_samples(shared, 500);
    let states = solve_sequence(&top, &drivers).unwrap();
    let mut worst = 0.0f64;
    for (d, s) in drivers.iter().zip(&states) {
        let q = constrained_motion(&p, reference.height + d).unwrap();
        let fk = forward_kinematics(&chain(), &q.to_array()).unwrap();
        let j = top.tip_point(s);
        worst = worst.max((fk.tip.x - j.x).abs()).max((fk.tip.y - j.y).abs());
        assert!((fk.orientation - reference.orientation).abs() < 1e-9);
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn heights_outside_reach_fail() {
    let p = FingerParams::default();
    let (lo, hi) = height_limits(&p).unwrap();
    assert!(constrained_motion(&p, hi + 1.0).is_err());
    assert!(constrained_motion(&p, lo - 1.0).is_err());
}
