//! Serial-chain kinematics with standard Denavit–Hartenberg rows.
//!
//! Joint angles are measured counter-clockwise from the base x axis; the zero
//! configuration is the fully extended chain.

use nalgebra::{Matrix3, Matrix4, Matrix6xX, Vector3};
use thiserror::Error;

use crate::params::FingerParams;

pub type HomogeneousTransform = Matrix4<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("chain has no rows")]
    EmptyChain,
    #[error("chain has {rows} rows but {joints} joint values were given")]
    JointCount { rows: usize, joints: usize },
    #[error("tip height {0} mm is out of reach")]
    Unreachable(f64),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta: f64,
}

impl DhRow {
    /// Planar revolute link of length `a` with no angle offset.
    pub fn planar(a: f64) -> Self {
        DhRow {
            a,
            alpha: 0.0,
            d: 0.0,
            theta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl JointAngles {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        JointAngles { theta1, theta2, theta3 }
    }

    pub fn from_degrees(d: [f64; 3]) -> Self {
        JointAngles::new(d[0].to_radians(), d[1].to_radians(), d[2].to_radians())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }
}

pub fn dh_transform(row: &DhRow) -> HomogeneousTransform {
    let (s, c) = row.theta.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Matrix4::new(
        c,
        -s * ca,
        s * sa,
        row.a * c,
        s,
        c * ca,
        -c * sa,
        row.a * s,
        0.0,
        sa,
        ca,
        row.d,
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardKinematics {
    pub tip: Vector3<f64>,
    /// Rotation about the base z axis, the sum of the joint angles.
    pub orientation: f64,
    /// `T_1 … T_n`, each relative to the base frame.
    pub transforms: Vec<HomogeneousTransform>,
}

fn check(chain: &[DhRow], q: &[f64]) -> Result<(), KinematicsError> {
    if chain.is_empty() {
        return Err(KinematicsError::EmptyChain);
    }
    if chain.len() != q.len() {
        return Err(KinematicsError::JointCount {
            rows: chain.len(),
            joints: q.len(),
        });
    }
    Ok(())
}

/// Composes the link transforms. `q[i]` is added to the row's `theta`.
pub fn forward_kinematics(chain: &[DhRow], q: &[f64]) -> Result<ForwardKinematics, KinematicsError> {
    check(chain, q)?;
    let mut t = Matrix4::identity();
    let mut transforms = Vec::with_capacity(chain.len());
    let mut orientation = 0.0;
    for (row, qi) in chain.iter().zip(q) {
        let r = DhRow {
            theta: row.theta + qi,
            ..*row
        };
        orientation += r.theta;
        t *= dh_transform(&r);
        transforms.push(t);
    }
    Ok(ForwardKinematics {
        tip: t.fixed_view::<3, 1>(0, 3).into_owned(),
        orientation,
        transforms,
    })
}

/// Geometric Jacobian of a revolute chain: linear rows on top, angular below.
pub fn jacobian(chain: &[DhRow], q: &[f64]) -> Result<Matrix6xX<f64>, KinematicsError> {
    let fk = forward_kinematics(chain, q)?;
    let n = chain.len();
    let mut jac = Matrix6xX::zeros(n);
    let mut z = Vector3::z();
    let mut o = Vector3::zeros();
    for i in 0..n {
        let jv = z.cross(&(fk.tip - o));
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&jv);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
        let t = &fk.transforms[i];
        z = t.fixed_view::<3, 1>(0, 2).into_owned();
        o = t.fixed_view::<3, 1>(0, 3).into_owned();
    }
    Ok(jac)
}

/// The three-phalanx chain with link lengths L1, L2, L3.
pub fn spark_chain(params: &FingerParams) -> Vec<DhRow> {
    params.lengths().iter().map(|&a| DhRow::planar(a)).collect()
}

/// Pose the constrained solve holds fixed: the tip stays on the vertical
/// `x` with orientation `orientation`; `q` reaches `height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReference {
    pub x: f64,
    pub orientation: f64,
    pub height: f64,
    pub q: JointAngles,
}

/// Reference taken from the neutral linkage pose: chain base at the base
/// pivot, tip at the fingertip, last link pointing straight down.
pub fn chain_reference(params: &FingerParams) -> Result<ChainReference, KinematicsError> {
    let height = -2.0 * params.l2 * params.neutral_crank().sin() - params.cj;
    let orientation = -std::f64::consts::FRAC_PI_2;
    let (l1, l2, l3) = (params.l1, params.l2, params.l3);
    let wrist = (-l3 * orientation.cos(), height - l3 * orientation.sin());
    let r2 = wrist.0 * wrist.0 + wrist.1 * wrist.1;
    let c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !(c2.abs() < 1.0) {
        return Err(KinematicsError::Unreachable(height));
    }
    let t2 = c2.acos();
    let t1 = wrist.1.atan2(wrist.0) - (l2 * t2.sin()).atan2(l1 + l2 * c2);
    Ok(ChainReference {
        x: 0.0,
        orientation,
        height,
        q: JointAngles::new(t1, t2, orientation - t1 - t2),
    })
}

/// Open interval of tip heights the chain reaches while holding the
/// reference vertical and orientation, on the reference elbow side.
pub fn height_limits(params: &FingerParams) -> Result<(f64, f64), KinematicsError> {
    let reference = chain_reference(params)?;
    let (l1, l2, l3) = (params.l1, params.l2, params.l3);
    let wx = reference.x - l3 * reference.orientation.cos();
    let offset = -l3 * reference.orientation.sin();
    let span = |r: f64| (r * r - wx * wx).max(0.0).sqrt();
    let (outer, inner) = (span(l1 + l2), span((l1 - l2).abs()));
    let wy = reference.height + offset;
    Ok(if wy < 0.0 {
        (-outer - offset, -inner - offset)
    } else {
        (inner - offset, outer - offset)
    })
}

const MAX_HEIGHT_STEP: f64 = 2.0;

fn hold_tip(
    chain: &[DhRow],
    q0: [f64; 3],
    reference: &ChainReference,
    height: f64,
) -> Result<[f64; 3], KinematicsError> {
    let mut q = q0;
    let residual = |q: &[f64; 3]| -> Result<Vector3<f64>, KinematicsError> {
        let fk = forward_kinematics(chain, q)?;
        Ok(Vector3::new(
            fk.tip.x - reference.x,
            fk.orientation - reference.orientation,
            fk.tip.y - height,
        ))
    };
    let mut r = residual(&q)?;
    let mut polished = false;
    for it in 0..100 {
        if r.norm() <= 1e-10 {
            if polished {
                return Ok(q);
            }
            polished = true;
        }
        let j = jacobian(chain, &q)?;
        let m = Matrix3::from_fn(|r, c| j[([0, 5, 1][r], c)]);
        let scale = m.abs().max().powi(3);
        if m.determinant().abs() <= 1e-12 * scale {
            return Err(KinematicsError::Singular(format!("constraint Jacobian at iteration {it}")));
        }
        let dq = m
            .lu()
            .solve(&(-r))
            .ok_or_else(|| KinematicsError::Singular("constraint Jacobian".into()))?;
        let next = [q[0] + dq[0], q[1] + dq[1], q[2] + dq[2]];
        let rn = residual(&next)?;
        if polished && rn.norm() >= r.norm() {
            return Ok(q);
        }
        q = next;
        r = rn;
    }
    if r.norm() <= 1e-10 {
        return Ok(q);
    }
    Err(KinematicsError::NoConvergence {
        iterations: 100,
        residual: r.norm(),
    })
}

/// Joint angles that keep the tip on the reference vertical with the
/// reference orientation while placing it at `tip_height`.
///
/// The solve walks from the reference height in steps of at most 2 mm so the
/// elbow stays on the reference branch.
pub fn constrained_motion(params: &FingerParams, tip_height: f64) -> Result<JointAngles, KinematicsError> {
    let reference = chain_reference(params)?;
    let chain = spark_chain(params);
    let (l1, l2, l3) = (params.l1, params.l2, params.l3);
    let wx = reference.x - l3 * reference.orientation.cos();
    let wy = tip_height - l3 * reference.orientation.sin();
    let reach = wx.hypot(wy);
    if !tip_height.is_finite() || reach >= l1 + l2 || reach <= (l1 - l2).abs() {
        return Err(KinematicsError::Unreachable(tip_height));
    }
    let steps = ((tip_height - reference.height).abs() / MAX_HEIGHT_STEP).ceil().max(1.0) as usize;
    let mut q = reference.q.to_array();
    for k in 1..=steps {
        let h = reference.height + (tip_height - reference.height) * k as f64 / steps as f64;
        q = hold_tip(&chain, q, &reference, h)?;
    }
    Ok(JointAngles::new(q[0], q[1], q[2]))
}
