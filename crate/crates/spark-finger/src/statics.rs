//! Grasp-force models for the pinch and scoop modes.
//!
//! Phalanx angles here are measured from the vertical, which is a different
//! convention from the joint angles in [`crate::kinematics`]. A contact point
//! at distance `d` along a phalanx at angle `θ` sits at `d·(sin θ, cos θ)`
//! relative to that phalanx's proximal joint. Forces are in N, torques and
//! spring moments in N·mm, stiffness in N·mm/rad.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

/// Below this lever arm (mm) the pinch balance is treated as degenerate.
pub const MIN_LEVER: f64 = 1e-9;
/// Angular perturbation used by [`virtual_work_check`].
pub const VIRTUAL_STEP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StaticsError {
    #[error("degenerate lever arm {lever} mm (d3 + L2 cos θ2 must exceed {MIN_LEVER})")]
    DegenerateLever { lever: f64 },
    #[error("contact distance {name} must be positive, got {value}")]
    ZeroContactDistance { name: &'static str, value: f64 },
    #[error("contact Jacobian is singular")]
    Singular,
    #[error("non-finite input {0}")]
    NonFinite(&'static str),
    #[error("stiffness must be non-negative, got {0}")]
    NegativeStiffness(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactGeometry {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationInput {
    /// Actuator torque on the drive rod, N·mm.
    pub torque: f64,
    /// Torsional stiffness of the limiting spring, N·mm/rad.
    pub k: f64,
}

/// Normal contact forces, positive into the object. `f1` is never computed
/// by the models here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceResult {
    pub f1: Option<f64>,
    pub f2: f64,
    pub f3: f64,
}

impl ForceResult {
    /// Planar force vectors `(F cos θ, −F sin θ)` on phalanges 2 and 3.
    pub fn vectors(&self, geom: &ContactGeometry) -> [Vector2<f64>; 2] {
        let v = |f: f64, t: f64| Vector2::new(f * t.cos(), -f * t.sin());
        [v(self.f2, geom.theta2), v(self.f3, geom.theta3)]
    }
}

fn finite(v: f64, name: &'static str) -> Result<(), StaticsError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(StaticsError::NonFinite(name))
    }
}

fn check_scoop_inputs(act: &ActuationInput, geom: &ContactGeometry, l2: f64) -> Result<(), StaticsError> {
    finite(act.torque, "T")?;
    finite(act.k, "k")?;
    finite(geom.theta2, "theta2")?;
    finite(geom.theta3, "theta3")?;
    finite(l2, "L2")?;
    if act.k < 0.0 {
        return Err(StaticsError::NegativeStiffness(act.k));
    }
    for (name, value) in [("d2", geom.d2), ("d3", geom.d3)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(StaticsError::ZeroContactDistance { name, value });
        }
    }
    Ok(())
}

/// Pinch-mode moment balance `T = F3 (d3 + L2 cos θ2)`.
pub fn pinch_force(torque: f64, geom: &ContactGeometry, l2: f64) -> Result<f64, StaticsError> {
    finite(torque, "T")?;
    let lever = geom.d3 + l2 * geom.theta2.cos();
    if !lever.is_finite() {
        return Err(StaticsError::NonFinite("lever"));
    }
    if lever <= MIN_LEVER {
        return Err(StaticsError::DegenerateLever { lever });
    }
    Ok(torque / lever)
}

/// Closed-form scoop forces.
///
/// F3 keeps the sign of `−kθ3`, so a positive distal angle gives a negative F3.
pub fn scoop_forces(act: &ActuationInput, geom: &ContactGeometry, l2: f64) -> Result<ForceResult, StaticsError> {
    check_scoop_inputs(act, geom, l2)?;
    let (d2, d3) = (geom.d2, geom.d3);
    let spring = act.k * geom.theta3;
    Ok(ForceResult {
        f1: None,
        f2: act.torque / d2 + spring * l2 * (geom.theta2 - geom.theta3).cos() / (d2 * d3),
        f3: -spring / d3,
    })
}

/// Contact Jacobian relating phalanx rotations to contact-point work.
pub fn contact_jacobian(geom: &ContactGeometry, l2: f64) -> Matrix2<f64> {
    Matrix2::new(geom.d2, 0.0, l2 * (geom.theta2 - geom.theta3).cos(), geom.d3)
}

/// Scoop forces from a direct solve of `[T, −kθ3] = [F2, F3] J`.
pub fn scoop_forces_via_system(
    act: &ActuationInput,
    geom: &ContactGeometry,
    l2: f64,
) -> Result<ForceResult, StaticsError> {
    check_scoop_inputs(act, geom, l2)?;
    let jt = contact_jacobian(geom, l2).transpose();
    let rhs = Vector2::new(act.torque, -act.k * geom.theta3);
    let f = jt.lu().solve(&rhs).ok_or(StaticsError::Singular)?;
    Ok(ForceResult { f1: None, f2: f[0], f3: f[1] })
}

/// `w(θ+δ) − w(θ−δ)` for `w = (sin, cos)`, written so that nothing cancels.
fn unit_difference(theta: f64, delta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), -theta.sin()) * (2.0 * delta.sin())
}

/// Central difference of the two contact-point maps under a rotation
/// `(δθ2, δθ3)`.
fn contact_displacements(geom: &ContactGeometry, l2: f64, d: [f64; 2]) -> [Vector2<f64>; 2] {
    let g2 = unit_difference(geom.theta2, d[0]) * geom.d2;
    let g3 = unit_difference(geom.theta2, d[0]) * l2 + unit_difference(geom.theta3, d[1]) * geom.d3;
    [g2, g3]
}

/// Virtual-work imbalance `T δθ2 − kθ3 δθ3 − (F⃗2·δG⃗2 + F⃗3·δG⃗3)` per unit
/// rotation, maximised over the two coordinate perturbations (N·mm).
pub fn virtual_work_check(act: &ActuationInput, geom: &ContactGeometry, l2: f64, forces: &ForceResult) -> f64 {
    let [f2, f3] = forces.vectors(geom);
    let h = VIRTUAL_STEP;
    [[h, 0.0], [0.0, h]]
        .into_iter()
        .map(|d| {
            let [g2, g3] = contact_displacements(geom, l2, d);
            let input = (act.torque * d[0] - act.k * geom.theta3 * d[1]) * 2.0;
            let output = f2.dot(&g2) + f3.dot(&g3);
            (input - output).abs() / (2.0 * h)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraspMode {
    Pinch,
    Scoop,
}

impl FromStr for GraspMode {
    type Err = SweepSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pinch" => Ok(GraspMode::Pinch),
            "scoop" => Ok(GraspMode::Scoop),
            other => Err(SweepSpecError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for GraspMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraspMode::Pinch => "pinch",
            GraspMode::Scoop => "scoop",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Theta2,
    Theta3,
    D2,
    D3,
    K,
    Torque,
}

impl SweepVar {
    pub const ALL: [SweepVar; 6] = [
        SweepVar::Theta2,
        SweepVar::Theta3,
        SweepVar::D2,
        SweepVar::D3,
        SweepVar::K,
        SweepVar::Torque,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Theta2 => "theta2",
            SweepVar::Theta3 => "theta3",
            SweepVar::D2 => "d2",
            SweepVar::D3 => "d3",
            SweepVar::K => "k",
            SweepVar::Torque => "torque",
        }
    }

    pub fn is_angle(self) -> bool {
        matches!(self, SweepVar::Theta2 | SweepVar::Theta3)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SweepSpecError {
    #[error("sweep spec must look like var=start:stop:n, got {0:?}")]
    Shape(String),
    #[error("unknown sweep variable {0:?} (expected theta2, theta3, d2, d3, k or torque)")]
    UnknownVar(String),
    #[error("bad number {0:?} in sweep spec")]
    Number(String),
    #[error("sweep needs at least one sample")]
    Empty,
    #[error("unknown grasp mode {0:?} (expected pinch or scoop)")]
    UnknownMode(String),
}

/// One swept input. Angles are in degrees, everything else in the model's
/// own units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.start];
        }
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                let t = i as f64 / last;
                if i + 1 == self.n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * t
                }
            })
            .collect()
    }
}

impl FromStr for SweepSpec {
    type Err = SweepSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, range) = s.split_once('=').ok_or_else(|| SweepSpecError::Shape(s.to_string()))?;
        let name = name.trim();
        let var = SweepVar::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| SweepSpecError::UnknownVar(name.to_string()))?;
        let parts: Vec<&str> = range.split(':').map(str::trim).collect();
        let [start, stop, n] = parts[..] else {
            return Err(SweepSpecError::Shape(s.to_string()));
        };
        let num = |t: &str| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(SweepSpecError::Number(t.to_string())),
        };
        let n: usize = n.parse().map_err(|_| SweepSpecError::Number(n.to_string()))?;
        if n == 0 {
            return Err(SweepSpecError::Empty);
        }
        Ok(SweepSpec { var, start: num(start)?, stop: num(stop)?, n })
    }
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}:{}:{}", self.var.name(), self.start, self.stop, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub var: SweepVar,
    /// Swept value in the spec's units (degrees for angles).
    pub value: f64,
    pub f2: Option<f64>,
    pub f3: Option<f64>,
    pub error: Option<StaticsError>,
}

impl SweepRow {
    pub fn status(&self) -> String {
        match &self.error {
            None => "ok".to_string(),
            Some(e) => e.to_string(),
        }
    }
}

/// Tabulates forces while one input varies and the rest stay fixed. Failed
/// points are kept as rows with an error.
pub fn force_sweep(
    mode: GraspMode,
    act: ActuationInput,
    spec: &SweepSpec,
    geom: ContactGeometry,
    l2: f64,
) -> Vec<SweepRow> {
    spec.values()
        .into_iter()
        .map(|value| {
            let (mut a, mut g) = (act, geom);
            match spec.var {
                SweepVar::Theta2 => g.theta2 = value.to_radians(),
                SweepVar::Theta3 => g.theta3 = value.to_radians(),
                SweepVar::D2 => g.d2 = value,
                SweepVar::D3 => g.d3 = value,
                SweepVar::K => a.k = value,
                SweepVar::Torque => a.torque = value,
            }
            let result = match mode {
                GraspMode::Pinch => pinch_force(a.torque, &g, l2).map(|f3| (None, f3)),
                GraspMode::Scoop => scoop_forces(&a, &g, l2).map(|r| (Some(r.f2), r.f3)),
            };
            match result {
                Ok((f2, f3)) => SweepRow { var: spec.var, value, f2, f3: Some(f3), error: None },
                Err(e) => SweepRow { var: spec.var, value, f2: None, f3: None, error: Some(e) },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn geom(theta2: f64, theta3: f64, d2: f64, d3: f64) -> ContactGeometry {
        ContactGeometry { d1: 0.0, d2, d3, theta1: 0.0, theta2, theta3 }
    }

    #[test]
    fn pinch_examples() {
        assert!((pinch_force(20.0, &geom(FRAC_PI_2, 0.0, 1.0, 10.0), 40.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(pinch_force(20.0, &geom(0.0, 0.0, 1.0, 10.0), 40.0).unwrap(), 0.4);
        assert_eq!(pinch_force(0.0, &geom(0.7, 0.0, 1.0, 3.0), 40.0).unwrap(), 0.0);
    }

    #[test]
    fn pinch_degenerate_lever() {
        let g = geom(std::f64::consts::PI, 0.0, 1.0, 40.0);
        assert!(matches!(pinch_force(20.0, &g, 40.0), Err(StaticsError::DegenerateLever { .. })));
    }

    #[test]
    fn scoop_trivial_cases() {
        let act = ActuationInput { torque: 20.0, k: 10.0 };
        let r = scoop_forces(&act, &geom(1.0, 0.0, 30.0, 15.0), 40.0).unwrap();
        assert_eq!((r.f2, r.f3), (20.0 / 30.0, 0.0));
        let free = ActuationInput { torque: 20.0, k: 0.0 };
        let r = scoop_forces(&free, &geom(1.0, 0.3, 30.0, 15.0), 40.0).unwrap();
        assert_eq!((r.f2, r.f3), (20.0 / 30.0, 0.0));
        let r = scoop_forces_via_system(&act, &geom(1.0, 0.0, 30.0, 15.0), 40.0).unwrap();
        assert_eq!((r.f2, r.f3), (20.0 / 30.0, 0.0));
    }

    #[test]
    fn scoop_paths_agree() {
        let act = ActuationInput { torque: 20.0, k: 10.0 };
        let g = geom(1.0, 0.3, 30.0, 15.0);
        let a = scoop_forces(&act, &g, 40.0).unwrap();
        let b = scoop_forces_via_system(&act, &g, 40.0).unwrap();
        assert!((a.f2 - b.f2).abs() <= 1e-12 && (a.f3 - b.f3).abs() <= 1e-12);
        assert!(virtual_work_check(&act, &g, 40.0, &a) <= 1e-8);
    }

    #[test]
    fn zero_contact_rejected() {
        let act = ActuationInput { torque: 20.0, k: 10.0 };
        let err = scoop_forces(&act, &geom(1.0, 0.3, 0.0, 15.0), 40.0).unwrap_err();
        assert_eq!(err, StaticsError::ZeroContactDistance { name: "d2", value: 0.0 });
        assert!(scoop_forces_via_system(&act, &geom(1.0, 0.3, 5.0, 0.0), 40.0).is_err());
    }

    #[test]
    fn virtual_work_oracle_behaviour() {
        let none = ActuationInput { torque: 0.0, k: 0.0 };
        let zero = ForceResult { f1: None, f2: 0.0, f3: 0.0 };
        assert_eq!(virtual_work_check(&none, &geom(0.4, 0.2, 10.0, 5.0), 40.0, &zero), 0.0);

        let act = ActuationInput { torque: 20.0, k: 10.0 };
        let g = geom(1.0, 0.3, 30.0, 15.0);
        let mut f = scoop_forces(&act, &g, 40.0).unwrap();
        f.f2 *= 1.1;
        assert!(virtual_work_check(&act, &g, 40.0, &f) > 1e-3);
    }

    #[test]
    fn sweep_spec_parsing() {
        let s: SweepSpec = "theta2=0:90:10".parse().unwrap();
        assert_eq!(s, SweepSpec { var: SweepVar::Theta2, start: 0.0, stop: 90.0, n: 10 });
        assert_eq!(s.to_string().parse::<SweepSpec>().unwrap(), s);
        assert_eq!("k = 1 : 2 : 1".parse::<SweepSpec>().unwrap().values(), vec![1.0]);
        assert!(matches!("phi=0:1:2".parse::<SweepSpec>(), Err(SweepSpecError::UnknownVar(_))));
        assert!(matches!("d2=0:1".parse::<SweepSpec>(), Err(SweepSpecError::Shape(_))));
        assert!(matches!("d2=0:1:0".parse::<SweepSpec>(), Err(SweepSpecError::Empty)));
        assert!(matches!("d2=0:nan:3".parse::<SweepSpec>(), Err(SweepSpecError::Number(_))));
        assert!(matches!("d2".parse::<SweepSpec>(), Err(SweepSpecError::Shape(_))));
    }

    #[test]
    fn sweep_values_hit_both_ends() {
        let v = "d3=0.1:0.7:7".parse::<SweepSpec>().unwrap().values();
        assert_eq!(v.len(), 7);
        assert_eq!((v[0], v[6]), (0.1, 0.7));
    }

    #[test]
    fn pinch_sweep_rows() {
        let spec: SweepSpec = "theta2=0:90:91".parse().unwrap();
        let rows = force_sweep(
            GraspMode::Pinch,
            ActuationInput { torque: 20.0, k: 0.0 },
            &spec,
            geom(0.0, 0.0, 20.0, 14.4),
            40.0,
        );
        assert_eq!(rows.len(), 91);
        assert_eq!(rows[0].f3, Some(20.0 / (14.4 + 40.0)));
        assert!(rows.windows(2).all(|w| w[1].f3.unwrap() > w[0].f3.unwrap()));
        assert!(rows.iter().all(|r| r.f2.is_none() && r.status() == "ok"));
    }

    #[test]
    fn failed_rows_are_marked() {
        let spec: SweepSpec = "d2=-1:1:3".parse().unwrap();
        let rows = force_sweep(
            GraspMode::Scoop,
            ActuationInput { torque: 20.0, k: 5.0 },
            &spec,
            geom(1.0, 0.2, 20.0, 10.0),
            40.0,
        );
        assert!(rows[0].error.is_some() && rows[1].error.is_some());
        assert!(rows[2].error.is_none() && rows[2].f2.is_some());
        assert!(rows[0].status().contains("d2"));
    }
}
