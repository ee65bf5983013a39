//! Lagrangian dynamics of the planar three-link finger chain.
//!
//! Angles are relative joint angles as in [`crate::kinematics`], so link `i`
//! points along `θ1 + … + θi`. Gravity acts along −y. With lengths in mm and
//! masses in kg, energies and joint torques come out in kg·mm²/s²
//! (1 kg·mm²/s² = 1e-3 N·mm).

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};
use thiserror::Error;

use crate::params::FingerParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid dynamics parameters: {0}")]
    InvalidParams(String),
    #[error("time step must be positive and no longer than the duration")]
    BadStep,
    #[error("mass matrix is not positive definite at step {0}")]
    MassMatrix(usize),
    #[error("state became non-finite at step {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    pub lengths: [f64; 3],
    pub masses: [f64; 3],
    pub com_offsets: [f64; 3],
    /// Rotational inertia about each link's centre of mass, kg·mm².
    pub inertias: [f64; 3],
    pub gravity: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams::from(&FingerParams::default())
    }
}

impl From<&FingerParams> for DynamicsParams {
    fn from(p: &FingerParams) -> Self {
        DynamicsParams {
            lengths: p.lengths(),
            masses: p.masses,
            com_offsets: p.com_offsets,
            inertias: p.inertias,
            gravity: p.gravity,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        for i in 0..3 {
            let n = i + 1;
            if !(self.masses[i] > 0.0 && self.masses[i].is_finite()) {
                return Err(DynamicsError::InvalidParams(format!("m{n} must be positive")));
            }
            if !(self.inertias[i] > 0.0 && self.inertias[i].is_finite()) {
                return Err(DynamicsError::InvalidParams(format!("I{n} must be positive")));
            }
            if !(self.lengths[i] > 0.0 && self.lengths[i].is_finite()) {
                return Err(DynamicsError::InvalidParams(format!("L{n} must be positive")));
            }
            if !(0.0..=self.lengths[i]).contains(&self.com_offsets[i]) {
                return Err(DynamicsError::InvalidParams(format!("lc{n} must lie in [0, L{n}]")));
            }
        }
        if !self.gravity.is_finite() {
            return Err(DynamicsError::InvalidParams("g must be finite".into()));
        }
        Ok(())
    }

    /// Distance along link `l` used when locating the centre of mass of link `i`.
    fn reach(&self, i: usize, l: usize) -> f64 {
        if l < i {
            self.lengths[l]
        } else {
            self.com_offsets[i]
        }
    }
}

fn unit(a: f64) -> Vector2<f64> {
    Vector2::new(a.cos(), a.sin())
}

fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

fn absolute_angles(q: &Vector3<f64>) -> [f64; 3] {
    [q[0], q[0] + q[1], q[0] + q[1] + q[2]]
}

/// Planar linear-velocity Jacobians of the three centres of mass.
pub fn com_jacobians(p: &DynamicsParams, q: &Vector3<f64>) -> [Matrix2x3<f64>; 3] {
    let u = absolute_angles(q).map(unit);
    let mut out = [Matrix2x3::zeros(); 3];
    for (i, jac) in out.iter_mut().enumerate() {
        for j in 0..=i {
            let col: Vector2<f64> = (j..=i).map(|l| perp(u[l]) * p.reach(i, l)).sum();
            jac.set_column(j, &col);
        }
    }
    out
}

/// `∂J_i/∂q_k` for every link `i` and joint `k`.
fn com_jacobian_partials(p: &DynamicsParams, q: &Vector3<f64>) -> [[Matrix2x3<f64>; 3]; 3] {
    let u = absolute_angles(q).map(unit);
    let mut out = [[Matrix2x3::zeros(); 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for j in 0..=i {
                let col: Vector2<f64> = (j.max(k)..=i).map(|l| -u[l] * p.reach(i, l)).sum();
                out[i][k].set_column(j, &col);
            }
        }
    }
    out
}

/// Rows of ones selecting which joints turn link `i`.
fn angular_selector(i: usize) -> Vector3<f64> {
    Vector3::from_fn(|j, _| if j <= i { 1.0 } else { 0.0 })
}

/// Per-link kinetic energies `½mᵢ vᵢᵀvᵢ + ½Iᵢωᵢ²`.
pub fn link_kinetic_energies(p: &DynamicsParams, q: &Vector3<f64>, qdot: &Vector3<f64>) -> [f64; 3] {
    let jac = com_jacobians(p, q);
    std::array::from_fn(|i| {
        let v = jac[i] * qdot;
        let w = angular_selector(i).dot(qdot);
        0.5 * p.masses[i] * v.norm_squared() + 0.5 * p.inertias[i] * w * w
    })
}

pub fn kinetic_energy(p: &DynamicsParams, q: &Vector3<f64>, qdot: &Vector3<f64>) -> f64 {
    link_kinetic_energies(p, q, qdot).iter().sum()
}

pub fn potential_energy(p: &DynamicsParams, q: &Vector3<f64>) -> f64 {
    let [s1, s12, s123] = absolute_angles(q).map(f64::sin);
    let [l1, l2, _] = p.lengths;
    let [m1, m2, m3] = p.masses;
    let [c1, c2, c3] = p.com_offsets;
    p.gravity * (m1 * c1 * s1 + m2 * (l1 * s1 + c2 * s12) + m3 * (l1 * s1 + l2 * s12 + c3 * s123))
}

pub fn mass_matrix(p: &DynamicsParams, q: &Vector3<f64>) -> Matrix3<f64> {
    let jac = com_jacobians(p, q);
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let a = angular_selector(i);
        m += jac[i].transpose() * jac[i] * p.masses[i] + a * a.transpose() * p.inertias[i];
    }
    m
}

/// `∂M/∂q_k`, k = 0..3.
pub fn mass_matrix_partials(p: &DynamicsParams, q: &Vector3<f64>) -> [Matrix3<f64>; 3] {
    let jac = com_jacobians(p, q);
    let djac = com_jacobian_partials(p, q);
    let mut out = [Matrix3::zeros(); 3];
    for (k, dm) in out.iter_mut().enumerate() {
        for i in 0..3 {
            let t = djac[i][k].transpose() * jac[i] * p.masses[i];
            *dm += t + t.transpose();
        }
    }
    out
}

pub fn gravity_vector(p: &DynamicsParams, q: &Vector3<f64>) -> Vector3<f64> {
    let [c1, c12, c123] = absolute_angles(q).map(f64::cos);
    let [l1, l2, _] = p.lengths;
    let [m1, m2, m3] = p.masses;
    let [r1, r2, r3] = p.com_offsets;
    let g = p.gravity;
    let g3 = g * m3 * r3 * c123;
    let g2 = g * (m2 * r2 * c12 + m3 * l2 * c12) + g3;
    let g1 = g * (m1 * r1 * c1 + m2 * l1 * c1 + m3 * l1 * c1) + g2;
    Vector3::new(g1, g2, g3)
}

/// Coriolis/centrifugal matrix from the Christoffel symbols of `M`.
pub fn coriolis_matrix(p: &DynamicsParams, q: &Vector3<f64>, qdot: &Vector3<f64>) -> Matrix3<f64> {
    let dm = mass_matrix_partials(p, q);
    Matrix3::from_fn(|k, j| {
        (0..3)
            .map(|i| 0.5 * (dm[i][(k, j)] + dm[j][(k, i)] - dm[k][(i, j)]) * qdot[i])
            .sum()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsTerms {
    pub m: Matrix3<f64>,
    pub c: Matrix3<f64>,
    pub g: Vector3<f64>,
}

pub fn dynamics_terms(p: &DynamicsParams, q: &Vector3<f64>, qdot: &Vector3<f64>) -> DynamicsTerms {
    DynamicsTerms {
        m: mass_matrix(p, q),
        c: coriolis_matrix(p, q, qdot),
        g: gravity_vector(p, q),
    }
}

/// `τ = M q̈ + C q̇ + G`, in kg·mm²/s².
pub fn inverse_dynamics(p: &DynamicsParams, q: &Vector3<f64>, qdot: &Vector3<f64>, qddot: &Vector3<f64>) -> Vector3<f64> {
    let t = dynamics_terms(p, q, qdot);
    t.m * qddot + t.c * qdot + t.g
}

/// `q̈ = M⁻¹(τ − C q̇ − G)`; `None` if `M` is not positive definite.
pub fn forward_dynamics(
    p: &DynamicsParams,
    q: &Vector3<f64>,
    qdot: &Vector3<f64>,
    tau: &Vector3<f64>,
) -> Option<Vector3<f64>> {
    let t = dynamics_terms(p, q, qdot);
    t.m.cholesky().map(|ch| ch.solve(&(tau - t.c * qdot - t.g)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSample {
    pub t: f64,
    pub q: Vector3<f64>,
    pub qdot: Vector3<f64>,
    pub kinetic: f64,
    pub potential: f64,
}

impl SimSample {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// Unforced motion from `(q0, qdot0)` integrated with classical RK4.
/// Returns the initial state plus one sample per step.
pub fn simulate_free(
    p: &DynamicsParams,
    q0: Vector3<f64>,
    qdot0: Vector3<f64>,
    duration: f64,
    dt: f64,
) -> Result<Vec<SimSample>, DynamicsError> {
    p.validate()?;
    if !(dt > 0.0 && duration >= dt && duration.is_finite()) {
        return Err(DynamicsError::BadStep);
    }
    let steps = (duration / dt).round() as usize;
    let zero = Vector3::zeros();
    let sample = |t: f64, q: Vector3<f64>, qd: Vector3<f64>| SimSample {
        t,
        q,
        qdot: qd,
        kinetic: kinetic_energy(p, &q, &qd),
        potential: potential_energy(p, &q),
    };
    let accel = |step: usize, q: &Vector3<f64>, qd: &Vector3<f64>| {
        forward_dynamics(p, q, qd, &zero).ok_or(DynamicsError::MassMatrix(step))
    };

    let mut out = Vec::with_capacity(steps + 1);
    let (mut q, mut qd) = (q0, qdot0);
    out.push(sample(0.0, q, qd));
    for step in 1..=steps {
        let k1v = accel(step, &q, &qd)?;
        let k1x = qd;
        let k2v = accel(step, &(q + k1x * (dt / 2.0)), &(qd + k1v * (dt / 2.0)))?;
        let k2x = qd + k1v * (dt / 2.0);
        let k3v = accel(step, &(q + k2x * (dt / 2.0)), &(qd + k2v * (dt / 2.0)))?;
        let k3x = qd + k2v * (dt / 2.0);
        let k4v = accel(step, &(q + k3x * dt), &(qd + k3v * dt))?;
        let k4x = qd + k3v * dt;
        q += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
        qd += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        if !(q.iter().chain(qd.iter()).all(|v| v.is_finite())) {
            return Err(DynamicsError::NonFinite(step));
        }
        out.push(sample(step as f64 * dt, q, qd));
    }
    Ok(out)
}

/// Largest `|E(t) − E(0)|` relative to `|E(0)|`; absolute when `E(0) = 0`.
pub fn energy_drift(trace: &[SimSample]) -> f64 {
    let Some(first) = trace.first() else {
        return 0.0;
    };
    let e0 = first.total();
    let worst = trace.iter().map(|s| (s.total() - e0).abs()).fold(0.0, f64::max);
    if e0 == 0.0 {
        worst
    } else {
        worst / e0.abs()
    }
}
