//! Quasi-static descent model of the passive pinch to scoop transition.
//!
//! `depth` is how far the wrist has moved down since the fingertip first
//! touched the surface. Up to `dh1` the fingertip stays on the surface and
//! the linkage is back-driven against spring k1 until stopper Q3 meets the
//! distal segment. Over the next `dh2` the distal segment rotates inward
//! against spring k2 by up to `dtheta_c1`.

use std::fmt;

use thiserror::Error;

use crate::params::FingerParams;

/// Depth comparisons treat values this close (mm) as equal.
pub const DEPTH_TOL: f64 = 1e-9;
/// Wrist tilt envelope, degrees.
pub const MAX_TILT_DEG: f64 = 45.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModeSwitchError {
    #[error("depth must be a non-negative number, got {0}")]
    NegativeDepth(f64),
    #[error("tilt {0} deg is outside the 0..=45 deg envelope")]
    Envelope(f64),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid mode-switch parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    PinchContact,
    StopperEngaged,
    Scooping,
    ScoopComplete,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::PinchContact => "PinchContact",
            Mode::StopperEngaged => "StopperEngaged",
            Mode::Scooping => "Scooping",
            Mode::ScoopComplete => "ScoopComplete",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentState {
    pub mode: Mode,
    pub depth: f64,
    /// Inward rotation of the distal segment, degrees.
    pub distal_rotation: f64,
    /// Change of the joint angle at B, rad.
    pub spring1_deflection: f64,
    /// Deflection of the distal spring, rad.
    pub spring2_deflection: f64,
}

impl DescentState {
    /// Angle of the distal segment against its stopper, degrees. Equals Q2
    /// while the segment is held straight.
    pub fn distal_segment_angle_deg(&self, params: &FingerParams) -> f64 {
        params.q2_deg - self.distal_rotation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceScenario {
    /// Height of the contacted surface, mm, measured upward.
    pub surface_height: f64,
    pub tilt_deg: f64,
    /// When false both fingers meet the surface together whatever the tilt.
    pub asymmetric: bool,
    /// Distance from the wrist axis to each finger, mm.
    pub half_span: f64,
}

impl Default for SurfaceScenario {
    fn default() -> Self {
        SurfaceScenario { surface_height: 0.0, tilt_deg: 0.0, asymmetric: false, half_span: 60.0 }
    }
}

impl SurfaceScenario {
    pub fn validate(&self) -> Result<(), ModeSwitchError> {
        if !(0.0..=MAX_TILT_DEG).contains(&self.tilt_deg) {
            return Err(ModeSwitchError::Envelope(self.tilt_deg));
        }
        if !(self.half_span >= 0.0 && self.half_span.is_finite()) {
            return Err(ModeSwitchError::InvalidParams("half span must be non-negative".into()));
        }
        Ok(())
    }

    /// Descent depth of a fingertip at `tip_height`, zero above the surface.
    pub fn contact_depth(&self, tip_height: f64) -> f64 {
        (self.surface_height - tip_height).max(0.0)
    }

    /// Depth offset of each finger relative to the wrist centre.
    pub fn finger_offset(&self) -> f64 {
        if self.asymmetric {
            self.half_span * self.tilt_deg.to_radians().sin()
        } else {
            0.0
        }
    }
}

fn check_params(p: &FingerParams) -> Result<(), ModeSwitchError> {
    let ok = |v: f64| v > 0.0 && v.is_finite();
    if !(ok(p.dh1) && ok(p.dh2)) {
        return Err(ModeSwitchError::InvalidParams("dh1 and dh2 must be positive".into()));
    }
    if !(p.dtheta_c1_deg >= 0.0 && p.dtheta_c1_deg.is_finite()) {
        return Err(ModeSwitchError::InvalidParams("dtheta_c1 must be non-negative".into()));
    }
    if !(ok(p.l2) && p.neutral_crank_deg > 0.0 && p.neutral_crank_deg < 90.0) {
        return Err(ModeSwitchError::InvalidParams("L2 and neutral crank out of range".into()));
    }
    if p.dh1 > 2.0 * p.l2 * p.neutral_crank().sin() {
        return Err(ModeSwitchError::InvalidParams("dh1 exceeds the linkage's upward travel".into()));
    }
    Ok(())
}

/// The default ramp profile: rotation fraction equals depth fraction.
pub fn linear_ramp(s: f64) -> f64 {
    s
}

/// Change of the interior angle at B while the fingertip is held on the
/// surface and the wrist drops by `depth`.
fn crank_deflection(p: &FingerParams, depth: f64) -> f64 {
    if depth <= 0.0 {
        return 0.0;
    }
    let phi0 = p.neutral_crank();
    let phi = (phi0.sin() - depth / (2.0 * p.l2)).asin();
    2.0 * (phi0 - phi)
}

pub fn descend(params: &FingerParams, scenario: &SurfaceScenario, depth: f64) -> Result<DescentState, ModeSwitchError> {
    descend_with(params, scenario, depth, linear_ramp)
}

/// [`descend`] with a custom rotation profile mapping the scoop-phase depth
/// fraction in `[0, 1]` to a rotation fraction in `[0, 1]`. The profile must
/// be nondecreasing with `profile(0) = 0` and `profile(1) = 1`.
pub fn descend_with(
    params: &FingerParams,
    scenario: &SurfaceScenario,
    depth: f64,
    profile: impl Fn(f64) -> f64,
) -> Result<DescentState, ModeSwitchError> {
    if !(depth >= 0.0 && depth.is_finite()) {
        return Err(ModeSwitchError::NegativeDepth(depth));
    }
    check_params(params)?;
    scenario.validate()?;
    let (dh1, dh2) = (params.dh1, params.dh2);
    let full = dh1 + dh2;

    let mode = if depth < dh1 - DEPTH_TOL {
        Mode::PinchContact
    } else if depth <= dh1 + DEPTH_TOL {
        Mode::StopperEngaged
    } else if depth < full - DEPTH_TOL {
        Mode::Scooping
    } else {
        Mode::ScoopComplete
    };
    let distal_rotation = match mode {
        Mode::PinchContact | Mode::StopperEngaged => 0.0,
        Mode::Scooping => params.dtheta_c1_deg * profile(((depth - dh1) / dh2).clamp(0.0, 1.0)).clamp(0.0, 1.0),
        Mode::ScoopComplete => params.dtheta_c1_deg,
    };
    Ok(DescentState {
        mode,
        depth,
        distal_rotation,
        spring1_deflection: crank_deflection(params, depth.min(dh1)),
        spring2_deflection: distal_rotation.to_radians(),
    })
}

pub fn mode_trace(
    params: &FingerParams,
    scenario: &SurfaceScenario,
    max_depth: f64,
    n_samples: usize,
) -> Result<Vec<DescentState>, ModeSwitchError> {
    if n_samples < 2 {
        return Err(ModeSwitchError::TooFewSamples(n_samples));
    }
    depth_samples(max_depth, n_samples)?
        .into_iter()
        .map(|d| descend(params, scenario, d))
        .collect()
}

/// `n` evenly spaced depths from 0 to `max_depth`, ending exactly on it.
pub fn depth_samples(max_depth: f64, n: usize) -> Result<Vec<f64>, ModeSwitchError> {
    if !(max_depth >= 0.0 && max_depth.is_finite()) {
        return Err(ModeSwitchError::NegativeDepth(max_depth));
    }
    if n < 2 {
        return Err(ModeSwitchError::TooFewSamples(n));
    }
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i + 1 == n { max_depth } else { max_depth * i as f64 / last })
        .collect())
}

/// States of fingers A and B when the wrist centre has descended
/// `center_depth`. Finger A leads by the tilt projection, finger B lags.
pub fn asymmetric_pose(
    params: &FingerParams,
    scenario: &SurfaceScenario,
    center_depth: f64,
) -> Result<(DescentState, DescentState), ModeSwitchError> {
    scenario.validate()?;
    if !(center_depth >= 0.0 && center_depth.is_finite()) {
        return Err(ModeSwitchError::NegativeDepth(center_depth));
    }
    let off = scenario.finger_offset();
    let a = descend(params, scenario, center_depth + off)?;
    let b = descend(params, scenario, (center_depth - off).max(0.0))?;
    Ok((a, b))
}

/// Spring moments `(k1 · deflection1, k2 · deflection2)`, N·mm.
pub fn spring_moments(params: &FingerParams, state: &DescentState) -> (f64, f64) {
    (params.k1 * state.spring1_deflection, params.k2 * state.spring2_deflection)
}
