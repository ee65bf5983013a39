//! Simulation toolkit for a three-phalanx gripper finger whose fingertip is
//! guided along an exact vertical line by a Kempe-type linkage.
//!
//! Internal units are millimetres, radians, kilograms and seconds. Degrees
//! only appear in configuration files, CLI arguments and a few report fields
//! whose names end in `_deg`.

pub mod config;
pub mod dynamics;
pub mod format;
pub mod kinematics;
pub mod mechanism;
pub mod modeswitch;
pub mod params;
pub mod statics;

pub use params::FingerParams;
