//! Run configuration read from TOML.
//!
//! Every key is optional except `schema_version`; anything left out falls
//! back to the defaults in [`FingerParams`]. Unknown keys are rejected.
//! Angles are given in degrees.
//!
//! ```toml
//! schema_version = 1
//!
//! [geometry]
//! l1 = 80.0
//! l2 = 40.0
//! l3 = 20.0
//!
//! [statics]
//! torque = 20.0
//! pinch_sweep = "theta2=0:90:91"
//! ```

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;
use toml::Spanned;

use crate::mechanism::{Axis, Bar, Ground, Lever, LinkageTopology, MechanismError, Point, SolverOptions};
use crate::modeswitch::SurfaceScenario;
use crate::params::{rod_inertias, FingerParams};
use crate::statics::{ActuationInput, ContactGeometry, SweepSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem with its 1-based position in the source, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl ConfigError {
    fn at(src: &str, span: Option<Range<usize>>, message: impl Into<String>) -> Self {
        let (line, column) = match span {
            Some(r) => {
                let (l, c) = line_col(src, r.start);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        ConfigError { message: message.into(), line, column }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let mut offset = offset.min(src.len());
    while !src.is_char_boundary(offset) {
        offset -= 1;
    }
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[start..].chars().count() + 1)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<Spanned<i64>>,
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    modeswitch: RawModeSwitch,
    #[serde(default)]
    dynamics: RawDynamics,
    #[serde(default)]
    statics: RawStatics,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    tolerances: RawTolerances,
    topology: Option<Spanned<RawTopology>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    l1: Option<f64>,
    l2: Option<f64>,
    l3: Option<f64>,
    cj: Option<f64>,
    cg: Option<f64>,
    fg: Option<f64>,
    neutral_crank_deg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModeSwitch {
    dh1: Option<f64>,
    dh2: Option<f64>,
    dtheta_c1_deg: Option<f64>,
    q1_deg: Option<f64>,
    q2_deg: Option<f64>,
    q3_deg: Option<f64>,
    k1: Option<f64>,
    k2: Option<f64>,
    half_span: Option<f64>,
    surface_height: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    masses: Option<[f64; 3]>,
    com_offsets: Option<[f64; 3]>,
    inertias: Option<[f64; 3]>,
    gravity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStatics {
    torque: Option<f64>,
    k: Option<f64>,
    d1: Option<f64>,
    d2: Option<f64>,
    d3: Option<f64>,
    theta1_deg: Option<f64>,
    theta2_deg: Option<f64>,
    theta3_deg: Option<f64>,
    pinch_sweep: Option<Spanned<String>>,
    scoop_sweep: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    samples: Option<Spanned<i64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    solver_tolerance: Option<f64>,
    max_iterations: Option<usize>,
    max_halvings: Option<u32>,
    max_sensitivity: Option<f64>,
    min_rcond: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarSpec {
    pub a: String,
    pub b: String,
    /// Defaults to the distance between the two reference points.
    pub length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeverSpec {
    pub joint: String,
    pub from: String,
    pub to: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisSpec {
    X,
    Y,
}

impl From<AxisSpec> for Axis {
    fn from(a: AxisSpec) -> Self {
        match a {
            AxisSpec::X => Axis::X,
            AxisSpec::Y => Axis::Y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundSpec {
    pub joint: String,
    /// Fixes only this coordinate; both when absent.
    pub axis: Option<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverSpec {
    pub joint: String,
    pub axis: AxisSpec,
}

/// A user-defined linkage. Reference coordinates give the pose at driver
/// value zero; grounds hold joints at their reference coordinates.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTopology {
    pub joints: Vec<JointSpec>,
    pub bars: Vec<BarSpec>,
    #[serde(default)]
    pub levers: Vec<LeverSpec>,
    pub ground: Vec<GroundSpec>,
    pub driver: DriverSpec,
    pub tip: String,
    pub tip_base: String,
}

impl RawTopology {
    pub fn build(&self, options: SolverOptions) -> Result<LinkageTopology, MechanismError> {
        let names: Vec<String> = self.joints.iter().map(|j| j.name.clone()).collect();
        let reference: Vec<Point> = self.joints.iter().map(|j| Point::new(j.x, j.y)).collect();
        let idx = |n: &str| {
            names
                .iter()
                .position(|x| x == n)
                .ok_or_else(|| MechanismError::InvalidTopology(format!("unknown joint {n:?}")))
        };
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(MechanismError::InvalidTopology(format!("duplicate joint {n:?}")));
            }
        }
        let mut bars = Vec::with_capacity(self.bars.len());
        for b in &self.bars {
            let (a, bb) = (idx(&b.a)?, idx(&b.b)?);
            let rest_length = b.length.unwrap_or_else(|| (reference[a] - reference[bb]).norm());
            bars.push(Bar { a, b: bb, rest_length });
        }
        let levers = self
            .levers
            .iter()
            .map(|l| Ok(Lever { joint: idx(&l.joint)?, from: idx(&l.from)?, to: idx(&l.to)?, ratio: l.ratio }))
            .collect::<Result<Vec<_>, MechanismError>>()?;
        let grounded = self
            .ground
            .iter()
            .map(|g| {
                let joint = idx(&g.joint)?;
                Ok(Ground { joint, at: reference[joint], axis: g.axis.map(Axis::from) })
            })
            .collect::<Result<Vec<_>, MechanismError>>()?;
        let dj = idx(&self.driver.joint)?;
        let axis = Axis::from(self.driver.axis);
        let origin = match axis {
            Axis::X => reference[dj].x,
            Axis::Y => reference[dj].y,
        };
        let driver = crate::mechanism::Driver { joint: dj, axis, origin };
        let (tip, tip_base) = (idx(&self.tip)?, idx(&self.tip_base)?);
        LinkageTopology::new_with(names, bars, levers, grounded, driver, reference, tip, tip_base, options)
    }
}

/// Contact and actuation defaults for force sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticsConfig {
    pub actuation: ActuationInput,
    pub geometry: ContactGeometry,
    pub pinch_sweep: SweepSpec,
    pub scoop_sweep: SweepSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub finger: FingerParams,
    pub scenario: SurfaceScenario,
    pub statics: StaticsConfig,
    pub output_dir: Option<PathBuf>,
    pub samples: Option<usize>,
    pub solver: SolverOptions,
    pub topology: Option<RawTopology>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_str("schema_version = 1").expect("built-in defaults")
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| ConfigError::at(src, e.span(), e.message()))?;
        resolve(src, raw)
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            message: format!("cannot read {}: {e}", path.display()),
            line: None,
            column: None,
        })?;
        src.parse()
    }

    /// The preset linkage, or the configured one when a `[topology]` section
    /// is present.
    pub fn linkage(&self) -> Result<LinkageTopology, MechanismError> {
        match &self.topology {
            Some(t) => t.build(self.solver),
            None => crate::mechanism::spark_preset_with(&self.finger, self.solver),
        }
    }
}

fn resolve(src: &str, raw: RawConfig) -> Result<RunConfig, ConfigError> {
    match &raw.schema_version {
        None => return Err(ConfigError::at(src, Some(0..0), "missing schema_version")),
        Some(v) if *v.get_ref() != SCHEMA_VERSION as i64 => {
            return Err(ConfigError::at(
                src,
                Some(v.span()),
                format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", v.get_ref()),
            ))
        }
        Some(_) => {}
    }

    let mut f = FingerParams::default();
    let g = &raw.geometry;
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut f.l1, g.l1);
    set(&mut f.l2, g.l2);
    set(&mut f.l3, g.l3);
    set(&mut f.cj, g.cj);
    set(&mut f.cg, g.cg);
    set(&mut f.fg, g.fg);
    set(&mut f.neutral_crank_deg, g.neutral_crank_deg);
    let m = &raw.modeswitch;
    set(&mut f.dh1, m.dh1);
    set(&mut f.dh2, m.dh2);
    set(&mut f.dtheta_c1_deg, m.dtheta_c1_deg);
    set(&mut f.q1_deg, m.q1_deg);
    set(&mut f.q2_deg, m.q2_deg);
    set(&mut f.q3_deg, m.q3_deg);
    set(&mut f.k1, m.k1);
    set(&mut f.k2, m.k2);
    let d = &raw.dynamics;
    let lengths = f.lengths();
    f.masses = d.masses.unwrap_or(f.masses);
    f.com_offsets = d.com_offsets.unwrap_or([lengths[0] / 2.0, lengths[1] / 2.0, lengths[2] / 2.0]);
    f.inertias = d.inertias.unwrap_or_else(|| rod_inertias(f.masses, lengths));
    set(&mut f.gravity, d.gravity);

    let defaults = SurfaceScenario::default();
    let scenario = SurfaceScenario {
        half_span: m.half_span.unwrap_or(defaults.half_span),
        surface_height: m.surface_height.unwrap_or(defaults.surface_height),
        ..defaults
    };

    let s = &raw.statics;
    let sweep = |v: &Option<Spanned<String>>, default: &str| -> Result<SweepSpec, ConfigError> {
        match v {
            None => Ok(default.parse().expect("valid default sweep")),
            Some(sp) => sp.get_ref().parse().map_err(|e: crate::statics::SweepSpecError| {
                ConfigError::at(src, Some(sp.span()), e.to_string())
            }),
        }
    };
    let statics = StaticsConfig {
        actuation: ActuationInput { torque: s.torque.unwrap_or(20.0), k: s.k.unwrap_or(f.k2) },
        geometry: ContactGeometry {
            d1: s.d1.unwrap_or(f.l1 / 2.0),
            d2: s.d2.unwrap_or(f.l2 / 2.0),
            d3: s.d3.unwrap_or(f.cj / 2.0),
            theta1: s.theta1_deg.unwrap_or(0.0).to_radians(),
            theta2: s.theta2_deg.unwrap_or(60.0).to_radians(),
            theta3: s.theta3_deg.unwrap_or(20.0).to_radians(),
        },
        pinch_sweep: sweep(&s.pinch_sweep, "theta2=0:90:91")?,
        scoop_sweep: sweep(&s.scoop_sweep, "theta3=0:30:31")?,
    };

    let samples = match &raw.output.samples {
        None => None,
        Some(v) if *v.get_ref() >= 1 => Some(*v.get_ref() as usize),
        Some(v) => return Err(ConfigError::at(src, Some(v.span()), "output.samples must be at least 1")),
    };

    let t = &raw.tolerances;
    let base = SolverOptions::default();
    let solver = SolverOptions {
        tolerance: t.solver_tolerance.unwrap_or(base.tolerance),
        max_iterations: t.max_iterations.unwrap_or(base.max_iterations),
        max_halvings: t.max_halvings.unwrap_or(base.max_halvings),
        max_sensitivity: t.max_sensitivity.unwrap_or(base.max_sensitivity),
        min_rcond: t.min_rcond.unwrap_or(base.min_rcond),
    };
    if !(solver.tolerance > 0.0 && solver.max_sensitivity > 0.0 && solver.min_rcond >= 0.0) {
        return Err(ConfigError::at(src, None, "tolerances must be positive"));
    }

    Ok(RunConfig {
        finger: f,
        scenario,
        statics,
        output_dir: raw.output.dir,
        samples,
        solver,
        topology: raw.topology.map(Spanned::into_inner),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gives_defaults() {
        let c: RunConfig = "schema_version = 1\n".parse().unwrap();
        assert_eq!(c.finger, FingerParams::default());
        assert_eq!(c.statics.actuation, ActuationInput { torque: 20.0, k: 50.0 });
        assert_eq!((c.statics.geometry.d2, c.statics.geometry.d3), (20.0, 14.4));
        assert_eq!(c.scenario.half_span, 60.0);
        assert_eq!(c, RunConfig::default());
        assert!(c.topology.is_none());
    }

    #[test]
    fn overrides_apply() {
        let c: RunConfig = "schema_version = 1\n[geometry]\nl3 = 21\n[dynamics]\nmasses = [1, 2, 3]\n[output]\nsamples = 7\n"
            .parse()
            .unwrap();
        assert_eq!(c.finger.l3, 21.0);
        assert_eq!(c.finger.masses, [1.0, 2.0, 3.0]);
        assert_eq!(c.finger.inertias[2], 3.0 * 21.0 * 21.0 / 12.0);
        assert_eq!(c.finger.com_offsets[2], 10.5);
        assert_eq!(c.samples, Some(7));
    }

    #[test]
    fn unknown_key_reports_position() {
        let e = "schema_version = 1\n[geometry]\nl4 = 3\n".parse::<RunConfig>().unwrap_err();
        assert_eq!((e.line, e.column), (Some(3), Some(1)));
        assert!(e.message.contains("l4"), "{e}");
    }

    #[test]
    fn syntax_error_reports_position() {
        let e = "schema_version = 1\n[geometry\n".parse::<RunConfig>().unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.to_string().starts_with("line 2, column"));
    }

    #[test]
    fn schema_version_checked() {
        let e = "[geometry]\nl1 = 80\n".parse::<RunConfig>().unwrap_err();
        assert!(e.message.contains("schema_version"));
        let e = "\nschema_version = 2\n".parse::<RunConfig>().unwrap_err();
        assert_eq!((e.line, e.column), (Some(2), Some(18)));
    }

    #[test]
    fn bad_sweep_is_located() {
        let e = "schema_version = 1\n[statics]\npinch_sweep = \"phi=0:1:2\"\n".parse::<RunConfig>().unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("phi"));
    }

    #[test]
    fn four_bar_topology_from_config() {
        let src = r#"
schema_version = 1
[topology]
joints = [
  { name = "O", x = 0, y = 0 },
  { name = "A", x = 10, y = 0 },
  { name = "B", x = 35, y = 20 },
  { name = "Q", x = 40, y = 0 },
]
bars = [ { a = "O", b = "A" }, { a = "A", b = "B" }, { a = "B", b = "Q" } ]
ground = [ { joint = "O" }, { joint = "Q" } ]
driver = { joint = "A", axis = "y" }
tip = "B"
tip_base = "A"
"#;
        let c: RunConfig = src.parse().unwrap();
        let top = c.linkage().unwrap();
        assert_eq!(top.mobility(), 1);
        assert_eq!(top.bars[1].rest_length, 25.0f64.hypot(20.0));
        let s = crate::mechanism::solve_position(&top, 2.0, &top.reference).unwrap();
        assert!((s.point(1).y - 2.0).abs() < 1e-12);
        assert!(top.max_bar_error(&s) < 1e-9);
    }

    #[test]
    fn topology_with_unknown_joint_fails() {
        let src = r#"
schema_version = 1
[topology]
joints = [ { name = "O", x = 0, y = 0 } ]
bars = [ { a = "O", b = "Z" } ]
ground = [ { joint = "O" } ]
driver = { joint = "O", axis = "x" }
tip = "O"
tip_base = "O"
"#;
        let c: RunConfig = src.parse().unwrap();
        assert!(matches!(c.linkage(), Err(MechanismError::InvalidTopology(m)) if m.contains("Z")));
    }

    #[test]
    fn solver_tolerances_flow_through() {
        let c: RunConfig = "schema_version = 1\n[tolerances]\nmax_sensitivity = 12.5\n".parse().unwrap();
        assert_eq!(c.solver.max_sensitivity, 12.5);
        assert_eq!(c.linkage().unwrap().options.max_sensitivity, 12.5);
    }
}
