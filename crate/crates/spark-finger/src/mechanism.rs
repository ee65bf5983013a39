//! Planar bar-joint position analysis and the finger linkage preset.
//!
//! A [`LinkageTopology`] is a set of named joints tied together by rigid
//! bars, collinear lever points, ground constraints and a single driver. The
//! solver stacks every constraint residual into one square system and runs
//! Newton iterations with an analytic Jacobian.
//!
//! The finger preset couples two parallelograms (which keep the distal link
//! at a fixed orientation) with a rhombus whose far corner is held on a
//! vertical line by a Kempe reversor built from two similar
//! contraparallelograms with sides in the ratio 1 : 2 : 4.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Vector2};
use thiserror::Error;

use crate::params::FingerParams;

pub type Point = Vector2<f64>;

const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        source: Box<MechanismError>,
    },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("at least two samples are required")]
    TooFewSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub a: usize,
    pub b: usize,
    pub rest_length: f64,
}

/// A joint carried on the line through two others: `joint = from + ratio·(to − from)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lever {
    pub joint: usize,
    pub from: usize,
    pub to: usize,
    pub ratio: f64,
}

/// Fixes a joint to `at`, either fully (`axis = None`) or along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ground {
    pub joint: usize,
    pub at: Point,
    pub axis: Option<Axis>,
}

/// Prescribes one coordinate of a joint: `coord = origin + driver_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Driver {
    pub joint: usize,
    pub axis: Axis,
    pub origin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkageState {
    pub coords: Vec<Point>,
    pub residual_norm: f64,
}

impl LinkageState {
    pub fn point(&self, joint: usize) -> Point {
        self.coords[joint]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Absolute residual tolerance in mm.
    pub tolerance: f64,
    pub max_halvings: u32,
    /// Largest joint displacement per unit driver displacement accepted
    /// before a configuration is treated as singular.
    pub max_sensitivity: f64,
    /// Smallest accepted ratio of extreme singular values of the
    /// constraint Jacobian.
    pub min_rcond: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 100,
            tolerance: 1e-10,
            max_halvings: 20,
            max_sensitivity: 8.0,
            min_rcond: 1e-6,
        }
    }
}

/// Driver interval over which the linkage stays on its assembly branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stroke {
    pub min: f64,
    pub max: f64,
}

impl Stroke {
    pub fn len(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone)]
pub struct LinkageTopology {
    pub joints: Vec<String>,
    pub bars: Vec<Bar>,
    pub levers: Vec<Lever>,
    pub grounded: Vec<Ground>,
    pub driver: Driver,
    /// Assembled pose at driver value zero.
    pub reference: LinkageState,
    /// Output point and the joint it is measured from for orientation.
    pub tip: usize,
    pub tip_base: usize,
    pub options: SolverOptions,
    stroke: OnceLock<Result<Stroke, MechanismError>>,
}

impl LinkageTopology {
    /// Builds a topology and polishes `reference` into an exact assembly.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        joints: Vec<String>,
        bars: Vec<Bar>,
        levers: Vec<Lever>,
        grounded: Vec<Ground>,
        driver: Driver,
        reference: Vec<Point>,
        tip: usize,
        tip_base: usize,
    ) -> Result<Self, MechanismError> {
        let options = SolverOptions::default();
        Self::new_with(joints, bars, levers, grounded, driver, reference, tip, tip_base, options)
    }

    /// [`LinkageTopology::new`] with explicit solver options.
    #[allow(clippy::too_many_arguments)]
    pub fn new_with(
        joints: Vec<String>,
        bars: Vec<Bar>,
        levers: Vec<Lever>,
        grounded: Vec<Ground>,
        driver: Driver,
        reference: Vec<Point>,
        tip: usize,
        tip_base: usize,
        options: SolverOptions,
    ) -> Result<Self, MechanismError> {
        let n = joints.len();
        let bad = |msg: String| Err(MechanismError::InvalidTopology(msg));
        if reference.len() != n {
            return bad(format!("{} reference points for {} joints", reference.len(), n));
        }
        for b in &bars {
            if b.a >= n || b.b >= n || b.a == b.b {
                return bad(format!("bar {}-{} has invalid endpoints", b.a, b.b));
            }
            if !(b.rest_length > 0.0 && b.rest_length.is_finite()) {
                return bad(format!(
                    "bar {}{} has rest length {}",
                    joints[b.a], joints[b.b], b.rest_length
                ));
            }
        }
        for l in &levers {
            if l.joint >= n || l.from >= n || l.to >= n || !l.ratio.is_finite() {
                return bad(format!("lever on joint {} is invalid", l.joint));
            }
        }
        if grounded.iter().any(|g| g.joint >= n) || driver.joint >= n || tip >= n || tip_base >= n {
            return bad("joint index out of range".into());
        }

        let mut top = LinkageTopology {
            joints,
            bars,
            levers,
            grounded,
            driver,
            reference: LinkageState {
                coords: reference,
                residual_norm: f64::NAN,
            },
            tip,
            tip_base,
            options,
            stroke: OnceLock::new(),
        };
        if !top.is_connected() {
            return bad("constraint graph is not connected".into());
        }
        if top.equation_count() != 2 * n {
            return bad(format!(
                "{} constraint equations for {} coordinates (mobility {})",
                top.equation_count(),
                2 * n,
                top.mobility()
            ));
        }
        let guess = top.reference.clone();
        top.reference = solve_position(&top, 0.0, &guess)?;
        Ok(top)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j == name)
    }

    /// Grübler count: free coordinates minus independent-looking constraints,
    /// with the driver excluded.
    pub fn mobility(&self) -> i64 {
        2 * self.joints.len() as i64 - (self.equation_count() as i64 - 1)
    }

    fn equation_count(&self) -> usize {
        let ground: usize = self
            .grounded
            .iter()
            .map(|g| if g.axis.is_some() { 1 } else { 2 })
            .sum();
        self.bars.len() + 2 * self.levers.len() + ground + 1
    }

    fn is_connected(&self) -> bool {
        let n = self.joints.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut join = |a: usize, b: usize| {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        };
        for b in &self.bars {
            join(b.a, b.b);
        }
        for l in &self.levers {
            join(l.joint, l.from);
            join(l.joint, l.to);
        }
        let root = find(&mut parent, 0);
        (0..n).all(|i| find(&mut parent, i) == root)
    }

    pub fn tip_point(&self, state: &LinkageState) -> Point {
        state.coords[self.tip]
    }

    /// Angle of the segment from `tip_base` to `tip`.
    pub fn tip_orientation(&self, state: &LinkageState) -> f64 {
        let d = state.coords[self.tip] - state.coords[self.tip_base];
        d.y.atan2(d.x)
    }

    /// Largest relative bar-length error in `state`.
    pub fn max_bar_error(&self, state: &LinkageState) -> f64 {
        self.bars
            .iter()
            .map(|b| {
                let l = (state.coords[b.a] - state.coords[b.b]).norm();
                (l - b.rest_length).abs() / b.rest_length
            })
            .fold(0.0, f64::max)
    }
}

fn residual(top: &LinkageTopology, x: &DVector<f64>, value: f64) -> DVector<f64> {
    let p = |j: usize| Point::new(x[2 * j], x[2 * j + 1]);
    let mut r = DVector::zeros(top.equation_count());
    let mut row = 0;
    for b in &top.bars {
        r[row] = (p(b.a) - p(b.b)).norm() - b.rest_length;
        row += 1;
    }
    for l in &top.levers {
        let d = p(l.joint) - p(l.from) - (p(l.to) - p(l.from)) * l.ratio;
        r[row] = d.x;
        r[row + 1] = d.y;
        row += 2;
    }
    for g in &top.grounded {
        let d = p(g.joint) - g.at;
        match g.axis {
            None => {
                r[row] = d.x;
                r[row + 1] = d.y;
                row += 2;
            }
            Some(a) => {
                r[row] = d[a.index()];
                row += 1;
            }
        }
    }
    let dv = &top.driver;
    r[row] = x[2 * dv.joint + dv.axis.index()] - (dv.origin + value);
    r
}

fn jacobian(top: &LinkageTopology, x: &DVector<f64>) -> Result<DMatrix<f64>, MechanismError> {
    let n = x.len();
    let mut jac = DMatrix::zeros(top.equation_count(), n);
    let mut row = 0;
    for b in &top.bars {
        let d = Point::new(x[2 * b.a] - x[2 * b.b], x[2 * b.a + 1] - x[2 * b.b + 1]);
        let len = d.norm();
        if len <= f64::EPSILON * b.rest_length {
            return Err(MechanismError::Singular(format!(
                "joints {} and {} coincide",
                top.joints[b.a], top.joints[b.b]
            )));
        }
        let u = d / len;
        for k in 0..2 {
            jac[(row, 2 * b.a + k)] = u[k];
            jac[(row, 2 * b.b + k)] = -u[k];
        }
        row += 1;
    }
    for l in &top.levers {
        for k in 0..2 {
            jac[(row + k, 2 * l.joint + k)] += 1.0;
            jac[(row + k, 2 * l.from + k)] -= 1.0 - l.ratio;
            jac[(row + k, 2 * l.to + k)] -= l.ratio;
        }
        row += 2;
    }
    for g in &top.grounded {
        match g.axis {
            None => {
                jac[(row, 2 * g.joint)] = 1.0;
                jac[(row + 1, 2 * g.joint + 1)] = 1.0;
                row += 2;
            }
            Some(a) => {
                jac[(row, 2 * g.joint + a.index())] = 1.0;
                row += 1;
            }
        }
    }
    let dv = &top.driver;
    jac[(row, 2 * dv.joint + dv.axis.index())] = 1.0;
    Ok(jac)
}

fn flatten(coords: &[Point]) -> DVector<f64> {
    DVector::from_iterator(coords.len() * 2, coords.iter().flat_map(|p| [p.x, p.y]))
}

fn unflatten(x: &DVector<f64>) -> Vec<Point> {
    (0..x.len() / 2).map(|j| Point::new(x[2 * j], x[2 * j + 1])).collect()
}

/// Solves the loop-closure equations for `driver_value`, starting from
/// `initial_guess`, with the topology's solver options.
pub fn solve_position(
    top: &LinkageTopology,
    driver_value: f64,
    initial_guess: &LinkageState,
) -> Result<LinkageState, MechanismError> {
    solve_position_with(top, driver_value, initial_guess, &top.options)
}

pub fn solve_position_with(
    top: &LinkageTopology,
    driver_value: f64,
    initial_guess: &LinkageState,
    opts: &SolverOptions,
) -> Result<LinkageState, MechanismError> {
    if initial_guess.coords.len() != top.joints.len() {
        return Err(MechanismError::InvalidTopology(format!(
            "guess has {} joints, topology has {}",
            initial_guess.coords.len(),
            top.joints.len()
        )));
    }
    if !driver_value.is_finite() {
        return Err(MechanismError::InvalidParams("driver value is not finite".into()));
    }
    let mut x = flatten(&initial_guess.coords);
    let mut r = residual(top, &x, driver_value);
    let mut norm = r.norm();
    let mut iterations = 0;
    let mut polish = 0;

    while iterations < opts.max_iterations {
        if !norm.is_finite() {
            break;
        }
        let converged = norm <= opts.tolerance;
        if converged && polish >= 2 {
            break;
        }
        iterations += 1;
        let lu = jacobian(top, &x)?.lu();
        let dx = lu
            .solve(&(-&r))
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or_else(|| MechanismError::Singular("constraint Jacobian is singular".into()))?;

        if converged {
            // Extra full steps only while they keep reducing the residual.
            polish += 1;
            let trial = &x + &dx;
            let rt = residual(top, &trial, driver_value);
            let nt = rt.norm();
            if nt < norm {
                x = trial;
                r = rt;
                norm = nt;
                continue;
            }
            break;
        }

        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let trial = &x + &dx * t;
            let rt = residual(top, &trial, driver_value);
            let nt = rt.norm();
            if nt < norm || halvings == opts.max_halvings {
                x = trial;
                r = rt;
                norm = nt;
                break;
            }
            t *= 0.5;
            halvings += 1;
        }
    }
    if !(norm <= opts.tolerance) {
        return Err(MechanismError::NoConvergence {
            iterations,
            residual: norm,
        });
    }

    check_regular(top, &x, opts)?;
    check_branch(top, &initial_guess.coords, &x)?;
    Ok(LinkageState {
        coords: unflatten(&x),
        residual_norm: norm,
    })
}

fn check_regular(top: &LinkageTopology, x: &DVector<f64>, opts: &SolverOptions) -> Result<(), MechanismError> {
    let jac = jacobian(top, x)?;
    let sv = jac.singular_values();
    let rcond = sv.min() / sv.max();
    if !(rcond >= opts.min_rcond) {
        return Err(MechanismError::Singular(format!("constraint Jacobian condition {rcond:.3e}")));
    }
    let lu = jac.lu();
    let mut e = DVector::zeros(x.len());
    e[x.len() - 1] = 1.0;
    let v = lu
        .solve(&e)
        .ok_or_else(|| MechanismError::Singular("constraint Jacobian is singular".into()))?;
    let s = v.amax();
    if !(s <= opts.max_sensitivity) {
        return Err(MechanismError::Singular(format!(
            "joint sensitivity {s:.3e} exceeds {}",
            opts.max_sensitivity
        )));
    }
    Ok(())
}

/// Newton keeps the sign of the constraint Jacobian determinant unless the
/// path crosses a singular configuration, where two branches meet.
fn check_branch(top: &LinkageTopology, before: &[Point], x: &DVector<f64>) -> Result<(), MechanismError> {
    let d0 = jacobian(top, &flatten(before))?.determinant();
    let d1 = jacobian(top, x)?.determinant();
    if d0 != 0.0 && d0.signum() != d1.signum() {
        return Err(MechanismError::Singular(
            "path crosses a singular configuration (assembly branch changed)".into(),
        ));
    }
    Ok(())
}

/// Steps from a solved state to `target` in increments no larger than `max_step`.
fn walk_to(
    top: &LinkageTopology,
    from: f64,
    state: &LinkageState,
    target: f64,
    max_step: f64,
) -> Result<LinkageState, MechanismError> {
    let steps = ((target - from).abs() / max_step).ceil().max(1.0) as usize;
    let mut s = state.clone();
    for k in 1..=steps {
        let v = from + (target - from) * k as f64 / steps as f64;
        s = solve_position(top, v, &s)?;
    }
    Ok(s)
}

const SWEEP_STEP: f64 = 0.5;

fn discover_stroke(top: &LinkageTopology) -> Result<Stroke, MechanismError> {
    let travel = 10.0 * top.bars.iter().map(|b| b.rest_length).fold(0.0, f64::max);
    let mut limits = [0.0; 2];
    for (slot, dir) in [(0, -1.0), (1, 1.0)] {
        let mut v = 0.0;
        let mut state = top.reference.clone();
        loop {
            let next = v + dir * SWEEP_STEP;
            if next.abs() > travel {
                break;
            }
            match solve_position(top, next, &state) {
                Ok(s) => {
                    v = next;
                    state = s;
                }
                Err(_) => {
                    let mut hi = next;
                    for _ in 0..40 {
                        let mid = 0.5 * (v + hi);
                        match solve_position(top, mid, &state) {
                            Ok(s) => {
                                v = mid;
                                state = s;
                            }
                            Err(_) => hi = mid,
                        }
                    }
                    // Back off so the limit itself solves robustly.
                    v -= dir * SWEEP_STEP * 1e-6;
                    break;
                }
            }
        }
        limits[slot] = v;
    }
    if limits[0] == limits[1] {
        return Err(MechanismError::Singular("linkage cannot move from its reference pose".into()));
    }
    Ok(Stroke {
        min: limits[0],
        max: limits[1],
    })
}

/// Driver range found by sweeping outward from the reference pose until the
/// solver fails. Computed once per topology.
pub fn stroke_limits(top: &LinkageTopology) -> Result<Stroke, MechanismError> {
    top.stroke.get_or_init(|| discover_stroke(top)).clone()
}

/// Solves a driver sequence by continuation, reaching the first value from
/// the reference pose in short steps.
pub fn solve_sequence(top: &LinkageTopology, drivers: &[f64]) -> Result<Vec<LinkageState>, MechanismError> {
    match solve_sequence_partial(top, drivers) {
        (states, None) => Ok(states),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`solve_sequence`] but keeps the states solved before a failure.
pub fn solve_sequence_partial(top: &LinkageTopology, drivers: &[f64]) -> (Vec<LinkageState>, Option<MechanismError>) {
    let Some(&first) = drivers.first() else {
        return (Vec::new(), None);
    };
    let sample_err = |index, e| MechanismError::Sample {
        index,
        source: Box::new(e),
    };
    let mut prev = match walk_to(top, 0.0, &top.reference, first, SWEEP_STEP) {
        Ok(s) => s,
        Err(e) => return (Vec::new(), Some(sample_err(0, e))),
    };
    let mut out = Vec::with_capacity(drivers.len());
    for (index, &v) in drivers.iter().enumerate() {
        match solve_position(top, v, &prev) {
            Ok(s) => prev = s,
            Err(e) => return (out, Some(sample_err(index, e))),
        }
        out.push(prev.clone());
    }
    (out, None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub driver: f64,
    pub tip: Point,
    pub orientation: f64,
}

/// Evenly spaced driver values from `stroke.min` to `stroke.max`, inclusive.
pub fn driver_samples(stroke: Stroke, n_samples: usize) -> Vec<f64> {
    if n_samples == 1 {
        return vec![stroke.min];
    }
    (0..n_samples)
        .map(|i| stroke.min + stroke.len() * i as f64 / (n_samples - 1) as f64)
        .collect()
}

pub fn fingertip_trajectory(
    top: &LinkageTopology,
    stroke: Stroke,
    n_samples: usize,
) -> Result<Vec<TrajectorySample>, MechanismError> {
    match fingertip_trajectory_partial(top, stroke, n_samples) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`fingertip_trajectory`] but returns the samples solved before a
/// failure together with the error.
pub fn fingertip_trajectory_partial(
    top: &LinkageTopology,
    stroke: Stroke,
    n_samples: usize,
) -> (Vec<TrajectorySample>, Option<MechanismError>) {
    if n_samples < 2 {
        return (Vec::new(), Some(MechanismError::TooFewSamples));
    }
    let drivers = driver_samples(stroke, n_samples);
    let (states, err) = solve_sequence_partial(top, &drivers);
    let traj = drivers
        .iter()
        .zip(&states)
        .map(|(&driver, s)| TrajectorySample {
            driver,
            tip: top.tip_point(s),
            orientation: top.tip_orientation(s),
        })
        .collect();
    (traj, err)
}

/// Maximum and RMS horizontal distance of the tip from the vertical line
/// through the first sample.
pub fn straightness_metric(traj: &[TrajectorySample]) -> Result<(f64, f64), MechanismError> {
    let first = traj.first().ok_or(MechanismError::EmptyTrajectory)?;
    let mut max = 0.0f64;
    let mut sq = 0.0;
    for s in traj {
        let d = (s.tip.x - first.tip.x).abs();
        max = max.max(d);
        sq += d * d;
    }
    Ok((max, (sq / traj.len() as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub relation: String,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KempeReport {
    pub violations: Vec<Violation>,
}

impl KempeReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for KempeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "link ratios 4:2:1 hold");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{} (measured {})", v.relation, v.measured)?;
        }
        Ok(())
    }
}

/// Checks the link equalities and the 4 : 2 : 1 ratio the straight-line
/// property depends on. Never fails; problems are listed in the report.
pub fn validate_kempe_constraints(params: &FingerParams) -> KempeReport {
    let mut report = KempeReport::default();
    for (name, v) in params.all_values() {
        if !v.is_finite() {
            report.violations.push(Violation {
                relation: format!("{name} is not finite"),
                measured: v,
            });
        }
    }
    for (name, v) in [
        ("L1", params.l1),
        ("L2", params.l2),
        ("L3", params.l3),
        ("CJ", params.cj),
        ("CG", params.cg),
        ("FG", params.fg),
    ] {
        if v.is_finite() && v <= 0.0 {
            report.violations.push(Violation {
                relation: format!("{name} > 0"),
                measured: v,
            });
        }
    }
    let ratios = [
        ("L1", params.l1, "L2", params.l2, 2.0),
        ("L2", params.l2, "L3", params.l3, 2.0),
        ("L1", params.l1, "L3", params.l3, 4.0),
        ("FG", params.fg, "L2", params.l2, 1.0),
        ("CG", params.cg, "FG", params.fg, 1.0),
    ];
    for (na, a, nb, b, want) in ratios {
        let r = a / b;
        if r.is_finite() && ((r - want) / want).abs() <= RATIO_TOL {
            continue;
        }
        if a.is_finite() && b.is_finite() {
            report.violations.push(Violation {
                relation: format!("{na}:{nb} ≠ {want}:1"),
                measured: r,
            });
        }
    }
    report
}

pub const SPARK_JOINTS: [&str; 13] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M"];

/// Second intersection of two circles: the one farther from `avoid`.
fn circle_pick(c1: Point, r1: f64, c2: Point, r2: f64, avoid: Point) -> Option<Point> {
    let d = c2 - c1;
    let l = d.norm();
    let a = (r1 * r1 - r2 * r2 + l * l) / (2.0 * l);
    let h2 = r1 * r1 - a * a;
    if !(h2 >= 0.0) {
        return None;
    }
    let e = d / l;
    let n = Point::new(-e.y, e.x);
    let base = c1 + e * a;
    let (p, q) = (base + n * h2.sqrt(), base - n * h2.sqrt());
    Some(if (p - avoid).norm() >= (q - avoid).norm() { p } else { q })
}

/// Bar-joint model of the finger.
///
/// A is the base pivot at the origin, AD the horizontal base link and the
/// finger hangs in −y. Joints:
///
/// - B, E, C, I: parallelograms ABED and BCIE, so the distal link CI stays
///   parallel to AD. J hangs below C at distance CJ.
/// - M: far corner of the rhombus ABCM, carried at the midpoint of AG.
/// - H (grounded below A), K, L, F, G: two similar contraparallelograms
///   AKLH and AHFG (sides L3, L2, L3, L2 and L2, L1, L2, L1) with K a lever
///   point on AB and F a lever point on HL extended. AH then bisects ∠KAG,
///   which mirrors AM onto AB about the vertical and puts C, and with it J,
///   on the vertical through A.
///
/// The driver is the vertical coordinate of J relative to the neutral pose.
pub fn spark_preset(params: &FingerParams) -> Result<LinkageTopology, MechanismError> {
    spark_preset_with(params, SolverOptions::default())
}

/// [`spark_preset`] with explicit solver options.
pub fn spark_preset_with(params: &FingerParams, options: SolverOptions) -> Result<LinkageTopology, MechanismError> {
    let report = validate_kempe_constraints(params);
    if !report.is_valid() {
        return Err(MechanismError::InvalidParams(report.to_string()));
    }
    let phi = params.neutral_crank();
    if !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
        return Err(MechanismError::InvalidParams(format!(
            "neutral crank angle {} deg is outside (0, 90)",
            params.neutral_crank_deg
        )));
    }
    let (l1, l2, l3) = (params.l1, params.l2, params.l3);
    let assembly = || MechanismError::InvalidParams("neutral pose cannot be assembled".into());

    let a = Point::zeros();
    let d = Point::new(l1, 0.0);
    let h = Point::new(0.0, -l2);
    let b = Point::new(phi.cos(), -phi.sin()) * l2;
    let k = b * (l3 / l2);
    let l = circle_pick(k, l2, h, l3, k + (h - a)).ok_or_else(assembly)?;
    let f = h + (l - h) * (l1 / l3);
    let g = circle_pick(f, params.fg, a, l1, a + (f - h)).ok_or_else(assembly)?;
    let m = g * (l2 / l1);
    let c = b + m;
    let e = b + d;
    let i = c + d;
    let j = c + Point::new(0.0, -params.cj);
    let coords = vec![a, b, c, d, e, f, g, h, i, j, k, l, m];

    let idx = |n: &str| SPARK_JOINTS.iter().position(|x| *x == n).unwrap();
    let bar = |p: &str, q: &str, len: f64| Bar {
        a: idx(p),
        b: idx(q),
        rest_length: len,
    };
    let bars = vec![
        bar("A", "D", l1),
        bar("A", "B", l2),
        bar("B", "E", l1),
        bar("D", "E", l2),
        bar("B", "C", l2),
        bar("E", "I", l2),
        bar("C", "I", l1),
        bar("C", "J", params.cj),
        bar("I", "J", l1.hypot(params.cj)),
        bar("C", "M", params.cg),
        bar("K", "L", l2),
        bar("L", "H", l3),
        bar("F", "G", params.fg),
        bar("A", "G", l1),
    ];
    let lever = |p: &str, from: &str, to: &str, ratio: f64| Lever {
        joint: idx(p),
        from: idx(from),
        to: idx(to),
        ratio,
    };
    let levers = vec![
        lever("K", "A", "B", l3 / l2),
        lever("F", "H", "L", l1 / l3),
        lever("M", "A", "G", l2 / l1),
    ];
    let grounded = vec![
        Ground {
            joint: idx("A"),
            at: a,
            axis: None,
        },
        Ground {
            joint: idx("D"),
            at: d,
            axis: Some(Axis::Y),
        },
        Ground {
            joint: idx("H"),
            at: h,
            axis: None,
        },
    ];
    let driver = Driver {
        joint: idx("J"),
        axis: Axis::Y,
        origin: j.y,
    };
    LinkageTopology::new_with(
        SPARK_JOINTS.iter().map(|s| s.to_string()).collect(),
        bars,
        levers,
        grounded,
        driver,
        coords,
        idx("J"),
        idx("C"),
        options,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset() -> LinkageTopology {
        spark_preset(&FingerParams::default()).unwrap()
    }

    fn params_with(l: [f64; 3]) -> FingerParams {
        FingerParams {
            l1: l[0],
            l2: l[1],
            l3: l[2],
            fg: l[1],
            cg: l[1],
            ..FingerParams::default()
        }
    }

    #[test]
    fn default_ratios_valid() {
        assert!(validate_kempe_constraints(&FingerParams::default()).is_valid());
        assert!(validate_kempe_constraints(&params_with([4.0, 2.0, 1.0])).is_valid());
    }

    #[test]
    fn l3_21_names_the_ratio() {
        let p = FingerParams {
            l3: 21.0,
            ..FingerParams::default()
        };
        let r = validate_kempe_constraints(&p);
        assert!(!r.is_valid());
        assert!(r.violations.iter().any(|v| v.relation == "L1:L3 ≠ 4:1"));
        assert!(r.to_string().contains("L1:L3 ≠ 4:1"));
    }

    #[test]
    fn non_finite_is_reported() {
        let p = FingerParams {
            k1: f64::NAN,
            ..FingerParams::default()
        };
        assert!(!validate_kempe_constraints(&p).is_valid());
    }

    #[test]
    fn preset_shape() {
        let t = preset();
        for n in ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J"] {
            assert!(t.index(n).is_some(), "{n}");
        }
        assert_eq!(t.mobility(), 1);
        let (a, d) = (t.index("A").unwrap(), t.index("D").unwrap());
        let ad = t.bars.iter().find(|b| b.a == a && b.b == d).unwrap();
        assert_eq!(ad.rest_length, 80.0);
        let lh = t.bars.iter().find(|b| t.joints[b.a] == "L" && t.joints[b.b] == "H").unwrap();
        assert_eq!(lh.rest_length, 20.0);
    }

    #[test]
    fn preset_rejects_bad_ratio() {
        let p = FingerParams {
            l3: 21.0,
            ..FingerParams::default()
        };
        assert!(matches!(spark_preset(&p), Err(MechanismError::InvalidParams(_))));
    }

    #[test]
    fn reference_is_fixed_point() {
        let t = preset();
        let s = solve_position(&t, 0.0, &t.reference).unwrap();
        assert!(s.residual_norm <= 1e-10);
        for (p, q) in s.coords.iter().zip(&t.reference.coords) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn one_mm_keeps_bar_lengths() {
        let t = preset();
        let s = solve_position(&t, 1.0, &t.reference).unwrap();
        assert!(t.max_bar_error(&s) <= 1e-9);
        let j = t.tip_point(&s);
        assert!((j.y - (t.driver.origin + 1.0)).abs() < 1e-10);
    }

    #[test]
    fn beyond_stroke_fails() {
        let t = preset();
        let st = stroke_limits(&t).unwrap();
        assert!(st.min < 0.0 && st.max > 0.0);
        let near = solve_sequence(&t, &[st.min]).unwrap();
        assert!(solve_position(&t, st.min - 1.0, &near[0]).is_err());
        let near = solve_sequence(&t, &[st.max]).unwrap();
        assert!(solve_position(&t, st.max + 1.0, &near[0]).is_err());
    }

    #[test]
    fn identical_driver_values_give_identical_tips() {
        let t = preset();
        let st = Stroke { min: 2.0, max: 2.0 };
        let tr = fingertip_trajectory(&t, st, 2).unwrap();
        assert_eq!(tr[0].tip, tr[1].tip);
    }

    #[test]
    fn hundred_samples_straight_and_level() {
        let t = preset();
        let tr = fingertip_trajectory(&t, stroke_limits(&t).unwrap(), 100).unwrap();
        let (max, _) = straightness_metric(&tr).unwrap();
        assert!(max <= 1e-6 * 80.0, "{max}");
        let (lo, hi) = tr
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.orientation), b.max(s.orientation)));
        assert!(hi - lo <= 1e-9);
    }

    #[test]
    fn straightness_by_definition() {
        let mk = |x: f64, y: f64| TrajectorySample {
            driver: y,
            tip: Point::new(x, y),
            orientation: 0.0,
        };
        let line: Vec<_> = (0..5).map(|i| mk(3.0, i as f64)).collect();
        assert_eq!(straightness_metric(&line).unwrap(), (0.0, 0.0));
        let mut bent = line.clone();
        bent[2] = mk(3.5, 2.0);
        assert_eq!(straightness_metric(&bent).unwrap().0, 0.5);
        assert_eq!(straightness_metric(&[]), Err(MechanismError::EmptyTrajectory));
    }

    #[test]
    fn too_few_samples() {
        let t = preset();
        assert_eq!(
            fingertip_trajectory(&t, Stroke { min: 0.0, max: 1.0 }, 1),
            Err(MechanismError::TooFewSamples)
        );
    }

    #[test]
    fn disconnected_topology_rejected() {
        let p = |x: f64| Point::new(x, 0.0);
        let r = LinkageTopology::new(
            vec!["A".into(), "B".into()],
            vec![],
            vec![],
            vec![Ground { joint: 0, at: p(0.0), axis: None }],
            Driver { joint: 1, axis: Axis::X, origin: 1.0 },
            vec![p(0.0), p(1.0)],
            1,
            0,
        );
        assert!(matches!(r, Err(MechanismError::InvalidTopology(_))));
    }

    #[test]
    fn four_bar_crank_driver() {
        // Crank AB driven by B.y on a simple four-bar: coupler BC, rocker DC.
        let pt = Point::new;
        let names: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
        let bars = vec![
            Bar { a: 0, b: 1, rest_length: 20.0 },
            Bar { a: 1, b: 2, rest_length: 50.0 },
            Bar { a: 3, b: 2, rest_length: 40.0 },
        ];
        let grounded = vec![
            Ground { joint: 0, at: pt(0.0, 0.0), axis: None },
            Ground { joint: 3, at: pt(50.0, 0.0), axis: None },
        ];
        let b0 = pt(20.0 * 0.6, 20.0 * 0.8);
        let c0 = circle_pick(b0, 50.0, pt(50.0, 0.0), 40.0, pt(50.0, -100.0)).unwrap();
        let t = LinkageTopology::new(
            names,
            bars,
            vec![],
            grounded,
            Driver { joint: 1, axis: Axis::Y, origin: b0.y },
            vec![pt(0.0, 0.0), b0, c0, pt(50.0, 0.0)],
            2,
            1,
        )
        .unwrap();
        assert_eq!(t.mobility(), 1);
        let s = solve_position(&t, -2.0, &t.reference).unwrap();
        assert!(t.max_bar_error(&s) <= 1e-12);
        assert!((s.coords[1].y - 14.0).abs() < 1e-12);
    }
}
