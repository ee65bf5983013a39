//! Number formatting and CSV writers for every exported table.
//!
//! Numbers are written like C's `%.17g`, which round-trips every `f64` and
//! never depends on the locale.

use std::io;

use crate::dynamics::SimSample;
use crate::mechanism::TrajectorySample;
use crate::modeswitch::{spring_moments, DescentState};
use crate::params::FingerParams;
use crate::statics::SweepRow;

/// Formats `v` with 17 significant digits the way `printf("%.17g")` does.
pub fn g17(v: f64) -> String {
    const P: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, v);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(g17).unwrap_or_default()
}

/// Writes a header and rows. Fields are quoted only when needed.
pub fn write_table<W, R>(out: W, header: &[&str], rows: R) -> Result<(), csv::Error>
where
    W: io::Write,
    R: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const TRAJECTORY_HEADER: [&str; 4] = ["driver_mm", "tip_x_mm", "tip_y_mm", "orientation_rad"];

pub fn write_trajectory<W: io::Write>(out: W, traj: &[TrajectorySample]) -> Result<(), csv::Error> {
    write_table(
        out,
        &TRAJECTORY_HEADER,
        traj.iter().map(|s| vec![g17(s.driver), g17(s.tip.x), g17(s.tip.y), g17(s.orientation)]),
    )
}

pub fn write_straightness<W: io::Write>(out: W, max_dev: f64, rms_dev: f64) -> Result<(), csv::Error> {
    write_table(out, &["max_dev_mm", "rms_dev_mm"], [vec![g17(max_dev), g17(rms_dev)]])
}

/// Tip displacement from the first sample along and across the stroke.
/// Tip displacement from the first sample, plus the lateral rate dx/d(driver)
/// by differences between neighbouring samples (one-sided at the ends).
pub fn write_displacements<W: io::Write>(out: W, traj: &[TrajectorySample]) -> Result<(), csv::Error> {
    let header = ["driver_mm", "axial_disp_mm", "lateral_disp_mm", "lateral_rate"];
    let Some(first) = traj.first() else {
        return write_table(out, &header, []);
    };
    let n = traj.len();
    let rate = |i: usize| {
        if n < 2 {
            return 0.0;
        }
        let (a, b) = (&traj[i.saturating_sub(1)], &traj[(i + 1).min(n - 1)]);
        (b.tip.x - a.tip.x) / (b.driver - a.driver)
    };
    write_table(
        out,
        &header,
        traj.iter().enumerate().map(|(i, s)| {
            vec![g17(s.driver), g17(s.tip.y - first.tip.y), g17(s.tip.x - first.tip.x), g17(rate(i))]
        }),
    )
}

pub const SWEEP_HEADER: [&str; 5] = ["sweep_var", "value", "F2_N", "F3_N", "status"];

pub fn write_sweep<W: io::Write>(out: W, rows: &[SweepRow]) -> Result<(), csv::Error> {
    write_table(
        out,
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![r.var.name().to_string(), g17(r.value), opt(r.f2), opt(r.f3), r.status()]
        }),
    )
}

pub const MODE_HEADER: [&str; 5] = ["depth_mm", "mode", "distal_rotation_deg", "k1_moment_Nmm", "k2_moment_Nmm"];

fn mode_fields(params: &FingerParams, s: &DescentState) -> Vec<String> {
    let (m1, m2) = spring_moments(params, s);
    vec![s.mode.to_string(), g17(s.distal_rotation), g17(m1), g17(m2)]
}

pub fn write_mode_trace<W: io::Write>(out: W, params: &FingerParams, trace: &[DescentState]) -> Result<(), csv::Error> {
    write_table(
        out,
        &MODE_HEADER,
        trace.iter().map(|s| {
            let mut row = vec![g17(s.depth)];
            row.extend(mode_fields(params, s));
            row
        }),
    )
}

/// Two-finger trace; `depth_mm` is the wrist-centre depth and each finger
/// reports its own contact depth.
pub fn write_pair_trace<W: io::Write>(
    out: W,
    params: &FingerParams,
    trace: &[(f64, DescentState, DescentState)],
) -> Result<(), csv::Error> {
    let header = [
        "depth_mm",
        "depth_a_mm",
        "mode_a",
        "distal_rotation_a_deg",
        "k1_moment_a_Nmm",
        "k2_moment_a_Nmm",
        "depth_b_mm",
        "mode_b",
        "distal_rotation_b_deg",
        "k1_moment_b_Nmm",
        "k2_moment_b_Nmm",
    ];
    write_table(
        out,
        &header,
        trace.iter().map(|(d, a, b)| {
            let mut row = vec![g17(*d), g17(a.depth)];
            row.extend(mode_fields(params, a));
            row.push(g17(b.depth));
            row.extend(mode_fields(params, b));
            row
        }),
    )
}

pub const DYNAMICS_HEADER: [&str; 10] = [
    "t_s",
    "theta1_rad",
    "theta2_rad",
    "theta3_rad",
    "dtheta1_rads",
    "dtheta2_rads",
    "dtheta3_rads",
    "K",
    "P",
    "E_total",
];

pub fn write_dynamics<W: io::Write>(out: W, trace: &[SimSample]) -> Result<(), csv::Error> {
    write_table(
        out,
        &DYNAMICS_HEADER,
        trace.iter().map(|s| {
            let mut row = vec![g17(s.t)];
            row.extend(s.q.iter().chain(s.qdot.iter()).map(|v| g17(*v)));
            row.extend([g17(s.kinetic), g17(s.potential), g17(s.total())]);
            row
        }),
    )
}
