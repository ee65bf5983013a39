use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use spark_finger::config::RunConfig;
use spark_finger::dynamics::{energy_drift, simulate_free, DynamicsParams};
use spark_finger::format::{self, g17};
use spark_finger::kinematics::{forward_kinematics, jacobian, spark_chain};
use spark_finger::mechanism::{
    fingertip_trajectory_partial, straightness_metric, stroke_limits, validate_kempe_constraints, Stroke,
};
use spark_finger::modeswitch::{asymmetric_pose, depth_samples, mode_trace, SurfaceScenario};
use spark_finger::statics::{force_sweep, GraspMode, SweepSpec};

const OUT_ENV: &str = "SPARK_OUT_DIR";

#[derive(Parser)]
#[command(name = "spark", version, about = "Finger linkage, force and mode-switch simulations")]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV output; CSV goes to stdout when no directory is set
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of samples (trajectory points, sweep rows, descent states)
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    /// Suppress summaries on stderr
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pinch,
    Scoop,
}

#[derive(Subcommand)]
enum Command {
    /// Check link ratios and assemble the linkage
    Validate,
    /// Fingertip trajectory over the driver stroke
    Traj {
        /// First driver value, mm (default: lower stroke limit)
        #[arg(long, allow_negative_numbers = true)]
        start: Option<f64>,
        /// Last driver value, mm (default: upper stroke limit)
        #[arg(long, allow_negative_numbers = true)]
        end: Option<f64>,
    },
    /// Grasp-force sweep
    Forces {
        #[arg(long, value_enum, default_value = "pinch")]
        mode: ModeArg,
        /// var=start:stop:n with var one of theta2, theta3, d2, d3, k, torque (angles in degrees)
        #[arg(long)]
        sweep: Option<SweepSpec>,
    },
    /// Mode-switch states while descending onto a surface
    Descend {
        /// Deepest wrist descent, mm (default: dh1 + dh2)
        #[arg(long)]
        max_depth: Option<f64>,
        /// Wrist tilt, degrees; non-zero tilt reports both fingers
        #[arg(long, default_value_t = 0.0)]
        tilt: f64,
    },
    /// Free motion of the three-link chain
    Dynamics {
        /// Simulated time, s
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        /// Integration step, s
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Initial joint angles, degrees
        #[arg(long, value_parser = parse_triple, default_value = "30,20,10", allow_hyphen_values = true)]
        q0: [f64; 3],
        /// Initial joint rates, degrees per second
        #[arg(long, value_parser = parse_triple, default_value = "60,-30,30", allow_hyphen_values = true)]
        qdot0: [f64; 3],
    },
    /// Forward kinematics of the chain at three joint angles in degrees
    Fk {
        #[arg(num_args = 3, allow_negative_numbers = true, required = true)]
        angles: Vec<f64>,
    },
    /// Chain Jacobian at three joint angles in degrees
    Jac {
        #[arg(num_args = 3, allow_negative_numbers = true, required = true)]
        angles: Vec<f64>,
    },
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] if v.iter().all(|x| x.is_finite()) => Ok([a, b, c]),
        _ => Err("expected three finite comma-separated numbers".into()),
    }
}

/// Failure with its exit status: 1 for domain failures, 2 for usage or
/// configuration problems.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl ToString) -> Self {
        Failure { code: 1, message: message.to_string() }
    }

    fn usage(message: impl ToString) -> Self {
        Failure { code: 2, message: message.to_string() }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: Option<PathBuf>,
    samples: Option<usize>,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn samples_or(&self, default: usize) -> usize {
        self.samples.or(self.cfg.samples).unwrap_or(default)
    }

    /// Writes one table to `<out>/<name>`, or to stdout without an output
    /// directory.
    fn emit<F>(&self, name: &str, write: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), csv::Error>,
    {
        match &self.out {
            Some(dir) => {
                let path = dir.join(name);
                let file = File::create(&path).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                write(&mut w).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
                w.flush().map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
                self.note(format!("wrote {}", path.display()));
                Ok(())
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write(&mut lock).map_err(|e| Failure::domain(format!("stdout: {e}")))
            }
        }
    }

    /// Summary tables are only written next to the main output.
    fn emit_side<F>(&self, name: &str, write: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), csv::Error>,
    {
        if self.out.is_some() {
            self.emit(name, write)
        } else {
            Ok(())
        }
    }
}

fn output_dir(flag: Option<PathBuf>, env: Option<std::ffi::OsString>, cfg: &RunConfig) -> Option<PathBuf> {
    flag.or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    let out = output_dir(cli.out, std::env::var_os(OUT_ENV), &cfg);
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::domain(format!("{}: {e}", dir.display())))?;
    }
    let ctx = Ctx {
        cfg,
        out,
        samples: cli.samples.map(|n| n as usize),
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Validate => validate(&ctx),
        Command::Traj { start, end } => traj(&ctx, start, end),
        Command::Forces { mode, sweep } => forces(&ctx, mode, sweep),
        Command::Descend { max_depth, tilt } => descend(&ctx, max_depth, tilt),
        Command::Dynamics { duration, dt, q0, qdot0 } => dynamics(&ctx, duration, dt, q0, qdot0),
        Command::Fk { angles } => fk(&ctx, &angles),
        Command::Jac { angles } => jac(&ctx, &angles),
    }
}

fn validate(ctx: &Ctx) -> Result<(), Failure> {
    let p = &ctx.cfg.finger;
    let report = validate_kempe_constraints(p);
    if !report.is_valid() {
        return Err(Failure::domain(format!("invalid geometry:\n{report}")));
    }
    let top = ctx.cfg.linkage().map_err(Failure::domain)?;
    let stroke = stroke_limits(&top).map_err(Failure::domain)?;
    let mut s = io::stdout().lock();
    let lines = [
        format!("geometry: {report}"),
        format!("joints: {}", top.joints.join(" ")),
        format!("bars: {}", top.bars.len()),
        format!("mobility: {}", top.mobility()),
        format!("stroke_mm: {} {}", g17(stroke.min), g17(stroke.max)),
        format!(
            "stoppers_deg: Q1={} Q2={} Q3={}",
            g17(p.q1_deg),
            g17(p.q2_deg),
            g17(p.q3_deg)
        ),
    ];
    if !ctx.quiet {
        for l in lines {
            writeln!(s, "{l}").map_err(|e| Failure::domain(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn traj(ctx: &Ctx, start: Option<f64>, end: Option<f64>) -> Result<(), Failure> {
    let top = ctx.cfg.linkage().map_err(Failure::domain)?;
    let stroke = match (start, end) {
        (Some(min), Some(max)) => Stroke { min, max },
        _ => {
            let s = stroke_limits(&top).map_err(Failure::domain)?;
            Stroke { min: start.unwrap_or(s.min), max: end.unwrap_or(s.max) }
        }
    };
    if !(stroke.min.is_finite() && stroke.max.is_finite()) {
        return Err(Failure::usage("stroke ends must be finite"));
    }
    let n = ctx.samples_or(1000);
    let (traj, err) = if n == 1 {
        let (t, e) = fingertip_trajectory_partial(&top, Stroke { min: stroke.min, max: stroke.min }, 2);
        (t.into_iter().take(1).collect(), e)
    } else {
        fingertip_trajectory_partial(&top, stroke, n)
    };
    if let Some(e) = err {
        ctx.emit("trajectory.partial.csv", |w| format::write_trajectory(w, &traj))?;
        return Err(Failure::domain(format!("trajectory stopped after {} samples: {e}", traj.len())));
    }
    let (max, rms) = straightness_metric(&traj).map_err(Failure::domain)?;
    ctx.emit("trajectory.csv", |w| format::write_trajectory(w, &traj))?;
    ctx.emit_side("trajectory_summary.csv", |w| format::write_straightness(w, max, rms))?;
    ctx.emit_side("displacement.csv", |w| format::write_displacements(w, &traj))?;
    ctx.note(format!("max_dev_mm,rms_dev_mm\n{},{}", g17(max), g17(rms)));
    Ok(())
}

fn forces(ctx: &Ctx, mode: ModeArg, sweep: Option<SweepSpec>) -> Result<(), Failure> {
    let st = &ctx.cfg.statics;
    let mode = match mode {
        ModeArg::Pinch => GraspMode::Pinch,
        ModeArg::Scoop => GraspMode::Scoop,
    };
    let mut spec = sweep.unwrap_or(match mode {
        GraspMode::Pinch => st.pinch_sweep,
        GraspMode::Scoop => st.scoop_sweep,
    });
    if let Some(n) = ctx.samples {
        spec.n = n;
    }
    let rows = force_sweep(mode, st.actuation, &spec, st.geometry, ctx.cfg.finger.l2);
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    ctx.emit(&format!("forces_{mode}.csv"), |w| format::write_sweep(w, &rows))?;
    ctx.note(format!("{mode} sweep {spec}: {} rows, {failed} failed", rows.len()));
    Ok(())
}

fn descend(ctx: &Ctx, max_depth: Option<f64>, tilt: f64) -> Result<(), Failure> {
    let p = &ctx.cfg.finger;
    let max_depth = max_depth.unwrap_or(p.dh1 + p.dh2);
    let n = ctx.samples_or(100).max(2);
    let scenario = SurfaceScenario { tilt_deg: tilt, asymmetric: tilt != 0.0, ..ctx.cfg.scenario };
    scenario.validate().map_err(Failure::domain)?;
    if !scenario.asymmetric {
        let trace = mode_trace(p, &scenario, max_depth, n).map_err(Failure::domain)?;
        ctx.emit("descent.csv", |w| format::write_mode_trace(w, p, &trace))?;
        if let Some(last) = trace.last() {
            ctx.note(format!("final: {} at {} deg", last.mode, g17(last.distal_rotation)));
        }
        return Ok(());
    }
    let trace = depth_samples(max_depth, n)
        .map_err(Failure::domain)?
        .into_iter()
        .map(|d| asymmetric_pose(p, &scenario, d).map(|(a, b)| (d, a, b)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::domain)?;
    ctx.emit("descent.csv", |w| format::write_pair_trace(w, p, &trace))?;
    if let Some((_, a, b)) = trace.last() {
        ctx.note(format!("final: finger A {} / finger B {}", a.mode, b.mode));
    }
    Ok(())
}

fn dynamics(ctx: &Ctx, duration: f64, dt: f64, q0: [f64; 3], qdot0: [f64; 3]) -> Result<(), Failure> {
    let params = DynamicsParams::from(&ctx.cfg.finger);
    let q0 = Vector3::from(q0).map(f64::to_radians);
    let qd0 = Vector3::from(qdot0).map(f64::to_radians);
    let trace = simulate_free(&params, q0, qd0, duration, dt).map_err(Failure::domain)?;
    let drift = energy_drift(&trace);
    ctx.emit("dynamics.csv", |w| format::write_dynamics(w, &trace))?;
    ctx.emit_side("dynamics_summary.csv", |w| {
        format::write_table(w, &["steps", "max_rel_energy_drift"], [vec![(trace.len() - 1).to_string(), g17(drift)]])
    })?;
    ctx.note(format!("max_rel_energy_drift {}", g17(drift)));
    Ok(())
}

fn radians(deg: &[f64]) -> Result<[f64; 3], Failure> {
    match deg {
        [a, b, c] if deg.iter().all(|v| v.is_finite()) => Ok([a.to_radians(), b.to_radians(), c.to_radians()]),
        _ => Err(Failure::usage("expected three finite joint angles in degrees")),
    }
}

fn fk(ctx: &Ctx, deg: &[f64]) -> Result<(), Failure> {
    let q = radians(deg)?;
    let fk = forward_kinematics(&spark_chain(&ctx.cfg.finger), &q).map_err(Failure::domain)?;
    let header = [
        "theta1_deg",
        "theta2_deg",
        "theta3_deg",
        "theta1_rad",
        "theta2_rad",
        "theta3_rad",
        "tip_x_mm",
        "tip_y_mm",
        "tip_z_mm",
        "orientation_rad",
        "orientation_deg",
    ];
    let mut row: Vec<String> = deg.iter().chain(&q).map(|v| g17(*v)).collect();
    row.extend(fk.tip.iter().map(|v| g17(*v)));
    row.extend([g17(fk.orientation), g17(fk.orientation.to_degrees())]);
    ctx.emit("fk.csv", |w| format::write_table(w, &header, [row]))
}

fn jac(ctx: &Ctx, deg: &[f64]) -> Result<(), Failure> {
    let q = radians(deg)?;
    let j = jacobian(&spark_chain(&ctx.cfg.finger), &q).map_err(Failure::domain)?;
    let header = [
        "component",
        "d_theta1_per_rad",
        "d_theta2_per_rad",
        "d_theta3_per_rad",
        "d_theta1_per_deg",
        "d_theta2_per_deg",
        "d_theta3_per_deg",
    ];
    let names = ["vx_mm", "vy_mm", "vz_mm", "wx_rad", "wy_rad", "wz_rad"];
    let per_deg = 1f64.to_radians();
    let rows = names.iter().enumerate().map(|(r, name)| {
        let mut row = vec![name.to_string()];
        row.extend((0..3).map(|c| g17(j[(r, c)])));
        row.extend((0..3).map(|c| g17(j[(r, c)] * per_deg)));
        row
    });
    ctx.emit("jacobian.csv", |w| format::write_table(w, &header, rows))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spark: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
