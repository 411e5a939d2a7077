//! `fbd`: model validation, inverse/forward/hybrid dynamics over trajectories,
//! the round-trip experiment, the finite-difference audit and benchmark
//! sweeps. Exit codes: 0 success, 1 numerical-check or solver failure,
//! 2 I/O or parse failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fbd_core::audit::{audit_times, fdcheck, round_trip_with, MotionSource, Rest};
use fbd_core::benchmark::{branch_tree, time_algorithm, Algorithm};
use fbd_core::model::load_model;
use fbd_core::tilthex::{build_tilthex, propeller_allocation, TiltHexParams, TiltHexTrajectory};
use fbd_core::trajectory::{joint_column, samples_from_table, Sample, Table};
use fbd_core::{
    base_wrench_to_body_frame, forward_kinematics, hgabi, hghyb, hgrne, BaseMode, ForwardInput, HybridSpec,
    JointInput, LoadInput, MotionInput, Pose, PropellerWrench, RobotModel, State, Wrench,
};
use nalgebra::Vector6;

#[derive(Parser)]
#[command(name = "fbd", version, about = "Higher-order dynamics of floating-base kinematic trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Model file, or `builtin:tilthex`.
    #[arg(long)]
    model: String,
    /// Trajectory CSV, `builtin:tilthex` or `builtin:rest`.
    #[arg(long, default_value = "builtin:tilthex")]
    traj: String,
    /// Derivative order r.
    #[arg(long, default_value_t = 0)]
    order: usize,
    /// Sample spacing of builtin trajectories (s).
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Number of samples of builtin trajectories.
    #[arg(long, default_value_t = 3000)]
    steps: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Load a model file and report its structure.
    Validate {
        #[arg(long)]
        model: String,
    },
    /// Inverse dynamics along a trajectory.
    Id {
        #[command(flatten)]
        common: Common,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also output squared rotor speeds from the hexarotor allocation.
        #[arg(long)]
        rotors: bool,
    },
    /// Forward dynamics from states of a trajectory and an input CSV.
    Fd {
        #[command(flatten)]
        common: Common,
        /// CSV with `W1_k_c` and `tau<id>_k` columns, e.g. the output of `id`.
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hybrid dynamics: listed joints follow the trajectory, the rest are torque-driven.
    Hybrid {
        #[command(flatten)]
        common: Common,
        /// Comma-separated body ids whose joints follow the trajectory.
        #[arg(long, value_delimiter = ',')]
        motion: Vec<usize>,
        /// Whether the base follows the trajectory twist or receives the input wrench.
        #[arg(long, value_enum, default_value_t = BaseArg::Wrench)]
        base: BaseArg,
        /// CSV with `W1_k_c` and `tau<id>_k` columns where needed.
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inverse then forward dynamics; reports the recovered-trajectory error per order.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        /// Use these inputs instead of computing inverse dynamics.
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Finite-difference audit of every derivative stack on a builtin trajectory.
    Fdcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Number of audit times.
        #[arg(long, default_value_t = 12)]
        samples: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Timing sweeps on the five-branch benchmark trees.
    Bench {
        #[arg(long, value_enum, default_value_t = Sweep::OverN)]
        sweep: Sweep,
        #[arg(long, value_enum, default_value_t = AlgoArg::Both)]
        algo: AlgoArg,
        /// Order for the sweep over N.
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Bodies per branch for the sweep over N.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,99")]
        bodies: Vec<usize>,
        /// Bodies per branch for the sweep over r.
        #[arg(long, default_value_t = 20)]
        per_branch: usize,
        /// Orders for the sweep over r.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8")]
        orders: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 100)]
        warmup: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseArg {
    Twist,
    Wrench,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    OverN,
    OverR,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Id,
    Fd,
    Both,
}

/// A numerical check failed; exit code 1 without further diagnostics.
#[derive(Debug)]
struct CheckFailed;

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("numerical check failed")
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<io::Error>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<fbd_core::Error>() {
            return match err {
                fbd_core::Error::Parse { .. }
                | fbd_core::Error::Data(_)
                | fbd_core::Error::Io(_)
                | fbd_core::Error::Model(_) => 2,
                _ => 1,
            };
        }
    }
    2
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { model } => {
            let m = open_model(&model)?;
            let issues = m.validate();
            println!(
                "{model}: {} bodies, {} joints, total mass {} kg, gravity {} m/s²",
                m.n_bodies(),
                m.n_joints(),
                m.total_mass(),
                m.gravity()
            );
            for i in &issues {
                println!("warning: {i}");
            }
            Ok(())
        }
        Command::Id { common, out, rotors } => cmd_id(&common, out, rotors),
        Command::Fd { common, inputs, out } => cmd_fd(&common, &inputs, out),
        Command::Hybrid {
            common,
            motion,
            base,
            inputs,
            out,
        } => cmd_hybrid(&common, &motion, base, inputs, out),
        Command::Roundtrip { common, inputs, tol } => cmd_roundtrip(&common, inputs, tol),
        Command::Fdcheck {
            common,
            step,
            samples,
            tol,
        } => cmd_fdcheck(&common, step, samples, tol),
        Command::Bench {
            sweep,
            algo,
            order,
            bodies,
            per_branch,
            orders,
            reps,
            warmup,
            seed,
            out,
        } => {
            if reps == 0 {
                bail!("--reps must be at least 1");
            }
            let algos: &[Algorithm] = match algo {
                AlgoArg::Id => &[Algorithm::Inverse],
                AlgoArg::Fd => &[Algorithm::Forward],
                AlgoArg::Both => &[Algorithm::Inverse, Algorithm::Forward],
            };
            let mut table = Table::new(["algo", "N", "r", "mean_s", "std_s"].map(String::from).to_vec());
            table.metadata = vec![
                format!("seed {seed}, repetitions {reps}, warmup {warmup}"),
                "inputs: uniform [-1, 1] per component (base pose angles scaled by pi), drawn once per sweep point".into(),
                "algo: 0 = inverse dynamics (with kinematics), 1 = forward dynamics".into(),
            ];
            let points: Vec<(usize, usize)> = match sweep {
                Sweep::OverN => bodies.iter().map(|&b| (b, order)).collect(),
                Sweep::OverR => orders.iter().map(|&r| (per_branch, r)).collect(),
            };
            for &a in algos {
                for &(b, r) in &points {
                    let model = branch_tree(b)?;
                    let t = time_algorithm(&model, a, r, reps, warmup, seed)?;
                    let code = if a == Algorithm::Inverse { 0.0 } else { 1.0 };
                    table.push(vec![code, t.n_bodies as f64, r as f64, t.mean_s, t.std_s])?;
                }
            }
            write_table(&table, out)
        }
    }
}

fn open_model(spec: &str) -> Result<RobotModel> {
    if spec == "builtin:tilthex" {
        return Ok(build_tilthex(&TiltHexParams::default())?);
    }
    load_model(spec).with_context(|| format!("cannot load model {spec}"))
}

enum Traj {
    Source(Box<dyn MotionSource>),
    File(Vec<Sample>),
}

fn open_traj(model: &RobotModel, common: &Common) -> Result<Traj> {
    Ok(match common.traj.as_str() {
        "builtin:tilthex" => Traj::Source(Box::new(TiltHexTrajectory::default())),
        "builtin:rest" => Traj::Source(Box::new(Rest {
            pose: Pose::identity(),
            horizon: common.dt * common.steps as f64,
        })),
        path => {
            let file = File::open(path).with_context(|| format!("cannot open trajectory {path}"))?;
            let table = Table::read(file).with_context(|| format!("trajectory {path}"))?;
            Traj::File(samples_from_table(model, &table).with_context(|| format!("trajectory {path}"))?)
        }
    })
}

fn truncate(m: &MotionInput, depth: usize) -> MotionInput {
    MotionInput {
        base_pose: m.base_pose,
        base_twist: m.base_twist[..depth].to_vec(),
        joints: m.joints.iter().map(|q| q[..=depth].to_vec()).collect(),
    }
}

/// Samples with `V₁` to `depth − 1` and `q` to `depth`.
fn samples(model: &RobotModel, common: &Common, depth: usize) -> Result<Vec<Sample>> {
    match open_traj(model, common)? {
        Traj::Source(src) => {
            let t0 = src.interval().0;
            (0..common.steps)
                .map(|i| {
                    let t = t0 + i as f64 * common.dt;
                    Ok(Sample {
                        t,
                        motion: src.motion(model, t, depth)?,
                    })
                })
                .collect()
        }
        Traj::File(samples) => {
            let have = samples.first().map_or(0, |s| s.motion.twist_depth());
            if have < depth {
                bail!(
                    "trajectory holds V1 to order {} but order {} needs {}",
                    have as isize - 1,
                    common.order,
                    depth - 1
                );
            }
            Ok(samples.iter().map(|s| Sample { t: s.t, motion: truncate(&s.motion, depth) }).collect())
        }
    }
}

fn write_table(table: &Table, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
            table.write(BufWriter::new(file))?;
        }
        None => table.write(io::stdout().lock())?,
    }
    Ok(())
}

fn wrench_header(prefix: &str, orders: std::ops::Range<usize>) -> Vec<String> {
    orders.flat_map(|k| (0..6).map(move |c| format!("{prefix}_{k}_{c}"))).collect()
}

fn joint_header(model: &RobotModel, prefix: &str, orders: std::ops::Range<usize>) -> Vec<String> {
    (0..model.n_joints())
        .flat_map(|j| orders.clone().map(move |k| joint_column(prefix, j, k)))
        .collect()
}

/// Base wrench and joint torques `0..=r` per sample from an input table.
struct Inputs {
    wrench: Vec<Vec<Wrench>>,
    tau: Vec<Vec<Vec<f64>>>,
}

fn read_inputs(model: &RobotModel, path: &PathBuf, samples: &[Sample], r: usize) -> Result<Inputs> {
    let file = File::open(path).with_context(|| format!("cannot open inputs {}", path.display()))?;
    let table = Table::read(file).with_context(|| format!("inputs {}", path.display()))?;
    if table.rows.len() != samples.len() {
        return Err(fbd_core::Error::Data(format!(
            "{} has {} rows for {} trajectory samples",
            path.display(),
            table.rows.len(),
            samples.len()
        ))
        .into());
    }
    let t = table.require("t")?;
    let w: Vec<usize> = wrench_header("W1", 0..r + 1)
        .iter()
        .map(|c| table.require(c))
        .collect::<fbd_core::Result<_>>()?;
    let tau: Vec<Vec<usize>> = (0..model.n_joints())
        .map(|j| (0..=r).map(|k| table.require(&joint_column("tau", j, k))).collect())
        .collect::<fbd_core::Result<_>>()?;
    let mut inputs = Inputs {
        wrench: Vec::new(),
        tau: Vec::new(),
    };
    for (row, s) in table.rows.iter().zip(samples) {
        if (row[t] - s.t).abs() > 1e-9 {
            return Err(fbd_core::Error::Data(format!("inputs row at t={} does not match sample t={}", row[t], s.t)).into());
        }
        inputs
            .wrench
            .push(w.chunks(6).map(|c| Vector6::from_fn(|i, _| row[c[i]])).collect());
        inputs
            .tau
            .push(tau.iter().map(|cols| cols.iter().map(|&c| row[c]).collect()).collect());
    }
    Ok(inputs)
}

fn state_of(m: &MotionInput) -> State {
    State {
        base_pose: m.base_pose,
        base_twist: m.base_twist[0],
        q: m.joints.iter().map(|q| q[0]).collect(),
        qdot: m.joints.iter().map(|q| q[1]).collect(),
    }
}

fn cmd_id(common: &Common, out: Option<PathBuf>, rotors: bool) -> Result<()> {
    let model = open_model(&common.model)?;
    let r = common.order;
    let samples = samples(&model, common, r + 2)?;
    let loads = LoadInput::none(&model);
    let mut header = vec!["t".to_string()];
    header.extend(wrench_header("W1", 0..r + 1));
    header.extend(joint_header(&model, "tau", 0..r + 1));
    header.extend(joint_header(&model, "Q", 0..r + 1));
    let allocation = if rotors {
        let lu = propeller_allocation(&TiltHexParams::default()).lu();
        header.extend((0..=r).flat_map(|k| (1..=6).map(move |i| format!("w2_{i}_{k}"))));
        Some(lu)
    } else {
        None
    };
    let mut table = Table::new(header);
    for s in &samples {
        let cache = forward_kinematics(&model, &s.motion, r)?;
        let id = hgrne(&model, &cache, &loads, r)?;
        let mut row = vec![s.t];
        for w in &id.base_wrench {
            row.extend(w.iter());
        }
        for q in id.tau.rows() {
            row.extend(q);
        }
        for q in id.generalized.rows() {
            row.extend(q);
        }
        if let Some(lu) = &allocation {
            let body = base_wrench_to_body_frame(&id.base_wrench, &s.motion.base_pose, &s.motion.base_twist, r)?;
            for w in &body {
                let speeds = lu.solve(w).ok_or_else(|| anyhow!("propeller allocation is singular"))?;
                row.extend(speeds.iter());
            }
        }
        table.push(row)?;
    }
    write_table(&table, out)
}

fn cmd_fd(common: &Common, inputs: &PathBuf, out: Option<PathBuf>) -> Result<()> {
    let model = open_model(&common.model)?;
    let r = common.order;
    let samples = samples(&model, common, 1)?;
    let inputs = read_inputs(&model, inputs, &samples, r)?;
    let mut header = vec!["t".to_string()];
    header.extend(wrench_header("V1", 1..r + 2));
    header.extend(joint_header(&model, "q", 2..r + 3));
    let mut table = Table::new(header);
    for (i, s) in samples.iter().enumerate() {
        let input = ForwardInput {
            state: state_of(&s.motion),
            propeller: PropellerWrench::Spatial(inputs.wrench[i].clone()),
            tau: inputs.tau[i].clone(),
            loads: LoadInput::none(&model),
        };
        let fd = hgabi(&model, &input, r)?;
        let mut row = vec![s.t];
        for v in &fd.base_accel {
            row.extend(v.iter());
        }
        for q in &fd.joint_accel {
            row.extend(q);
        }
        table.push(row)?;
    }
    write_table(&table, out)
}

fn cmd_hybrid(common: &Common, motion: &[usize], base: BaseArg, inputs: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let model = open_model(&common.model)?;
    let r = common.order;
    let nj = model.n_joints();
    for &id in motion {
        if id < 2 || id > nj + 1 {
            return Err(fbd_core::Error::Partition(format!("body {id} has no joint")).into());
        }
    }
    let prescribed: Vec<bool> = (0..nj).map(|j| motion.contains(&(j + 2))).collect();
    let samples = samples(&model, common, r + 2)?;
    let needs_inputs = matches!(base, BaseArg::Wrench) || prescribed.iter().any(|p| !p);
    let inputs = match (&inputs, needs_inputs) {
        (Some(path), true) => Some(read_inputs(&model, path, &samples, r)?),
        (None, true) => bail!("--inputs is required for torque-driven joints or a wrench-driven base"),
        _ => None,
    };
    let mut header = vec!["t".to_string()];
    header.extend(wrench_header("V1", 1..r + 2));
    header.extend(wrench_header("W1", 0..r + 1));
    header.extend(joint_header(&model, "q", 2..r + 3));
    header.extend(joint_header(&model, "tau", 0..r + 1));
    let mut table = Table::new(header);
    let loads = LoadInput::none(&model);
    for (i, s) in samples.iter().enumerate() {
        let m = &s.motion;
        let base = match base {
            BaseArg::Twist => BaseMode::TwistGiven(m.base_twist[1..=r + 1].to_vec()),
            BaseArg::Wrench => BaseMode::WrenchGiven(PropellerWrench::Spatial(
                inputs.as_ref().expect("inputs checked").wrench[i].clone(),
            )),
        };
        let joints = (0..nj)
            .map(|j| {
                if prescribed[j] {
                    JointInput::Motion(m.joints[j][2..=r + 2].to_vec())
                } else {
                    JointInput::Torque(inputs.as_ref().expect("inputs checked").tau[i][j].clone())
                }
            })
            .collect();
        let out = hghyb(&model, &state_of(m), &HybridSpec { base, joints }, &loads, r)?;
        let mut row = vec![s.t];
        for v in &out.base_accel {
            row.extend(v.iter());
        }
        for w in &out.base_wrench {
            row.extend(w.iter());
        }
        for q in &out.joint_accel {
            row.extend(q);
        }
        for t in &out.tau {
            row.extend(t);
        }
        table.push(row)?;
    }
    write_table(&table, out)
}

fn cmd_roundtrip(common: &Common, inputs: Option<PathBuf>, tol: f64) -> Result<()> {
    let model = open_model(&common.model)?;
    let r = common.order;
    let samples = samples(&model, common, r + 2)?;
    let given = inputs.map(|p| read_inputs(&model, &p, &samples, r)).transpose()?;
    let motions: Vec<MotionInput> = samples.iter().map(|s| s.motion.clone()).collect();
    let report = round_trip_with(&model, &motions, r, |i, id| {
        if let Some(g) = &given {
            id.base_wrench.clone_from(&g.wrench[i]);
            for (j, t) in g.tau[i].iter().enumerate() {
                id.tau.row_mut(j).copy_from_slice(t);
            }
        }
    })?;
    let mut out = io::stdout().lock();
    writeln!(out, "round trip: {} samples, order {r}, {:.3} s", report.samples, report.elapsed.as_secs_f64())?;
    for e in &report.per_order {
        let status = if e.relative() <= tol { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "order {}: joints {:.3e} base {:.3e} {status}",
            e.order,
            e.joints.relative(),
            e.base.relative()
        )?;
    }
    match report.first_failure(tol) {
        None => {
            writeln!(out, "PASS: max relative error {:.3e} <= {tol:e}", report.max_relative())?;
            Ok(())
        }
        Some(k) => {
            writeln!(out, "FAIL: order {k} exceeds {tol:e}")?;
            Err(CheckFailed.into())
        }
    }
}

fn cmd_fdcheck(common: &Common, step: f64, count: usize, tol: f64) -> Result<()> {
    let model = open_model(&common.model)?;
    let Traj::Source(src) = open_traj(&model, common)? else {
        bail!("fdcheck needs a builtin trajectory that can be evaluated at any time");
    };
    let r = common.order.max(1);
    let times = audit_times(src.as_ref(), count, step);
    let report = fdcheck(&model, src.as_ref(), &times, r, step)?;
    let mut out = io::stdout().lock();
    writeln!(out, "fdcheck: order 1..={r}, step {step:e}, {count} times")?;
    let mut failed = false;
    for (q, e) in report.per_quantity() {
        let worst_order = report
            .entries
            .iter()
            .filter(|x| x.quantity == q)
            .max_by(|a, b| a.error.relative().total_cmp(&b.error.relative()))
            .map_or(0, |x| x.order);
        let status = if e <= tol { "PASS" } else { "FAIL" };
        failed |= e > tol;
        writeln!(out, "{q:>7}: {e:.3e} (worst at order {worst_order}) {status}")?;
    }
    if failed {
        writeln!(out, "FAIL: worst relative error {:.3e} > {tol:e}", report.worst())?;
        return Err(CheckFailed.into());
    }
    writeln!(out, "PASS: worst relative error {:.3e}", report.worst())?;
    Ok(())
}
