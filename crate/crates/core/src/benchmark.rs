//! Benchmark trees, random inputs and timing sweeps.

use std::f64::consts::PI;
use std::hint::black_box;
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::forward::{hgabi, ForwardInput, PropellerWrench, State};
use crate::inverse::{hgrne, LoadInput};
use crate::kinematics::{fill_kinematics, KinematicsCache, MotionInput};
use crate::liegroup::{Pose, Twist, Wrench};
use crate::model::{spatial_inertia, BodySpec, JointSpec, RobotModel};
use crate::tilthex::TiltHexParams;

pub const BRANCHES: usize = 5;

/// Base with five identical serial branches of `per_branch` bodies
/// (`N = 1 + 5·per_branch`), using the hexarotor base and link parameters.
pub fn branch_tree(per_branch: usize) -> Result<RobotModel> {
    let p = TiltHexParams::default();
    let mut bodies = vec![BodySpec {
        id: 1,
        parent: 0,
        joint: None,
        home: Pose::identity(),
        inertia: spatial_inertia(p.m_base, &p.j_base),
    }];
    let link = spatial_inertia(p.m_link, &p.j_link);
    let axes = [Vector3::y(), Vector3::x(), Vector3::z()];
    let point = Vector3::new(0.0, 0.0, p.d);
    for b in 0..BRANCHES {
        let angle = 2.0 * PI * b as f64 / BRANCHES as f64;
        for n in 0..per_branch {
            let id = bodies.len() + 1;
            let (parent, home) = if n == 0 {
                let mount = Pose::rot_z(angle) * Pose::from_translation(p.c / 2.0, 0.0, -p.b - p.d);
                (1, mount)
            } else {
                (id - 1, Pose::from_translation(0.0, 0.0, -2.0 * p.d))
            };
            bodies.push(BodySpec {
                id,
                parent,
                joint: Some(JointSpec::revolute(axes[n % 3], point)),
                home,
                inertia: link,
            });
        }
    }
    RobotModel::build(bodies, p.gravity)
}

/// Uniform `[-1, 1]` motion: random base pose, `V₁` to `depth − 1`, `q` to `depth`.
pub fn random_motion(model: &RobotModel, depth: usize, rng: &mut impl Rng) -> MotionInput {
    let mut u = || rng.random_range(-1.0..=1.0);
    let base_pose = Pose::from_rpy(PI * u(), PI * u(), PI * u(), Vector3::new(u(), u(), u()));
    let base_twist = (0..depth).map(|_| Twist::from_fn(|_, _| u())).collect();
    let joints = (0..model.n_joints())
        .map(|_| (0..=depth).map(|_| u()).collect())
        .collect();
    MotionInput {
        base_pose,
        base_twist,
        joints,
    }
}

/// Uniform `[-1, 1]` forward-dynamics input of order `r`.
pub fn random_forward_input(model: &RobotModel, r: usize, rng: &mut impl Rng) -> ForwardInput {
    let motion = random_motion(model, 1, rng);
    let mut u = || rng.random_range(-1.0..=1.0);
    ForwardInput {
        state: State {
            base_pose: motion.base_pose,
            base_twist: motion.base_twist[0],
            q: motion.joints.iter().map(|q| q[0]).collect(),
            qdot: motion.joints.iter().map(|q| q[1]).collect(),
        },
        propeller: PropellerWrench::Spatial((0..=r).map(|_| Wrench::from_fn(|_, _| u())).collect()),
        tau: (0..model.n_joints()).map(|_| (0..=r).map(|_| u()).collect()).collect(),
        loads: LoadInput::none(model),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Inverse,
    Forward,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Inverse => "id",
            Algorithm::Forward => "fd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub algo: Algorithm,
    pub n_bodies: usize,
    pub order: usize,
    /// Mean seconds per call.
    pub mean_s: f64,
    /// Standard deviation of the per-call time.
    pub std_s: f64,
    /// Smallest mean over equal batches of the repetitions; robust against
    /// scheduler noise.
    pub best_batch_s: f64,
}

const BATCHES: usize = 10;

/// Prepared inputs of one algorithm at one order; drawn once so that timing
/// covers only the dynamics call.
pub struct Workload<'a> {
    model: &'a RobotModel,
    r: usize,
    kind: WorkloadKind,
}

enum WorkloadKind {
    Inverse {
        motion: MotionInput,
        loads: LoadInput,
        cache: KinematicsCache,
    },
    Forward(ForwardInput),
}

impl<'a> Workload<'a> {
    pub fn new(model: &'a RobotModel, algo: Algorithm, r: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = match algo {
            Algorithm::Inverse => WorkloadKind::Inverse {
                motion: random_motion(model, r + 2, &mut rng),
                loads: LoadInput::none(model),
                cache: KinematicsCache::new(model, r)?,
            },
            Algorithm::Forward => WorkloadKind::Forward(random_forward_input(model, r, &mut rng)),
        };
        Ok(Self { model, r, kind })
    }

    /// One call of the algorithm, including forward kinematics for inverse
    /// dynamics.
    pub fn run(&mut self) -> Result<()> {
        let (model, r) = (self.model, self.r);
        match &mut self.kind {
            WorkloadKind::Inverse { motion, loads, cache } => {
                fill_kinematics(model, black_box(motion), r, cache)?;
                black_box(hgrne(model, cache, loads, r)?);
            }
            WorkloadKind::Forward(input) => {
                black_box(hgabi(model, black_box(input), r)?);
            }
        }
        Ok(())
    }

    /// Mean seconds per call over `reps` consecutive calls.
    pub fn batch_mean(&mut self, reps: usize) -> Result<f64> {
        let t = Instant::now();
        for _ in 0..reps {
            self.run()?;
        }
        Ok(t.elapsed().as_secs_f64() / reps.max(1) as f64)
    }
}

/// Times `reps` calls (after `warmup` untimed ones) of one algorithm at order
/// `r`. Inputs are drawn once, before timing; model construction is excluded.
pub fn time_algorithm(
    model: &RobotModel,
    algo: Algorithm,
    r: usize,
    reps: usize,
    warmup: usize,
    seed: u64,
) -> Result<Timing> {
    let reps = reps.max(1);
    let mut work = Workload::new(model, algo, r, seed)?;
    for _ in 0..warmup {
        work.run()?;
    }
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        work.run()?;
        samples.push(t.elapsed().as_secs_f64());
    }
    let mean = samples.iter().sum::<f64>() / reps as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / reps as f64;
    let batch = (reps / BATCHES).max(1);
    let best = samples
        .chunks(batch)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(Timing {
        algo,
        n_bodies: model.n_bodies(),
        order: r,
        mean_s: mean,
        std_s: var.sqrt(),
        best_batch_s: best,
    })
}

/// Seconds per call of several workloads, robust against machine noise:
/// every round times a batch of `reps` calls of each workload in turn and
/// the fastest round is kept per workload.
pub fn interleaved(work: &mut [Workload], reps: usize, rounds: usize) -> Result<Vec<f64>> {
    for w in work.iter_mut() {
        w.batch_mean(reps)?;
    }
    let mut best = vec![f64::INFINITY; work.len()];
    for _ in 0..rounds.max(1) {
        for (b, w) in best.iter_mut().zip(work.iter_mut()) {
            *b = b.min(w.batch_mean(reps)?);
        }
    }
    Ok(best)
}

/// [`interleaved`] timings of one model over several orders.
pub fn interleaved_orders(
    model: &RobotModel,
    algo: Algorithm,
    orders: &[usize],
    reps: usize,
    rounds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut work = orders
        .iter()
        .map(|&r| Workload::new(model, algo, r, seed))
        .collect::<Result<Vec<_>>>()?;
    interleaved(&mut work, reps, rounds)
}

/// [`interleaved`] timings over bodies per branch at one order.
pub fn interleaved_bodies(
    algo: Algorithm,
    per_branch: &[usize],
    r: usize,
    reps: usize,
    rounds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let models = per_branch.iter().map(|&nb| branch_tree(nb)).collect::<Result<Vec<_>>>()?;
    let mut work = models
        .iter()
        .map(|m| Workload::new(m, algo, r, seed))
        .collect::<Result<Vec<_>>>()?;
    interleaved(&mut work, reps, rounds)
}

/// Timings over bodies per branch at fixed order.
pub fn sweep_bodies(
    algo: Algorithm,
    per_branch: &[usize],
    r: usize,
    reps: usize,
    warmup: usize,
    seed: u64,
) -> Result<Vec<Timing>> {
    per_branch
        .iter()
        .map(|&nb| time_algorithm(&branch_tree(nb)?, algo, r, reps, warmup, seed))
        .collect()
}

/// Timings over orders at fixed tree size.
pub fn sweep_orders(
    algo: Algorithm,
    per_branch: usize,
    orders: &[usize],
    reps: usize,
    warmup: usize,
    seed: u64,
) -> Result<Vec<Timing>> {
    let model = branch_tree(per_branch)?;
    orders
        .iter()
        .map(|&r| time_algorithm(&model, algo, r, reps, warmup, seed))
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Second differences `y[i+1] − 2y[i] + y[i−1]`.
pub fn second_differences(y: &[f64]) -> Vec<f64> {
    y.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect()
}
