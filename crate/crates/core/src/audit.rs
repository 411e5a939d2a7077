//! Numerical audits: the inverse/forward round trip along a trajectory and a
//! finite-difference check of every derivative stack.
//!
//! Errors are relative to the scale of the compared signal: for a quantity
//! at order `k`, the largest deviation over all samples and components is
//! divided by the largest magnitude of the reference over the same samples,
//! floored at [`REFERENCE_FLOOR`] so that vanishing signals are compared in
//! absolute terms.

use std::time::{Duration, Instant};

use crate::error::Result;
use crate::forward::{hgabi, ForwardInput, PropellerWrench, State};
use crate::inverse::{hgrne, GeneralizedForces, LoadInput, WrenchFrame};
use crate::kinematics::{forward_kinematics, MotionInput};
use crate::liegroup::{Pose, Twist, Wrench};
use crate::model::RobotModel;
use crate::tilthex::TiltHexTrajectory;

/// Analytic motion with derivatives of any depth.
pub trait MotionSource {
    /// Base pose, `V₁⁽⁰⁾..⁽ᵈᵉᵖᵗʰ⁻¹⁾` and joint stacks `q..q⁽ᵈᵉᵖᵗʰ⁾` at `t`.
    fn motion(&self, model: &RobotModel, t: f64, depth: usize) -> Result<MotionInput>;
    /// Time interval on which the source is defined.
    fn interval(&self) -> (f64, f64);
}

impl MotionSource for TiltHexTrajectory {
    fn motion(&self, _: &RobotModel, t: f64, depth: usize) -> Result<MotionInput> {
        self.eval(t, depth)
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.horizon)
    }
}

/// The model at rest at a fixed pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Rest {
    pub pose: Pose,
    pub horizon: f64,
}

impl MotionSource for Rest {
    fn motion(&self, model: &RobotModel, _: f64, depth: usize) -> Result<MotionInput> {
        Ok(MotionInput::rest(model, self.pose, depth))
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.horizon)
    }
}

/// References smaller than this count as zero.
pub const REFERENCE_FLOOR: f64 = 1e-8;

/// Running maximum of a deviation and of the reference magnitude.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScaledError {
    pub max_deviation: f64,
    pub max_reference: f64,
}

impl ScaledError {
    pub fn add(&mut self, value: &[f64], reference: &[f64]) {
        for (v, r) in value.iter().zip(reference) {
            self.max_deviation = self.max_deviation.max((v - r).abs());
            self.max_reference = self.max_reference.max(r.abs());
        }
    }

    pub fn relative(&self) -> f64 {
        self.max_deviation / self.max_reference.max(REFERENCE_FLOOR)
    }
}

/// Errors of one order in the round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderError {
    pub order: usize,
    /// Joint accelerations `q⁽ᵏ⁺²⁾`.
    pub joints: ScaledError,
    /// Base twist derivative `V₁⁽ᵏ⁺¹⁾`.
    pub base: ScaledError,
}

impl OrderError {
    pub fn relative(&self) -> f64 {
        self.joints.relative().max(self.base.relative())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripReport {
    pub r: usize,
    pub samples: usize,
    pub per_order: Vec<OrderError>,
    pub elapsed: Duration,
}

impl RoundTripReport {
    pub fn max_relative(&self) -> f64 {
        self.per_order.iter().map(OrderError::relative).fold(0.0, f64::max)
    }

    /// First order whose error exceeds `tol`.
    pub fn first_failure(&self, tol: f64) -> Option<usize> {
        self.per_order.iter().find(|e| e.relative() > tol).map(|e| e.order)
    }
}

/// Forward-dynamics input reproducing a motion from inverse-dynamics output.
pub fn forward_input_from(motion: &MotionInput, id: &GeneralizedForces, loads: LoadInput) -> ForwardInput {
    ForwardInput {
        state: State {
            base_pose: motion.base_pose,
            base_twist: motion.base_twist[0],
            q: motion.joints.iter().map(|q| q[0]).collect(),
            qdot: motion.joints.iter().map(|q| q[1]).collect(),
        },
        propeller: PropellerWrench::Spatial(id.base_wrench.clone()),
        tau: id.tau.to_rows(),
        loads,
    }
}

/// Runs inverse dynamics at order `r` on each motion (depth ≥ `r + 2`), feeds
/// the outputs, after `tamper`, to forward dynamics and compares the
/// recovered accelerations with the input stacks.
pub fn round_trip_with(
    model: &RobotModel,
    motions: &[MotionInput],
    r: usize,
    mut tamper: impl FnMut(usize, &mut GeneralizedForces),
) -> Result<RoundTripReport> {
    let start = Instant::now();
    let mut per_order: Vec<OrderError> = (0..=r)
        .map(|order| OrderError {
            order,
            joints: ScaledError::default(),
            base: ScaledError::default(),
        })
        .collect();
    let loads = LoadInput::none(model);
    for (i, motion) in motions.iter().enumerate() {
        let cache = forward_kinematics(model, motion, r)?;
        let mut id = hgrne(model, &cache, &loads, r)?;
        tamper(i, &mut id);
        let fd = hgabi(model, &forward_input_from(motion, &id, loads.clone()), r)?;
        for (k, e) in per_order.iter_mut().enumerate() {
            e.base.add(fd.base_accel[k].as_slice(), motion.base_twist[k + 1].as_slice());
            let got: Vec<f64> = fd.joint_accel.iter().map(|q| q[k]).collect();
            let want: Vec<f64> = motion.joints.iter().map(|q| q[k + 2]).collect();
            e.joints.add(&got, &want);
        }
    }
    Ok(RoundTripReport {
        r,
        samples: motions.len(),
        per_order,
        elapsed: start.elapsed(),
    })
}

pub fn round_trip(model: &RobotModel, motions: &[MotionInput], r: usize) -> Result<RoundTripReport> {
    round_trip_with(model, motions, r, |_, _| {})
}

/// Samples `source` at `t₀ + i·dt` for `i < steps`.
pub fn sample(model: &RobotModel, source: &dyn MotionSource, dt: f64, steps: usize, depth: usize) -> Result<Vec<MotionInput>> {
    let t0 = source.interval().0;
    (0..steps).map(|i| source.motion(model, t0 + i as f64 * dt, depth)).collect()
}

/// Quantities covered by the finite-difference check.
pub const QUANTITIES: [&str; 11] = ["S", "V", "M", "Pi", "W_grav", "W_ext", "Q", "tau", "W_base", "q_acc", "V1_acc"];

/// Body-frame load used by the audit: a constant wrench on every body, so
/// its spatial derivatives exercise the transformation formulas.
pub fn audit_loads(model: &RobotModel, r: usize) -> LoadInput {
    let applied = (0..model.n_bodies())
        .map(|j| {
            let s = 0.1 * (j as f64 + 1.0);
            let mut row = vec![Wrench::zeros(); r + 1];
            row[0] = Wrench::new(0.02 * s, -0.01, 0.03 * s, 0.5 * s, -0.2, 0.3);
            row
        })
        .collect();
    LoadInput {
        frame: WrenchFrame::Body,
        applied,
        tau_ext: Vec::new(),
    }
}

/// Every audited stack at one time, `values[q][k]` flattened over bodies.
fn evaluate(model: &RobotModel, source: &dyn MotionSource, t: f64, r: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    let motion = source.motion(model, t, r + 2)?;
    let cache = forward_kinematics(model, &motion, r)?;
    let loads = audit_loads(model, r);
    let id = hgrne(model, &cache, &loads, r)?;
    let fd = hgabi(model, &forward_input_from(&motion, &id, loads.clone()), r)?;
    let n = model.n_bodies();
    let twist = |v: Twist| v.as_slice().to_vec();
    let per_body = |f: &dyn Fn(usize, usize) -> Vec<f64>, first: usize| -> Vec<Vec<f64>> {
        (0..=r).map(|k| (first..n).flat_map(|j| f(j, k)).collect()).collect()
    };
    let ext = (0..n)
        .map(|j| crate::kinematics::external_wrench_derivs(&loads.applied[j], cache.pose(j), cache.twists(j), r))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        per_body(&|j, k| twist(cache.screw(j, k)), 1),
        per_body(&|j, k| twist(cache.twist(j, k)), 0),
        per_body(&|j, k| cache.inertia(j, k).as_slice().to_vec(), 0),
        per_body(&|j, k| twist(cache.momentum(j, k)), 0),
        per_body(&|j, k| twist(cache.gravity_wrench(j, k)), 0),
        per_body(&|j, k| twist(ext[j][k]), 0),
        (0..=r).map(|k| id.generalized.rows().map(|q| q[k]).collect()).collect(),
        (0..=r).map(|k| id.tau.rows().map(|q| q[k]).collect()).collect(),
        (0..=r).map(|k| twist(id.base_wrench[k])).collect(),
        (0..=r).map(|k| fd.joint_accel.iter().map(|q| q[k]).collect()).collect(),
        (0..=r).map(|k| twist(fd.base_accel[k])).collect(),
    ])
}

/// Sixth-order central difference weights for offsets `1..=3`, applied to
/// `f(t + o·h) − f(t − o·h)`.
const STENCIL: [f64; 3] = [45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0];

/// Worst relative error of one quantity at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct FdEntry {
    pub quantity: &'static str,
    pub order: usize,
    pub error: ScaledError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub r: usize,
    pub step: f64,
    pub entries: Vec<FdEntry>,
}

impl FdReport {
    pub fn worst(&self) -> f64 {
        self.entries.iter().map(|e| e.error.relative()).fold(0.0, f64::max)
    }

    /// Worst relative error per quantity over all orders.
    pub fn per_quantity(&self) -> Vec<(&'static str, f64)> {
        QUANTITIES
            .iter()
            .map(|&q| {
                let w = self
                    .entries
                    .iter()
                    .filter(|e| e.quantity == q)
                    .map(|e| e.error.relative())
                    .fold(0.0, f64::max);
                (q, w)
            })
            .collect()
    }
}

/// Compares every order-`k` stack (`k = 1..=r`) at the given times with the
/// sixth-order central difference of the order-`k−1` stack, step `h`.
pub fn fdcheck(model: &RobotModel, source: &dyn MotionSource, times: &[f64], r: usize, h: f64) -> Result<FdReport> {
    let mut entries: Vec<FdEntry> = QUANTITIES
        .iter()
        .flat_map(|&quantity| {
            (1..=r).map(move |order| FdEntry {
                quantity,
                order,
                error: ScaledError::default(),
            })
        })
        .collect();
    for &t in times {
        let centre = evaluate(model, source, t, r)?;
        let pairs = (1..=3)
            .map(|o| {
                let o = o as f64 * h;
                Ok((evaluate(model, source, t + o, r)?, evaluate(model, source, t - o, r)?))
            })
            .collect::<Result<Vec<_>>>()?;
        for (qi, values) in centre.iter().enumerate() {
            for k in 1..=r {
                let mut fd = vec![0.0; values[k - 1].len()];
                for (w, (plus, minus)) in STENCIL.iter().zip(&pairs) {
                    for ((d, p), m) in fd.iter_mut().zip(&plus[qi][k - 1]).zip(&minus[qi][k - 1]) {
                        *d += w / h * (p - m);
                    }
                }
                entries[qi * r + k - 1].error.add(&fd, &values[k]);
            }
        }
    }
    Ok(FdReport { r, step: h, entries })
}

/// Evenly spaced interior times leaving room for the stencil.
pub fn audit_times(source: &dyn MotionSource, count: usize, h: f64) -> Vec<f64> {
    let (a, b) = source.interval();
    let (a, b) = (a + 3.0 * h + 1e-3, b - 3.0 * h - 1e-3);
    (0..count)
        .map(|i| a + (b - a) * (i as f64 + 0.5) / count as f64)
        .collect()
}
