//! Articulated-body forward dynamics and its time derivatives.
//!
//! The articulated inertias depend only on the configuration, so they are
//! computed once per state and reused by every derivative pass. Each pass
//! `k` runs a backward sweep for the bias wrenches `(Wᴬ)⁽ᵏ⁾` and a forward
//! sweep producing `V₁⁽ᵏ⁺¹⁾`, `q⁽ᵏ⁺²⁾` and every body twist `V⁽ᵏ⁺¹⁾`, which
//! then close the next kinematics slot.

use crate::error::{Error, Result};
use crate::inverse::{AppliedStream, LoadInput};
use crate::kinematics::{KinematicsCache, SpatialWrench};
use crate::ldlt::Ldlt6;
use crate::liegroup::{binomf, check_order, Mat6, Pose, Twist, Wrench};
use crate::model::RobotModel;
use crate::stack::Stacks;

const DEGENERATE_TOL: f64 = 1e-12;

/// Order-0 state of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub base_pose: Pose,
    pub base_twist: Twist,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

impl State {
    pub fn rest(model: &RobotModel, base_pose: Pose) -> Self {
        Self {
            base_pose,
            base_twist: Twist::zeros(),
            q: vec![0.0; model.n_joints()],
            qdot: vec![0.0; model.n_joints()],
        }
    }
}

/// Propeller (base) wrench derivatives `0..=r`.
#[derive(Debug, Clone, PartialEq)]
pub enum PropellerWrench {
    /// Inertial frame, `(W⁰₁,prop)⁽ᵏ⁾`.
    Spatial(Vec<Wrench>),
    /// Base body frame; converted through the base pose and twist.
    Body(Vec<Wrench>),
}

impl PropellerWrench {
    fn len(&self) -> usize {
        match self {
            PropellerWrench::Spatial(w) | PropellerWrench::Body(w) => w.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardInput {
    pub state: State,
    pub propeller: PropellerWrench,
    /// Per joint, `τ⁽⁰⁾..⁽ʳ⁾`.
    pub tau: Vec<Vec<f64>>,
    pub loads: LoadInput,
}

/// Articulated inertias `Mᴬⱼ` with the per-joint projections.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticulatedInertia {
    pub ma: Vec<Mat6>,
    /// `Uⱼ = Mᴬⱼ·Sⱼ` (zero for the base and motion-prescribed joints).
    pub u: Vec<Twist>,
    /// `(SⱼᵀMᴬⱼSⱼ)⁻¹` (zero for the base and motion-prescribed joints).
    pub d_inv: Vec<f64>,
}

impl ArticulatedInertia {
    /// Largest elementwise difference between two sets of articulated inertias.
    pub fn max_difference(&self, other: &Self) -> f64 {
        self.ma
            .iter()
            .zip(&other.ma)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }
}

/// Articulated inertias of all bodies with every joint torque-driven.
pub fn articulated_inertia(model: &RobotModel, cache: &KinematicsCache) -> Result<ArticulatedInertia> {
    articulated_inertia_partitioned(model, cache, &vec![false; model.n_joints()])
}

/// Articulated inertias where children attached through motion-prescribed
/// joints (`prescribed[joint] == true`) contribute their full inertia.
pub fn articulated_inertia_partitioned(
    model: &RobotModel,
    cache: &KinematicsCache,
    prescribed: &[bool],
) -> Result<ArticulatedInertia> {
    let n = model.n_bodies();
    let mut ma = vec![Mat6::zeros(); n];
    let mut u = vec![Twist::zeros(); n];
    let mut d_inv = vec![0.0; n];
    for &j in model.postorder() {
        ma[j] += cache.inertia(j, 0);
        if j == 0 {
            continue;
        }
        let p = model.parent(j).expect("non-base body");
        if prescribed[j - 1] {
            let child = ma[j];
            ma[p] += child;
            continue;
        }
        let s = cache.screw(j, 0);
        let uj = ma[j] * s;
        let d = s.dot(&uj);
        if !(d.abs() >= DEGENERATE_TOL) {
            return Err(Error::DegenerateJoint { body: j + 1, value: d });
        }
        u[j] = uj;
        d_inv[j] = 1.0 / d;
        let projected = ma[j] - uj * uj.transpose() * d_inv[j];
        ma[p] += projected;
    }
    Ok(ArticulatedInertia { ma, u, d_inv })
}

/// Result of the forward dynamics.
#[derive(Debug, Clone)]
pub struct AccelOutput {
    /// `V₁⁽¹⁾..⁽ʳ⁺¹⁾`.
    pub base_accel: Vec<Twist>,
    /// Per joint, `q⁽²⁾..⁽ʳ⁺²⁾`.
    pub joint_accel: Vec<Vec<f64>>,
    /// Kinematics with slots `0..=r+1` closed; holds every body twist stack.
    pub cache: KinematicsCache,
    pub articulated: ArticulatedInertia,
    /// Largest deviation of the articulated inertias recomputed inside the
    /// derivative passes from the first pass (zero unless recomputation is
    /// requested).
    pub articulated_drift: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ForwardOptions {
    /// Recompute the articulated inertias in every pass and report the
    /// largest deviation in [`AccelOutput::articulated_drift`].
    pub recompute_articulated: bool,
}

/// Forward dynamics and its derivatives to order `r`.
pub fn hgabi(model: &RobotModel, input: &ForwardInput, r: usize) -> Result<AccelOutput> {
    hgabi_with(model, input, r, ForwardOptions::default())
}

pub fn hgabi_with(model: &RobotModel, input: &ForwardInput, r: usize, opts: ForwardOptions) -> Result<AccelOutput> {
    if input.propeller.len() < r + 1 {
        return Err(Error::StackSize {
            what: "propeller wrench derivatives",
            expected: r + 1,
            found: input.propeller.len(),
        });
    }
    let base = match &input.propeller {
        PropellerWrench::Spatial(w) => BaseDrive::Wrench(WrenchSource::Spatial(w)),
        PropellerWrench::Body(w) => BaseDrive::Wrench(WrenchSource::Body(w)),
    };
    let joints: Vec<JointDrive> = input.tau.iter().map(|t| JointDrive::Torque(t)).collect();
    let sol = solve(model, &input.state, &base, &joints, &input.loads, r, opts.recompute_articulated)?;
    Ok(AccelOutput {
        base_accel: sol.base_accel,
        joint_accel: sol.joint_accel,
        cache: sol.cache,
        articulated: sol.articulated,
        articulated_drift: sol.drift,
    })
}

pub(crate) enum WrenchSource<'a> {
    Spatial(&'a [Wrench]),
    Body(&'a [Wrench]),
}

pub(crate) enum BaseDrive<'a> {
    Wrench(WrenchSource<'a>),
    /// `V₁⁽¹⁾..⁽ʳ⁺¹⁾`.
    Twist(&'a [Twist]),
}

pub(crate) enum JointDrive<'a> {
    /// `τ⁽⁰⁾..⁽ʳ⁾`.
    Torque(&'a [f64]),
    /// `q⁽²⁾..⁽ʳ⁺²⁾`.
    Motion(&'a [f64]),
}

pub(crate) struct Solution {
    pub base_accel: Vec<Twist>,
    pub base_wrench: Vec<Wrench>,
    pub joint_accel: Vec<Vec<f64>>,
    /// `Qⱼ⁽ᵏ⁾` (computed for motion-prescribed joints, echoed `τ + τ_ext` otherwise).
    pub generalized: Vec<Vec<f64>>,
    pub cache: KinematicsCache,
    pub articulated: ArticulatedInertia,
    pub drift: f64,
}

/// Shared articulated-body recursion for forward and hybrid dynamics.
pub(crate) fn solve(
    model: &RobotModel,
    state: &State,
    base: &BaseDrive,
    joints: &[JointDrive],
    loads: &LoadInput,
    r: usize,
    recompute: bool,
) -> Result<Solution> {
    check_order(r)?;
    let n = model.n_bodies();
    let nj = model.n_joints();
    if joints.len() != nj {
        return Err(Error::StackSize {
            what: "joint drive stacks",
            expected: nj,
            found: joints.len(),
        });
    }
    for d in joints {
        let (what, len) = match d {
            JointDrive::Torque(t) => ("joint torque derivatives", t.len()),
            JointDrive::Motion(m) => ("prescribed joint accelerations", m.len()),
        };
        if len < r + 1 {
            return Err(Error::StackSize {
                what,
                expected: r + 1,
                found: len,
            });
        }
    }
    let base_len = match base {
        BaseDrive::Wrench(WrenchSource::Spatial(w) | WrenchSource::Body(w)) => w.len(),
        BaseDrive::Twist(v) => v.len(),
    };
    if base_len < r + 1 {
        return Err(Error::StackSize {
            what: "base drive derivatives",
            expected: r + 1,
            found: base_len,
        });
    }
    loads.check(model, r)?;

    let prescribed: Vec<bool> = joints.iter().map(|d| matches!(d, JointDrive::Motion(_))).collect();
    let mut cache = KinematicsCache::new(model, r)?;
    cache.set_state(model, &state.base_pose, &state.base_twist, &state.q, &state.qdot)?;
    let art = articulated_inertia_partitioned(model, &cache, &prescribed)?;
    let base_factor = match base {
        BaseDrive::Wrench(_) => Some(Ldlt6::factor(&art.ma[0])?),
        BaseDrive::Twist(_) => None,
    };
    let mut drift: f64 = 0.0;

    let mut applied: Vec<AppliedStream> = (0..n).map(|j| loads.applied_stream(&cache, j)).collect();
    let mut prop_conv = match base {
        BaseDrive::Wrench(WrenchSource::Body(_)) => Some(SpatialWrench::new(&state.base_pose)),
        _ => None,
    };

    let g = cache.gravity();
    // Bias wrench Wᴬ⁽ᵏ⁾ of the current pass, q̃ of the current pass, and the
    // transmitted wrenches W⁽ᵐ⁾ = Mᴬ·V⁽ᵐ⁺¹⁾ + Wᴬ⁽ᵐ⁾ of all passes so far.
    let mut wa = vec![Wrench::zeros(); n];
    let mut qt = vec![0.0; n];
    let mut transmitted = Stacks::new(n, r + 1, Wrench::zeros());
    let mut generalized = vec![vec![0.0; r + 1]; nj];
    let mut base_wrench = Vec::with_capacity(r + 1);

    for k in 0..=r {
        cache.prepare_slot(model, k + 1);
        if recompute && k > 0 {
            let again = articulated_inertia_partitioned(model, &cache, &prescribed)?;
            drift = drift.max(again.max_difference(&art));
        }

        wa.iter_mut().for_each(|w| *w = Wrench::zeros());
        for &j in model.postorder() {
            let app = applied[j].next(loads, &cache, j, k);
            let own = cache.pibias.get(j, k + 1) + cache.m.at(j, k).column(5) * g - app;
            wa[j] += own;
            if j == 0 {
                continue;
            }
            let joint = j - 1;
            let s = cache.s.row(j);
            let vbias = cache.vbias.get(j, k + 1);
            let contribution = match joints[joint] {
                JointDrive::Torque(tau) => {
                    let mut tilde = 0.0;
                    for m in 0..k {
                        tilde += binomf(k, m) * s[k - m].dot(transmitted.at(j, m));
                    }
                    let rhs = tau[k] + loads.tau_ext(joint, k) - tilde - art.u[j].dot(&vbias) - s[0].dot(&wa[j]);
                    qt[j] = art.d_inv[j] * rhs;
                    wa[j] + art.u[j] * qt[j] + art.ma[j] * vbias
                }
                JointDrive::Motion(acc) => wa[j] + art.ma[j] * (s[0] * acc[k] + vbias),
            };
            let p = model.parent(j).expect("non-base body");
            wa[p] += contribution;
        }

        let v1 = match base {
            BaseDrive::Wrench(src) => {
                let wprop = match (src, prop_conv.as_mut()) {
                    (WrenchSource::Body(w), Some(conv)) => conv.extend(&cache.v.row(0)[..k], w),
                    (WrenchSource::Spatial(w), _) | (WrenchSource::Body(w), None) => w[k],
                };
                base_wrench.push(wprop);
                base_factor.as_ref().expect("factored in wrench mode").solve(&(wprop - wa[0]))
            }
            BaseDrive::Twist(v) => {
                let v1 = v[k];
                base_wrench.push(art.ma[0] * v1 + wa[0]);
                v1
            }
        };
        cache.set_base_twist(k + 1, v1);
        cache.close_base(k + 1);
        transmitted.set(0, k, art.ma[0] * v1 + wa[0]);

        for &j in model.preorder().iter().skip(1) {
            let joint = j - 1;
            let p = model.parent(j).expect("non-base body");
            let qn = match joints[joint] {
                JointDrive::Torque(_) => qt[j] - art.d_inv[j] * art.u[j].dot(&cache.v.get(p, k + 1)),
                JointDrive::Motion(acc) => acc[k],
            };
            cache.set_joint(joint, k + 2, qn);
            cache.close_body(model, j, k + 1);
            let wj = art.ma[j] * cache.v.get(j, k + 1) + wa[j];
            transmitted.set(j, k, wj);
            generalized[joint][k] = match joints[joint] {
                JointDrive::Torque(tau) => tau[k] + loads.tau_ext(joint, k),
                JointDrive::Motion(_) => {
                    let s = cache.s.row(j);
                    (0..=k).map(|m| binomf(k, m) * s[k - m].dot(transmitted.at(j, m))).sum()
                }
            };
        }
        cache.mark_closed(k + 1);
    }

    let base_accel = (1..=r + 1).map(|k| cache.v.get(0, k)).collect();
    let joint_accel = (0..nj).map(|j| (2..=r + 2).map(|k| cache.joint(j, k)).collect()).collect();
    Ok(Solution {
        base_accel,
        base_wrench,
        joint_accel,
        generalized,
        cache,
        articulated: art,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::join;
    use crate::model::{spatial_inertia, BodySpec, JointSpec};
    use nalgebra::{Matrix3, Vector3};

    fn chain(n_links: usize) -> RobotModel {
        let j = Matrix3::from_diagonal(&Vector3::new(0.01, 0.02, 0.015));
        let mut bodies = vec![BodySpec {
            id: 1,
            parent: 0,
            joint: None,
            home: Pose::identity(),
            inertia: spatial_inertia(2.0, &j),
        }];
        for i in 0..n_links {
            let axis = [Vector3::x(), Vector3::y(), Vector3::z()][i % 3];
            bodies.push(BodySpec {
                id: i + 2,
                parent: i + 1,
                joint: Some(JointSpec::revolute(axis, Vector3::new(0.0, 0.0, 0.05))),
                home: Pose::from_rpy(0.2, 0.1, -0.3, Vector3::new(0.05, 0.0, -0.12)),
                inertia: spatial_inertia(0.3, &j),
            });
        }
        RobotModel::build(bodies, 9.81).unwrap()
    }

    fn rest_input(model: &RobotModel, r: usize) -> ForwardInput {
        ForwardInput {
            state: State::rest(model, Pose::rot_z(0.4)),
            propeller: PropellerWrench::Spatial(vec![Wrench::zeros(); r + 1]),
            tau: vec![vec![0.0; r + 1]; model.n_joints()],
            loads: LoadInput::none(model),
        }
    }

    #[test]
    fn free_fall() {
        let model = chain(3);
        let out = hgabi(&model, &rest_input(&model, 2), 2).unwrap();
        let expected = join(&Vector3::zeros(), &Vector3::new(0.0, 0.0, -9.81));
        assert!((out.base_accel[0] - expected).amax() < 1e-12);
        assert!(out.joint_accel.iter().all(|row| row[0].abs() < 1e-12));
    }

    #[test]
    fn leaf_articulated_inertia_is_its_own() {
        let model = chain(2);
        let mut input = rest_input(&model, 0);
        input.state.q = vec![0.3, -0.5];
        let out = hgabi(&model, &input, 0).unwrap();
        assert!((out.articulated.ma[2] - out.cache.inertia(2, 0)).amax() < 1e-15);
    }

    #[test]
    fn two_body_projection() {
        let model = chain(1);
        let mut input = rest_input(&model, 0);
        input.state.q = vec![0.7];
        let out = hgabi(&model, &input, 0).unwrap();
        let (m1, m2) = (out.cache.inertia(0, 0), out.cache.inertia(1, 0));
        let s = out.cache.screw(1, 0);
        let d = (s.transpose() * m2 * s)[0];
        let expected = m1 + m2 - m2 * s * s.transpose() * m2 / d;
        assert!((out.articulated.ma[0] - expected).amax() < 1e-13);
    }

    #[test]
    fn articulated_inertia_is_symmetric_and_dominates() {
        let model = chain(5);
        let mut input = rest_input(&model, 0);
        input.state.q = vec![0.3, -1.2, 0.8, 2.0, -0.4];
        let out = hgabi(&model, &input, 0).unwrap();
        for j in 0..model.n_bodies() {
            let ma = &out.articulated.ma[j];
            assert!((ma - ma.transpose()).amax() < 1e-11);
            let diff = ma - out.cache.inertia(j, 0);
            let sym = (diff + diff.transpose()) * 0.5;
            let min_eig = sym.symmetric_eigenvalues().min();
            assert!(min_eig > -1e-12, "{min_eig}");
        }
    }

    #[test]
    fn recompute_reports_no_drift() {
        let model = chain(4);
        let mut input = rest_input(&model, 4);
        input.state.q = vec![0.3, -1.2, 0.8, 2.0];
        input.state.qdot = vec![0.5, 0.1, -0.7, 0.2];
        input.state.base_twist = Twist::new(0.1, -0.2, 0.3, 0.5, 0.0, -0.1);
        let out = hgabi_with(&model, &input, 4, ForwardOptions { recompute_articulated: true }).unwrap();
        assert!(out.articulated_drift <= 1e-12);
    }

    #[test]
    fn short_torque_stack_rejected() {
        let model = chain(2);
        let mut input = rest_input(&model, 2);
        input.tau[1].truncate(2);
        assert!(matches!(hgabi(&model, &input, 2), Err(Error::StackSize { .. })));
    }
}
