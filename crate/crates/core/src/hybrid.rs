//! Hybrid dynamics: some joints follow prescribed motion, the rest are
//! torque-driven; the base either receives a known wrench or follows a
//! known twist trajectory.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::forward::{solve, BaseDrive, JointDrive, PropellerWrench, State, WrenchSource};
use crate::inverse::LoadInput;
use crate::kinematics::KinematicsCache;
use crate::liegroup::{Twist, Wrench};
use crate::model::RobotModel;

/// What is known at the base.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseMode {
    /// Propeller wrench `0..=r` given; base acceleration solved.
    WrenchGiven(PropellerWrench),
    /// Base twist derivatives `V₁⁽¹⁾..⁽ʳ⁺¹⁾` given; spatial wrench evaluated.
    TwistGiven(Vec<Twist>),
}

/// Per-joint input of a hybrid problem.
#[derive(Debug, Clone, PartialEq)]
pub enum JointInput {
    /// `τ⁽⁰⁾..⁽ʳ⁾`.
    Torque(Vec<f64>),
    /// `q⁽²⁾..⁽ʳ⁺²⁾`.
    Motion(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSpec {
    pub base: BaseMode,
    pub joints: Vec<JointInput>,
}

impl HybridSpec {
    /// Builds a spec from explicit index sets (zero-based joint indices).
    /// The sets must be disjoint and cover every joint.
    pub fn from_sets(
        model: &RobotModel,
        base: BaseMode,
        motion: &[(usize, Vec<f64>)],
        torque: &[(usize, Vec<f64>)],
    ) -> Result<Self> {
        let nj = model.n_joints();
        let mut joints: Vec<Option<JointInput>> = vec![None; nj];
        let mut seen = BTreeSet::new();
        let entries = motion
            .iter()
            .map(|(j, s)| (*j, JointInput::Motion(s.clone())))
            .chain(torque.iter().map(|(j, s)| (*j, JointInput::Torque(s.clone()))));
        for (j, input) in entries {
            if j >= nj {
                return Err(Error::Partition(format!("joint {j} does not exist")));
            }
            if !seen.insert(j) {
                return Err(Error::Partition(format!("joint {j} is both prescribed and torque-driven")));
            }
            joints[j] = Some(input);
        }
        let joints = joints
            .into_iter()
            .enumerate()
            .map(|(j, s)| s.ok_or_else(|| Error::Partition(format!("joint {j} is in neither set"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { base, joints })
    }
}

#[derive(Debug, Clone)]
pub struct HybridOutput {
    /// `V₁⁽¹⁾..⁽ʳ⁺¹⁾` (given or solved).
    pub base_accel: Vec<Twist>,
    /// Spatial base wrench `0..=r` (given or evaluated).
    pub base_wrench: Vec<Wrench>,
    /// Per joint `q⁽²⁾..⁽ʳ⁺²⁾` (prescribed or solved).
    pub joint_accel: Vec<Vec<f64>>,
    /// Per joint `τ⁽⁰⁾..⁽ʳ⁾` (given or solved, `τ = Q − τ_ext`).
    pub tau: Vec<Vec<f64>>,
    pub cache: KinematicsCache,
}

/// Hybrid dynamics and its derivatives to order `r`.
pub fn hghyb(model: &RobotModel, state: &State, spec: &HybridSpec, loads: &LoadInput, r: usize) -> Result<HybridOutput> {
    if spec.joints.len() != model.n_joints() {
        return Err(Error::Partition(format!(
            "{} joint inputs for {} joints",
            spec.joints.len(),
            model.n_joints()
        )));
    }
    let base = match &spec.base {
        BaseMode::WrenchGiven(PropellerWrench::Spatial(w)) => BaseDrive::Wrench(WrenchSource::Spatial(w)),
        BaseMode::WrenchGiven(PropellerWrench::Body(w)) => BaseDrive::Wrench(WrenchSource::Body(w)),
        BaseMode::TwistGiven(v) => BaseDrive::Twist(v),
    };
    let joints: Vec<JointDrive> = spec
        .joints
        .iter()
        .map(|j| match j {
            JointInput::Torque(t) => JointDrive::Torque(t),
            JointInput::Motion(m) => JointDrive::Motion(m),
        })
        .collect();
    let sol = solve(model, state, &base, &joints, loads, r, false)?;
    let tau = sol
        .generalized
        .iter()
        .enumerate()
        .map(|(j, q)| match &spec.joints[j] {
            JointInput::Torque(t) => t[..=r].to_vec(),
            JointInput::Motion(_) => (0..=r).map(|k| q[k] - loads.tau_ext(j, k)).collect(),
        })
        .collect();
    Ok(HybridOutput {
        base_accel: sol.base_accel,
        base_wrench: sol.base_wrench,
        joint_accel: sol.joint_accel,
        tau,
        cache: sol.cache,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::Pose;
    use crate::model::{spatial_inertia, BodySpec, JointSpec};
    use nalgebra::{Matrix3, Vector3};

    fn model() -> RobotModel {
        let j = Matrix3::from_diagonal(&Vector3::new(0.01, 0.02, 0.015));
        let mut bodies = vec![BodySpec {
            id: 1,
            parent: 0,
            joint: None,
            home: Pose::identity(),
            inertia: spatial_inertia(2.0, &j),
        }];
        for id in 2..=4 {
            bodies.push(BodySpec {
                id,
                parent: 1,
                joint: Some(JointSpec::revolute(Vector3::y(), Vector3::zeros())),
                home: Pose::from_translation(0.1 * id as f64, 0.0, -0.1),
                inertia: spatial_inertia(0.3, &j),
            });
        }
        RobotModel::build(bodies, 9.81).unwrap()
    }

    #[test]
    fn partition_errors() {
        let m = model();
        let base = BaseMode::TwistGiven(vec![Twist::zeros()]);
        let overlap = HybridSpec::from_sets(&m, base.clone(), &[(0, vec![0.0]), (1, vec![0.0])], &[(1, vec![0.0]), (2, vec![0.0])]);
        assert!(matches!(overlap, Err(Error::Partition(_))));
        let missing = HybridSpec::from_sets(&m, base.clone(), &[(0, vec![0.0])], &[(1, vec![0.0])]);
        assert!(matches!(missing, Err(Error::Partition(_))));
        assert!(HybridSpec::from_sets(&m, base, &[(0, vec![0.0])], &[(1, vec![0.0]), (2, vec![0.0])]).is_ok());
    }

    #[test]
    fn static_hold_under_gravity() {
        let m = model();
        let spec = HybridSpec {
            base: BaseMode::TwistGiven(vec![Twist::zeros()]),
            joints: vec![JointInput::Motion(vec![0.0]); 3],
        };
        let out = hghyb(&m, &State::rest(&m, Pose::identity()), &spec, &LoadInput::none(&m), 0).unwrap();
        let w = out.base_wrench[0];
        assert!((w[5] - m.total_mass() * 9.81).abs() < 1e-12);
        assert!(w[3].abs() < 1e-12 && w[4].abs() < 1e-12);
    }
}
