//! Higher-order recursive dynamics for floating-base kinematic trees.
//!
//! The engine works in the spatial (right-invariant) representation on SE(3):
//! all twists, wrenches and inertias are expressed in the inertial frame.
//! For a tree whose base moves freely in SE(3) and whose joints are 1-DoF
//! revolute or prismatic, it computes
//!
//! * forward kinematics and arbitrary-order time derivatives of every
//!   twist, screw, inertia and momentum ([`kinematics`]),
//! * inverse dynamics and its derivatives ([`inverse`]),
//! * articulated-body forward dynamics and its derivatives ([`forward`]),
//! * hybrid dynamics with mixed prescribed motion and torque ([`hybrid`]),
//! * the dense closed-form equations of motion at orders 0 and 1 and an
//!   admissible Coriolis matrix ([`closed_form`]).
//!
//! Body indices are zero-based with the floating base at index 0. Body `j > 0`
//! is attached to its parent through joint `j - 1`. Model files use one-based
//! ids (base = 1) and are translated on load.

pub mod audit;
pub mod benchmark;
pub mod closed_form;
mod error;
pub mod forward;
pub mod hybrid;
pub mod inverse;
pub mod kinematics;
mod ldlt;
pub mod liegroup;
pub mod model;
pub mod stack;
pub mod tilthex;
pub mod trajectory;

pub use error::{Error, Result};
pub use forward::{
    articulated_inertia, hgabi, AccelOutput, ArticulatedInertia, ForwardInput, PropellerWrench, State,
};
pub use hybrid::{hghyb, BaseMode, HybridOutput, HybridSpec, JointInput};
pub use inverse::{base_wrench_to_body_frame, hgrne, GeneralizedForces, LoadInput, WrenchFrame};
pub use kinematics::{forward_kinematics, KinematicsCache, MotionInput};
pub use liegroup::{Mat6, Pose, Twist, Wrench};
pub use model::{BodySpec, JointKind, JointSpec, RobotModel};
pub use stack::Stacks;

/// Highest derivative order accepted by the recursions.
pub const MAX_ORDER: usize = 32;

/// Default gravitational acceleration (m/s²), acting along −z.
pub const STANDARD_GRAVITY: f64 = 9.81;
