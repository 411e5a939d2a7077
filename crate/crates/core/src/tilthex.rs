//! Tilted-propeller hexarotor carrying two 3R arms (7 bodies, 6 joints), its
//! reference trajectory and the propeller allocation map.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Matrix6, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::MotionInput;
use crate::liegroup::{join, Pose, Twist, Wrench};
use crate::model::{spatial_inertia, BodySpec, JointSpec, RobotModel};
use crate::STANDARD_GRAVITY;

/// Geometry, inertia and propeller parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltHexParams {
    /// Vertical offset from the base frame to the arm mounts (m).
    pub b: f64,
    /// Lateral distance between the two arm mounts (m).
    pub c: f64,
    /// Half link length (m).
    pub d: f64,
    pub m_base: f64,
    pub j_base: Matrix3<f64>,
    pub m_link: f64,
    pub j_link: Matrix3<f64>,
    pub gravity: f64,
    /// Propeller tilt about the arm axis (rad).
    pub alpha: f64,
    /// Propeller tilt about the tangential axis (rad).
    pub beta: f64,
    /// Propeller arm length (m).
    pub a: f64,
    /// Thrust coefficient.
    pub c_f: f64,
    /// Drag-torque coefficient.
    pub c_d: f64,
}

impl Default for TiltHexParams {
    fn default() -> Self {
        Self {
            b: 0.10,
            c: 0.18,
            d: 0.06,
            m_base: 2.5,
            j_base: Matrix3::from_diagonal(&Vector3::new(0.03, 0.03, 0.05)),
            m_link: 0.25,
            j_link: Matrix3::from_diagonal(&Vector3::new(0.002, 0.002, 0.001)),
            gravity: STANDARD_GRAVITY,
            alpha: 20f64.to_radians(),
            beta: 10f64.to_radians(),
            a: 0.3,
            c_f: 1e-3,
            c_d: 1e-5,
        }
    }
}

/// Builds the model: arms rooted at bodies 2 and 5, joints 2/5 about y,
/// 3/6 about x, 4/7 about z, each joint at `(0, 0, d)` in its body frame.
pub fn build_tilthex(p: &TiltHexParams) -> Result<RobotModel> {
    let link = spatial_inertia(p.m_link, &p.j_link);
    let mut bodies = vec![BodySpec {
        id: 1,
        parent: 0,
        joint: None,
        home: Pose::identity(),
        inertia: spatial_inertia(p.m_base, &p.j_base),
    }];
    let point = Vector3::new(0.0, 0.0, p.d);
    let axes = [Vector3::y(), Vector3::x(), Vector3::z()];
    for first in [2usize, 5] {
        // Lateral offset (−1)ⁱ·c/2 with i the id of the arm's first body.
        let sign = if first % 2 == 0 { 1.0 } else { -1.0 };
        for (n, axis) in axes.iter().enumerate() {
            let id = first + n;
            let (parent, home) = if n == 0 {
                (1, Pose::from_translation(sign * p.c / 2.0, 0.0, -p.b - p.d))
            } else {
                (id - 1, Pose::from_translation(0.0, 0.0, -2.0 * p.d))
            };
            bodies.push(BodySpec {
                id,
                parent,
                joint: Some(JointSpec::revolute(*axis, point)),
                home,
                inertia: link,
            });
        }
    }
    RobotModel::build(bodies, p.gravity)
}

/// Spin direction of rotor `i`: adjacent rotors counter-rotate.
pub fn rotor_sign(i: usize) -> f64 {
    if i % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Body-frame wrench per unit squared rotor speed, one column per rotor.
/// Rotor `i` has drag coefficient `sᵢ·c_d` with `sᵢ` its spin direction.
pub fn propeller_allocation(p: &TiltHexParams) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for i in 1..=6 {
        let c = propeller_pose(p, i);
        let unit = Wrench::new(0.0, 0.0, rotor_sign(i) * p.c_d, 0.0, 0.0, p.c_f);
        m.set_column(i - 1, &c.act_wrench(&unit));
    }
    m
}

/// Pose of rotor `i` (1..=6) in the base frame. The tilt about the arm axis
/// alternates in sign with the spin direction.
pub fn propeller_pose(p: &TiltHexParams, i: usize) -> Pose {
    Pose::rot_z((2.0 - i as f64) * PI / 3.0)
        * Pose::from_translation(p.a, 0.0, 0.0)
        * Pose::rot_x(rotor_sign(i) * p.alpha)
        * Pose::rot_y(p.beta)
}

/// Reference motion: the base flies a horizontal unit circle while yawing
/// sinusoidally; each joint follows a half-cosine from `q0` to `q0 + η`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltHexTrajectory {
    pub radius: f64,
    /// Angular rate along the circle (rad/s).
    pub circle_rate: f64,
    /// Yaw amplitude (rad).
    pub yaw_amplitude: f64,
    /// Yaw angular frequency (rad/s).
    pub yaw_rate: f64,
    pub q0: [f64; 6],
    pub eta: [f64; 6],
    /// Horizon and half-cosine duration (s).
    pub horizon: f64,
}

impl Default for TiltHexTrajectory {
    fn default() -> Self {
        let deg = |v: [f64; 6]| v.map(f64::to_radians);
        Self {
            radius: 1.0,
            circle_rate: 2.0 * PI / 20.0,
            yaw_amplitude: 25f64.to_radians(),
            yaw_rate: 2.0 * PI / 30.0,
            q0: deg([10.0, -5.0, 15.0, -10.0, 7.0, -12.0]),
            eta: deg([60.0, 50.0, 40.0, 55.0, 45.0, 35.0]),
            horizon: 30.0,
        }
    }
}

impl TiltHexTrajectory {
    /// Base pose with `V₁⁽⁰⁾..⁽ᵈᵉᵖᵗʰ⁻¹⁾` and joint stacks `q..q⁽ᵈᵉᵖᵗʰ⁾`.
    pub fn eval(&self, t: f64, depth: usize) -> Result<MotionInput> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        let n = depth + 1;
        // Position derivatives x⁽⁰⁾..⁽ⁿ⁾ and yaw ψ⁽⁰⁾..⁽ⁿ⁾.
        let x: Vec<Vector3<f64>> = (0..=n)
            .map(|k| {
                let w = self.circle_rate;
                let phase = w * t + k as f64 * FRAC_PI_2;
                let s = self.radius * w.powi(k as i32);
                Vector3::new(s * phase.cos(), s * phase.sin(), 0.0)
            })
            .collect();
        let psi: Vec<f64> = (0..=n)
            .map(|k| {
                let w = self.yaw_rate;
                self.yaw_amplitude * w.powi(k as i32) * (w * t + k as f64 * FRAC_PI_2).sin()
            })
            .collect();
        // ω⁽ᵏ⁾ = ψ⁽ᵏ⁺¹⁾·e_z, v⁽ᵏ⁾ = x⁽ᵏ⁺¹⁾ − Σ C(k,m)·ω⁽ᵐ⁾ × x⁽ᵏ⁻ᵐ⁾.
        let omega = |k: usize| Vector3::new(0.0, 0.0, psi[k + 1]);
        let base_twist: Vec<Twist> = (0..depth)
            .map(|k| {
                let mut v = x[k + 1];
                for m in 0..=k {
                    v -= omega(m).cross(&x[k - m]) * crate::liegroup::binomf(k, m);
                }
                join(&omega(k), &v)
            })
            .collect();
        let base_pose = Pose::new(Pose::rot_z(psi[0]).rotation, x[0]);
        let rate = PI / self.horizon;
        let joints = (0..6)
            .map(|j| {
                (0..=depth)
                    .map(|k| {
                        let half = self.eta[j] / 2.0;
                        if k == 0 {
                            self.q0[j] + half * (1.0 - (rate * t).cos())
                        } else {
                            -half * rate.powi(k as i32) * (rate * t + k as f64 * FRAC_PI_2).cos()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(MotionInput {
            base_pose,
            base_twist,
            joints,
        })
    }
}
