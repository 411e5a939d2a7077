//! SE(3) / se(3) algebra used by every recursion.
//!
//! Twists and wrenches are 6-vectors ordered `(angular; linear)` and
//! `(moment; force)`, expressed in the inertial frame unless noted otherwise.
//! All operators are fixed-size and stack allocated.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// Element of se(3): `(ω; v)`.
pub type Twist = Vector6<f64>;
/// Element of se(3)*: `(moment; force)`.
pub type Wrench = Vector6<f64>;
/// 6×6 operator (adjoint, little adjoint, spatial inertia).
pub type Mat6 = Matrix6<f64>;

/// Largest `n` accepted by [`binom`].
pub const BINOM_MAX: usize = 40;

const SMALL_ANGLE: f64 = 1e-8;

/// Rigid transformation: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Matrix3::identity(), Vector3::new(x, y, z))
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(
            Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            Vector3::zeros(),
        )
    }

    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(
            Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            Vector3::zeros(),
        )
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(
            Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            Vector3::zeros(),
        )
    }

    /// Rotation from roll-pitch-yaw angles, `R = Rz(yaw) Ry(pitch) Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64, translation: Vector3<f64>) -> Self {
        let r = Self::rot_z(yaw).rotation * Self::rot_y(pitch).rotation * Self::rot_x(roll).rotation;
        Self::new(r, translation)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.translation))
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Homogeneous 4×4 matrix.
    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Largest deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let e = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        e.max((self.rotation.determinant() - 1.0).abs())
    }

    /// Adjoint applied to a twist without forming the 6×6 matrix.
    #[inline]
    pub fn act_twist(&self, g: &Twist) -> Twist {
        let w = self.rotation * angular(g);
        let v = self.translation.cross(&w) + self.rotation * linear(g);
        join(&w, &v)
    }

    /// `Ad_{C⁻¹}ᵀ · f`: maps a wrench given in this body's frame to the inertial frame.
    #[inline]
    pub fn act_wrench(&self, f: &Wrench) -> Wrench {
        let force = self.rotation * linear(f);
        let moment = self.rotation * angular(f) + self.translation.cross(&force);
        join(&moment, &force)
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        Pose::new(
            self.rotation * rhs.rotation,
            self.rotation * rhs.translation + self.translation,
        )
    }
}

impl Mul for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

#[inline]
pub fn angular(g: &Vector6<f64>) -> Vector3<f64> {
    Vector3::new(g[0], g[1], g[2])
}

#[inline]
pub fn linear(g: &Vector6<f64>) -> Vector3<f64> {
    Vector3::new(g[3], g[4], g[5])
}

#[inline]
pub fn join(top: &Vector3<f64>, bottom: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(top.x, top.y, top.z, bottom.x, bottom.y, bottom.z)
}

/// Skew-symmetric matrix with `hat(w) · u = w × u`.
#[inline]
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Closed-form `exp([g]·scale)`.
pub fn exp_se3(g: &Twist, scale: f64) -> Pose {
    let w = angular(g) * scale;
    let v = linear(g) * scale;
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b, c) = if theta < SMALL_ANGLE {
        let t4 = theta2 * theta2;
        let t6 = t4 * theta2;
        (
            1.0 - theta2 / 6.0 + t4 / 120.0 - t6 / 5040.0,
            0.5 - theta2 / 24.0 + t4 / 720.0 - t6 / 40320.0,
            1.0 / 6.0 - theta2 / 120.0 + t4 / 5040.0 - t6 / 362880.0,
        )
    } else {
        let (s, co) = theta.sin_cos();
        (s / theta, (1.0 - co) / theta2, (theta - s) / (theta2 * theta))
    };
    let k = hat(&w);
    let k2 = k * k;
    let rotation = Matrix3::identity() + k * a + k2 * b;
    let vmat = Matrix3::identity() + k * b + k2 * c;
    Pose::new(rotation, vmat * v)
}

/// `Ad_C = [[R, 0], [[x]R, R]]`.
pub fn adjoint(c: &Pose) -> Mat6 {
    let mut m = Mat6::zeros();
    let xr = hat(&c.translation) * c.rotation;
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&c.rotation);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&c.rotation);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&xr);
    m
}

/// `ad_g = [[[ω], 0], [[v], [ω]]]`.
pub fn little_adjoint(g: &Twist) -> Mat6 {
    let mut m = Mat6::zeros();
    let w = hat(&angular(g));
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&hat(&linear(g)));
    m
}

/// Lie bracket `ad_a · b`.
#[inline]
pub fn ad(a: &Twist, b: &Twist) -> Twist {
    let wa = angular(a);
    let wb = angular(b);
    let top = wa.cross(&wb);
    let bottom = linear(a).cross(&wb) + wa.cross(&linear(b));
    join(&top, &bottom)
}

/// Co-adjoint action `ad_aᵀ · f`.
#[inline]
pub fn ad_t(a: &Twist, f: &Wrench) -> Wrench {
    let wa = angular(a);
    let va = linear(a);
    let m = angular(f);
    let n = linear(f);
    let top = -(wa.cross(&m) + va.cross(&n));
    let bottom = -wa.cross(&n);
    join(&top, &bottom)
}

/// `ad_aᵀ · M` computed column by column.
#[inline]
pub fn ad_t_mat(a: &Twist, m: &Mat6) -> Mat6 {
    let mut out = Mat6::zeros();
    for c in 0..6 {
        let col: Vector6<f64> = m.column(c).into_owned();
        out.set_column(c, &ad_t(a, &col));
    }
    out
}

/// Derivatives `(Ad_{C⁻¹}ᵀ)⁽⁰⁾..⁽ʳ⁾` of a frame moving with spatial twist
/// derivatives `v_derivs[0..r]`.
pub fn adjoint_inv_transpose_derivs(c: &Pose, v_derivs: &[Twist], r: usize) -> Result<Vec<Mat6>> {
    if r > 0 && v_derivs.len() < r {
        return Err(Error::StackSize {
            what: "twist derivatives",
            expected: r,
            found: v_derivs.len(),
        });
    }
    check_order(r)?;
    let mut out = Vec::with_capacity(r + 1);
    out.push(adjoint(&c.inverse()).transpose());
    for n in 1..=r {
        let mut acc = Mat6::zeros();
        for k in 0..n {
            acc -= ad_t_mat(&v_derivs[k], &out[n - 1 - k]) * binomf(n - 1, k);
        }
        out.push(acc);
    }
    Ok(out)
}

const fn pascal() -> [[u64; BINOM_MAX + 1]; BINOM_MAX + 1] {
    let mut t = [[0u64; BINOM_MAX + 1]; BINOM_MAX + 1];
    let mut n = 0;
    while n <= BINOM_MAX {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            k += 1;
        }
        n += 1;
    }
    t
}

static PASCAL: [[u64; BINOM_MAX + 1]; BINOM_MAX + 1] = pascal();

/// Binomial coefficient from a precomputed Pascal table, `k ≤ n ≤ 40`.
pub fn binom(n: usize, k: usize) -> Result<u64> {
    if n > BINOM_MAX || k > n {
        return Err(Error::BinomialRange { n, k });
    }
    Ok(PASCAL[n][k])
}

#[inline]
pub(crate) fn binomf(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n && n <= BINOM_MAX);
    PASCAL[n][k] as f64
}

pub(crate) fn check_order(r: usize) -> Result<()> {
    if r > crate::MAX_ORDER {
        return Err(Error::OrderTooHigh {
            order: r,
            max: crate::MAX_ORDER,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Mat6, b: &Mat6, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn hat_basis() {
        assert_eq!(hat(&Vector3::zeros()), Matrix3::zeros());
        assert_eq!(
            hat(&Vector3::z()),
            Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn hat_anticommutes() {
        let a = Vector3::new(0.3, -1.2, 2.0);
        let b = Vector3::new(-0.7, 0.4, 1.1);
        assert!((hat(&a) * b + hat(&b) * a).amax() < 1e-15);
        assert!((hat(&a) * b - a.cross(&b)).amax() < 1e-15);
    }

    #[test]
    fn exp_identity_and_special_cases() {
        let id = exp_se3(&Twist::zeros(), 1.0);
        assert_eq!(id, Pose::identity());

        let rz = exp_se3(&Twist::new(0.0, 0.0, FRAC_PI_2, 0.0, 0.0, 0.0), 1.0);
        let x = rz.rotation * Vector3::x();
        assert!((x - Vector3::y()).amax() < 1e-15);
        assert!(rz.translation.amax() < 1e-15);

        let tr = exp_se3(&Twist::new(0.0, 0.0, 0.0, 1.0, 2.0, 3.0), 1.0);
        assert_eq!(tr.rotation, Matrix3::identity());
        assert_eq!(tr.translation, Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn exp_small_angle_branch_is_continuous() {
        let g = Twist::new(0.3, -0.2, 0.5, 1.0, -1.0, 0.5).normalize();
        let below = exp_se3(&g, 0.99e-8);
        let above = exp_se3(&g, 1.01e-8);
        assert!((below.rotation - above.rotation).amax() < 1e-9);
        assert!((below.translation - above.translation).amax() < 1e-9);
    }

    #[test]
    fn exp_revolute_screw_rotates_about_offset_axis() {
        // Axis along z through (1, 0, 0): a half turn maps the origin to (2, 0, 0).
        let p = Vector3::new(1.0, 0.0, 0.0);
        let e = Vector3::z();
        let y = join(&e, &p.cross(&e));
        let c = exp_se3(&y, std::f64::consts::PI);
        let moved = c.transform_point(&Vector3::zeros());
        assert!((moved - Vector3::new(2.0, 0.0, 0.0)).amax() < 1e-14);
    }

    #[test]
    fn adjoint_of_identity() {
        assert_eq!(adjoint(&Pose::identity()), Mat6::identity());
    }

    #[test]
    fn adjoint_matches_conjugation() {
        let c = exp_se3(&Twist::new(0.4, -0.3, 0.9, 0.2, 1.5, -0.7), 1.0);
        let g = Twist::new(-0.5, 0.1, 0.3, 0.8, -0.2, 0.6);
        // C [g] C⁻¹ computed on 4×4 matrices.
        let mut gm = Matrix4::zeros();
        gm.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat(&angular(&g)));
        gm.fixed_view_mut::<3, 1>(0, 3).copy_from(&linear(&g));
        let conj = c.matrix() * gm * c.inverse().matrix();
        let w = Vector3::new(conj[(2, 1)], conj[(0, 2)], conj[(1, 0)]);
        let v = Vector3::new(conj[(0, 3)], conj[(1, 3)], conj[(2, 3)]);
        let expected = join(&w, &v);
        assert!((adjoint(&c) * g - expected).amax() < 1e-14);
        assert!((c.act_twist(&g) - expected).amax() < 1e-14);
    }

    #[test]
    fn fast_operators_match_matrices() {
        let a = Twist::new(0.3, -1.1, 0.4, 2.0, 0.5, -0.6);
        let b = Twist::new(-0.2, 0.7, 1.3, -0.4, 0.9, 0.1);
        assert!((ad(&a, &b) - little_adjoint(&a) * b).amax() < 1e-15);
        assert!((ad_t(&a, &b) - little_adjoint(&a).transpose() * b).amax() < 1e-15);
        let c = exp_se3(&a, 0.7);
        let lhs = adjoint(&c.inverse()).transpose() * b;
        assert!((c.act_wrench(&b) - lhs).amax() < 1e-14);
    }

    #[test]
    fn adjoint_inverse_transpose_derivs_stationary() {
        let c = exp_se3(&Twist::new(0.1, 0.2, 0.3, 0.4, 0.5, 0.6), 1.0);
        let d = adjoint_inv_transpose_derivs(&c, &[Twist::zeros(); 4], 4).unwrap();
        assert!(close(&d[0], &adjoint(&c.inverse()).transpose(), 1e-15));
        for m in &d[1..] {
            assert_eq!(*m, Mat6::zeros());
        }
    }

    #[test]
    fn adjoint_inverse_transpose_first_derivative() {
        let c = exp_se3(&Twist::new(0.1, -0.2, 0.3, 0.4, 0.5, -0.6), 1.0);
        let v = Twist::new(0.5, -0.3, 0.2, 1.0, 0.1, -0.4);
        let d = adjoint_inv_transpose_derivs(&c, &[v], 1).unwrap();
        let expected = -little_adjoint(&v).transpose() * adjoint(&c.inverse()).transpose();
        assert!(close(&d[1], &expected, 1e-14));
    }

    #[test]
    fn adjoint_inverse_transpose_derivs_reject_short_stack() {
        let err = adjoint_inv_transpose_derivs(&Pose::identity(), &[Twist::zeros()], 3);
        assert!(matches!(err, Err(Error::StackSize { .. })));
    }

    #[test]
    fn binomial_table() {
        assert_eq!(binom(5, 2).unwrap(), 10);
        assert_eq!(binom(4, 2).unwrap(), 6);
        for n in 0..=BINOM_MAX {
            assert_eq!(binom(n, 0).unwrap(), 1);
            assert_eq!(binom(n, n).unwrap(), 1);
        }
        assert_eq!(binom(40, 20).unwrap(), 137_846_528_820);
        assert!(binom(41, 1).is_err());
        assert!(binom(3, 4).is_err());
    }
}
