//! Dense closed-form equations of motion at orders 0 and 1 and an admissible
//! Coriolis matrix, assembled from stacked per-body operators.
//!
//! The generalized velocity is `ν = (V₁, q̇)` with the spatial base twist in
//! the first block, so `ν₁` is not the derivative of a chart of the base
//! configuration; [`tangent_lift`] gives the matrix derivatives `C⁽ʳ⁾` when
//! they are needed. Matrices are `O(N²)` in memory; this module is meant for
//! small trees and as a cross-check of the recursive algorithms.

use nalgebra::{DMatrix, DVector, Matrix4};

use crate::error::{Error, Result};
use crate::inverse::{LoadInput, WrenchFrame};
use crate::kinematics::{external_wrench_derivs, KinematicsCache};
use crate::liegroup::{angular, hat, linear, little_adjoint, binomf, Mat6, Pose, Twist};
use crate::model::RobotModel;

/// Stacked operators of one state.
#[derive(Debug, Clone)]
pub struct StackedOperators {
    pub n_bodies: usize,
    /// `Gp`: block `(i, j)` is `I₆` when `j` lies on the path from the base to `i`.
    pub gp: DMatrix<f64>,
    /// `Gc = Gpᵀ`.
    pub gc: DMatrix<f64>,
    /// `blockdiag(I₆, S₂, …, S_N)`.
    pub s: DMatrix<f64>,
    /// `blockdiag(0, Ṡ₂, …)`.
    pub sdot: DMatrix<f64>,
    /// `blockdiag(0, S̈₂, …)`.
    pub sddot: DMatrix<f64>,
    /// `blockdiag(M⁰ⱼ)` and its first derivative.
    pub m: DMatrix<f64>,
    pub mdot: DMatrix<f64>,
    /// `blockdiag(adᵀ_{Vⱼ})` and `blockdiag(ad_{Vⱼ})`.
    pub ad_t: DMatrix<f64>,
    pub ad: DMatrix<f64>,
    /// Stacked gravity accelerations `(0,0,0,0,0,−g)` per body.
    pub gravity: DVector<f64>,
    /// `ν`, `ν̇`, and `ν̈` (zero when the cache does not hold it).
    pub nu: DVector<f64>,
    pub nudot: DVector<f64>,
    pub nuddot: DVector<f64>,
    has_nuddot: bool,
}

fn put6(m: &mut DMatrix<f64>, i: usize, j: usize, b: &Mat6) {
    m.view_mut((6 * i, 6 * j), (6, 6)).copy_from(b);
}

fn put_col(m: &mut DMatrix<f64>, row_block: usize, col: usize, v: &Twist) {
    m.view_mut((6 * row_block, col), (6, 1)).copy_from(v);
}

/// Builds the stacked operators. The cache needs closed slots `0..=1` (and
/// `2` for the order-1 equations).
pub fn assemble_operators(model: &RobotModel, cache: &KinematicsCache) -> Result<StackedOperators> {
    if cache.closed_slots() < 2 || cache.prepared_slots() < 3 {
        return Err(Error::CacheOrder {
            available: cache.closed_slots().saturating_sub(2),
            requested: 0,
        });
    }
    let n = model.n_bodies();
    let dof = 6 + model.n_joints();
    let mut gp = DMatrix::zeros(6 * n, 6 * n);
    for i in 0..n {
        let mut j = Some(i);
        while let Some(b) = j {
            put6(&mut gp, i, b, &Mat6::identity());
            j = model.parent(b);
        }
    }
    let gc = gp.transpose();
    let mut s = DMatrix::zeros(6 * n, dof);
    let mut sdot = DMatrix::zeros(6 * n, dof);
    let mut sddot = DMatrix::zeros(6 * n, dof);
    s.view_mut((0, 0), (6, 6)).copy_from(&Mat6::identity());
    for j in 1..n {
        put_col(&mut s, j, 5 + j, &cache.screw(j, 0));
        put_col(&mut sdot, j, 5 + j, &cache.screw(j, 1));
        put_col(&mut sddot, j, 5 + j, &cache.screw(j, 2));
    }
    let mut m = DMatrix::zeros(6 * n, 6 * n);
    let mut mdot = DMatrix::zeros(6 * n, 6 * n);
    let mut ad_t = DMatrix::zeros(6 * n, 6 * n);
    let mut ad = DMatrix::zeros(6 * n, 6 * n);
    let mut gravity = DVector::zeros(6 * n);
    for j in 0..n {
        put6(&mut m, j, j, cache.inertia(j, 0));
        put6(&mut mdot, j, j, cache.inertia(j, 1));
        let a = little_adjoint(&cache.twist(j, 0));
        put6(&mut ad, j, j, &a);
        put6(&mut ad_t, j, j, &a.transpose());
        gravity[6 * j + 5] = -cache.gravity();
    }
    let has_nuddot = cache.closed_slots() >= 3;
    let stack = |k: usize| {
        let mut v = DVector::zeros(dof);
        if k < cache.closed_slots() {
            v.rows_mut(0, 6).copy_from(&cache.twist(0, k));
            for j in 0..model.n_joints() {
                v[6 + j] = cache.joint(j, k + 1);
            }
        }
        v
    };
    Ok(StackedOperators {
        n_bodies: n,
        nu: stack(0),
        nudot: stack(1),
        nuddot: stack(2),
        gp,
        gc,
        s,
        sdot,
        sddot,
        m,
        mdot,
        ad_t,
        ad,
        gravity,
        has_nuddot,
    })
}

impl StackedOperators {
    /// Stacked body twists `V = Gp·S·ν`.
    pub fn twists(&self) -> DVector<f64> {
        &self.gp * (&self.s * &self.nu)
    }
}

/// Closed-form terms at order 0.
#[derive(Debug, Clone)]
pub struct EomTerms {
    pub mbar: DMatrix<f64>,
    pub h: DVector<f64>,
    pub g: DVector<f64>,
    pub tau_ext: DVector<f64>,
    pub c: DMatrix<f64>,
}

impl EomTerms {
    /// `M̄·ν̇ + h + g + τ_ext`, the generalized forces `(Q₁, Qⱼ)`.
    pub fn residual(&self, nudot: &DVector<f64>) -> DVector<f64> {
        &self.mbar * nudot + &self.h + &self.g + &self.tau_ext
    }
}

/// Closed-form terms at order 1.
#[derive(Debug, Clone)]
pub struct EomOrder1 {
    pub mbar: DMatrix<f64>,
    pub hdot: DVector<f64>,
    pub gdot: DVector<f64>,
    pub tau_ext_dot: DVector<f64>,
}

impl EomOrder1 {
    /// `M̄·ν̈ + ḣ + ġ + τ̇_ext`, the first derivative of `(Q₁, Qⱼ)`.
    pub fn residual(&self, nuddot: &DVector<f64>) -> DVector<f64> {
        &self.mbar * nuddot + &self.hdot + &self.gdot + &self.tau_ext_dot
    }
}

/// Spatial applied wrench derivatives `0..=order` stacked per body.
fn stacked_applied(
    model: &RobotModel,
    cache: &KinematicsCache,
    loads: &LoadInput,
    order: usize,
) -> Result<Vec<DVector<f64>>> {
    loads.check(model, order)?;
    let n = model.n_bodies();
    let mut out = vec![DVector::zeros(6 * n); order + 1];
    for j in 0..n {
        if !loads.applied.get(j).is_some_and(|r| !r.is_empty()) {
            continue;
        }
        let row = &loads.applied[j];
        let w = match loads.frame {
            WrenchFrame::Spatial => row[..=order].to_vec(),
            WrenchFrame::Body => external_wrench_derivs(row, cache.pose(j), cache.twists(j), order)?,
        };
        for (k, wk) in w.iter().enumerate() {
            out[k].rows_mut(6 * j, 6).copy_from(wk);
        }
    }
    Ok(out)
}

/// Order-0 closed form: `M̄ = SᵀGcMGpS`,
/// `h = SᵀGcMGpṠν − SᵀGc·adᵀ_V·M·GpSν`, `g = −SᵀGcM·G`,
/// `τ_ext = −SᵀGc·W_app`. External joint torques are not part of `τ_ext`
/// here; the residual equals the generalized forces `Q`.
pub fn eom_order0(model: &RobotModel, cache: &KinematicsCache, ops: &StackedOperators, loads: &LoadInput) -> Result<EomTerms> {
    let st_gc = ops.s.transpose() * &ops.gc;
    let gps = &ops.gp * &ops.s;
    let mbar = &st_gc * &ops.m * &gps;
    let c = coriolis_matrix(ops);
    let h = &c * &ops.nu;
    let g = -(&st_gc * (&ops.m * &ops.gravity));
    let wa = stacked_applied(model, cache, loads, 0)?;
    let tau_ext = -(&st_gc * &wa[0]);
    Ok(EomTerms { mbar, h, g, tau_ext, c })
}

/// Order-1 closed form. Requires `ν̈` in the operators (cache closed to slot 2).
pub fn eom_order1(model: &RobotModel, cache: &KinematicsCache, ops: &StackedOperators, loads: &LoadInput) -> Result<EomOrder1> {
    if !ops.has_nuddot {
        return Err(Error::CacheOrder {
            available: 0,
            requested: 1,
        });
    }
    let st = ops.s.transpose();
    let sdt = ops.sdot.transpose();
    let gps = &ops.gp * &ops.s;
    let mbar = &st * &ops.gc * &ops.m * &gps;

    let v = ops.twists();
    let vdot = &ops.gp * (&ops.s * &ops.nudot + &ops.sdot * &ops.nu);
    let vddot_rest = &ops.gp * (&ops.sdot * &ops.nudot * 2.0 + &ops.sddot * &ops.nu);
    // Per-body momenta: Π = MV, Π̇ = MV̇ − adᵀ_V·Π,
    // Π̈ − M·Gp·S·ν̈ = M(V̈_rest − ad_V·V̇) − 2adᵀ_V·Π̇ − (adᵀ_V·adᵀ_V + adᵀ_{V̇})·Π.
    let n = ops.n_bodies;
    let pi = &ops.m * &v;
    let pidot = &ops.m * &vdot - &ops.ad_t * &pi;
    let mut ad_t_vdot = DMatrix::zeros(6 * n, 6 * n);
    for j in 0..n {
        let vd = Twist::from_iterator(vdot.rows(6 * j, 6).iter().copied());
        put6(&mut ad_t_vdot, j, j, &little_adjoint(&vd).transpose());
    }
    let pi_tilde = &ops.m * (&vddot_rest - &ops.ad * &vdot)
        - &ops.ad_t * &pidot * 2.0
        - (&ops.ad_t * &ops.ad_t + &ad_t_vdot) * &pi;
    let hdot = &sdt * (&ops.gc * &pidot) + &st * (&ops.gc * &pi_tilde);

    let mg = &ops.m * &ops.gravity;
    let mdg = &ops.mdot * &ops.gravity;
    let gdot = -(&sdt * (&ops.gc * &mg) + &st * (&ops.gc * &mdg));

    let wa = stacked_applied(model, cache, loads, 1)?;
    let tau_ext_dot = -(&sdt * (&ops.gc * &wa[0]) + &st * (&ops.gc * &wa[1]));
    Ok(EomOrder1 {
        mbar,
        hdot,
        gdot,
        tau_ext_dot,
    })
}

/// `C = SᵀGcMGpṠ − SᵀGc·adᵀ_V·M·GpS`, with `C·ν = h`.
pub fn coriolis_matrix(ops: &StackedOperators) -> DMatrix<f64> {
    let st_gc = ops.s.transpose() * &ops.gc;
    let gps = &ops.gp * &ops.s;
    &st_gc * &ops.m * (&ops.gp * &ops.sdot) - &st_gc * &ops.ad_t * &ops.m * &gps
}

/// `Ṁ̄ = ṠᵀGcMGpS + SᵀGcṀGpS + SᵀGcMGpṠ`.
pub fn mass_matrix_derivative(ops: &StackedOperators) -> DMatrix<f64> {
    let gps = &ops.gp * &ops.s;
    let gpsd = &ops.gp * &ops.sdot;
    let st_gc = ops.s.transpose() * &ops.gc;
    ops.sdot.transpose() * &ops.gc * &ops.m * &gps + &st_gc * &ops.mdot * &gps + &st_gc * &ops.m * gpsd
}

/// Largest entry of `(½Ṁ̄ − C) + (½Ṁ̄ − C)ᵀ`.
pub fn skew_defect(ops: &StackedOperators) -> f64 {
    let n = mass_matrix_derivative(ops) * 0.5 - coriolis_matrix(ops);
    (&n + n.transpose()).amax()
}

/// Derivatives `C⁽⁰⁾..⁽ʳ⁾` of a homogeneous transform moving with spatial
/// twist derivatives `v`: `C⁽ʳ⁾ = Σ_{k<r} C(r−1,k)[V⁽ᵏ⁾]C⁽ʳ⁻¹⁻ᵏ⁾`.
pub fn tangent_lift(c: &Pose, v: &[Twist], r: usize) -> Result<Vec<Matrix4<f64>>> {
    if v.len() < r {
        return Err(Error::StackSize {
            what: "twist derivatives",
            expected: r,
            found: v.len(),
        });
    }
    let se3 = |t: &Twist| {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat(&angular(t)));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&linear(t));
        m
    };
    let mut out = vec![c.matrix()];
    for n in 1..=r {
        let mut acc = Matrix4::zeros();
        for k in 0..n {
            acc += se3(&v[k]) * out[n - 1 - k] * binomf(n - 1, k);
        }
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{forward_kinematics, MotionInput};
    use crate::model::{spatial_inertia, BodySpec};
    use nalgebra::{Matrix3, Vector3};

    fn single_body() -> RobotModel {
        let m = spatial_inertia(2.0, &Matrix3::from_diagonal(&Vector3::new(0.1, 0.2, 0.3)));
        RobotModel::build(
            vec![BodySpec {
                id: 1,
                parent: 0,
                joint: None,
                home: Pose::identity(),
                inertia: m,
            }],
            9.81,
        )
        .unwrap()
    }

    #[test]
    fn single_floating_body() {
        let model = single_body();
        let cache = forward_kinematics(&model, &MotionInput::rest(&model, Pose::identity(), 3), 1).unwrap();
        let ops = assemble_operators(&model, &cache).unwrap();
        assert_eq!(ops.gp, DMatrix::identity(6, 6));
        assert_eq!(ops.s, DMatrix::identity(6, 6));
        let eom = eom_order0(&model, &cache, &ops, &LoadInput::none(&model)).unwrap();
        assert!((&eom.mbar - DMatrix::from_iterator(6, 6, model.inertia(0).iter().copied())).amax() < 1e-15);
        assert!(eom.h.amax() == 0.0 && eom.tau_ext.amax() == 0.0);
        assert!((eom.g[5] - 2.0 * 9.81).abs() < 1e-14);
        assert!(coriolis_matrix(&ops).amax() == 0.0);
    }

    #[test]
    fn tangent_lift_first_order() {
        let c = Pose::from_rpy(0.1, 0.2, 0.3, Vector3::new(1.0, 2.0, 3.0));
        let v = [Twist::new(0.1, -0.3, 0.2, 0.5, 0.4, -0.6)];
        let d = tangent_lift(&c, &v, 1).unwrap();
        let mut vh = Matrix4::zeros();
        vh.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat(&angular(&v[0])));
        vh.fixed_view_mut::<3, 1>(0, 3).copy_from(&linear(&v[0]));
        assert!((d[1] - vh * c.matrix()).amax() < 1e-15);
        assert_eq!(d[1].row(3).amax(), 0.0);
    }
}
