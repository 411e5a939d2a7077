//! Higher-order recursive inverse dynamics.

use crate::error::{Error, Result};
use crate::kinematics::{external_wrench_derivs, KinematicsCache, SpatialWrench};
use crate::liegroup::{adjoint, binomf, little_adjoint, Mat6, Pose, Twist, Wrench};
use crate::model::RobotModel;
use crate::stack::Stacks;

/// Frame in which applied wrench derivatives are given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WrenchFrame {
    /// Body-fixed frame; converted to the inertial frame internally.
    #[default]
    Body,
    /// Already in the inertial (spatial) frame.
    Spatial,
}

/// Applied wrenches and external joint torques with their derivatives.
///
/// An empty row means the load is identically zero. Non-empty rows must
/// hold at least `r + 1` derivatives for a call at order `r`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadInput {
    pub frame: WrenchFrame,
    /// Per body, `(W_app)⁽⁰⁾..`.
    pub applied: Vec<Vec<Wrench>>,
    /// Per joint, `(τ_ext)⁽⁰⁾..`.
    pub tau_ext: Vec<Vec<f64>>,
}

impl LoadInput {
    /// No applied wrenches and no external torques.
    pub fn none(model: &RobotModel) -> Self {
        Self {
            frame: WrenchFrame::Body,
            applied: vec![Vec::new(); model.n_bodies()],
            tau_ext: vec![Vec::new(); model.n_joints()],
        }
    }

    pub fn check(&self, model: &RobotModel, r: usize) -> Result<()> {
        let bodies_ok = self.applied.is_empty() || self.applied.len() == model.n_bodies();
        if !bodies_ok {
            return Err(Error::StackSize {
                what: "applied wrench stacks",
                expected: model.n_bodies(),
                found: self.applied.len(),
            });
        }
        let joints_ok = self.tau_ext.is_empty() || self.tau_ext.len() == model.n_joints();
        if !joints_ok {
            return Err(Error::StackSize {
                what: "external torque stacks",
                expected: model.n_joints(),
                found: self.tau_ext.len(),
            });
        }
        for row in &self.applied {
            if !row.is_empty() && row.len() < r + 1 {
                return Err(Error::StackSize {
                    what: "applied wrench derivatives",
                    expected: r + 1,
                    found: row.len(),
                });
            }
        }
        for row in &self.tau_ext {
            if !row.is_empty() && row.len() < r + 1 {
                return Err(Error::StackSize {
                    what: "external torque derivatives",
                    expected: r + 1,
                    found: row.len(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn tau_ext(&self, joint: usize, k: usize) -> f64 {
        self.tau_ext.get(joint).and_then(|row| row.get(k)).copied().unwrap_or(0.0)
    }

    pub(crate) fn has_applied(&self, body: usize) -> bool {
        self.applied.get(body).is_some_and(|row| !row.is_empty())
    }

    /// Spatial applied wrench derivatives `0..=r` of a body (empty if none).
    pub(crate) fn spatial_applied(&self, cache: &KinematicsCache, body: usize, r: usize) -> Result<Vec<Wrench>> {
        if !self.has_applied(body) {
            return Ok(Vec::new());
        }
        let row = &self.applied[body];
        match self.frame {
            WrenchFrame::Spatial => Ok(row[..=r].to_vec()),
            WrenchFrame::Body => external_wrench_derivs(row, cache.pose(body), cache.twists(body), r),
        }
    }

    /// Incremental spatial converter for one body, used by the order-by-order
    /// solvers.
    pub(crate) fn applied_stream(&self, cache: &KinematicsCache, body: usize) -> AppliedStream {
        if !self.has_applied(body) {
            AppliedStream::Zero
        } else {
            match self.frame {
                WrenchFrame::Spatial => AppliedStream::Spatial,
                WrenchFrame::Body => AppliedStream::Body(SpatialWrench::new(cache.pose(body))),
            }
        }
    }
}

pub(crate) enum AppliedStream {
    Zero,
    Spatial,
    Body(SpatialWrench),
}

impl AppliedStream {
    /// Order-`k` spatial applied wrench; orders must be requested in sequence
    /// and twists `0..k` of the body must be available.
    pub(crate) fn next(&mut self, loads: &LoadInput, cache: &KinematicsCache, body: usize, k: usize) -> Wrench {
        match self {
            AppliedStream::Zero => Wrench::zeros(),
            AppliedStream::Spatial => loads.applied[body][k],
            AppliedStream::Body(conv) => {
                debug_assert_eq!(conv.orders(), k);
                conv.extend(&cache.v.row(body)[..k], &loads.applied[body])
            }
        }
    }
}

/// Output of [`hgrne`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedForces {
    /// `(Q₁)⁽⁰⁾..⁽ʳ⁾`: spatial wrench the propellers must supply at the base.
    pub base_wrench: Vec<Wrench>,
    /// `(Qⱼ)⁽ᵏ⁾` per joint.
    pub generalized: Stacks<f64>,
    /// `τⱼ⁽ᵏ⁾ = Qⱼ⁽ᵏ⁾ − τ_ext,ⱼ⁽ᵏ⁾` per joint.
    pub tau: Stacks<f64>,
    /// Transmitted wrenches `(W⁰ⱼ)⁽ᵏ⁾` per body.
    pub transmitted: Stacks<Wrench>,
}

impl GeneralizedForces {
    pub fn order(&self) -> usize {
        self.base_wrench.len() - 1
    }

    /// Joint torques of a joint, orders `0..=r`.
    pub fn joint_tau(&self, joint: usize) -> &[f64] {
        self.tau.row(joint)
    }
}

/// Inverse dynamics and its derivatives up to order `r` in one post-order
/// sweep. The cache must hold closed slots `0..=r+1`, i.e. be built from
/// motion stacks with `V₁` up to order `r+1` and `q` up to order `r+2`.
pub fn hgrne(model: &RobotModel, cache: &KinematicsCache, loads: &LoadInput, r: usize) -> Result<GeneralizedForces> {
    if cache.closed_slots() < r + 2 {
        return Err(Error::CacheOrder {
            available: cache.closed_slots().saturating_sub(2),
            requested: r,
        });
    }
    loads.check(model, r)?;
    let n = model.n_bodies();
    let nj = model.n_joints();
    let g = cache.gravity();
    let mut w = Stacks::new(n, r + 1, Wrench::zeros());
    let mut qf = Stacks::new(nj, r + 1, 0.0);
    let mut tau = Stacks::new(nj, r + 1, 0.0);

    for &j in model.postorder() {
        let app = loads.spatial_applied(cache, j, r)?;
        let m = cache.m.row(j);
        let pi = cache.pi.row(j);
        {
            let wj = w.row_mut(j);
            for k in 0..=r {
                wj[k] += pi[k + 1] + m[k].column(5) * g;
                if let Some(a) = app.get(k) {
                    wj[k] -= a;
                }
            }
        }
        if j == 0 {
            continue;
        }
        let s = cache.s.row(j);
        let joint = j - 1;
        for k in 0..=r {
            let mut acc = 0.0;
            for mm in 0..=k {
                acc += binomf(k, mm) * s[k - mm].dot(w.at(j, mm));
            }
            qf.set(joint, k, acc);
            tau.set(joint, k, acc - loads.tau_ext(joint, k));
        }
        let p = model.parent(j).expect("non-base body");
        for k in 0..=r {
            let wk = w.get(j, k);
            *w.at_mut(p, k) += wk;
        }
    }

    Ok(GeneralizedForces {
        base_wrench: w.row(0).to_vec(),
        generalized: qf,
        tau,
        transmitted: w,
    })
}

/// Body-frame derivatives `(W^{B₁})⁽ᵏ⁾` of the base wrench from spatial
/// derivatives `(Q₁)⁽ᵏ⁾`; the inverse of the spatial conversion applied to
/// body-frame wrenches. Needs `v[..r]`.
pub fn base_wrench_to_body_frame(q1: &[Wrench], base_pose: &Pose, v: &[Twist], r: usize) -> Result<Vec<Wrench>> {
    for (what, found, expected) in [("spatial wrench derivatives", q1.len(), r + 1), ("twist derivatives", v.len(), r)] {
        if found < expected {
            return Err(Error::StackSize { what, expected, found });
        }
    }
    // (Ad_Cᵀ)' = Ad_Cᵀ·ad_Vᵀ
    let mut a: Vec<Mat6> = Vec::with_capacity(r + 1);
    a.push(adjoint(base_pose).transpose());
    for n in 1..=r {
        let mut acc = Mat6::zeros();
        for k in 0..n {
            acc += a[n - 1 - k] * little_adjoint(&v[k]).transpose() * binomf(n - 1, k);
        }
        a.push(acc);
    }
    Ok((0..=r)
        .map(|n| (0..=n).map(|k| a[k] * q1[n - k] * binomf(n, k)).sum())
        .collect())
}
