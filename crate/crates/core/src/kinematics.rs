//! Higher-order forward kinematics and the per-body derivative quantities
//! built on it: screws, twists, spatial inertias, momenta and bias terms.
//!
//! The cache is organised in derivative *slots*. Slot `k` holds, for every
//! body, `S⁽ᵏ⁾`, `M⁽ᵏ⁾`, `Vbias⁽ᵏ⁾`, `Πbias⁽ᵏ⁾` (available once the slot is
//! *prepared*) and `V⁽ᵏ⁾`, `Π⁽ᵏ⁾` (available once it is *closed*). Preparing
//! slot `k` needs slots `0..k` closed; closing it needs `q⁽ᵏ⁺¹⁾` and the base
//! twist derivative `V₁⁽ᵏ⁾`. Forward dynamics exploits this by closing one
//! slot per derivative pass.

use crate::error::{Error, Result};
use crate::liegroup::{ad, ad_t, ad_t_mat, adjoint, binomf, check_order, exp_se3, Mat6, Pose, Twist, Wrench};
use crate::model::RobotModel;
use crate::stack::Stacks;

/// Motion of the tree: base pose, base twist derivatives `V₁⁽⁰⁾..` and
/// per-joint position derivatives `q, q̇, q̈, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionInput {
    pub base_pose: Pose,
    pub base_twist: Vec<Twist>,
    /// One row per joint (joint `j` attaches body `j + 1`).
    pub joints: Vec<Vec<f64>>,
}

impl MotionInput {
    /// All joints at zero, base at rest at `base_pose`, stacks of the given depth.
    pub fn rest(model: &RobotModel, base_pose: Pose, twist_depth: usize) -> Self {
        Self {
            base_pose,
            base_twist: vec![Twist::zeros(); twist_depth],
            joints: vec![vec![0.0; twist_depth + 1]; model.n_joints()],
        }
    }

    /// Number of twist derivatives every stack supports.
    pub fn twist_depth(&self) -> usize {
        let q = self.joints.iter().map(|r| r.len().saturating_sub(1)).min();
        q.map_or(self.base_twist.len(), |q| q.min(self.base_twist.len()))
    }
}

/// Derivative stacks for every body along one instant of a trajectory.
#[derive(Debug, Clone)]
pub struct KinematicsCache {
    order: usize,
    prepared: usize,
    closed: usize,
    gravity: f64,
    pub(crate) f: Vec<Pose>,
    pub(crate) c0: Vec<Pose>,
    pub(crate) s: Stacks<Twist>,
    pub(crate) v: Stacks<Twist>,
    pub(crate) m: Stacks<Mat6>,
    pub(crate) pi: Stacks<Wrench>,
    pub(crate) vbias: Stacks<Twist>,
    pub(crate) pibias: Stacks<Wrench>,
    pub(crate) q: Stacks<f64>,
}

impl KinematicsCache {
    /// Allocates stacks for dynamics of order `order`: slots `0..=order+1`,
    /// joint derivatives up to `q⁽ᵒʳᵈᵉʳ⁺²⁾`.
    pub fn new(model: &RobotModel, order: usize) -> Result<Self> {
        check_order(order)?;
        let n = model.n_bodies();
        let slots = order + 2;
        Ok(Self {
            order,
            prepared: 0,
            closed: 0,
            gravity: model.gravity(),
            f: vec![Pose::identity(); n],
            c0: vec![Pose::identity(); n],
            s: Stacks::new(n, slots, Twist::zeros()),
            v: Stacks::new(n, slots, Twist::zeros()),
            m: Stacks::new(n, slots, Mat6::zeros()),
            pi: Stacks::new(n, slots, Wrench::zeros()),
            vbias: Stacks::new(n, slots, Twist::zeros()),
            pibias: Stacks::new(n, slots, Wrench::zeros()),
            q: Stacks::new(model.n_joints(), slots + 1, 0.0),
        })
    }

    /// Dynamics order the cache was allocated for.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of slots with twists and momenta available.
    pub fn closed_slots(&self) -> usize {
        self.closed
    }

    /// Number of slots with screws, inertias and bias terms available.
    pub fn prepared_slots(&self) -> usize {
        self.prepared
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn n_bodies(&self) -> usize {
        self.c0.len()
    }

    /// Configuration `C⁰ⱼ`.
    pub fn pose(&self, body: usize) -> &Pose {
        &self.c0[body]
    }

    /// Accumulated exponential product `Fⱼ` (`F₁ = C⁰₁`).
    pub fn exp_product(&self, body: usize) -> &Pose {
        &self.f[body]
    }

    pub fn twist(&self, body: usize, k: usize) -> Twist {
        debug_assert!(k < self.closed);
        self.v.get(body, k)
    }

    pub fn twists(&self, body: usize) -> &[Twist] {
        &self.v.row(body)[..self.closed]
    }

    /// `Sⱼ⁽ᵏ⁾`; zero for the base.
    pub fn screw(&self, body: usize, k: usize) -> Twist {
        debug_assert!(k < self.prepared);
        self.s.get(body, k)
    }

    pub fn screws(&self, body: usize) -> &[Twist] {
        &self.s.row(body)[..self.prepared]
    }

    pub fn inertia(&self, body: usize, k: usize) -> &Mat6 {
        debug_assert!(k < self.prepared);
        self.m.at(body, k)
    }

    pub fn inertias(&self, body: usize) -> &[Mat6] {
        &self.m.row(body)[..self.prepared]
    }

    pub fn momentum(&self, body: usize, k: usize) -> Wrench {
        debug_assert!(k < self.closed);
        self.pi.get(body, k)
    }

    pub fn momenta(&self, body: usize) -> &[Wrench] {
        &self.pi.row(body)[..self.closed]
    }

    pub fn bias_twist(&self, body: usize, k: usize) -> Twist {
        self.vbias.get(body, k)
    }

    pub fn bias_momentum(&self, body: usize, k: usize) -> Wrench {
        self.pibias.get(body, k)
    }

    /// `Wgrav⁽ᵏ⁾ = M⁽ᵏ⁾·G⁰` with `G⁰ = (0,0,0,0,0,−g)`.
    pub fn gravity_wrench(&self, body: usize, k: usize) -> Wrench {
        gravity_wrench(self.m.at(body, k), self.gravity)
    }

    /// `q⁽ᵏ⁾` of a joint (joint `j` attaches body `j + 1`).
    pub fn joint(&self, joint: usize, k: usize) -> f64 {
        self.q.get(joint, k)
    }

    pub(crate) fn set_joint(&mut self, joint: usize, k: usize, value: f64) {
        self.q.set(joint, k, value);
    }

    /// Order-0 state from a configuration and its first derivatives. Fills
    /// poses, slot 0 and closes it.
    pub fn set_state(
        &mut self,
        model: &RobotModel,
        base_pose: &Pose,
        base_twist: &Twist,
        q: &[f64],
        qdot: &[f64],
    ) -> Result<()> {
        let nj = model.n_joints();
        for (what, len) in [("joint positions", q.len()), ("joint velocities", qdot.len())] {
            if len != nj {
                return Err(Error::StackSize {
                    what,
                    expected: nj,
                    found: len,
                });
            }
        }
        self.q.fill(0.0);
        for j in 0..nj {
            self.q.set(j, 0, q[j]);
            self.q.set(j, 1, qdot[j]);
        }
        self.set_configuration(model, base_pose);
        self.v.set(0, 0, *base_twist);
        self.close_slot(model, 0);
        Ok(())
    }

    /// Poses, `S⁽⁰⁾`, `M⁽⁰⁾` from `q⁽⁰⁾` already stored; prepares slot 0.
    fn set_configuration(&mut self, model: &RobotModel, base_pose: &Pose) {
        self.prepared = 0;
        self.closed = 0;
        self.f[0] = *base_pose;
        for &j in model.preorder() {
            if j != 0 {
                let p = model.parent(j).expect("non-base body");
                let y = model.screw(j);
                self.f[j] = self.f[p] * exp_se3(y, self.q.get(j - 1, 0));
                self.s.set(j, 0, self.f[j].act_twist(y));
            }
            self.c0[j] = self.f[j] * *model.home_pose(j);
            let ainv = adjoint(&self.c0[j].inverse());
            let m0 = ainv.transpose() * model.inertia(j) * ainv;
            // Remove round-off asymmetry so every derivative stays symmetric.
            self.m.set(j, 0, (m0 + m0.transpose()) * 0.5);
            self.vbias.set(j, 0, Twist::zeros());
            self.pibias.set(j, 0, Wrench::zeros());
        }
        self.prepared = 1;
    }

    /// Fills `S⁽ᵏ⁾`, `M⁽ᵏ⁾`, `Vbias⁽ᵏ⁾`, `Πbias⁽ᵏ⁾` for all bodies (`k ≥ 1`).
    pub(crate) fn prepare_slot(&mut self, model: &RobotModel, k: usize) {
        debug_assert!(k >= 1 && k == self.prepared && self.closed >= k);
        for j in 0..model.n_bodies() {
            let v = &self.v.row(j)[..k];
            if j != 0 {
                let s_next = screw_deriv(&self.s.row(j)[..k], v, k);
                self.s.set(j, k, s_next);
                let vb = bias_twist(&self.s.row(j)[..=k], self.q.row(j - 1), k);
                self.vbias.set(j, k, vb);
            }
            let m_next = inertia_deriv(&self.m.row(j)[..k], v, k);
            self.m.set(j, k, m_next);
            let pb = bias_momentum(&self.m.row(j)[..=k], v, k);
            self.pibias.set(j, k, pb);
        }
        self.prepared = k + 1;
    }

    /// Twist and momentum of slot `k` for one non-base body; the parent must
    /// already be done and `q⁽ᵏ⁺¹⁾` stored.
    #[inline]
    pub(crate) fn close_body(&mut self, model: &RobotModel, j: usize, k: usize) {
        let p = model.parent(j).expect("non-base body");
        let v = self.v.get(p, k) + self.s.get(j, 0) * self.q.get(j - 1, k + 1) + self.vbias.get(j, k);
        self.v.set(j, k, v);
        self.pi.set(j, k, self.m.at(j, 0) * v + self.pibias.get(j, k));
    }

    #[inline]
    pub(crate) fn close_base(&mut self, k: usize) {
        let v = self.v.get(0, k);
        self.pi.set(0, k, self.m.at(0, 0) * v + self.pibias.get(0, k));
    }

    /// Closes slot `k`: base twist `V₁⁽ᵏ⁾` must already be stored.
    pub(crate) fn close_slot(&mut self, model: &RobotModel, k: usize) {
        debug_assert!(k < self.prepared && k == self.closed);
        self.close_base(k);
        for &j in model.preorder().iter().skip(1) {
            self.close_body(model, j, k);
        }
        self.closed = k + 1;
    }

    pub(crate) fn mark_closed(&mut self, k: usize) {
        self.closed = k + 1;
    }

    pub(crate) fn set_base_twist(&mut self, k: usize, twist: Twist) {
        self.v.set(0, k, twist);
    }
}

/// Algorithm 1 for dynamics order `r`. Requires `V₁⁽⁰⁾..⁽ʳ⁾` and
/// `q..q⁽ʳ⁺¹⁾`, and closes slots `0..=r`. Slot `r + 1` is prepared; when the
/// input also holds `V₁⁽ʳ⁺¹⁾` and `q⁽ʳ⁺²⁾` (as inverse dynamics needs), it is
/// closed as well.
pub fn forward_kinematics(model: &RobotModel, input: &MotionInput, r: usize) -> Result<KinematicsCache> {
    let mut cache = KinematicsCache::new(model, r)?;
    fill_kinematics(model, input, r, &mut cache)?;
    Ok(cache)
}

/// Same as [`forward_kinematics`] but reuses an existing cache allocation.
pub fn fill_kinematics(
    model: &RobotModel,
    input: &MotionInput,
    r: usize,
    cache: &mut KinematicsCache,
) -> Result<()> {
    if cache.order < r || cache.n_bodies() != model.n_bodies() {
        *cache = KinematicsCache::new(model, r)?;
    }
    if input.joints.len() != model.n_joints() {
        return Err(Error::StackSize {
            what: "joint derivative stacks",
            expected: model.n_joints(),
            found: input.joints.len(),
        });
    }
    let depth = input.twist_depth();
    if depth < r + 1 {
        return Err(Error::StackSize {
            what: "motion input derivatives",
            expected: r + 1,
            found: depth,
        });
    }
    let slots = depth.min(r + 2);
    cache.q.fill(0.0);
    for (j, row) in input.joints.iter().enumerate() {
        for k in 0..=slots {
            cache.q.set(j, k, row[k]);
        }
    }
    cache.set_configuration(model, &input.base_pose);
    for k in 0..slots {
        if k > 0 {
            cache.prepare_slot(model, k);
        }
        cache.set_base_twist(k, input.base_twist[k]);
        cache.close_slot(model, k);
    }
    if slots == r + 1 {
        cache.prepare_slot(model, r + 1);
    }
    Ok(())
}

/// `S⁽ᵏ⁾ = Σ_{m<k} C(k−1,m)·ad_{V⁽ᵐ⁾}·S⁽ᵏ⁻¹⁻ᵐ⁾` from `S⁽⁰⁾..⁽ᵏ⁻¹⁾` and `V⁽⁰⁾..⁽ᵏ⁻¹⁾`.
#[inline]
pub fn screw_deriv(s: &[Twist], v: &[Twist], k: usize) -> Twist {
    let mut acc = Twist::zeros();
    for m in 0..k {
        acc += ad(&v[m], &s[k - 1 - m]) * binomf(k - 1, m);
    }
    acc
}

/// `M⁽ᵏ⁾ = −Σ_{m<k} C(k−1,m)(M⁽ᵏ⁻¹⁻ᵐ⁾ad_{V⁽ᵐ⁾} + ad_{V⁽ᵐ⁾}ᵀM⁽ᵏ⁻¹⁻ᵐ⁾)`.
#[inline]
pub fn inertia_deriv(m: &[Mat6], v: &[Twist], k: usize) -> Mat6 {
    let mut acc = Mat6::zeros();
    for i in 0..k {
        // M is symmetric, so M·ad = (adᵀ·M)ᵀ.
        let x = ad_t_mat(&v[i], &m[k - 1 - i]);
        acc -= (x + x.transpose()) * binomf(k - 1, i);
    }
    acc
}

/// `Vbias⁽ᵏ⁾ = Σ_{m=1}^{k} C(k,m)·S⁽ᵐ⁾·q⁽ᵏ⁻ᵐ⁺¹⁾`.
#[inline]
pub fn bias_twist(s: &[Twist], q: &[f64], k: usize) -> Twist {
    let mut acc = Twist::zeros();
    for m in 1..=k {
        acc += s[m] * (q[k - m + 1] * binomf(k, m));
    }
    acc
}

/// `Πbias⁽ᵏ⁾ = Σ_{m<k} C(k,m)·M⁽ᵏ⁻ᵐ⁾·V⁽ᵐ⁾`.
#[inline]
pub fn bias_momentum(m: &[Mat6], v: &[Twist], k: usize) -> Wrench {
    let mut acc = Wrench::zeros();
    for i in 0..k {
        acc += m[k - i] * v[i] * binomf(k, i);
    }
    acc
}

#[inline]
pub fn gravity_wrench(m: &Mat6, g: f64) -> Wrench {
    m.column(5) * -g
}

fn need<T>(what: &'static str, s: &[T], n: usize) -> Result<()> {
    if s.len() < n {
        return Err(Error::StackSize {
            what,
            expected: n,
            found: s.len(),
        });
    }
    Ok(())
}

/// Full stack `M⁽⁰⁾..⁽ʳ⁾` of a body at pose `c0` with twist derivatives `v`.
pub fn spatial_inertia_derivs(m_body: &Mat6, c0: &Pose, v: &[Twist], r: usize) -> Result<Vec<Mat6>> {
    check_order(r)?;
    need("twist derivatives", v, r)?;
    let ainv = adjoint(&c0.inverse());
    let mut out = vec![ainv.transpose() * m_body * ainv];
    for k in 1..=r {
        let next = inertia_deriv(&out, v, k);
        out.push(next);
    }
    Ok(out)
}

/// `Π⁽ᵏ⁾ = Σ C(k,i)·M⁽ᵏ⁻ⁱ⁾·V⁽ⁱ⁾` for `k = 0..=r`.
pub fn momentum_derivs(m: &[Mat6], v: &[Twist], r: usize) -> Result<Vec<Wrench>> {
    check_order(r)?;
    need("inertia derivatives", m, r + 1)?;
    need("twist derivatives", v, r + 1)?;
    Ok((0..=r).map(|k| bias_momentum(m, v, k) + m[0] * v[k]).collect())
}

pub fn gravity_wrench_derivs(m: &[Mat6], g: f64, r: usize) -> Result<Vec<Wrench>> {
    need("inertia derivatives", m, r + 1)?;
    Ok(m[..=r].iter().map(|mk| gravity_wrench(mk, g)).collect())
}

pub fn bias_twist_derivs(s: &[Twist], q: &[f64], r: usize) -> Result<Vec<Twist>> {
    need("screw derivatives", s, r + 1)?;
    need("joint derivatives", q, r + 1)?;
    Ok((0..=r).map(|k| bias_twist(s, q, k)).collect())
}

pub fn bias_momentum_derivs(m: &[Mat6], v: &[Twist], r: usize) -> Result<Vec<Wrench>> {
    need("inertia derivatives", m, r + 1)?;
    need("twist derivatives", v, r)?;
    Ok((0..=r).map(|k| bias_momentum(m, v, k)).collect())
}

/// Incremental conversion of body-frame wrench derivatives to the spatial
/// frame. Order `k` needs twist derivatives up to `k − 1`, so forward
/// dynamics can extend it one order per pass.
#[derive(Debug, Clone)]
pub struct SpatialWrench {
    ad_inv_t: Vec<Mat6>,
    spatial: Vec<Wrench>,
}

impl SpatialWrench {
    pub fn new(pose: &Pose) -> Self {
        Self {
            ad_inv_t: vec![adjoint(&pose.inverse()).transpose()],
            spatial: Vec::new(),
        }
    }

    pub fn orders(&self) -> usize {
        self.spatial.len()
    }

    pub fn get(&self, k: usize) -> Wrench {
        self.spatial[k]
    }

    pub fn as_slice(&self) -> &[Wrench] {
        &self.spatial
    }

    /// Computes the next order `k = orders()` from `v[..k]` and `wb[..=k]`.
    pub fn extend(&mut self, v: &[Twist], wb: &[Wrench]) -> Wrench {
        let k = self.spatial.len();
        debug_assert!(v.len() >= k && wb.len() > k);
        while self.ad_inv_t.len() < k {
            let n = self.ad_inv_t.len();
            let mut acc = Mat6::zeros();
            for i in 0..n {
                acc -= ad_t_mat(&v[i], &self.ad_inv_t[n - 1 - i]) * binomf(n - 1, i);
            }
            self.ad_inv_t.push(acc);
        }
        let w = if k == 0 {
            self.ad_inv_t[0] * wb[0]
        } else {
            let mut acc = Wrench::zeros();
            for i in 0..k {
                let c = binomf(k - 1, i);
                acc += (self.ad_inv_t[i] * wb[k - i] - ad_t(&v[i], &self.spatial[k - 1 - i])) * c;
            }
            acc
        };
        self.spatial.push(w);
        w
    }
}

/// `(W⁰)⁽⁰⁾..⁽ʳ⁾` from body-frame derivatives `(Wᵇ)⁽⁰⁾..⁽ʳ⁾`.
pub fn external_wrench_derivs(wb: &[Wrench], c0: &Pose, v: &[Twist], r: usize) -> Result<Vec<Wrench>> {
    check_order(r)?;
    need("body-frame wrench derivatives", wb, r + 1)?;
    need("twist derivatives", v, r)?;
    let mut conv = SpatialWrench::new(c0);
    for _ in 0..=r {
        conv.extend(v, wb);
    }
    Ok(conv.spatial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::{join, little_adjoint};
    use crate::model::{spatial_inertia, BodySpec, JointSpec};
    use nalgebra::{Matrix3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inertia() -> Mat6 {
        spatial_inertia(0.7, &Matrix3::from_diagonal(&Vector3::new(0.02, 0.03, 0.015)))
    }

    fn chain() -> RobotModel {
        let mut bodies = vec![BodySpec {
            id: 1,
            parent: 0,
            joint: None,
            home: Pose::identity(),
            inertia: inertia(),
        }];
        let axes = [Vector3::y(), Vector3::x(), Vector3::z()];
        for (i, axis) in axes.iter().enumerate() {
            bodies.push(BodySpec {
                id: i + 2,
                parent: i + 1,
                joint: Some(JointSpec::revolute(*axis, Vector3::new(0.0, 0.0, 0.05))),
                home: Pose::from_rpy(0.1, -0.2, 0.3, Vector3::new(0.1, 0.02, -0.15)),
                inertia: inertia(),
            });
        }
        RobotModel::build(bodies, 9.81).unwrap()
    }

    fn random_input(model: &RobotModel, depth: usize, seed: u64) -> MotionInput {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = || rng.random_range(-1.0..1.0);
        let base_pose = Pose::from_rpy(u(), u(), u(), Vector3::new(u(), u(), u()));
        MotionInput {
            base_pose,
            base_twist: (0..depth).map(|_| Twist::from_fn(|_, _| u())).collect(),
            joints: (0..model.n_joints()).map(|_| (0..=depth).map(|_| u()).collect()).collect(),
        }
    }

    #[test]
    fn home_rest_matches_home_configuration() {
        let model = chain();
        let input = MotionInput::rest(&model, Pose::identity(), 4);
        let cache = forward_kinematics(&model, &input, 2).unwrap();
        assert_eq!(cache.closed_slots(), 4);
        for j in 0..model.n_bodies() {
            assert!((cache.pose(j).matrix() - model.home_pose(j).matrix()).amax() < 1e-15);
            for k in 0..4 {
                assert_eq!(cache.twist(j, k), Twist::zeros());
                if k > 0 {
                    assert_eq!(*cache.inertia(j, k), Mat6::zeros());
                }
            }
            if j > 0 {
                assert!((cache.screw(j, 0) - model.screw(j)).amax() < 1e-15);
                assert_eq!(cache.screw(j, 1), Twist::zeros());
            }
        }
    }

    #[test]
    fn single_joint_fixed_base() {
        let model = chain();
        let mut input = MotionInput::rest(&model, Pose::identity(), 2);
        input.joints[0] = vec![0.4, 1.3, 0.0];
        let cache = forward_kinematics(&model, &input, 0).unwrap();
        let y = model.screw(1);
        assert!((cache.screw(1, 0) - y).amax() < 1e-15);
        assert!((cache.twist(1, 0) - y * 1.3).amax() < 1e-15);
    }

    #[test]
    fn decomposition_identities() {
        let model = chain();
        let input = random_input(&model, 6, 3);
        let cache = forward_kinematics(&model, &input, 4).unwrap();
        for j in 1..model.n_bodies() {
            let p = model.parent(j).unwrap();
            for k in 0..6 {
                let s: Vec<Twist> = cache.screws(j).to_vec();
                let full: Twist = (0..=k)
                    .map(|m| s[m] * input.joints[j - 1][k - m + 1] * binomf(k, m))
                    .sum();
                assert!((cache.twist(j, k) - cache.twist(p, k) - full).amax() < 1e-12);
                let pi = momentum_derivs(cache.inertias(j), cache.twists(j), k).unwrap();
                assert!((cache.momentum(j, k) - pi[k]).amax() < 1e-11);
            }
        }
    }

    #[test]
    fn inertia_derivs_are_symmetric() {
        let model = chain();
        let cache = forward_kinematics(&model, &random_input(&model, 6, 9), 4).unwrap();
        for j in 0..model.n_bodies() {
            for m in cache.inertias(j) {
                assert!((m - m.transpose()).amax() <= 1e-11 * m.amax().max(1.0));
            }
        }
    }

    #[test]
    fn inertia_derivative_matches_commutator_form() {
        let v = Twist::new(0.3, -0.2, 0.5, 1.0, 0.4, -0.7);
        let m0 = spatial_inertia_derivs(&inertia(), &Pose::rot_x(0.3), &[v], 1).unwrap();
        let ad = little_adjoint(&v);
        let expected = -(m0[0] * ad + ad.transpose() * m0[0]);
        assert!((m0[1] - expected).amax() < 1e-14);
    }

    #[test]
    fn gravity_on_identity_base() {
        let m = spatial_inertia(2.5, &Matrix3::from_diagonal(&Vector3::new(0.03, 0.03, 0.05)));
        let w = gravity_wrench(&m, 9.81);
        assert_eq!(w, join(&Vector3::zeros(), &Vector3::new(0.0, 0.0, -2.5 * 9.81)));
    }

    #[test]
    fn external_wrench_identity_and_first_order() {
        let wb: Vec<Wrench> = (0..4).map(|k| Wrench::from_fn(|i, _| (i + k) as f64 * 0.1)).collect();
        let still = external_wrench_derivs(&wb, &Pose::identity(), &[Twist::zeros(); 3], 3).unwrap();
        for k in 0..4 {
            assert!((still[k] - wb[k]).amax() < 1e-15);
        }
        let v = Twist::new(0.3, -0.2, 0.5, 1.0, 0.4, -0.7);
        let c = Pose::from_rpy(0.2, 0.1, -0.4, Vector3::new(0.5, -1.0, 0.3));
        let constant = [wb[0], Wrench::zeros()];
        let w = external_wrench_derivs(&constant, &c, &[v], 1).unwrap();
        assert!((w[1] + ad_t(&v, &w[0])).amax() < 1e-14);
    }

    #[test]
    fn rejects_short_stacks() {
        let model = chain();
        let input = random_input(&model, 2, 1);
        assert!(matches!(
            forward_kinematics(&model, &input, 2),
            Err(Error::StackSize { .. })
        ));
    }
}
