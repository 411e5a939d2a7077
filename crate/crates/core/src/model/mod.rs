//! Immutable robot description: topology, home configuration, joint screws
//! and body-fixed inertias.

mod file;

pub use file::{load_model, model_from_json, model_to_json, save_model, ModelFile};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liegroup::{join, Mat6, Pose, Twist};

const AXIS_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// 1-DoF joint connecting a body to its parent. Axis and point are given in
/// the child body frame at home; the point is ignored for prismatic joints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpec {
    pub kind: JointKind,
    pub axis: Vector3<f64>,
    pub point: Vector3<f64>,
}

impl JointSpec {
    pub fn revolute(axis: Vector3<f64>, point: Vector3<f64>) -> Self {
        Self {
            kind: JointKind::Revolute,
            axis,
            point,
        }
    }

    pub fn prismatic(axis: Vector3<f64>) -> Self {
        Self {
            kind: JointKind::Prismatic,
            axis,
            point: Vector3::zeros(),
        }
    }
}

/// One body of the tree. Ids are one-based; `parent == 0` marks the base.
#[derive(Debug, Clone, PartialEq)]
pub struct BodySpec {
    pub id: usize,
    pub parent: usize,
    pub joint: Option<JointSpec>,
    /// Home transform from the parent frame to this body's frame.
    pub home: Pose,
    /// Body-fixed spatial inertia `Mᵇ`.
    pub inertia: Mat6,
}

/// Block-diagonal inertia `[[J, 0], [0, m·I₃]]` of a frame placed at the CoM.
pub fn spatial_inertia(mass: f64, rotational: &Matrix3<f64>) -> Mat6 {
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rotational);
    m.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * mass));
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    bodies: Vec<BodySpec>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    preorder: Vec<usize>,
    postorder: Vec<usize>,
    home: Vec<Pose>,
    screws: Vec<Twist>,
    kinds: Vec<JointKind>,
    gravity: f64,
}

impl RobotModel {
    /// Builds the runtime model: accumulated home poses, spatial home screws
    /// and depth-first traversal orders.
    pub fn build(specs: Vec<BodySpec>, gravity: f64) -> Result<Self> {
        let mut specs = specs;
        specs.sort_by_key(|b| b.id);
        let n = specs.len();
        if n == 0 {
            return Err(Error::Model("model has no bodies".into()));
        }
        for (i, b) in specs.iter().enumerate() {
            if b.id != i + 1 {
                return Err(if i > 0 && specs[i - 1].id == b.id {
                    Error::Model(format!("duplicate body id {}", b.id))
                } else {
                    Error::Model(format!("body ids must be 1..={n}, found {}", b.id))
                });
            }
        }
        if !gravity.is_finite() {
            return Err(Error::Model("gravity must be finite".into()));
        }

        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (i, b) in specs.iter().enumerate() {
            if i == 0 {
                if b.parent != 0 {
                    return Err(Error::Model("body 1 is the base and must have parent 0".into()));
                }
                if b.joint.is_some() {
                    return Err(Error::Model("the base (body 1) cannot carry a joint".into()));
                }
                continue;
            }
            if b.parent == 0 || b.parent > n {
                return Err(Error::Model(format!(
                    "body {} has dangling parent {}",
                    b.id, b.parent
                )));
            }
            if b.joint.is_none() {
                return Err(Error::Model(format!("body {} has no joint", b.id)));
            }
            parent[i] = Some(b.parent - 1);
            children[b.parent - 1].push(i);
        }
        // Every body must reach the base within n steps.
        for start in 1..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parent[cur] {
                cur = p;
                steps += 1;
                if steps > n {
                    return Err(Error::Model(format!("cycle through body {}", start + 1)));
                }
            }
            if cur != 0 {
                return Err(Error::Model(format!("body {} is not connected to the base", start + 1)));
            }
        }

        for (i, b) in specs.iter().enumerate() {
            if let Some(j) = &b.joint {
                if (j.axis.norm() - 1.0).abs() > AXIS_TOL {
                    return Err(Error::Model(format!(
                        "joint of body {} has non-unit axis (norm {})",
                        b.id,
                        j.axis.norm()
                    )));
                }
            }
            if b.home.orthonormality_error() > 1e-9 {
                return Err(Error::Model(format!("body {} home rotation is not orthonormal", b.id)));
            }
            check_inertia(b.id, &b.inertia, children[i].len())?;
        }

        let preorder = traverse(&children, true);
        let postorder = traverse(&children, false);

        let mut home = vec![Pose::identity(); n];
        home[0] = specs[0].home;
        for &j in preorder.iter().skip(1) {
            let p = parent[j].expect("non-base body has a parent");
            home[j] = home[p] * specs[j].home;
        }

        let mut screws = Vec::with_capacity(n - 1);
        let mut kinds = Vec::with_capacity(n - 1);
        for j in 1..n {
            let joint = specs[j].joint.expect("checked above");
            screws.push(home_screw(&home[j], &joint));
            kinds.push(joint.kind);
        }

        Ok(Self {
            bodies: specs,
            parent,
            children,
            preorder,
            postorder,
            home,
            screws,
            kinds,
            gravity,
        })
    }

    pub fn n_bodies(&self) -> usize {
        self.bodies.len()
    }

    pub fn n_joints(&self) -> usize {
        self.bodies.len() - 1
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn bodies(&self) -> &[BodySpec] {
        &self.bodies
    }

    #[inline]
    pub fn parent(&self, body: usize) -> Option<usize> {
        self.parent[body]
    }

    #[inline]
    pub fn children(&self, body: usize) -> &[usize] {
        &self.children[body]
    }

    /// Depth-first pre-order, base first.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// Depth-first post-order, base last.
    pub fn postorder(&self) -> &[usize] {
        &self.postorder
    }

    /// Accumulated home pose `A⁰ⱼ` of a body.
    #[inline]
    pub fn home_pose(&self, body: usize) -> &Pose {
        &self.home[body]
    }

    /// Spatial home screw `Yⱼ` of the joint attaching `body` (`body ≥ 1`).
    #[inline]
    pub fn screw(&self, body: usize) -> &Twist {
        &self.screws[body - 1]
    }

    pub fn joint_kind(&self, body: usize) -> JointKind {
        self.kinds[body - 1]
    }

    #[inline]
    pub fn inertia(&self, body: usize) -> &Mat6 {
        &self.bodies[body].inertia
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.inertia[(5, 5)]).sum()
    }

    /// Re-checks every structural and numerical invariant, collecting all
    /// violations instead of stopping at the first.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let n = self.n_bodies();
        if self.preorder.len() != n || self.postorder.len() != n {
            issues.push("traversal length differs from body count".to_string());
        }
        if self.preorder.first() != Some(&0) {
            issues.push("pre-order does not start at the base".to_string());
        }
        if self.postorder.last() != Some(&0) {
            issues.push("post-order does not end at the base".to_string());
        }
        let pos = |order: &[usize], b: usize| order.iter().position(|&x| x == b);
        for j in 1..n {
            let Some(p) = self.parent[j] else {
                issues.push(format!("body {} has no parent", j + 1));
                continue;
            };
            match (pos(&self.preorder, j), pos(&self.preorder, p)) {
                (Some(a), Some(b)) if a > b => {}
                _ => issues.push(format!("body {} precedes its parent in pre-order", j + 1)),
            }
            match (pos(&self.postorder, j), pos(&self.postorder, p)) {
                (Some(a), Some(b)) if a < b => {}
                _ => issues.push(format!("body {} follows its parent in post-order", j + 1)),
            }
            let y = self.screws[j - 1];
            let norm = match self.kinds[j - 1] {
                JointKind::Revolute => y.fixed_rows::<3>(0).norm(),
                JointKind::Prismatic => y.fixed_rows::<3>(3).norm(),
            };
            if (norm - 1.0).abs() > AXIS_TOL {
                issues.push(format!("home screw of body {} is not unit (norm {norm})", j + 1));
            }
        }
        for (i, b) in self.bodies.iter().enumerate() {
            if let Err(e) = check_inertia(b.id, &b.inertia, self.children[i].len()) {
                issues.push(e.to_string());
            }
            if let Some(j) = &b.joint {
                if (j.axis.norm() - 1.0).abs() > AXIS_TOL {
                    issues.push(format!("joint of body {} has non-unit axis", b.id));
                }
            }
            if self.home[i].orthonormality_error() > 1e-9 {
                issues.push(format!("home pose of body {} is not a rigid transform", b.id));
            }
        }
        if !self.gravity.is_finite() {
            issues.push("gravity is not finite".to_string());
        }
        issues
    }
}

/// `Y = (e, [p]e)` for revolute and `(0, e)` for prismatic joints, with the
/// axis and point mapped to the inertial frame through the body's home pose.
fn home_screw(home: &Pose, joint: &JointSpec) -> Twist {
    let e = home.rotation * joint.axis;
    match joint.kind {
        JointKind::Revolute => {
            let p = home.transform_point(&joint.point);
            join(&e, &p.cross(&e))
        }
        JointKind::Prismatic => join(&Vector3::zeros(), &e),
    }
}

fn check_inertia(id: usize, m: &Mat6, n_children: usize) -> Result<()> {
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::Model(format!("inertia of body {id} is not symmetric")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Model(format!("inertia of body {id} is not finite")));
    }
    if m.amax() == 0.0 {
        return if n_children == 1 {
            Ok(())
        } else {
            Err(Error::Model(format!(
                "zero-inertia body {id} must have exactly one child"
            )))
        };
    }
    let mass = m[(3, 3)];
    let mass_block = m.fixed_view::<3, 3>(3, 3);
    if mass <= 0.0 || (mass_block - Matrix3::identity() * mass).amax() > SYMMETRY_TOL * scale {
        return Err(Error::Model(format!(
            "inertia of body {id} must have a mass block m·I₃ with m > 0"
        )));
    }
    if m.cholesky().is_none() {
        return Err(Error::Model(format!("inertia of body {id} is not positive definite")));
    }
    Ok(())
}

fn traverse(children: &[Vec<usize>], pre: bool) -> Vec<usize> {
    let mut out = Vec::with_capacity(children.len());
    // Explicit stack keeps deep chains (benchmark trees) off the call stack.
    let mut stack = vec![(0usize, false)];
    while let Some((b, expanded)) = stack.pop() {
        if expanded {
            out.push(b);
            continue;
        }
        if pre {
            out.push(b);
        } else {
            stack.push((b, true));
        }
        for &c in children[b].iter().rev() {
            stack.push((c, false));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link_inertia() -> Mat6 {
        spatial_inertia(0.25, &Matrix3::from_diagonal(&Vector3::new(0.002, 0.002, 0.001)))
    }

    fn base(inertia: Mat6) -> BodySpec {
        BodySpec {
            id: 1,
            parent: 0,
            joint: None,
            home: Pose::identity(),
            inertia,
        }
    }

    #[test]
    fn single_floating_body() {
        let m = RobotModel::build(vec![base(link_inertia())], 9.81).unwrap();
        assert_eq!(m.n_bodies(), 1);
        assert_eq!(m.n_joints(), 0);
        assert_eq!(*m.home_pose(0), Pose::identity());
        assert_eq!(m.preorder(), &[0]);
        assert_eq!(m.postorder(), &[0]);
    }

    #[test]
    fn revolute_screw_from_translated_home() {
        let (x0, y0, z0, d) = (0.3, -0.2, 0.5, 0.06);
        let child = BodySpec {
            id: 2,
            parent: 1,
            joint: Some(JointSpec::revolute(Vector3::y(), Vector3::new(0.0, 0.0, d))),
            home: Pose::from_translation(x0, y0, z0),
            inertia: link_inertia(),
        };
        let m = RobotModel::build(vec![base(link_inertia()), child], 9.81).unwrap();
        let p = Vector3::new(x0, y0, z0 + d);
        let expected = join(&Vector3::y(), &p.cross(&Vector3::y()));
        assert!((m.screw(1) - expected).amax() < 1e-15);
    }

    #[test]
    fn prismatic_screw() {
        let child = BodySpec {
            id: 2,
            parent: 1,
            joint: Some(JointSpec::prismatic(Vector3::x())),
            home: Pose::identity(),
            inertia: link_inertia(),
        };
        let m = RobotModel::build(vec![base(link_inertia()), child], 9.81).unwrap();
        assert_eq!(*m.screw(1), Twist::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_bad_models() {
        let mut child = BodySpec {
            id: 2,
            parent: 1,
            joint: Some(JointSpec::revolute(Vector3::new(0.0, 2.0, 0.0), Vector3::zeros())),
            home: Pose::identity(),
            inertia: link_inertia(),
        };
        let err = RobotModel::build(vec![base(link_inertia()), child.clone()], 9.81);
        assert!(err.unwrap_err().to_string().contains("non-unit axis"));

        child.joint = Some(JointSpec::revolute(Vector3::y(), Vector3::zeros()));
        child.parent = 7;
        let err = RobotModel::build(vec![base(link_inertia()), child.clone()], 9.81);
        assert!(err.unwrap_err().to_string().contains("dangling parent"));

        child.parent = 1;
        child.inertia[(0, 0)] = -1.0;
        let err = RobotModel::build(vec![base(link_inertia()), child.clone()], 9.81);
        assert!(err.unwrap_err().to_string().contains("positive definite"));

        let mut dup = child.clone();
        dup.inertia = link_inertia();
        let err = RobotModel::build(vec![base(link_inertia()), dup.clone(), dup], 9.81);
        assert!(err.unwrap_err().to_string().contains("duplicate body id 2"));
    }

    #[test]
    fn detects_cycles() {
        let joint = Some(JointSpec::revolute(Vector3::y(), Vector3::zeros()));
        let mk = |id, parent| BodySpec {
            id,
            parent,
            joint,
            home: Pose::identity(),
            inertia: link_inertia(),
        };
        let err = RobotModel::build(vec![base(link_inertia()), mk(2, 3), mk(3, 2)], 9.81);
        assert!(err.unwrap_err().to_string().contains("cycle"));
    }

    #[test]
    fn zero_inertia_needs_single_child() {
        let joint = Some(JointSpec::revolute(Vector3::y(), Vector3::zeros()));
        let leaf = BodySpec {
            id: 2,
            parent: 1,
            joint,
            home: Pose::identity(),
            inertia: Mat6::zeros(),
        };
        assert!(RobotModel::build(vec![base(link_inertia()), leaf.clone()], 9.81).is_err());
        let grandchild = BodySpec {
            id: 3,
            parent: 2,
            joint,
            home: Pose::identity(),
            inertia: link_inertia(),
        };
        let m = RobotModel::build(vec![base(link_inertia()), leaf, grandchild], 9.81).unwrap();
        assert!(m.validate().is_empty());
    }
}
