//! Importer for the subset of URDF describing rigid kinematic trees.
//!
//! Supported: `revolute`, `continuous`, `prismatic` and `fixed` joints and
//! `<inertial>` blocks. Fixed joints are merged into the parent body. Visual
//! and collision elements are ignored. Anything that changes the dynamics
//! beyond a tree of rigid bodies (mimic joints, planar/floating joints, links
//! with several parents) is rejected.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::model::{BaseKind, Body, Joint, Model};
use crate::spatial::{param_transform, InertiaParams, SpatialTransform};

fn parse_triple(s: Option<&str>, default: [f64; 3], what: &str) -> Result<[f64; 3]> {
    let Some(s) = s else { return Ok(default) };
    let v: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("{what}: '{s}': {e}")))?;
    if v.len() != 3 {
        return Err(Error::Parse(format!(
            "{what}: expected 3 numbers, got '{s}'"
        )));
    }
    Ok([v[0], v[1], v[2]])
}

fn attr_f64(node: roxmltree::Node, name: &str, what: &str) -> Result<f64> {
    let s = node
        .attribute(name)
        .ok_or_else(|| Error::Parse(format!("{what}: missing attribute '{name}'")))?;
    s.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("{what}: {name}='{s}': {e}")))
}

fn origin(node: roxmltree::Node, what: &str) -> Result<SpatialTransform> {
    match node.children().find(|c| c.has_tag_name("origin")) {
        None => Ok(SpatialTransform::identity()),
        Some(o) => {
            let xyz = parse_triple(o.attribute("xyz"), [0.0; 3], what)?;
            let rpy = parse_triple(o.attribute("rpy"), [0.0; 3], what)?;
            Ok(SpatialTransform::from_rpy_xyz(rpy, xyz))
        }
    }
}

/// Parameters of a link about its own frame origin.
fn link_params(link: roxmltree::Node, name: &str) -> Result<InertiaParams> {
    let Some(inertial) = link.children().find(|c| c.has_tag_name("inertial")) else {
        return Ok(InertiaParams::zeros());
    };
    let what = format!("link '{name}' inertial");
    let mass = inertial
        .children()
        .find(|c| c.has_tag_name("mass"))
        .map(|m| attr_f64(m, "value", &what))
        .transpose()?
        .unwrap_or(0.0);
    let mut ic = Matrix3::zeros();
    if let Some(i) = inertial.children().find(|c| c.has_tag_name("inertia")) {
        let g = |n| attr_f64(i, n, &what);
        let (xx, xy, xz, yy, yz, zz) = (
            g("ixx")?,
            g("ixy")?,
            g("ixz")?,
            g("iyy")?,
            g("iyz")?,
            g("izz")?,
        );
        ic = Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz);
    }
    // Parameters about the inertial frame, then moved to the link frame.
    let local = InertiaParams::from_mass_com_inertia(mass, Vector3::zeros(), ic);
    let x = origin(inertial, &what)?;
    Ok(InertiaParams(param_transform(&x) * local.0))
}

struct UrdfJoint<'a> {
    name: &'a str,
    kind: &'a str,
    parent: &'a str,
    child: &'a str,
    origin: SpatialTransform,
    axis: Vector3<f64>,
}

pub fn parse_urdf(text: &str) -> Result<Model> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Parse(e.to_string()))?;
    let robot = doc.root_element();
    if !robot.has_tag_name("robot") {
        return Err(Error::Parse("root element must be <robot>".into()));
    }
    let robot_name = robot.attribute("name").unwrap_or("urdf").to_string();

    let mut links: HashMap<&str, InertiaParams> = HashMap::new();
    let mut link_order: Vec<&str> = Vec::new();
    for l in robot.children().filter(|c| c.has_tag_name("link")) {
        let name = l
            .attribute("name")
            .ok_or_else(|| Error::Parse("link without a name".into()))?;
        links.insert(name, link_params(l, name)?);
        link_order.push(name);
    }

    let mut joints = Vec::new();
    for j in robot.children().filter(|c| c.has_tag_name("joint")) {
        let name = j.attribute("name").unwrap_or("?");
        let what = format!("joint '{name}'");
        let kind = j
            .attribute("type")
            .ok_or_else(|| Error::Parse(format!("{what}: missing type")))?;
        if j.children().any(|c| c.has_tag_name("mimic")) {
            return Err(Error::Unsupported(format!("{what}: mimic joints")));
        }
        if !matches!(kind, "revolute" | "continuous" | "prismatic" | "fixed") {
            return Err(Error::Unsupported(format!("{what}: joint type '{kind}'")));
        }
        let link_of = |tag: &str| -> Result<&str> {
            j.children()
                .find(|c| c.has_tag_name(tag))
                .and_then(|c| c.attribute("link"))
                .ok_or_else(|| Error::Parse(format!("{what}: missing <{tag} link=...>")))
        };
        let axis = j
            .children()
            .find(|c| c.has_tag_name("axis"))
            .map(|a| parse_triple(a.attribute("xyz"), [1.0, 0.0, 0.0], &what))
            .transpose()?
            .unwrap_or([1.0, 0.0, 0.0]);
        joints.push(UrdfJoint {
            name,
            kind,
            parent: link_of("parent")?,
            child: link_of("child")?,
            origin: origin(j, &what)?,
            axis: Vector3::from(axis),
        });
    }
    for j in &joints {
        for l in [j.parent, j.child] {
            if !links.contains_key(l) {
                return Err(Error::Parse(format!(
                    "joint '{}': unknown link '{l}'",
                    j.name
                )));
            }
        }
    }
    let mut parent_joint: HashMap<&str, usize> = HashMap::new();
    for (k, j) in joints.iter().enumerate() {
        if parent_joint.insert(j.child, k).is_some() {
            return Err(Error::Unsupported(format!(
                "link '{}' has more than one parent (closed loop)",
                j.child
            )));
        }
    }
    let roots: Vec<&str> = link_order
        .iter()
        .copied()
        .filter(|l| !parent_joint.contains_key(l))
        .collect();
    if roots.len() != 1 {
        return Err(Error::Unsupported(format!(
            "expected one root link, found {} ({})",
            roots.len(),
            roots.join(", ")
        )));
    }

    // Walk the tree depth-first. Each link resolves to (owning body, transform
    // from the owning body's frame to the link frame); fixed joints keep the
    // owner, moving joints open a new body.
    let mut bodies: Vec<Body> = Vec::new();
    let mut owner: HashMap<&str, (Option<usize>, SpatialTransform)> = HashMap::new();
    owner.insert(roots[0], (None, SpatialTransform::identity()));
    let mut stack = vec![roots[0]];
    let mut visited = 0usize;
    while let Some(link) = stack.pop() {
        visited += 1;
        let (own, x_link) = owner[link];
        if let Some(b) = own {
            // Link inertia expressed in the owning body's frame.
            let p = param_transform(&x_link) * links[link].0;
            let acc = bodies[b].params.get_or_insert(InertiaParams::zeros());
            acc.0 += p;
        }
        let mut kids: Vec<&UrdfJoint> = joints.iter().filter(|j| j.parent == link).collect();
        kids.reverse();
        for j in kids {
            let x = j.origin * x_link;
            if j.kind == "fixed" {
                owner.insert(j.child, (own, x));
            } else {
                let joint = match j.kind {
                    "prismatic" => Joint::prismatic(j.axis),
                    _ => Joint::revolute(j.axis),
                }
                .map_err(|e| Error::Model(format!("joint '{}': {e}", j.name)))?;
                bodies.push(Body {
                    name: j.child.to_string(),
                    parent: own,
                    xtree: x,
                    joint,
                    params: None,
                    rotor: None,
                });
                owner.insert(
                    j.child,
                    (Some(bodies.len() - 1), SpatialTransform::identity()),
                );
            }
            stack.push(j.child);
        }
    }
    if visited != link_order.len() {
        return Err(Error::Unsupported("links not connected to the root".into()));
    }
    // Depth-first pushing gives parents before children, but bodies created
    // for siblings may interleave with deeper ones; both keep p(i) < i.
    Model::new(
        robot_name,
        BaseKind::Fixed,
        Vector3::new(0.0, 0.0, -9.81),
        bodies,
    )
}

pub fn load_urdf(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_urdf(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{vee, wedge};

    #[test]
    fn mimic_is_unsupported() {
        let text = r#"<robot name="r">
          <link name="a"/><link name="b"/><link name="c"/>
          <joint name="j1" type="revolute"><parent link="a"/><child link="b"/></joint>
          <joint name="j2" type="revolute"><parent link="b"/><child link="c"/>
            <mimic joint="j1"/></joint>
        </robot>"#;
        assert!(matches!(parse_urdf(text), Err(Error::Unsupported(_))));
    }

    #[test]
    fn floating_joint_is_unsupported() {
        let text = r#"<robot name="r"><link name="a"/><link name="b"/>
          <joint name="j" type="floating"><parent link="a"/><child link="b"/></joint></robot>"#;
        assert!(matches!(parse_urdf(text), Err(Error::Unsupported(_))));
    }

    #[test]
    fn closed_loop_is_unsupported() {
        let text = r#"<robot name="r"><link name="a"/><link name="b"/><link name="c"/>
          <joint name="j1" type="revolute"><parent link="a"/><child link="b"/></joint>
          <joint name="j2" type="revolute"><parent link="a"/><child link="c"/></joint>
          <joint name="j3" type="revolute"><parent link="b"/><child link="c"/></joint></robot>"#;
        assert!(matches!(parse_urdf(text), Err(Error::Unsupported(_))));
    }

    #[test]
    fn com_inertia_is_moved_to_link_frame() {
        let text = r#"<robot name="r"><link name="base"/>
          <link name="l"><inertial><origin xyz="0.1 0.2 -0.3" rpy="0.3 0.1 -0.2"/>
            <mass value="2.0"/>
            <inertia ixx="0.1" ixy="0.01" ixz="0.02" iyy="0.2" iyz="0.03" izz="0.3"/>
          </inertial></link>
          <joint name="j" type="continuous"><parent link="base"/><child link="l"/>
            <axis xyz="0 0 1"/></joint></robot>"#;
        let m = parse_urdf(text).unwrap();
        let p = m.bodies[0].params.unwrap();
        // Direct 6×6 congruence of the inertia given about the inertial frame.
        let x = SpatialTransform::from_rpy_xyz([0.3, 0.1, -0.2], [0.1, 0.2, -0.3]);
        let ic = InertiaParams::from([2.0, 0.0, 0.0, 0.0, 0.1, 0.01, 0.02, 0.2, 0.03, 0.3]);
        let direct = vee(&(x.matrix().transpose() * wedge(&ic.0) * x.matrix())).unwrap();
        assert!((p.0 - direct).amax() < 1e-14);
        assert!((p.0[1] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn fixed_joint_is_merged() {
        let text = r#"<robot name="r"><link name="base"/>
          <link name="l"><inertial><mass value="1.0"/>
            <inertia ixx="0" ixy="0" ixz="0" iyy="0" iyz="0" izz="0"/></inertial></link>
          <link name="tool"><inertial><mass value="0.5"/>
            <inertia ixx="0" ixy="0" ixz="0" iyy="0" iyz="0" izz="0"/></inertial></link>
          <link name="l2"/>
          <joint name="j" type="revolute"><parent link="base"/><child link="l"/>
            <axis xyz="0 0 1"/></joint>
          <joint name="f" type="fixed"><parent link="l"/><child link="tool"/>
            <origin xyz="1 0 0"/></joint>
          <joint name="j2" type="prismatic"><parent link="tool"/><child link="l2"/>
            <origin xyz="0 1 0"/><axis xyz="1 0 0"/></joint></robot>"#;
        let m = parse_urdf(text).unwrap();
        assert_eq!(m.len(), 2);
        let p = m.bodies[0].params.unwrap().0;
        assert!((p[0] - 1.5).abs() < 1e-15);
        assert!((p[1] - 0.5).abs() < 1e-15);
        assert!((m.bodies[1].xtree.position() - Vector3::new(1.0, 1.0, 0.0)).norm() < 1e-15);
    }
}
