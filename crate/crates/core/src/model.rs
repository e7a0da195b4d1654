//! Kinematic-tree mechanisms, the canonical JSON format and bundled models.
//!
//! Bodies are numbered from 1 in files (0 is the base) and stored 0-based in
//! memory, so `Body::parent == None` means the body hangs off the base.

use std::path::Path;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{
    joint_transform, motion, InertiaParams, MotionSubspace, MotionVector, SpatialTransform,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Fixed,
    Floating,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Screw { pitch: f64 },
    Multi,
    Floating,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    kind: JointKind,
    axis: Option<Vector3<f64>>,
    modes: MotionSubspace,
}

fn unit_axis(axis: Vector3<f64>) -> Result<Vector3<f64>> {
    let n = axis.norm();
    if !(n > 1e-12) || !n.is_finite() {
        return Err(Error::Model(format!(
            "joint axis {axis:?} has no direction"
        )));
    }
    Ok(axis / n)
}

impl Joint {
    pub fn revolute(axis: Vector3<f64>) -> Result<Self> {
        let a = unit_axis(axis)?;
        Ok(Self {
            kind: JointKind::Revolute,
            axis: Some(a),
            modes: MotionSubspace::single(motion(a, Vector3::zeros()))?,
        })
    }

    pub fn prismatic(axis: Vector3<f64>) -> Result<Self> {
        let a = unit_axis(axis)?;
        Ok(Self {
            kind: JointKind::Prismatic,
            axis: Some(a),
            modes: MotionSubspace::single(motion(Vector3::zeros(), a))?,
        })
    }

    /// Screw about `axis` advancing `pitch` metres per radian.
    pub fn screw(axis: Vector3<f64>, pitch: f64) -> Result<Self> {
        let a = unit_axis(axis)?;
        Ok(Self {
            kind: JointKind::Screw { pitch },
            axis: Some(a),
            modes: MotionSubspace::single(motion(a, a * pitch))?,
        })
    }

    pub fn multi(modes: Vec<MotionVector>) -> Result<Self> {
        Ok(Self {
            kind: JointKind::Multi,
            axis: None,
            modes: MotionSubspace::new(modes)?,
        })
    }

    pub fn floating() -> Self {
        let modes = (0..6)
            .map(|k| {
                let mut v = MotionVector::zeros();
                v[k] = 1.0;
                v
            })
            .collect();
        Self {
            kind: JointKind::Floating,
            axis: None,
            modes: MotionSubspace::new(modes).expect("unit modes are independent"),
        }
    }

    pub fn spherical() -> Self {
        Self::multi(vec![
            motion(Vector3::x(), Vector3::zeros()),
            motion(Vector3::y(), Vector3::zeros()),
            motion(Vector3::z(), Vector3::zeros()),
        ])
        .expect("unit modes are independent")
    }

    pub fn kind(&self) -> JointKind {
        self.kind
    }

    pub fn axis(&self) -> Option<Vector3<f64>> {
        self.axis
    }

    pub fn modes(&self) -> &MotionSubspace {
        &self.modes
    }

    pub fn dof(&self) -> usize {
        self.modes.dof()
    }

    /// True when every mode is a pure translation.
    pub fn is_prismatic_like(&self) -> bool {
        self.modes
            .modes()
            .iter()
            .all(|m| m.fixed_rows::<3>(0).norm() < 1e-12)
    }

    /// Joint-frame to body-frame transform, a product of mode exponentials
    /// applied in declaration order.
    pub fn transform(&self, q: &[f64]) -> SpatialTransform {
        debug_assert_eq!(q.len(), self.dof());
        let mut x = SpatialTransform::identity();
        for (qk, phi) in q.iter().zip(self.modes.modes()) {
            x = joint_transform(*qk, phi) * x;
        }
        x
    }
}

/// A geared, rotationally symmetric motor rotor carried by the predecessor of
/// the joint it drives.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotor {
    pub gear_ratio: f64,
    /// Predecessor frame to rotor frame.
    pub placement: SpatialTransform,
    /// Spin axis in the rotor frame (unit).
    pub axis: Vector3<f64>,
    /// Spin inertia about `axis`, needed only for simulation.
    pub inertia: Option<f64>,
    pub symmetric: bool,
}

impl Rotor {
    pub fn new(gear_ratio: f64, placement: SpatialTransform, axis: Vector3<f64>) -> Result<Self> {
        if !(gear_ratio > 0.0) || !gear_ratio.is_finite() {
            return Err(Error::Model(format!(
                "rotor gear ratio {gear_ratio} must be positive"
            )));
        }
        Ok(Self {
            gear_ratio,
            placement,
            axis: unit_axis(axis)?,
            inertia: None,
            symmetric: true,
        })
    }

    pub fn mode(&self) -> MotionVector {
        motion(self.axis, Vector3::zeros())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub name: String,
    pub parent: Option<usize>,
    /// Parent frame to joint frame at zero joint displacement.
    pub xtree: SpatialTransform,
    pub joint: Joint,
    pub params: Option<InertiaParams>,
    pub rotor: Option<Rotor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    pub description: Option<String>,
    pub base: BaseKind,
    pub gravity: Vector3<f64>,
    pub bodies: Vec<Body>,
}

impl Model {
    pub fn new(
        name: impl Into<String>,
        base: BaseKind,
        gravity: Vector3<f64>,
        bodies: Vec<Body>,
    ) -> Result<Self> {
        let m = Self {
            name: name.into(),
            description: None,
            base,
            gravity,
            bodies,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bodies.is_empty() {
            return Err(Error::Model("mechanism has no bodies".into()));
        }
        let mut roots = 0;
        for (i, b) in self.bodies.iter().enumerate() {
            let label = format!("body '{}' ({})", b.name, i + 1);
            match b.parent {
                None => roots += 1,
                Some(p) if p >= i => {
                    return Err(Error::Model(format!(
                        "{label}: parent {} must be numbered before its child",
                        p + 1
                    )))
                }
                Some(_) => {}
            }
            if let Some(p) = &b.params {
                if p.0.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Model(format!(
                        "{label}: non-finite inertial parameter"
                    )));
                }
            }
            if let Some(r) = &b.rotor {
                if !(r.gear_ratio > 0.0) {
                    return Err(Error::Model(format!(
                        "{label}: rotor gear ratio must be positive"
                    )));
                }
                if (r.axis.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::Model(format!(
                        "{label}: rotor axis must be a unit vector"
                    )));
                }
                if b.joint.dof() != 1 {
                    return Err(Error::Unsupported(format!(
                        "{label}: rotors are only supported on single-DoF joints"
                    )));
                }
            }
            if b.joint.kind() == JointKind::Floating && i != 0 {
                return Err(Error::Model(format!(
                    "{label}: only the first body may have a floating joint"
                )));
            }
        }
        if roots != 1 {
            return Err(Error::Model(format!(
                "mechanism must have exactly one root body, found {roots}"
            )));
        }
        if self.base == BaseKind::Floating && self.bodies[0].joint.kind() != JointKind::Floating {
            return Err(Error::Model(
                "floating base requires body 1 to have a floating joint".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.bodies.iter().map(|b| b.joint.dof()).sum()
    }

    /// Start index of each body's coordinates in the generalized vector.
    pub fn dof_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut k = 0;
        for b in &self.bodies {
            out.push(k);
            k += b.joint.dof();
        }
        out
    }

    /// Bodies carrying a rotor, in body order. Rotor `r` owns global
    /// parameter `10 * len() + r`.
    pub fn rotor_bodies(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.bodies[i].rotor.is_some())
            .collect()
    }

    pub fn param_count(&self) -> usize {
        10 * self.len() + self.rotor_bodies().len()
    }

    /// Base acceleration due to gravity as a spatial vector.
    pub fn gravity_motion(&self) -> MotionVector {
        motion(Vector3::zeros(), self.gravity)
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (i + 1..self.len())
            .filter(|&j| self.bodies[j].parent == Some(i))
            .collect()
    }

    /// `i` and all of its descendants, in increasing order.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut inside = vec![false; self.len()];
        inside[i] = true;
        for j in i + 1..self.len() {
            if let Some(p) = self.bodies[j].parent {
                inside[j] = inside[p];
            }
        }
        (i..self.len()).filter(|&j| inside[j]).collect()
    }

    /// Stacked nominal parameters (bodies, then rotor spin inertias).
    pub fn nominal_params(&self) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.param_count());
        for (i, b) in self.bodies.iter().enumerate() {
            let p = b.params.ok_or_else(|| {
                Error::Model(format!("body '{}' has no inertial parameters", b.name))
            })?;
            out.rows_mut(10 * i, 10).copy_from(&p.0);
        }
        for (r, &i) in self.rotor_bodies().iter().enumerate() {
            let rotor = self.bodies[i].rotor.as_ref().unwrap();
            out[10 * self.len() + r] = rotor.inertia.ok_or_else(|| {
                Error::Model(format!(
                    "rotor of body '{}' has no inertia",
                    self.bodies[i].name
                ))
            })?;
        }
        Ok(out)
    }

    pub fn without_rotors(&self) -> Model {
        let mut m = self.clone();
        for b in &mut m.bodies {
            b.rotor = None;
        }
        m
    }

    /// Re-roots this fixed-base mechanism on a new floating trunk. The old
    /// base frame sits at `mount` in the trunk frame.
    pub fn mounted_on_floating_base(
        &self,
        trunk_name: &str,
        trunk_params: Option<InertiaParams>,
        mount: SpatialTransform,
    ) -> Result<Model> {
        if self.base == BaseKind::Floating {
            return Err(Error::Model("mechanism already has a floating base".into()));
        }
        let mut bodies = vec![Body {
            name: trunk_name.to_string(),
            parent: None,
            xtree: SpatialTransform::identity(),
            joint: Joint::floating(),
            params: trunk_params,
            rotor: None,
        }];
        for b in &self.bodies {
            let mut nb = b.clone();
            match b.parent {
                None => {
                    nb.parent = Some(0);
                    nb.xtree = b.xtree * mount;
                    if let Some(r) = &mut nb.rotor {
                        r.placement = r.placement * mount;
                    }
                }
                Some(p) => nb.parent = Some(p + 1),
            }
            bodies.push(nb);
        }
        Model::new(
            format!("{}_floating", self.name),
            BaseKind::Floating,
            self.gravity,
            bodies,
        )
    }
}

// ---------------------------------------------------------------------------
// JSON format

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: u32,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    base: BaseKind,
    gravity: [f64; 3],
    bodies: Vec<BodyFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseFile {
    rpy: [f64; 3],
    xyz: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pitch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<[f64; 6]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RotorFile {
    gear_ratio: f64,
    axis: [f64; 3],
    xyz: [f64; 3],
    rpy: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inertia: Option<f64>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    symmetric: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyFile {
    name: String,
    parent: usize,
    #[serde(rename = "X")]
    x: PoseFile,
    joint: JointFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<[f64; 10]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotor: Option<RotorFile>,
}

fn joint_from_file(j: &JointFile, label: &str) -> Result<Joint> {
    let axis = || {
        j.axis
            .map(Vector3::from)
            .ok_or_else(|| Error::Model(format!("{label}: joint type '{}' needs an axis", j.kind)))
    };
    let r = match j.kind.as_str() {
        "revolute" | "continuous" => Joint::revolute(axis()?),
        "prismatic" => Joint::prismatic(axis()?),
        "screw" => {
            let pitch = j
                .pitch
                .ok_or_else(|| Error::Model(format!("{label}: screw joint needs a pitch")))?;
            Joint::screw(axis()?, pitch)
        }
        "multi" => {
            let modes = j
                .modes
                .as_ref()
                .ok_or_else(|| Error::Model(format!("{label}: multi joint needs modes")))?;
            Joint::multi(
                modes
                    .iter()
                    .map(|m| MotionVector::from_column_slice(m))
                    .collect(),
            )
        }
        "spherical" => Ok(Joint::spherical()),
        "floating" => Ok(Joint::floating()),
        other => {
            return Err(Error::Model(format!(
                "{label}: unknown joint type '{other}'"
            )))
        }
    };
    r.map_err(|e| Error::Model(format!("{label}: {e}")))
}

fn joint_to_file(j: &Joint) -> JointFile {
    let axis = j.axis().map(|a| [a.x, a.y, a.z]);
    match j.kind() {
        JointKind::Revolute => JointFile {
            kind: "revolute".into(),
            axis,
            pitch: None,
            modes: None,
        },
        JointKind::Prismatic => JointFile {
            kind: "prismatic".into(),
            axis,
            pitch: None,
            modes: None,
        },
        JointKind::Screw { pitch } => JointFile {
            kind: "screw".into(),
            axis,
            pitch: Some(pitch),
            modes: None,
        },
        JointKind::Floating => JointFile {
            kind: "floating".into(),
            axis: None,
            pitch: None,
            modes: None,
        },
        JointKind::Multi => JointFile {
            kind: "multi".into(),
            axis: None,
            pitch: None,
            modes: Some(
                j.modes()
                    .modes()
                    .iter()
                    .map(|m| {
                        let mut a = [0.0; 6];
                        a.copy_from_slice(m.as_slice());
                        a
                    })
                    .collect(),
            ),
        },
    }
}

impl Model {
    pub fn from_json_str(text: &str) -> Result<Model> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.format != 1 {
            return Err(Error::Parse(format!(
                "unsupported format version {}",
                file.format
            )));
        }
        let mut bodies = Vec::with_capacity(file.bodies.len());
        for (i, b) in file.bodies.iter().enumerate() {
            let label = format!("body '{}' ({})", b.name, i + 1);
            if b.parent > i {
                return Err(Error::Model(format!(
                    "{label}: parent {} must be numbered before its child",
                    b.parent
                )));
            }
            let rotor = match &b.rotor {
                None => None,
                Some(r) => {
                    let mut rotor = Rotor::new(
                        r.gear_ratio,
                        SpatialTransform::from_rpy_xyz(r.rpy, r.xyz),
                        Vector3::from(r.axis),
                    )
                    .map_err(|e| Error::Model(format!("{label}: {e}")))?;
                    rotor.inertia = r.inertia;
                    rotor.symmetric = r.symmetric;
                    Some(rotor)
                }
            };
            bodies.push(Body {
                name: b.name.clone(),
                parent: b.parent.checked_sub(1),
                xtree: SpatialTransform::from_rpy_xyz(b.x.rpy, b.x.xyz),
                joint: joint_from_file(&b.joint, &label)?,
                params: b.params.map(InertiaParams::from),
                rotor,
            });
        }
        let mut m = Model::new(file.name, file.base, Vector3::from(file.gravity), bodies)?;
        m.description = file.description;
        Ok(m)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Model> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Model::from_json_str(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json_string(&self) -> String {
        let bodies = self
            .bodies
            .iter()
            .map(|b| {
                let (rpy, xyz) = b.xtree.to_rpy_xyz();
                BodyFile {
                    name: b.name.clone(),
                    parent: b.parent.map_or(0, |p| p + 1),
                    x: PoseFile { rpy, xyz },
                    joint: joint_to_file(&b.joint),
                    params: b.params.map(Into::into),
                    rotor: b.rotor.as_ref().map(|r| {
                        let (rpy, xyz) = r.placement.to_rpy_xyz();
                        RotorFile {
                            gear_ratio: r.gear_ratio,
                            axis: [r.axis.x, r.axis.y, r.axis.z],
                            xyz,
                            rpy,
                            inertia: r.inertia,
                            symmetric: r.symmetric,
                        }
                    }),
                }
            })
            .collect();
        let file = ModelFile {
            format: 1,
            name: self.name.clone(),
            description: self.description.clone(),
            base: self.base,
            gravity: [self.gravity.x, self.gravity.y, self.gravity.z],
            bodies,
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }

    /// Loads `builtin:<name>`, a `.urdf` file or a JSON model file.
    pub fn load(spec: &str) -> Result<Model> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return builtin(name);
        }
        if spec.to_ascii_lowercase().ends_with(".urdf") {
            return crate::urdf::load_urdf(spec);
        }
        Model::load_json(spec)
    }
}

// ---------------------------------------------------------------------------
// bundled models

pub const BUILTIN_NAMES: [&str; 6] = [
    "puma560",
    "scara",
    "cheetah3_leg_fixed",
    "cheetah3_leg_floating",
    "rr_parallel",
    "rr_perpendicular",
];

const PUMA560: &str = include_str!("../models/puma560.json");
const SCARA: &str = include_str!("../models/scara.json");
const CHEETAH_LEG: &str = include_str!("../models/cheetah3_leg_fixed.json");
const RR_PARALLEL: &str = include_str!("../models/rr_parallel.json");
const RR_PERPENDICULAR: &str = include_str!("../models/rr_perpendicular.json");

/// Trunk used when the leg is mounted on a floating base.
pub fn cheetah_trunk_params() -> InertiaParams {
    use nalgebra::Matrix3;
    InertiaParams::from_mass_com_inertia(
        41.0,
        Vector3::new(0.0, 0.0, 0.0),
        Matrix3::from_diagonal(&Vector3::new(0.35, 2.1, 2.1)),
    )
}

/// Location of the leg's hip frame on the trunk.
pub fn cheetah_hip_mount() -> SpatialTransform {
    SpatialTransform::translation(Vector3::new(0.3, -0.1, 0.0))
}

pub fn builtin(name: &str) -> Result<Model> {
    match name {
        "puma560" => Model::from_json_str(PUMA560),
        "scara" => Model::from_json_str(SCARA),
        "cheetah3_leg_fixed" => Model::from_json_str(CHEETAH_LEG),
        "cheetah3_leg_floating" => {
            let mut m = Model::from_json_str(CHEETAH_LEG)?.mounted_on_floating_base(
                "trunk",
                Some(cheetah_trunk_params()),
                cheetah_hip_mount(),
            )?;
            m.name = "cheetah3_leg_floating".into();
            Ok(m)
        }
        "rr_parallel" => Model::from_json_str(RR_PARALLEL),
        "rr_perpendicular" => Model::from_json_str(RR_PERPENDICULAR),
        other => Err(Error::Model(format!(
            "unknown builtin model '{other}' (available: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

pub fn builtin_models() -> Vec<Model> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin(n).expect("bundled models are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_BODY: &str = r#"{
      "format": 1, "name": "one", "base": "fixed", "gravity": [0, 0, -9.81],
      "bodies": [
        {"name": "link", "parent": 0, "X": {"rpy": [0, 0, 0], "xyz": [0, 0, 0]},
         "joint": {"type": "revolute", "axis": [0, 0, 1]}}
      ]}"#;

    #[test]
    fn minimal_model_loads() {
        let m = Model::from_json_str(ONE_BODY).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.dof(), 1);
        assert_eq!(m.bodies[0].parent, None);
    }

    #[test]
    fn parent_after_child_is_rejected() {
        let mut bodies = String::new();
        for (i, p) in [0, 1, 4, 3].iter().enumerate() {
            if i > 0 {
                bodies.push(',');
            }
            bodies.push_str(&format!(
                r#"{{"name":"b{}","parent":{p},"X":{{"rpy":[0,0,0],"xyz":[0,0,0]}},"joint":{{"type":"revolute","axis":[0,0,1]}}}}"#,
                i + 1
            ));
        }
        let text = format!(
            r#"{{"format":1,"name":"bad","base":"fixed","gravity":[0,0,0],"bodies":[{bodies}]}}"#
        );
        let err = Model::from_json_str(&text).unwrap_err().to_string();
        assert!(err.contains("b3") && err.contains("before"), "{err}");
    }

    #[test]
    fn two_roots_rejected() {
        let j = Joint::revolute(Vector3::z()).unwrap();
        let b = |name: &str| Body {
            name: name.into(),
            parent: None,
            xtree: SpatialTransform::identity(),
            joint: j.clone(),
            params: None,
            rotor: None,
        };
        let r = Model::new("x", BaseKind::Fixed, Vector3::zeros(), vec![b("a"), b("b")]);
        assert!(r.is_err());
    }

    #[test]
    fn unknown_field_reports_location() {
        let text = ONE_BODY.replace("\"name\": \"link\"", "\"nmae\": \"link\"");
        let err = Model::from_json_str(&text).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn builtins_load() {
        let ms = builtin_models();
        assert_eq!(ms.len(), 6);
        let puma = &ms[0];
        assert_eq!(puma.len(), 6);
        assert_eq!(puma.rotor_bodies().len(), 6);
        let scara = builtin("scara").unwrap();
        let kinds: Vec<_> = scara.bodies.iter().map(|b| b.joint.kind()).collect();
        assert_eq!(
            kinds,
            vec![
                JointKind::Revolute,
                JointKind::Revolute,
                JointKind::Prismatic,
                JointKind::Revolute
            ]
        );
    }

    #[test]
    fn floating_leg_is_rerooted_fixed_leg() {
        let fixed = builtin("cheetah3_leg_fixed").unwrap();
        let float = builtin("cheetah3_leg_floating").unwrap();
        assert_eq!(float.len(), fixed.len() + 1);
        assert_eq!(float.base, BaseKind::Floating);
        assert_eq!(float.bodies[0].joint.kind(), JointKind::Floating);
        for (a, b) in fixed.bodies.iter().zip(&float.bodies[1..]) {
            assert_eq!(a.joint, b.joint);
            assert_eq!(a.params, b.params);
        }
        assert_eq!(float.bodies[1].parent, Some(0));
    }

    #[test]
    fn rr_parallel_axes_are_parallel() {
        let m = builtin("rr_parallel").unwrap();
        let z1 = m.bodies[0].joint.axis().unwrap();
        let x = m.bodies[1].xtree;
        // second axis expressed in the first body's frame
        let z2 = x.rotation().transpose() * m.bodies[1].joint.axis().unwrap();
        assert!((z1.cross(&z2)).norm() < 1e-12);
    }

    #[test]
    fn subtree_and_children() {
        let m = builtin("cheetah3_leg_floating").unwrap();
        assert_eq!(m.subtree(0), vec![0, 1, 2, 3]);
        assert_eq!(m.subtree(2), vec![2, 3]);
        assert_eq!(m.children(1), vec![2]);
    }

    #[test]
    fn rotor_on_multi_dof_joint_is_unsupported() {
        let mut b = builtin("rr_parallel").unwrap();
        b.bodies[0].joint = Joint::spherical();
        b.bodies[0].rotor =
            Some(Rotor::new(5.0, SpatialTransform::identity(), Vector3::z()).unwrap());
        assert!(matches!(b.validate(), Err(Error::Unsupported(_))));
    }
}
