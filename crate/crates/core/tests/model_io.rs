use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use rpna::model::{builtin, builtin_models, BaseKind, JointKind, Model};
use rpna::nullspace::analyze;
use rpna::regressor::{random_model, sample_rng, RandomModelSpec};
use rpna::urdf::{load_urdf, parse_urdf};
use rpna::RpnaOptions;

fn random_models(n: u64) -> Vec<Model> {
    (0..n)
        .map(|i| {
            let spec = RandomModelSpec {
                max_bodies: 7,
                gravity: i % 2 == 0,
                rotors: true,
                floating: i % 3 == 0,
            };
            random_model(&mut sample_rng(77, i), &spec)
        })
        .collect()
}

/// Poses are stored as roll-pitch-yaw, so rotations come back to rounding.
fn assert_close(a: &Model, b: &Model) {
    assert_eq!((&a.name, a.base, a.len()), (&b.name, b.base, b.len()));
    assert_eq!(a.gravity, b.gravity);
    for (x, y) in a.bodies.iter().zip(&b.bodies) {
        assert_eq!(
            (&x.name, x.parent, x.params),
            (&y.name, y.parent, y.params),
            "{}",
            a.name
        );
        assert_eq!(x.joint.kind(), y.joint.kind());
        if let (Some(u), Some(v)) = (x.joint.axis(), y.joint.axis()) {
            assert!((u - v).amax() < 1e-15);
        }
        assert!((x.joint.modes().matrix() - y.joint.modes().matrix()).amax() < 1e-15);
        assert!(
            (x.xtree.matrix() - y.xtree.matrix()).amax() < 1e-14,
            "{} {}",
            a.name,
            x.name
        );
        assert_eq!(x.rotor.is_some(), y.rotor.is_some());
        if let (Some(r), Some(s)) = (&x.rotor, &y.rotor) {
            assert_eq!(
                (r.gear_ratio, r.inertia, r.symmetric),
                (s.gear_ratio, s.inertia, s.symmetric)
            );
            assert!((r.axis - s.axis).amax() < 1e-15);
            assert!((r.placement.matrix() - s.placement.matrix()).amax() < 1e-14);
        }
    }
}

#[test]
fn json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut models = builtin_models();
    models.extend(random_models(30));
    for (k, m) in models.iter().enumerate() {
        let text = m.to_json_string();
        let back = Model::from_json_str(&text).unwrap();
        assert_close(&back, m);
        // repeated round trips do not drift
        assert_close(&Model::from_json_str(&back.to_json_string()).unwrap(), m);
        let path = dir.path().join(format!("m{k}.json"));
        m.save_json(&path).unwrap();
        assert_eq!(Model::load_json(&path).unwrap(), back);
        assert_eq!(Model::load(path.to_str().unwrap()).unwrap(), back);
    }
}

/// URDF text for a fixed-base chain of revolute and prismatic joints. The
/// inertia is written about the centre of mass, as URDF requires.
fn to_urdf(m: &Model) -> String {
    let mut s = format!("<robot name=\"{}\">\n  <link name=\"base\"/>\n", m.name);
    for b in &m.bodies {
        let p = b.params.unwrap().0;
        let mass = p[0];
        let c = Vector3::new(p[1], p[2], p[3]) / mass;
        let io = Matrix3::new(p[4], p[5], p[6], p[5], p[7], p[8], p[6], p[8], p[9]);
        // parallel-axis theorem back to the centre of mass
        let ic = io - mass * (c.norm_squared() * Matrix3::identity() - c * c.transpose());
        let _ = writeln!(
            s,
            "  <link name=\"{}\"><inertial><origin xyz=\"{:e} {:e} {:e}\"/><mass value=\"{mass:e}\"/>\
             <inertia ixx=\"{:e}\" ixy=\"{:e}\" ixz=\"{:e}\" iyy=\"{:e}\" iyz=\"{:e}\" izz=\"{:e}\"/></inertial></link>",
            b.name, c.x, c.y, c.z, ic[(0, 0)], ic[(0, 1)], ic[(0, 2)], ic[(1, 1)], ic[(1, 2)], ic[(2, 2)]
        );
    }
    for b in &m.bodies {
        let parent = b
            .parent
            .map_or("base".to_string(), |p| m.bodies[p].name.clone());
        let (rpy, xyz) = b.xtree.to_rpy_xyz();
        let kind = match b.joint.kind() {
            JointKind::Revolute => "continuous",
            JointKind::Prismatic => "prismatic",
            other => panic!("no URDF joint for {other:?}"),
        };
        let a = b.joint.axis().unwrap();
        let _ = writeln!(
            s,
            "  <joint name=\"j_{0}\" type=\"{kind}\"><parent link=\"{parent}\"/><child link=\"{0}\"/>\
             <origin xyz=\"{1:e} {2:e} {3:e}\" rpy=\"{4:e} {5:e} {6:e}\"/><axis xyz=\"{7:e} {8:e} {9:e}\"/>\
             <limit lower=\"-1\" upper=\"1\" effort=\"1\" velocity=\"1\"/></joint>",
            b.name, xyz[0], xyz[1], xyz[2], rpy[0], rpy[1], rpy[2], a.x, a.y, a.z
        );
    }
    s.push_str("</robot>\n");
    s
}

#[test]
fn urdf_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "puma560",
        "scara",
        "cheetah3_leg_fixed",
        "rr_parallel",
        "rr_perpendicular",
    ] {
        let json = builtin(name).unwrap().without_rotors();
        assert_eq!(json.base, BaseKind::Fixed);
        let text = to_urdf(&json);
        let path = dir.path().join(format!("{name}.urdf"));
        std::fs::write(&path, &text).unwrap();
        let urdf = load_urdf(&path).unwrap();
        assert_eq!(urdf.len(), json.len(), "{name}");
        for (a, b) in urdf.bodies.iter().zip(&json.bodies) {
            assert_eq!(a.parent, b.parent, "{name}");
            assert!(
                (a.xtree.matrix() - b.xtree.matrix()).amax() < 1e-12,
                "{name} {}",
                b.name
            );
            assert!(
                (a.joint.modes().matrix() - b.joint.modes().matrix()).amax() < 1e-12,
                "{name}"
            );
            let (pa, pb) = (a.params.unwrap().0, b.params.unwrap().0);
            assert!(
                (pa - pb).amax() < 1e-12 * pb.amax(),
                "{name} {}: {pa} vs {pb}",
                b.name
            );
        }
        // the gravity is not part of URDF; analyze both without it
        let mut json = json;
        json.gravity = Vector3::zeros();
        let opts = RpnaOptions {
            gravity: false,
            static_only: false,
            include_rotors: false,
        };
        let (_, su) = analyze(&urdf, &opts).unwrap();
        let (_, sj) = analyze(&json, &opts).unwrap();
        assert_eq!(su.nullity, sj.nullity, "{name}");
        assert_eq!(su.classes, sj.classes, "{name}");
        // the builtin:/path loader picks the importer by extension
        assert_eq!(
            Model::load(path.to_str().unwrap()).unwrap().len(),
            json.len()
        );
    }
}

#[test]
fn urdf_parse_errors_name_the_problem() {
    let e = parse_urdf(
        "<robot name=\"r\"><link name=\"a\"/><joint name=\"j\" type=\"revolute\"/></robot>",
    )
    .unwrap_err()
    .to_string();
    assert!(!e.is_empty());
    assert!(parse_urdf("not xml").is_err());
}
