//! Inverse dynamics against a Lagrangian built from the mass matrix and the
//! potential energy, both differentiated numerically.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rpna::model::{builtin, builtin_models, BaseKind, Model};
use rpna::regressor::{
    energy_rows, inverse_dynamics, mass_matrix, random_model, random_state, regressor, sample_rng,
    RandomModelSpec, State,
};
use rpna::spatial::SpatialTransform;

/// Potential energy `-Σ g·(m p + Eᵀ h)` from world-to-body transforms.
fn potential(model: &Model, q: &[f64], params: &DVector<f64>) -> f64 {
    let g: Vector3<f64> = model.gravity;
    let off = model.dof_offsets();
    let mut x: Vec<SpatialTransform> = Vec::with_capacity(model.len());
    let mut v = 0.0;
    for (i, b) in model.bodies.iter().enumerate() {
        let qi = &q[off[i]..off[i] + b.joint.dof()];
        let local = b.joint.transform(qi) * b.xtree;
        let xi = match b.parent {
            None => local,
            Some(p) => local * x[p],
        };
        let m = params[10 * i];
        let h = Vector3::new(params[10 * i + 1], params[10 * i + 2], params[10 * i + 3]);
        let first_moment = xi.position() * m + xi.rotation().transpose() * h;
        v -= g.dot(&first_moment);
        x.push(xi);
    }
    v
}

fn shifted(q: &[f64], dir: &[f64], h: f64) -> Vec<f64> {
    q.iter().zip(dir).map(|(a, d)| a + h * d).collect()
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

/// `H q̈ + Ḣ q̇ − ½ ∂(q̇ᵀ H q̇)/∂q + ∂V/∂q` by central differences.
fn lagrangian_torque(model: &Model, params: &DVector<f64>, s: &State) -> DVector<f64> {
    let n = model.dof();
    let h = 1e-6;
    let qd = DVector::from_column_slice(&s.qd);
    let qdd = DVector::from_column_slice(&s.qdd);
    let mm = |q: &[f64]| mass_matrix(model, q, params).unwrap();
    let hdot = (mm(&shifted(&s.q, &s.qd, h)) - mm(&shifted(&s.q, &s.qd, -h))) / (2.0 * h);
    let mut tau = mm(&s.q) * &qdd + hdot * &qd;
    for k in 0..n {
        let e = unit(n, k);
        let (qp, qm) = (shifted(&s.q, &e, h), shifted(&s.q, &e, -h));
        let dke = (qd.dot(&(mm(&qp) * &qd)) - qd.dot(&(mm(&qm) * &qd))) / (2.0 * h);
        let dv = (potential(model, &qp, params) - potential(model, &qm, params)) / (2.0 * h);
        tau[k] += dv - 0.5 * dke;
    }
    tau
}

/// Fixed-base trees whose joints all have one coordinate, so that the
/// joint positions are generalized coordinates.
fn coordinate_models() -> Vec<Model> {
    let mut out: Vec<Model> = builtin_models()
        .into_iter()
        .filter(|m| m.base == BaseKind::Fixed)
        .collect();
    let mut i = 0;
    while out.len() < 16 {
        let mut rng = sample_rng(11, i);
        i += 1;
        let spec = RandomModelSpec {
            max_bodies: 6,
            gravity: true,
            rotors: true,
            floating: false,
        };
        let m = random_model(&mut rng, &spec);
        if m.bodies.iter().all(|b| b.joint.dof() == 1) {
            out.push(m);
        }
    }
    out
}

#[test]
fn inverse_dynamics_matches_lagrangian() {
    for (mi, m) in coordinate_models().iter().enumerate() {
        let p = m.nominal_params().unwrap();
        for k in 0..5 {
            let mut rng = sample_rng(mi as u64, k);
            let s = random_state(m, &mut rng);
            let rnea = inverse_dynamics(m, &s, &p).unwrap();
            let lag = lagrangian_torque(m, &p, &s);
            let err = (&rnea - &lag).amax() / rnea.amax().max(1.0);
            assert!(
                err < 1e-5,
                "{} ({mi}) state {k}: {err:.2e}\nrnea {rnea}\nlagrange {lag}",
                m.name
            );
        }
    }
}

#[test]
fn kinetic_energy_matches_mass_matrix() {
    let mut models = coordinate_models();
    models.push(builtin("cheetah3_leg_floating").unwrap());
    for m in &models {
        let p = m.nominal_params().unwrap();
        for k in 0..10 {
            let s = random_state(m, &mut sample_rng(5, k));
            let h = mass_matrix(m, &s.q, &p).unwrap();
            let qd = DVector::from_column_slice(&s.qd);
            let ke = 0.5 * qd.dot(&(&h * &qd));
            let from_rows = (energy_rows(m, &s).unwrap().row(0) * &p)[0];
            assert!(
                (ke - from_rows).abs() < 1e-10 * ke.abs().max(1.0),
                "{}: {ke} vs {from_rows}",
                m.name
            );
            // symmetric positive definite
            assert!((&h - h.transpose()).amax() < 1e-12 * h.amax());
            assert!(h.clone().cholesky().is_some(), "{}", m.name);
        }
    }
}

#[test]
fn mass_matrix_columns_are_unit_accelerations() {
    // without gravity and at rest, τ = H q̈
    for m in coordinate_models() {
        let mut m = m;
        m.gravity = Vector3::zeros();
        let p = m.nominal_params().unwrap();
        let mut rng = sample_rng(3, 0);
        let q: Vec<f64> = (0..m.dof()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let h = mass_matrix(&m, &q, &p).unwrap();
        let mut cols = DMatrix::zeros(m.dof(), m.dof());
        for k in 0..m.dof() {
            let s = State {
                q: q.clone(),
                qd: vec![0.0; m.dof()],
                qdd: unit(m.dof(), k),
            };
            cols.set_column(k, &inverse_dynamics(&m, &s, &p).unwrap());
        }
        assert!((&cols - &h).amax() < 1e-10 * h.amax(), "{}", m.name);
    }
}

#[test]
fn regressor_reproduces_inverse_dynamics() {
    for m in builtin_models() {
        let p = m.nominal_params().unwrap();
        for k in 0..10 {
            let s = random_state(&m, &mut sample_rng(8, k));
            let y = regressor(&m, &s).unwrap();
            let tau = inverse_dynamics(&m, &s, &p).unwrap();
            assert!(
                (&y * &p - &tau).amax() < 1e-10 * tau.amax().max(1.0),
                "{}",
                m.name
            );
        }
    }
}
