//! Rigid-body dynamics with geared rotors, the inertial-parameter regressor
//! and a sampled rank oracle for the unidentifiable subspace.
//!
//! Multi-DoF joints use constant free modes `Φ` in the body frame and a
//! quasi-velocity `ν`, so that the relative velocity across the joint is
//! `Φ ν`. Their configuration is the product of the mode exponentials.

use nalgebra::{DMatrix, DVector, Matrix6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_principal_angle, null_space, singular_values, top_right_singular, vstack};
use crate::model::{BaseKind, Body, Joint, Model, Rotor};
use crate::nullspace::rotor_unit_params;
use crate::spatial::{
    cross_force, cross_motion, energy_descriptor, motion, wedge, InertiaParams, MotionVector,
    ParamVector, SpatialTransform,
};

/// Relative singular-value threshold for the sampled nullity.
pub const NULLITY_RTOL: f64 = 1e-8;
/// Default seed for all sampling.
pub const DEFAULT_SEED: u64 = 42;
/// Samples per independently factored chunk.
const CHUNK: usize = 32;

/// Joint positions, quasi-velocities and their rates, stacked over joints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        Self {
            q: vec![0.0; n],
            qd: vec![0.0; n],
            qdd: vec![0.0; n],
        }
    }

    pub fn check(&self, model: &Model) -> Result<()> {
        let n = model.dof();
        if self.q.len() != n || self.qd.len() != n || self.qdd.len() != n {
            return Err(Error::Model(format!(
                "state has sizes ({}, {}, {}) but the mechanism has {n} DoF",
                self.q.len(),
                self.qd.len(),
                self.qdd.len()
            )));
        }
        Ok(())
    }
}

/// Which quantity the sampled oracle stacks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// Generalized forces at random states.
    Torque,
    /// Total kinetic energy and gravity power at random states.
    Energy,
    /// Generalized forces at rest (gravity only).
    Static,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecPolicy {
    Sequential,
    #[default]
    Parallel,
}

struct Kinematics {
    x: Vec<SpatialTransform>,
    v: Vec<MotionVector>,
    a: Vec<MotionVector>,
    /// Rotor velocity and acceleration for bodies with a rotor.
    vm: Vec<Option<(MotionVector, MotionVector)>>,
    /// Gravity acceleration in each body frame.
    ag: Vec<MotionVector>,
}

fn body_q<'a>(v: &'a [f64], offsets: &[usize], model: &Model, i: usize) -> &'a [f64] {
    &v[offsets[i]..offsets[i] + model.bodies[i].joint.dof()]
}

fn mode_velocity(body: &Body, nu: &[f64]) -> MotionVector {
    body.joint
        .modes()
        .modes()
        .iter()
        .zip(nu)
        .fold(MotionVector::zeros(), |acc, (phi, s)| acc + phi * *s)
}

fn kinematics(model: &Model, s: &State) -> Kinematics {
    let n = model.len();
    let off = model.dof_offsets();
    let a0 = -model.gravity_motion();
    let mut k = Kinematics {
        x: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        vm: Vec::with_capacity(n),
        ag: Vec::with_capacity(n),
    };
    for (i, b) in model.bodies.iter().enumerate() {
        let x = b.joint.transform(body_q(&s.q, &off, model, i)) * b.xtree;
        let (vp, ap, gp) = match b.parent {
            None => (MotionVector::zeros(), a0, model.gravity_motion()),
            Some(p) => (k.v[p], k.a[p], k.ag[p]),
        };
        let vj = mode_velocity(b, body_q(&s.qd, &off, model, i));
        let aj = mode_velocity(b, body_q(&s.qdd, &off, model, i));
        let v = x.apply(&vp) + vj;
        let a = x.apply(&ap) + aj + cross_motion(&v) * vj;
        let vm = b.rotor.as_ref().map(|r| {
            let wj = r.mode() * (r.gear_ratio * s.qd[off[i]]);
            let vm = r.placement.apply(&vp) + wj;
            let am = r.placement.apply(&ap)
                + r.mode() * (r.gear_ratio * s.qdd[off[i]])
                + cross_motion(&vm) * wj;
            (vm, am)
        });
        k.x.push(x);
        k.v.push(v);
        k.a.push(a);
        k.vm.push(vm);
        k.ag.push(x.apply(&gp));
    }
    k
}

fn body_force(i: &Matrix6<f64>, v: &MotionVector, a: &MotionVector) -> MotionVector {
    i * a + cross_force(v) * (i * v)
}

fn rotor_inertia(r: &Rotor, j: f64) -> Matrix6<f64> {
    wedge(&(rotor_unit_params(&r.axis) * j))
}

/// Recursive Newton-Euler inverse dynamics. `params` stacks the body
/// parameters and then one spin inertia per rotor, as in
/// [`Model::nominal_params`].
pub fn inverse_dynamics(model: &Model, s: &State, params: &DVector<f64>) -> Result<DVector<f64>> {
    s.check(model)?;
    check_params(model, params)?;
    let k = kinematics(model, s);
    let off = model.dof_offsets();
    let n = model.len();
    let mut f: Vec<MotionVector> = (0..n)
        .map(|i| {
            let p = ParamVector::from_iterator(params.rows(10 * i, 10).iter().copied());
            body_force(&wedge(&p), &k.v[i], &k.a[i])
        })
        .collect();
    let rotor_idx = rotor_index(model);
    let mut tau = DVector::zeros(model.dof());
    for i in (0..n).rev() {
        let b = &model.bodies[i];
        for (c, phi) in b.joint.modes().modes().iter().enumerate() {
            tau[off[i] + c] = phi.dot(&f[i]);
        }
        if let (Some(r), Some((vm, am))) = (&b.rotor, k.vm[i]) {
            let im = rotor_inertia(r, params[10 * n + rotor_idx[i].unwrap()]);
            let fm = body_force(&im, &vm, &am);
            tau[off[i]] += r.gear_ratio * r.mode().dot(&fm);
            if let Some(p) = b.parent {
                f[p] += r.placement.apply_transpose(&fm);
            }
        }
        if let Some(p) = b.parent {
            let fp = k.x[i].apply_transpose(&f[i]);
            f[p] += fp;
        }
    }
    Ok(tau)
}

fn check_params(model: &Model, params: &DVector<f64>) -> Result<()> {
    if params.len() != model.param_count() {
        return Err(Error::Model(format!(
            "parameter vector has length {} but the mechanism has {} parameters",
            params.len(),
            model.param_count()
        )));
    }
    Ok(())
}

fn rotor_index(model: &Model) -> Vec<Option<usize>> {
    let mut out = vec![None; model.len()];
    for (r, i) in model.rotor_bodies().into_iter().enumerate() {
        out[i] = Some(r);
    }
    out
}

/// Propagates a force applied at `start` to every joint on its path to the
/// root, writing `Φᵀ f` into column `col` of `y`.
fn propagate(
    model: &Model,
    k: &Kinematics,
    off: &[usize],
    start: usize,
    mut f: MotionVector,
    y: &mut DMatrix<f64>,
    col: usize,
) {
    let mut j = start;
    loop {
        let b = &model.bodies[j];
        for (c, phi) in b.joint.modes().modes().iter().enumerate() {
            y[(off[j] + c, col)] += phi.dot(&f);
        }
        match b.parent {
            Some(p) => {
                f = k.x[j].apply_transpose(&f);
                j = p;
            }
            None => break,
        }
    }
}

/// Classical regressor `Y` with `τ = Y π`.
pub fn regressor(model: &Model, s: &State) -> Result<DMatrix<f64>> {
    s.check(model)?;
    let k = kinematics(model, s);
    Ok(regressor_from(model, &k, s))
}

fn regressor_from(model: &Model, k: &Kinematics, s: &State) -> DMatrix<f64> {
    let off = model.dof_offsets();
    let n = model.len();
    let mut y = DMatrix::zeros(model.dof(), model.param_count());
    for i in 0..n {
        for c in 0..10 {
            let mut e = ParamVector::zeros();
            e[c] = 1.0;
            let f = body_force(&wedge(&e), &k.v[i], &k.a[i]);
            propagate(model, k, &off, i, f, &mut y, 10 * i + c);
        }
    }
    for (r, i) in model.rotor_bodies().into_iter().enumerate() {
        let b = &model.bodies[i];
        let rotor = b.rotor.as_ref().unwrap();
        let (vm, am) = k.vm[i].unwrap();
        let fm = body_force(&rotor_inertia(rotor, 1.0), &vm, &am);
        let col = 10 * n + r;
        y[(off[i], col)] += rotor.gear_ratio * rotor.mode().dot(&fm);
        if let Some(p) = b.parent {
            propagate(
                model,
                k,
                &off,
                p,
                rotor.placement.apply_transpose(&fm),
                &mut y,
                col,
            );
        }
    }
    let _ = s;
    y
}

/// Row of the total kinetic energy and row of the gravity power, both linear
/// in the parameters.
pub fn energy_rows(model: &Model, s: &State) -> Result<DMatrix<f64>> {
    s.check(model)?;
    let k = kinematics(model, s);
    Ok(energy_rows_from(model, &k))
}

fn energy_rows_from(model: &Model, k: &Kinematics) -> DMatrix<f64> {
    let n = model.len();
    let mut out = DMatrix::zeros(2, model.param_count());
    for i in 0..n {
        let kv = energy_descriptor(&k.v[i]) * 0.5;
        for c in 0..10 {
            out[(0, 10 * i + c)] = kv[c];
            let mut e = ParamVector::zeros();
            e[c] = 1.0;
            // rate of change of potential energy: minus the power of gravity
            out[(1, 10 * i + c)] = -k.v[i].dot(&(wedge(&e) * k.ag[i]));
        }
    }
    for (r, i) in model.rotor_bodies().into_iter().enumerate() {
        let rotor = model.bodies[i].rotor.as_ref().unwrap();
        let (vm, _) = k.vm[i].unwrap();
        out[(0, 10 * n + r)] = 0.5 * energy_descriptor(&vm).dot(&rotor_unit_params(&rotor.axis));
    }
    out
}

/// Joint-space mass matrix by the composite rigid-body algorithm, rotors
/// included.
pub fn mass_matrix(model: &Model, q: &[f64], params: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_params(model, params)?;
    let s = State {
        q: q.to_vec(),
        qd: vec![0.0; q.len()],
        qdd: vec![0.0; q.len()],
    };
    s.check(model)?;
    let k = kinematics(model, &s);
    let off = model.dof_offsets();
    let n = model.len();
    let ridx = rotor_index(model);
    let mut ic: Vec<Matrix6<f64>> = (0..n)
        .map(|i| {
            wedge(&ParamVector::from_iterator(
                params.rows(10 * i, 10).iter().copied(),
            ))
        })
        .collect();
    let im: Vec<Option<Matrix6<f64>>> = (0..n)
        .map(|i| {
            model.bodies[i]
                .rotor
                .as_ref()
                .map(|r| rotor_inertia(r, params[10 * n + ridx[i].unwrap()]))
        })
        .collect();
    for i in (0..n).rev() {
        if let Some(p) = model.bodies[i].parent {
            let x = k.x[i].matrix();
            let add = x.transpose() * ic[i] * x;
            ic[p] += add;
            if let (Some(r), Some(m)) = (&model.bodies[i].rotor, &im[i]) {
                let xm = r.placement.matrix();
                ic[p] += xm.transpose() * m * xm;
            }
        }
    }
    let mut h = DMatrix::zeros(model.dof(), model.dof());
    for i in 0..n {
        let b = &model.bodies[i];
        for (ci, phi) in b.joint.modes().modes().iter().enumerate() {
            let col = off[i] + ci;
            let mut f = ic[i] * phi;
            let mut rot = None;
            if let (Some(r), Some(m)) = (&b.rotor, &im[i]) {
                let fm = m * r.mode() * r.gear_ratio;
                h[(col, col)] += r.gear_ratio * r.mode().dot(&fm);
                rot = Some(r.placement.apply_transpose(&fm));
            }
            for (cj, phj) in b.joint.modes().modes().iter().enumerate() {
                h[(off[i] + cj, col)] += phj.dot(&f);
            }
            let mut j = i;
            while let Some(p) = model.bodies[j].parent {
                f = k.x[j].apply_transpose(&f);
                if j == i {
                    if let Some(fr) = rot.take() {
                        f += fr;
                    }
                }
                j = p;
                for (cj, phj) in model.bodies[j].joint.modes().modes().iter().enumerate() {
                    let v = phj.dot(&f);
                    h[(off[j] + cj, col)] = v;
                    h[(col, off[j] + cj)] = v;
                }
            }
        }
    }
    Ok(h)
}

/// Random state: positions uniform in `[-π, π]` for rotational modes and
/// `[-1, 1]` for translational ones; rates standard normal.
pub fn random_state(model: &Model, rng: &mut impl Rng) -> State {
    let n = model.dof();
    let mut q = Vec::with_capacity(n);
    for b in &model.bodies {
        for phi in b.joint.modes().modes() {
            let rotational = phi.fixed_rows::<3>(0).norm() > 1e-12;
            q.push(if rotational {
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
            } else {
                rng.random_range(-1.0..1.0)
            });
        }
    }
    let mut normal = || -> f64 { StandardNormal.sample(rng) };
    let qd = (0..n).map(|_| normal()).collect();
    let qdd = (0..n).map(|_| normal()).collect();
    State { q, qd, qdd }
}

/// Deterministic generator for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Rows contributed by one sample in the given mode.
pub fn sample_rows(model: &Model, mode: SampleMode, seed: u64, index: u64) -> DMatrix<f64> {
    let mut rng = sample_rng(seed, index);
    let mut s = random_state(model, &mut rng);
    if mode == SampleMode::Static {
        s.qd.iter_mut().for_each(|x| *x = 0.0);
        s.qdd.iter_mut().for_each(|x| *x = 0.0);
    }
    let k = kinematics(model, &s);
    match mode {
        SampleMode::Torque | SampleMode::Static => regressor_from(model, &k, &s),
        SampleMode::Energy => energy_rows_from(model, &k),
    }
}

/// Sampled estimate of the unidentifiable subspace.
#[derive(Clone, Debug)]
pub struct EmpiricalNullspace {
    /// Orthonormal basis (columns).
    pub basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub nullity: usize,
}

/// Triangular factor of a block of stacked rows; the row space is kept.
fn compress(m: DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() <= m.ncols() {
        return m;
    }
    m.qr().r()
}

/// Stacks rows from `n_samples` random states and returns the right singular
/// vectors with `σ ≤ 1e-8 σ_max`. The result does not depend on how many
/// worker threads are used.
pub fn empirical_nullspace(
    model: &Model,
    n_samples: usize,
    seed: u64,
    mode: SampleMode,
    policy: ExecPolicy,
) -> Result<EmpiricalNullspace> {
    let p = model.param_count();
    let rows_per = match mode {
        SampleMode::Energy => 2,
        _ => model.dof(),
    };
    if n_samples * rows_per < p || n_samples < 10 * model.len() {
        return Err(Error::Model(format!(
            "{n_samples} samples are too few for {p} parameters (need at least {})",
            (10 * model.len()).max(p.div_ceil(rows_per))
        )));
    }
    let chunks = n_samples.div_ceil(CHUNK);
    let factors = crate::par::map_indexed(chunks, policy == ExecPolicy::Parallel, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n_samples);
        let blocks: Vec<DMatrix<f64>> = (lo..hi)
            .map(|s| sample_rows(model, mode, seed, s as u64))
            .collect();
        let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
        compress(vstack(&refs, p))
    });
    let refs: Vec<&DMatrix<f64>> = factors.iter().collect();
    let stacked = compress(vstack(&refs, p));
    let sv = singular_values(&stacked);
    let basis = null_space(&stacked, NULLITY_RTOL);
    let nullity = basis.ncols();
    Ok(EmpiricalNullspace {
        basis,
        singular_values: sv,
        rank: p - nullity,
        nullity,
    })
}

/// Largest principal angle between two subspaces given by orthonormal bases.
pub fn compare_subspaces(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> Result<f64> {
    if b1.nrows() != b2.nrows() || b1.ncols() != b2.ncols() {
        return Err(Error::Structure(format!(
            "cannot compare a {}x{} basis with a {}x{} basis",
            b1.nrows(),
            b1.ncols(),
            b2.nrows(),
            b2.ncols()
        )));
    }
    Ok(max_principal_angle(b1, b2))
}

/// How well a structural basis matches the sampled one.
#[derive(Clone, Debug)]
pub struct Agreement {
    pub structural_nullity: usize,
    pub sampled_nullity: usize,
    /// Largest principal angle. It is π/2 when the dimensions differ.
    pub angle: f64,
    /// Unit direction of one subspace that is farthest from the other.
    pub worst: DVector<f64>,
    /// Whether `worst` was taken from the structural basis.
    pub worst_is_structural: bool,
}

impl Agreement {
    pub fn passes(&self, tol: f64) -> bool {
        self.structural_nullity == self.sampled_nullity && self.angle < tol
    }
}

/// Distance of the farthest unit vector of `Range(a)` from `Range(b)`,
/// both orthonormal.
fn farthest(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let resid = a - b * (b.transpose() * a);
    match top_right_singular(&resid) {
        Some((s, w)) => (s.min(1.0), a * w),
        None => (0.0, DVector::zeros(a.nrows())),
    }
}

/// Compares orthonormal bases of the structural and sampled nullspaces.
pub fn agreement(structural: &DMatrix<f64>, sampled: &DMatrix<f64>) -> Agreement {
    let (gs, ws) = farthest(structural, sampled);
    let (ge, we) = farthest(sampled, structural);
    let (gap, worst, worst_is_structural) = if gs >= ge {
        (gs, ws, true)
    } else {
        (ge, we, false)
    };
    Agreement {
        structural_nullity: structural.ncols(),
        sampled_nullity: sampled.ncols(),
        angle: gap.asin(),
        worst,
        worst_is_structural,
    }
}

/// Options for [`random_model`].
#[derive(Clone, Copy, Debug)]
pub struct RandomModelSpec {
    pub max_bodies: usize,
    pub gravity: bool,
    pub rotors: bool,
    pub floating: bool,
}

fn random_axis(rng: &mut impl Rng) -> nalgebra::Vector3<f64> {
    if rng.random_bool(0.6) {
        let mut a = nalgebra::Vector3::zeros();
        a[rng.random_range(0..3)] = 1.0;
        a
    } else {
        let v: Vec<f64> = (0..3).map(|_| StandardNormal.sample(rng)).collect();
        nalgebra::Vector3::new(v[0], v[1], v[2]).normalize()
    }
}

fn random_pose(rng: &mut impl Rng) -> SpatialTransform {
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut rpy = [0.0; 3];
    let mut xyz = [0.0; 3];
    let aligned = rng.random_bool(0.6);
    for k in 0..3 {
        rpy[k] = if aligned {
            quarter * rng.random_range(-1i32..=2) as f64
        } else {
            rng.random_range(-3.0..3.0)
        };
        if rng.random_bool(0.7) {
            xyz[k] = rng.random_range(-0.5..0.5);
        }
    }
    SpatialTransform::from_rpy_xyz(rpy, xyz)
}

fn random_params(rng: &mut impl Rng) -> InertiaParams {
    let m = rng.random_range(0.5..5.0);
    let c = nalgebra::Vector3::new(
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
    );
    let d = nalgebra::Vector3::new(
        rng.random_range(0.01..0.1),
        rng.random_range(0.01..0.1),
        rng.random_range(0.01..0.1),
    );
    InertiaParams::from_mass_com_inertia(m, c, nalgebra::Matrix3::from_diagonal(&d))
}

fn random_joint(rng: &mut impl Rng) -> Joint {
    let z = nalgebra::Vector3::zeros();
    let (x, y, zz) = (
        nalgebra::Vector3::x(),
        nalgebra::Vector3::y(),
        nalgebra::Vector3::z(),
    );
    match rng.random_range(0..10) {
        0..=4 => Joint::revolute(random_axis(rng)).unwrap(),
        5 | 6 => Joint::prismatic(random_axis(rng)).unwrap(),
        7 => Joint::screw(random_axis(rng), rng.random_range(-0.3..0.3)).unwrap(),
        8 => match rng.random_range(0..3) {
            0 => Joint::spherical(),
            1 => Joint::multi(vec![motion(z, x), motion(z, y), motion(zz, z)]).unwrap(),
            _ => Joint::multi(vec![motion(zz, z), motion(z, zz)]).unwrap(),
        },
        _ => Joint::revolute(random_axis(rng)).unwrap(),
    }
}

/// Random kinematic tree with up to `max_bodies` bodies, mixing revolute,
/// prismatic, screw and multi-DoF joints.
pub fn random_model(rng: &mut impl Rng, spec: &RandomModelSpec) -> Model {
    let n = rng.random_range(1..=spec.max_bodies.max(1));
    let mut bodies = Vec::with_capacity(n + 1);
    if spec.floating {
        bodies.push(Body {
            name: "trunk".into(),
            parent: None,
            xtree: SpatialTransform::identity(),
            joint: Joint::floating(),
            params: Some(random_params(rng)),
            rotor: None,
        });
    }
    let first = bodies.len();
    let total = if spec.floating { n.max(2) } else { n };
    for i in first..total {
        let joint = random_joint(rng);
        let parent = if i == 0 {
            None
        } else {
            Some(rng.random_range(0..i))
        };
        let xtree = random_pose(rng);
        let rotor = if spec.rotors && joint.dof() == 1 && rng.random_bool(0.5) {
            let gear = if rng.random_bool(0.3) {
                1.0
            } else {
                rng.random_range(2.0..50.0)
            };
            // coaxial with the joint half of the time
            let (placement, axis) = match joint.axis() {
                Some(a) if rng.random_bool(0.5) => (xtree, a),
                _ => (random_pose(rng), random_axis(rng)),
            };
            let mut r = Rotor::new(gear, placement, axis).unwrap();
            r.inertia = Some(rng.random_range(1e-4..1e-2));
            Some(r)
        } else {
            None
        };
        bodies.push(Body {
            name: format!("b{}", i + 1),
            parent,
            xtree,
            joint,
            params: Some(random_params(rng)),
            rotor,
        });
    }
    let gravity = if spec.gravity {
        let v: Vec<f64> = (0..3).map(|_| StandardNormal.sample(rng)).collect();
        nalgebra::Vector3::new(v[0], v[1], v[2]).normalize() * 9.81
    } else {
        nalgebra::Vector3::zeros()
    };
    let base = if spec.floating {
        BaseKind::Floating
    } else {
        BaseKind::Fixed
    };
    Model::new("random", base, gravity, bodies).expect("generated trees are valid")
}

/// Largest relative residual `‖Y δπ‖ / (‖Y‖ ‖δπ‖)` over the columns of
/// `basis` at `n_states` random states.
pub fn certify_columns(model: &Model, basis: &DMatrix<f64>, n_states: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for s in 0..n_states {
        let mut rng = sample_rng(seed, s as u64);
        let st = random_state(model, &mut rng);
        let y = regressor(model, &st).expect("state matches model");
        let ynorm = singular_values(&y).first().copied().unwrap_or(0.0);
        if ynorm == 0.0 {
            continue;
        }
        for c in 0..basis.ncols() {
            let col = basis.column(c);
            let r = (&y * col).norm() / (ynorm * col.norm());
            worst = worst.max(r);
        }
    }
    worst
}
