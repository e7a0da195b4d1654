//! Per-joint recursion computing velocity spans, kinetic-energy descriptors
//! and the local transfer nullspaces of a kinematic tree.

use nalgebra::{DMatrix, Matrix6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hstack, null_space, orth_columns, orth_rows, rank, vstack, PRUNE_RTOL};
use crate::model::Model;
use crate::spatial::{
    cross_motion, momentum_output, param_rate, param_transform, MotionVector, ParamMatrix,
};

/// Number of `(Φ×)` powers beyond the identity used by [`ctrb`].
pub const CTRB_POWERS: usize = 5;
/// Number of `A` powers beyond the identity used by [`obs`].
pub const OBS_POWERS: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpnaOptions {
    /// Seed the base velocity span with the gravity acceleration.
    pub gravity: bool,
    /// Only static (gravity) experiments: joint velocities are not attainable.
    pub static_only: bool,
    /// Analyze geared rotors and give each one a parameter.
    pub include_rotors: bool,
}

impl Default for RpnaOptions {
    fn default() -> Self {
        Self {
            gravity: true,
            static_only: false,
            include_rotors: true,
        }
    }
}

impl RpnaOptions {
    pub fn validate(&self) -> Result<()> {
        if self.static_only && !self.gravity {
            return Err(Error::Model("a static analysis requires gravity".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct JointAnalysis {
    pub body: usize,
    /// Orthonormal basis of the velocity span (6 × dim V).
    pub v: DMatrix<f64>,
    /// Kinetic-energy descriptor rows (dim K × 10).
    pub c: DMatrix<f64>,
    /// Observability rows from the parent's descriptor.
    pub o: DMatrix<f64>,
    /// Local nullspace descriptor over the body's own parameters.
    pub n: DMatrix<f64>,
    pub transfer_dim: usize,
    pub rotor: Option<RotorAnalysis>,
}

impl JointAnalysis {
    pub fn dim_v(&self) -> usize {
        self.v.ncols()
    }

    pub fn dim_k(&self) -> usize {
        self.c.nrows()
    }

    /// Rows of the local descriptor over `(δπ_i, δJ)` when the body has an
    /// analyzed rotor, otherwise over `δπ_i`.
    pub fn local_descriptor(&self) -> &DMatrix<f64> {
        match &self.rotor {
            Some(r) => &r.n_aug,
            None => &self.n,
        }
    }

    /// Basis of the local transfer nullspace (10 or 11 rows).
    pub fn local_null(&self) -> DMatrix<f64> {
        let d = self.local_descriptor();
        null_space(d, PRUNE_RTOL)
    }

    pub fn rotor_identifiable(&self) -> Option<bool> {
        self.rotor.as_ref().map(|r| r.identifiable)
    }
}

#[derive(Clone, Debug)]
pub struct RotorAnalysis {
    /// Augmented descriptor over `(δπ_i, δJ_m)`.
    pub n_aug: DMatrix<f64>,
    pub identifiable: bool,
}

pub(crate) fn dyn6(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

pub(crate) fn dyn10(m: &ParamMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(10, 10, m.as_slice())
}

/// Smallest `(φ×)`-invariant subspace containing the columns of `v`.
pub fn ctrb(phi: &MotionVector, v: &DMatrix<f64>) -> DMatrix<f64> {
    let c = dyn6(&cross_motion(phi));
    let mut basis = orth_columns(v, PRUNE_RTOL);
    for _ in 0..CTRB_POWERS {
        let next = &c * &basis;
        basis = orth_columns(&hstack(&[&basis, &next], 6), PRUNE_RTOL);
    }
    basis
}

/// Smallest subspace containing `v` and invariant under every `(φ_k×)`.
pub fn switched_ctrb(modes: &[MotionVector], v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut basis = orth_columns(v, PRUNE_RTOL);
    for _ in 0..=6 {
        let before = basis.ncols();
        for phi in modes {
            basis = ctrb(phi, &basis);
        }
        if basis.ncols() == before {
            break;
        }
    }
    basis
}

/// Row space of `[Cin; Cin A; …; Cin A⁹]`.
pub fn obs(cin: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut rows = orth_rows(cin, PRUNE_RTOL);
    for _ in 0..OBS_POWERS {
        let next = &rows * a;
        rows = orth_rows(&vstack(&[&rows, &next], cin.ncols()), PRUNE_RTOL);
    }
    rows
}

/// Row space closure of `cin` under right-multiplication by every `A(φ_k)`.
pub fn switched_obs(cin: &DMatrix<f64>, modes: &[MotionVector]) -> DMatrix<f64> {
    let rates: Vec<DMatrix<f64>> = modes.iter().map(|m| dyn10(&param_rate(m))).collect();
    let mut rows = orth_rows(cin, PRUNE_RTOL);
    for _ in 0..=10 {
        let before = rows.nrows();
        for a in &rates {
            rows = obs(&rows, a);
        }
        if rows.nrows() == before {
            break;
        }
    }
    rows
}

fn gravity_seed(model: &Model, opts: &RpnaOptions) -> DMatrix<f64> {
    let g = model.gravity_motion();
    if opts.gravity && g.norm() > 0.0 {
        DMatrix::from_column_slice(6, 1, g.as_slice())
    } else {
        DMatrix::zeros(6, 0)
    }
}

/// Runs the recursion over all bodies in order.
pub fn run(model: &Model, opts: &RpnaOptions) -> Result<Vec<JointAnalysis>> {
    opts.validate()?;
    let seed = gravity_seed(model, opts);
    let empty_c = DMatrix::zeros(0, 10);
    let mut out: Vec<JointAnalysis> = Vec::with_capacity(model.len());
    for (i, body) in model.bodies.iter().enumerate() {
        let modes = body.joint.modes().modes();
        let phi = body.joint.modes().matrix();
        let (vp, cp) = match body.parent {
            None => (&seed, &empty_c),
            Some(p) => (&out[p].v, &out[p].c),
        };
        let vin = dyn6(&body.xtree.matrix()) * vp;
        let closed = switched_ctrb(modes, &vin);
        let v = if opts.static_only {
            closed
        } else {
            orth_columns(&hstack(&[&closed, &phi], 6), PRUNE_RTOL)
        };
        let bx = dyn10(&param_transform(&body.xtree));
        let o = switched_obs(&(cp * &bx), modes);
        let mom = momentum_output(&v, &phi);
        let mut blocks = vec![mom.clone()];
        for m in modes {
            blocks.push(&o * dyn10(&param_rate(m)));
        }
        let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
        let n = orth_rows(&vstack(&refs, 10), PRUNE_RTOL);
        let c = orth_rows(&vstack(&[&mom, &o], 10), PRUNE_RTOL);
        let transfer_dim = 10 - n.nrows();
        let rotor = match &body.rotor {
            Some(_) if opts.include_rotors => Some(analyze_rotor(model, i, &vin, &o, opts)?),
            _ => None,
        };
        out.push(JointAnalysis {
            body: i,
            v,
            c,
            o,
            n,
            transfer_dim,
            rotor,
        });
    }
    Ok(out)
}

/// Builds the joint-local system over `(δπ_i, δJ_m)` for the rotor driving
/// joint `i` and decides whether `δJ_m` is constrained out of its nullspace.
///
/// `vin` is the parent's velocity span in joint coordinates and `o` the
/// observability rows of the joint.
pub fn analyze_rotor(
    model: &Model,
    i: usize,
    vin: &DMatrix<f64>,
    o: &DMatrix<f64>,
    opts: &RpnaOptions,
) -> Result<RotorAnalysis> {
    let body = &model.bodies[i];
    let rotor = body
        .rotor
        .as_ref()
        .ok_or_else(|| Error::Model(format!("body '{}' has no rotor", body.name)))?;
    if !rotor.symmetric {
        return Err(Error::Unsupported(format!(
            "rotor of body '{}' is not rotationally symmetric",
            body.name
        )));
    }
    if body.joint.dof() != 1 {
        return Err(Error::Unsupported(format!(
            "rotor of body '{}' drives a multi-DoF joint",
            body.name
        )));
    }
    let phi_vec = body.joint.modes().modes()[0];
    let phi = body.joint.modes().matrix();
    let n_r = rotor.gear_ratio;
    // Joint frame to rotor frame.
    let x_mj = dyn6(&(rotor.placement * body.xtree.inverse()).matrix());
    let phi_m = DMatrix::from_column_slice(1, 6, rotor.mode().as_slice());

    let w0 = orth_columns(vin, PRUNE_RTOL);
    let cross = dyn6(&cross_motion(&phi_vec));
    let mut rows: Vec<DMatrix<f64>> = Vec::new();
    // Cross terms with the incoming velocity: the rotor contributes only at
    // zeroth order in the joint displacement.
    let body0 = momentum_output(&w0, &phi);
    let rot0 = (&phi_m * &x_mj * &w0).transpose() * n_r;
    rows.push(hstack(&[&body0, &rot0], w0.ncols()));
    let mut wk = w0.clone();
    for _ in 0..CTRB_POWERS {
        wk = &cross * &wk;
        let bk = momentum_output(&wk, &phi);
        rows.push(hstack(&[&bk, &DMatrix::zeros(bk.nrows(), 1)], bk.nrows()));
    }
    if !opts.static_only {
        let bt = momentum_output(&phi, &phi);
        rows.push(hstack(&[&bt, &DMatrix::from_element(1, 1, n_r * n_r)], 1));
    }
    let oa = o * dyn10(&param_rate(&phi_vec));
    rows.push(hstack(&[&oa, &DMatrix::zeros(oa.nrows(), 1)], oa.nrows()));
    let refs: Vec<&DMatrix<f64>> = rows.iter().collect();
    let raw = vstack(&refs, 11);
    let n_aug = orth_rows(&raw, PRUNE_RTOL);
    let body_rank = rank(&raw.columns(0, 10).into_owned(), PRUNE_RTOL);
    let identifiable = n_aug.nrows() == body_rank + 1;
    Ok(RotorAnalysis {
        n_aug,
        identifiable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin;
    use crate::spatial::joint_transform;
    use nalgebra::Vector6;

    fn col(v: [f64; 6]) -> DMatrix<f64> {
        DMatrix::from_column_slice(6, 1, &v)
    }

    #[test]
    fn ctrb_of_empty_is_empty() {
        let z = Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        assert_eq!(ctrb(&z, &DMatrix::zeros(6, 1)).ncols(), 0);
        assert_eq!(ctrb(&z, &DMatrix::zeros(6, 0)).ncols(), 0);
    }

    #[test]
    fn ctrb_rotation_mixes_x_and_y() {
        let z = Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        let v = col([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let c = ctrb(&z, &v);
        assert_eq!(c.ncols(), 2);
        // sampled transforms of the seed span the same plane
        let mut samples = DMatrix::zeros(6, 50);
        for k in 0..50 {
            let q = -3.0 + 0.12 * k as f64;
            samples.set_column(
                k,
                &joint_transform(q, &z).apply(&Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)),
            );
        }
        assert_eq!(rank(&samples, 1e-10), 2);
        assert_eq!(rank(&hstack(&[&samples, &c], 6), 1e-10), 2);
    }

    #[test]
    fn planar_second_body_span() {
        // rr_parallel, gravity off: body 2 has ω_z plus two in-plane velocities
        let m = builtin("rr_parallel").unwrap();
        let a = run(
            &m,
            &RpnaOptions {
                gravity: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a[0].dim_v(), 1);
        assert_eq!(a[1].dim_v(), 3);
    }

    #[test]
    fn floating_joint_spans_everything() {
        let modes: Vec<_> = (0..6)
            .map(|k| {
                let mut v = Vector6::zeros();
                v[k] = 1.0;
                v
            })
            .collect();
        let g = col([0.0, 0.0, 0.0, 0.0, 0.0, -9.81]);
        // rotations sweep gravity over all linear directions; nothing angular
        let c = switched_ctrb(&modes, &g);
        assert_eq!(c.ncols(), 3);
        assert!(c.rows(0, 3).amax() < 1e-12);
        let m = builtin("cheetah3_leg_floating").unwrap();
        let a = run(&m, &RpnaOptions::default()).unwrap();
        assert_eq!(a[0].dim_v(), 6);
    }

    #[test]
    fn obs_of_empty() {
        let a = dyn10(&param_rate(&Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0)));
        assert_eq!(obs(&DMatrix::zeros(0, 10), &a).nrows(), 0);
        assert_eq!(switched_obs(&DMatrix::zeros(0, 10), &[]).nrows(), 0);
    }

    #[test]
    fn two_link_transfer_dims() {
        let opts = RpnaOptions {
            gravity: false,
            ..Default::default()
        };
        let par = run(&builtin("rr_parallel").unwrap(), &opts).unwrap();
        assert_eq!(
            par.iter().map(|a| a.transfer_dim).collect::<Vec<_>>(),
            vec![9, 7]
        );
        let perp = run(&builtin("rr_perpendicular").unwrap(), &opts).unwrap();
        assert_eq!(
            perp.iter().map(|a| a.transfer_dim).collect::<Vec<_>>(),
            vec![9, 3]
        );
    }

    #[test]
    fn static_without_gravity_is_rejected() {
        let o = RpnaOptions {
            gravity: false,
            static_only: true,
            include_rotors: false,
        };
        assert!(run(&builtin("scara").unwrap(), &o).is_err());
    }
}
