//! 6D spatial vector algebra and the linear operators it induces on the
//! 10-dimensional inertial-parameter space.
//!
//! Conventions:
//! - motion vectors are `[ω; v]` (angular first, then the linear velocity of
//!   the frame origin);
//! - a [`SpatialTransform`] from frame `a` to frame `b` stores the rotation
//!   `E` taking `a` coordinates to `b` coordinates and the position `p` of the
//!   origin of `b` expressed in `a`, so that its 6×6 form is
//!   `[[E, 0], [-E S(p), E]]`;
//! - inertial parameters are ordered `[m, h_x, h_y, h_z, I_xx, I_xy, I_xz,
//!   I_yy, I_yz, I_zz]`, with `h = m c` and the rotational block taken about
//!   the frame origin.

use nalgebra::{DMatrix, Matrix3, Matrix6, Rotation3, SMatrix, SVector, Unit, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type MotionVector = Vector6<f64>;
pub type ParamVector = SVector<f64, 10>;
pub type ParamMatrix = SMatrix<f64, 10, 10>;

/// Parameter slots in the fixed ordering.
pub mod idx {
    pub const M: usize = 0;
    pub const HX: usize = 1;
    pub const HY: usize = 2;
    pub const HZ: usize = 3;
    pub const IXX: usize = 4;
    pub const IXY: usize = 5;
    pub const IXZ: usize = 6;
    pub const IYY: usize = 7;
    pub const IYZ: usize = 8;
    pub const IZZ: usize = 9;
}

/// Display names, in parameter order.
pub const PARAM_NAMES: [&str; 10] = [
    "m", "h_x", "h_y", "h_z", "I_xx", "I_xy", "I_xz", "I_yy", "I_yz", "I_zz",
];

/// Tolerance for structural checks on 6×6 inertias and rotations.
pub const STRUCTURE_TOL: f64 = 1e-9;

/// 3×3 cross-product matrix: `skew(a) * b == a.cross(&b)`.
#[inline]
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

#[inline]
pub fn angular(v: &MotionVector) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

#[inline]
pub fn linear(v: &MotionVector) -> Vector3<f64> {
    Vector3::new(v[3], v[4], v[5])
}

#[inline]
pub fn motion(ang: Vector3<f64>, lin: Vector3<f64>) -> MotionVector {
    Vector6::new(ang.x, ang.y, ang.z, lin.x, lin.y, lin.z)
}

/// Spatial cross product matrix `(v×) = [[S(ω), 0], [S(v), S(ω)]]`.
pub fn cross_motion(v: &MotionVector) -> Matrix6<f64> {
    let sw = skew(&angular(v));
    let sv = skew(&linear(v));
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&sw);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&sv);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&sw);
    m
}

/// Dual cross product for force vectors, `(v×*) = -(v×)ᵀ`.
pub fn cross_force(v: &MotionVector) -> Matrix6<f64> {
    -cross_motion(v).transpose()
}

/// Plücker transform for motion vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialTransform {
    rot: Matrix3<f64>,
    trans: Vector3<f64>,
}

impl Default for SpatialTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SpatialTransform {
    pub fn identity() -> Self {
        Self {
            rot: Matrix3::identity(),
            trans: Vector3::zeros(),
        }
    }

    /// Builds a transform, checking that `rot` is a proper rotation.
    pub fn new(rot: Matrix3<f64>, trans: Vector3<f64>) -> Result<Self> {
        let orth = (rot * rot.transpose() - Matrix3::identity()).amax();
        if orth > STRUCTURE_TOL || (rot.determinant() - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::Structure(format!(
                "rotation is not orthonormal with det +1 (deviation {orth:.3e})"
            )));
        }
        Ok(Self { rot, trans })
    }

    pub(crate) fn new_unchecked(rot: Matrix3<f64>, trans: Vector3<f64>) -> Self {
        Self { rot, trans }
    }

    pub fn translation(p: Vector3<f64>) -> Self {
        Self {
            rot: Matrix3::identity(),
            trans: p,
        }
    }

    /// Child frame placed at `xyz` in the parent with orientation given by
    /// fixed-axis roll/pitch/yaw (`R = Rz(yaw) Ry(pitch) Rx(roll)`, columns
    /// are the child axes in parent coordinates).
    pub fn from_rpy_xyz(rpy: [f64; 3], xyz: [f64; 3]) -> Self {
        let r = Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]);
        Self {
            rot: r.matrix().transpose(),
            trans: Vector3::from(xyz),
        }
    }

    /// Inverse of [`from_rpy_xyz`](Self::from_rpy_xyz).
    pub fn to_rpy_xyz(&self) -> ([f64; 3], [f64; 3]) {
        let r = Rotation3::from_matrix_unchecked(self.rot.transpose());
        let (roll, pitch, yaw) = r.euler_angles();
        (
            [roll, pitch, yaw],
            [self.trans.x, self.trans.y, self.trans.z],
        )
    }

    /// Rotation taking parent coordinates to child coordinates.
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rot
    }

    /// Origin of the child frame in parent coordinates.
    pub fn position(&self) -> &Vector3<f64> {
        &self.trans
    }

    pub fn matrix(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rot);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rot);
        m.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(-self.rot * skew(&self.trans)));
        m
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &SpatialTransform) -> SpatialTransform {
        SpatialTransform {
            rot: self.rot * other.rot,
            trans: other.trans + other.rot.transpose() * self.trans,
        }
    }

    pub fn inverse(&self) -> SpatialTransform {
        SpatialTransform {
            rot: self.rot.transpose(),
            trans: -(self.rot * self.trans),
        }
    }

    pub fn apply(&self, v: &MotionVector) -> MotionVector {
        let w = angular(v);
        let lin = linear(v);
        motion(self.rot * w, self.rot * (lin - self.trans.cross(&w)))
    }

    /// `Xᵀ f` for a force vector `f = [n; f]` expressed in the child frame.
    pub fn apply_transpose(&self, f: &MotionVector) -> MotionVector {
        let et = self.rot.transpose();
        let n = et * angular(f);
        let lin = et * linear(f);
        motion(n + self.trans.cross(&lin), lin)
    }
}

impl std::ops::Mul for SpatialTransform {
    type Output = SpatialTransform;
    fn mul(self, rhs: SpatialTransform) -> SpatialTransform {
        self.compose(&rhs)
    }
}

/// The 10 inertial parameters of one body.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 10]", into = "[f64; 10]")]
pub struct InertiaParams(pub ParamVector);

impl From<[f64; 10]> for InertiaParams {
    fn from(a: [f64; 10]) -> Self {
        InertiaParams(ParamVector::from(a))
    }
}

impl From<InertiaParams> for [f64; 10] {
    fn from(p: InertiaParams) -> Self {
        p.0.into()
    }
}

impl InertiaParams {
    pub fn zeros() -> Self {
        InertiaParams(ParamVector::zeros())
    }

    pub fn mass(&self) -> f64 {
        self.0[idx::M]
    }

    /// Parameters of a body of mass `m` with CoM at `com` and rotational
    /// inertia `inertia_com` about the CoM (all in body coordinates).
    pub fn from_mass_com_inertia(m: f64, com: Vector3<f64>, inertia_com: Matrix3<f64>) -> Self {
        let ibar = inertia_com + m * skew(&com) * skew(&com).transpose();
        let h = m * com;
        InertiaParams(ParamVector::from([
            m,
            h.x,
            h.y,
            h.z,
            ibar[(0, 0)],
            ibar[(0, 1)],
            ibar[(0, 2)],
            ibar[(1, 1)],
            ibar[(1, 2)],
            ibar[(2, 2)],
        ]))
    }
}

/// 6×6 spatial inertia `[[Ī, S(h)], [S(h)ᵀ, m 1]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialInertia(pub Matrix6<f64>);

/// Promote a parameter vector to its spatial inertia.
pub fn wedge(p: &ParamVector) -> Matrix6<f64> {
    let ibar = Matrix3::new(
        p[idx::IXX],
        p[idx::IXY],
        p[idx::IXZ],
        p[idx::IXY],
        p[idx::IYY],
        p[idx::IYZ],
        p[idx::IXZ],
        p[idx::IYZ],
        p[idx::IZZ],
    );
    let sh = skew(&Vector3::new(p[idx::HX], p[idx::HY], p[idx::HZ]));
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&ibar);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&sh);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&sh.transpose());
    out.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * p[idx::M]));
    out
}

impl InertiaParams {
    pub fn wedge(&self) -> SpatialInertia {
        SpatialInertia(wedge(&self.0))
    }
}

/// Demote a spatial inertia to parameters without structural checks
/// (symmetric parts are averaged).
pub fn vee_unchecked(i: &Matrix6<f64>) -> ParamVector {
    let m = (i[(3, 3)] + i[(4, 4)] + i[(5, 5)]) / 3.0;
    // S(h) sits in the upper-right block; its transpose in the lower-left.
    let hx = 0.5 * (i[(2, 4)] - i[(1, 5)]);
    let hy = 0.5 * (i[(0, 5)] - i[(2, 3)]);
    let hz = 0.5 * (i[(1, 3)] - i[(0, 4)]);
    let hx = 0.5 * (hx + 0.5 * (i[(4, 2)] - i[(5, 1)]));
    let hy = 0.5 * (hy + 0.5 * (i[(5, 0)] - i[(3, 2)]));
    let hz = 0.5 * (hz + 0.5 * (i[(3, 1)] - i[(4, 0)]));
    ParamVector::from([
        m,
        hx,
        hy,
        hz,
        i[(0, 0)],
        0.5 * (i[(0, 1)] + i[(1, 0)]),
        0.5 * (i[(0, 2)] + i[(2, 0)]),
        i[(1, 1)],
        0.5 * (i[(1, 2)] + i[(2, 1)]),
        i[(2, 2)],
    ])
}

/// Demote a spatial inertia to parameters, rejecting matrices that do not
/// have spatial-inertia structure.
pub fn vee(i: &Matrix6<f64>) -> Result<ParamVector> {
    let p = vee_unchecked(i);
    let scale = i.amax();
    if scale == 0.0 {
        return Ok(p);
    }
    let dev = (wedge(&p) - i).amax() / scale;
    if dev > STRUCTURE_TOL {
        return Err(Error::Structure(format!(
            "matrix is not a spatial inertia (relative deviation {dev:.3e})"
        )));
    }
    Ok(p)
}

impl SpatialInertia {
    pub fn vee(&self) -> Result<InertiaParams> {
        vee(&self.0).map(InertiaParams)
    }
}

/// `k(v)` such that `vᵀ wedge(π) v == k(v)ᵀ π`.
pub fn energy_descriptor(v: &MotionVector) -> ParamVector {
    let w = angular(v);
    let lin = linear(v);
    let c = lin.cross(&w) * 2.0;
    ParamVector::from([
        lin.norm_squared(),
        c.x,
        c.y,
        c.z,
        w.x * w.x,
        2.0 * w.x * w.y,
        2.0 * w.x * w.z,
        w.y * w.y,
        2.0 * w.y * w.z,
        w.z * w.z,
    ])
}

fn unit_param(j: usize) -> ParamVector {
    let mut e = ParamVector::zeros();
    e[j] = 1.0;
    e
}

fn linear_map(f: impl Fn(&Matrix6<f64>) -> Matrix6<f64>) -> ParamMatrix {
    let mut out = ParamMatrix::zeros();
    for j in 0..10 {
        let col = vee_unchecked(&f(&wedge(&unit_param(j))));
        out.set_column(j, &col);
    }
    out
}

/// `B(X)` with `wedge(B(X) π) == Xᵀ wedge(π) X`: re-expresses a child's
/// parameters in the frame that `X` maps from.
pub fn param_transform(x: &SpatialTransform) -> ParamMatrix {
    let xm = x.matrix();
    let xt = xm.transpose();
    linear_map(|i| xt * i * xm)
}

/// `A(φ)` with `wedge(A(φ) π) == (φ×)ᵀ wedge(π) + wedge(π) (φ×)`.
pub fn param_rate(phi: &MotionVector) -> ParamMatrix {
    let c = cross_motion(phi);
    let ct = c.transpose();
    linear_map(|i| ct * i + i * c)
}

/// Output matrix of the bilinear map `δπ ↦ Vᵀ wedge(δπ) Φ`, one row per
/// (column of `V`, column of `Φ`) pair with the `Φ` index varying fastest.
pub fn momentum_output(v: &DMatrix<f64>, phi: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(v.nrows(), 6);
    assert_eq!(phi.nrows(), 6);
    let basis: Vec<Matrix6<f64>> = (0..10).map(|j| wedge(&unit_param(j))).collect();
    let mut out = DMatrix::zeros(v.ncols() * phi.ncols(), 10);
    for a in 0..v.ncols() {
        let va = MotionVector::from_iterator(v.column(a).iter().copied());
        for b in 0..phi.ncols() {
            let pb = MotionVector::from_iterator(phi.column(b).iter().copied());
            let row = a * phi.ncols() + b;
            for (j, ij) in basis.iter().enumerate() {
                out[(row, j)] = va.dot(&(ij * pb));
            }
        }
    }
    out
}

/// `X(q) = exp(-q (φ×))`, the coordinate transform across a joint moved by
/// `q` along free mode `φ`. Closed form for rotations, translations and
/// screws about an axis through `ω × v / |ω|²`.
pub fn joint_transform(q: f64, phi: &MotionVector) -> SpatialTransform {
    let w = angular(phi);
    let v = linear(phi);
    let wn = w.norm();
    if wn < 1e-12 {
        return SpatialTransform::translation(v * q);
    }
    let u = Unit::new_unchecked(w / wn);
    let r = Rotation3::from_axis_angle(&u, q * wn).into_inner();
    let axis_point = w.cross(&v) / (wn * wn);
    let along = u.into_inner() * (q * u.dot(&v));
    let p = (Matrix3::identity() - r) * axis_point + along;
    SpatialTransform::new_unchecked(r.transpose(), p)
}

/// Free modes of a joint, `Φ` with linearly independent columns.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionSubspace {
    modes: Vec<MotionVector>,
}

impl MotionSubspace {
    pub fn new(modes: Vec<MotionVector>) -> Result<Self> {
        if modes.is_empty() || modes.len() > 6 {
            return Err(Error::Structure(format!(
                "a joint needs between 1 and 6 free modes, got {}",
                modes.len()
            )));
        }
        let s = Self { modes };
        if crate::linalg::rank(&s.matrix(), 1e-9) != s.modes.len() {
            return Err(Error::Structure(
                "joint free modes are linearly dependent".into(),
            ));
        }
        Ok(s)
    }

    pub fn single(phi: MotionVector) -> Result<Self> {
        Self::new(vec![phi])
    }

    pub fn modes(&self) -> &[MotionVector] {
        &self.modes
    }

    pub fn dof(&self) -> usize {
        self.modes.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(6, self.modes.len());
        for (j, phi) in self.modes.iter().enumerate() {
            m.set_column(j, phi);
        }
        m
    }
}
