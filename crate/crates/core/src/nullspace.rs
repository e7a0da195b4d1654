//! System-level bases for the unidentifiable parameter subspace, parameter
//! classification and regrouped base parameters.
//!
//! Global parameter layout: body `i` owns columns `10 i .. 10 i + 10`, and
//! each analyzed rotor owns one extra column after all body columns.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{orth_columns, orth_rows, rank, rref, PRUNE_RTOL};
use crate::model::Model;
use crate::rpna::{dyn10, run, JointAnalysis, RpnaOptions};
use crate::spatial::{param_transform, ParamVector, PARAM_NAMES};

/// Projection-norm threshold for classifying unit parameter directions.
pub const CLASSIFY_TOL: f64 = 1e-8;
/// Coefficients below this are dropped from regroupings.
pub const REGROUP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Identifiable,
    Unidentifiable,
    CombinationOnly,
}

/// Parameter vector of a rotor with unit spin inertia about `axis`.
pub fn rotor_unit_params(axis: &Vector3<f64>) -> ParamVector {
    let a = axis;
    ParamVector::from([
        0.0,
        0.0,
        0.0,
        0.0,
        a.x * a.x,
        a.x * a.y,
        a.x * a.z,
        a.y * a.y,
        a.y * a.z,
        a.z * a.z,
    ])
}

/// A linear combination of parameters that can be identified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regrouping {
    pub pivot: usize,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct SystemNullspace {
    /// Columns span the unidentifiable subspace.
    pub r: DMatrix<f64>,
    /// Descriptor whose nullspace is the unidentifiable subspace.
    pub ndesc: DMatrix<f64>,
    pub nullity: usize,
    pub param_count: usize,
    pub n_bodies: usize,
    /// Bodies whose rotor has a global column, in column order.
    pub rotor_bodies: Vec<usize>,
    pub classes: Vec<Classification>,
    /// RREF pivot columns of the descriptor (a minimal parameter set).
    pub pivots: Vec<usize>,
    pub regroupings: Vec<Regrouping>,
}

fn rotor_columns(model: &Model, analyses: &[JointAnalysis]) -> (Vec<usize>, Vec<Option<usize>>) {
    let mut bodies = Vec::new();
    let mut col = vec![None; model.len()];
    for a in analyses {
        if a.rotor.is_some() {
            col[a.body] = Some(10 * model.len() + bodies.len());
            bodies.push(a.body);
        }
    }
    (bodies, col)
}

/// Basis of the unidentifiable subspace assembled from the local transfer
/// nullspaces: each block moves parameters from a body (and its rotor) to the
/// parent so that the dynamics are unchanged.
pub fn build_r(model: &Model, analyses: &[JointAnalysis]) -> DMatrix<f64> {
    let (rotors, rcol) = rotor_columns(model, analyses);
    let p_total = 10 * model.len() + rotors.len();
    let locals: Vec<DMatrix<f64>> = analyses.iter().map(|a| a.local_null()).collect();
    let width: usize = locals.iter().map(|l| l.ncols()).sum();
    let mut r = DMatrix::zeros(p_total, width);
    let mut c0 = 0;
    for (i, l) in locals.iter().enumerate() {
        let d = l.ncols();
        if d == 0 {
            continue;
        }
        let body = &model.bodies[i];
        let lb = l.rows(0, 10).into_owned();
        r.view_mut((10 * i, c0), (10, d)).copy_from(&lb);
        if let Some(rc) = rcol[i] {
            r.view_mut((rc, c0), (1, d)).copy_from(&l.rows(10, 1));
        }
        if let Some(p) = body.parent {
            let mut moved = -dyn10(&param_transform(&body.xtree)) * &lb;
            if let (Some(_), Some(rotor)) = (rcol[i], &body.rotor) {
                let e = dyn10(&param_transform(&rotor.placement))
                    * DVector::from_column_slice(rotor_unit_params(&rotor.axis).as_slice());
                moved -= &e * l.rows(10, 1);
            }
            r.view_mut((10 * p, c0), (10, d)).copy_from(&moved);
        }
        c0 += d;
    }
    r
}

/// Descriptor with the unidentifiable subspace as its nullspace: the row
/// block of body `k` applies its local descriptor to the composite variation
/// of the subtree rooted at `k`.
pub fn build_ndesc(model: &Model, analyses: &[JointAnalysis]) -> DMatrix<f64> {
    let (rotors, rcol) = rotor_columns(model, analyses);
    let nb = model.len();
    let p_total = 10 * nb + rotors.len();
    let heights: Vec<usize> = analyses
        .iter()
        .map(|a| a.local_descriptor().nrows())
        .collect();
    let mut out = DMatrix::zeros(heights.iter().sum(), p_total);
    let b: Vec<DMatrix<f64>> = model
        .bodies
        .iter()
        .map(|bd| dyn10(&param_transform(&bd.xtree)))
        .collect();
    let mut r0 = 0;
    for (k, a) in analyses.iter().enumerate() {
        let d = a.local_descriptor();
        let h = d.nrows();
        if h == 0 {
            continue;
        }
        let mut m: Vec<Option<DMatrix<f64>>> = vec![None; nb];
        m[k] = Some(d.columns(0, 10).into_owned());
        if let Some(rc) = rcol[k] {
            out.view_mut((r0, rc), (h, 1)).copy_from(&d.column(10));
        }
        for j in model.subtree(k) {
            if j != k {
                let p = model.bodies[j].parent.expect("descendants have parents");
                let mj = m[p].as_ref().unwrap() * &b[j];
                if let (Some(rc), Some(rotor)) = (rcol[j], &model.bodies[j].rotor) {
                    let e = dyn10(&param_transform(&rotor.placement))
                        * DVector::from_column_slice(rotor_unit_params(&rotor.axis).as_slice());
                    let colv = m[p].as_ref().unwrap() * e;
                    out.view_mut((r0, rc), (h, 1)).copy_from(&colv);
                }
                m[j] = Some(mj);
            }
            out.view_mut((r0, 10 * j), (h, 10))
                .copy_from(m[j].as_ref().unwrap());
        }
        r0 += h;
    }
    out
}

pub fn classify(r: &DMatrix<f64>, ndesc: &DMatrix<f64>) -> Vec<Classification> {
    let p = ndesc.ncols();
    let qn = orth_columns(r, PRUNE_RTOL);
    let qperp = orth_rows(ndesc, PRUNE_RTOL);
    (0..p)
        .map(|j| {
            let along_perp = if qperp.nrows() == 0 {
                0.0
            } else {
                qperp.column(j).norm()
            };
            let along_null = if qn.ncols() == 0 {
                0.0
            } else {
                qn.row(j).norm()
            };
            if along_perp < CLASSIFY_TOL {
                Classification::Unidentifiable
            } else if along_null < CLASSIFY_TOL {
                Classification::Identifiable
            } else {
                Classification::CombinationOnly
            }
        })
        .collect()
}

/// Reduced row echelon rows of the descriptor as sparse combinations.
pub fn regroupings(ndesc: &DMatrix<f64>) -> (Vec<usize>, Vec<Regrouping>) {
    let rows = orth_rows(ndesc, PRUNE_RTOL);
    let (e, pivots) = rref(&rows, REGROUP_TOL);
    let mut out = Vec::new();
    for (r, &pc) in pivots.iter().enumerate() {
        let terms: Vec<(usize, f64)> = (0..e.ncols())
            .filter_map(|c| {
                let v = if c == pc { 1.0 } else { e[(r, c)] };
                (v.abs() >= REGROUP_TOL).then_some((c, v))
            })
            .collect();
        if !terms.is_empty() {
            out.push(Regrouping { pivot: pc, terms });
        }
    }
    (pivots, out)
}

impl SystemNullspace {
    pub fn build(model: &Model, analyses: &[JointAnalysis]) -> SystemNullspace {
        let (rotor_bodies, _) = rotor_columns(model, analyses);
        let r = build_r(model, analyses);
        let ndesc = build_ndesc(model, analyses);
        let nullity = rank(&r, PRUNE_RTOL);
        let classes = classify(&r, &ndesc);
        let (pivots, regroupings) = regroupings(&ndesc);
        SystemNullspace {
            param_count: ndesc.ncols(),
            n_bodies: model.len(),
            r,
            ndesc,
            nullity,
            rotor_bodies,
            classes,
            pivots,
            regroupings,
        }
    }

    pub fn base_param_count(&self) -> usize {
        self.param_count - self.nullity
    }

    /// Orthonormal basis of the unidentifiable subspace.
    pub fn orthonormal_basis(&self) -> DMatrix<f64> {
        orth_columns(&self.r, PRUNE_RTOL)
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivots.contains(&col)
    }

    pub fn param_label(&self, col: usize) -> String {
        param_label(self.n_bodies, &self.rotor_bodies, col)
    }

    pub fn render_regrouping(&self, g: &Regrouping) -> String {
        let mut s = String::new();
        for (k, &(c, v)) in g.terms.iter().enumerate() {
            let name = self.param_label(c);
            let mag = v.abs();
            let sign = if v < 0.0 { "-" } else { "+" };
            if k == 0 {
                if v < 0.0 {
                    s.push('-');
                }
            } else {
                s.push_str(&format!(" {sign} "));
            }
            if (mag - 1.0).abs() < 1e-12 {
                s.push_str(&name);
            } else {
                s.push_str(&format!("{mag:.6}*{name}"));
            }
        }
        s
    }
}

/// `I_xx2` style label for a global column (bodies numbered from 1); rotor
/// columns read `J_m3` for the rotor driving joint 3.
pub fn param_label(n_bodies: usize, rotor_bodies: &[usize], col: usize) -> String {
    if col < 10 * n_bodies {
        format!("{}{}", PARAM_NAMES[col % 10], col / 10 + 1)
    } else {
        format!("J_m{}", rotor_bodies[col - 10 * n_bodies] + 1)
    }
}

/// Runs the recursion and assembles the system nullspace.
pub fn analyze(model: &Model, opts: &RpnaOptions) -> Result<(Vec<JointAnalysis>, SystemNullspace)> {
    let a = run(model, opts)?;
    let s = SystemNullspace::build(model, &a);
    Ok((a, s))
}

#[derive(Serialize, Deserialize)]
pub struct SystemNullspaceJson {
    pub param_count: usize,
    pub nullity: usize,
    pub r: Vec<Vec<f64>>,
    pub ndesc: Vec<Vec<f64>>,
    pub classes: Vec<Classification>,
    pub pivots: Vec<usize>,
    pub regroupings: Vec<Regrouping>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl SystemNullspace {
    pub fn to_json(&self) -> SystemNullspaceJson {
        SystemNullspaceJson {
            param_count: self.param_count,
            nullity: self.nullity,
            r: rows_of(&self.r),
            ndesc: rows_of(&self.ndesc),
            classes: self.classes.clone(),
            pivots: self.pivots.clone(),
            regroupings: self.regroupings.clone(),
        }
    }
}
