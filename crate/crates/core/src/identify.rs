//! Least-squares identification from simulated trajectories, and the
//! fixed-versus-floating experiment on the Cheetah leg.
//!
//! Joint signals are sums of sinusoids in the joint coordinates. For
//! multi-DoF joints the coordinates are the exponential coordinates of
//! [`Joint::transform`](crate::model::Joint::transform) and the state carries
//! the matching quasi-velocity and its rate.

use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pinv_solve, rank, vstack};
use crate::model::{builtin, BaseKind, Model};
use crate::nullspace;
use crate::regressor::{inverse_dynamics, regressor, sample_rng, ExecPolicy, State};
use crate::rpna::RpnaOptions;
use crate::spatial::{cross_motion, joint_transform, MotionVector};

/// Sampling rate of generated trajectories.
pub const RATE_HZ: f64 = 100.0;
/// Sinusoids summed per coordinate.
pub const HARMONICS: usize = 3;
/// Highest frequency of any sinusoid.
pub const MAX_FREQ_HZ: f64 = 2.0;
/// Relative singular-value cutoff of the pseudo-inverse.
pub const FIT_RTOL: f64 = 1e-10;

/// One sinusoid `a sin(2π f t + φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase: f64,
}

/// Smooth signal for one coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal(pub Vec<Sinusoid>);

impl Signal {
    /// Random signal with total amplitude at most `max_amplitude`.
    pub fn random(rng: &mut impl Rng, max_amplitude: f64) -> Self {
        let per = max_amplitude / HARMONICS as f64;
        Signal(
            (0..HARMONICS)
                .map(|_| Sinusoid {
                    amplitude: rng.random_range(0.2 * per..=per),
                    freq_hz: rng.random_range(0.1..=MAX_FREQ_HZ),
                    phase: rng.random_range(0.0..TAU),
                })
                .collect(),
        )
    }

    pub fn zero() -> Self {
        Signal(Vec::new())
    }

    /// Value and first two time derivatives at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        self.0.iter().fold((0.0, 0.0, 0.0), |(p, v, a), s| {
            let w = TAU * s.freq_hz;
            let arg = w * t + s.phase;
            (
                p + s.amplitude * arg.sin(),
                v + s.amplitude * w * arg.cos(),
                a - s.amplitude * w * w * arg.sin(),
            )
        })
    }
}

/// Body-frame quasi-velocity and its rate for a joint whose configuration is
/// the product of mode exponentials, given coordinate values and rates.
///
/// The joint is unrolled into a chain of single-mode joints; the velocity of
/// the last link is `Φ ν`.
pub fn quasi_rates(
    modes: &[MotionVector],
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = MotionVector::zeros();
    let mut a = MotionVector::zeros();
    for (k, phi) in modes.iter().enumerate() {
        let x = joint_transform(q[k], phi);
        let vj = phi * qd[k];
        v = x.apply(&v) + vj;
        a = x.apply(&a) + phi * qdd[k] + cross_motion(&v) * vj;
    }
    let phi = DMatrix::from_fn(6, modes.len(), |r, c| modes[c][r]);
    let solve = |m: &MotionVector| -> Result<Vec<f64>> {
        let rhs = DVector::from_column_slice(m.as_slice());
        let (x, _) = pinv_solve(&phi, &rhs, 1e-12);
        let resid = (&phi * &x - &rhs).norm();
        if resid > 1e-9 * (1.0 + rhs.norm()) {
            return Err(Error::Unsupported(
                "joint modes do not close under the bracket; velocity leaves span(Φ)".into(),
            ));
        }
        Ok(x.iter().copied().collect())
    };
    Ok((solve(&v)?, solve(&a)?))
}

/// States sampled along coordinate signals (one per DoF) at [`RATE_HZ`].
pub fn states_from_signals(
    model: &Model,
    signals: &[Signal],
    n_samples: usize,
) -> Result<Vec<State>> {
    if signals.len() != model.dof() {
        return Err(Error::Model(format!(
            "{} signals for a mechanism with {} DoF",
            signals.len(),
            model.dof()
        )));
    }
    let off = model.dof_offsets();
    let mut out = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        let t = j as f64 / RATE_HZ;
        let (q, qd, qdd): (Vec<f64>, Vec<f64>, Vec<f64>) = {
            let e: Vec<(f64, f64, f64)> = signals.iter().map(|s| s.eval(t)).collect();
            (
                e.iter().map(|x| x.0).collect(),
                e.iter().map(|x| x.1).collect(),
                e.iter().map(|x| x.2).collect(),
            )
        };
        let mut s = State {
            q: q.clone(),
            qd: qd.clone(),
            qdd: qdd.clone(),
        };
        for (i, b) in model.bodies.iter().enumerate() {
            let d = b.joint.dof();
            if d > 1 {
                let r = off[i]..off[i] + d;
                let (nu, nud) = quasi_rates(
                    b.joint.modes().modes(),
                    &q[r.clone()],
                    &qd[r.clone()],
                    &qdd[r.clone()],
                )?;
                s.qd[r.clone()].copy_from_slice(&nu);
                s.qdd[r].copy_from_slice(&nud);
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// Sampled states with the generalized forces they require.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: String,
    /// How the signals were generated.
    pub source: String,
    pub rate_hz: f64,
    pub states: Vec<State>,
    pub tau: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Simulates `states` with `params` through inverse dynamics.
    pub fn simulate(
        model: &Model,
        params: &DVector<f64>,
        states: Vec<State>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let tau = states
            .iter()
            .map(|s| inverse_dynamics(model, s, params).map(|t| t.iter().copied().collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            model: model.name.clone(),
            source: source.into(),
            rate_hz: RATE_HZ,
            states,
            tau,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn check(&self, model: &Model) -> Result<()> {
        for (s, t) in self.states.iter().zip(&self.tau) {
            s.check(model)?;
            if t.len() != model.dof() {
                return Err(Error::Model(
                    "force sample does not match the mechanism DoF".into(),
                ));
            }
        }
        Ok(())
    }

    /// Stacked regressor and force vector.
    pub fn stacked(
        &self,
        model: &Model,
        policy: ExecPolicy,
    ) -> Result<(DMatrix<f64>, DVector<f64>)> {
        self.check(model)?;
        let blocks = crate::par::map_indexed(self.len(), policy == ExecPolicy::Parallel, |j| {
            regressor(model, &self.states[j])
        });
        let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;
        let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
        let y = vstack(&refs, model.param_count());
        let tau = DVector::from_iterator(y.nrows(), self.tau.iter().flatten().copied());
        Ok((y, tau))
    }
}

/// Random smooth trajectory for every DoF of `model`, simulated with `params`.
pub fn synth_trajectory(
    model: &Model,
    params: &DVector<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = sample_rng(seed, 0);
    let signals: Vec<Signal> = (0..model.dof())
        .map(|_| Signal::random(&mut rng, 1.0))
        .collect();
    let states = states_from_signals(model, &signals, n_samples)?;
    Trajectory::simulate(model, params, states, format!("sinusoids seed={seed}"))
}

/// Minimum-norm least-squares parameter estimate.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub params: DVector<f64>,
    /// Rank of the stacked regressor at the pseudo-inverse cutoff.
    pub rank: usize,
    pub rtol: f64,
    /// Root-mean-square training residual.
    pub train_rms: f64,
    /// Set when the data excite fewer directions than the structural count.
    pub warning: Option<String>,
}

/// Fits all parameters of `model` to `traj` with a pseudo-inverse.
pub fn fit(model: &Model, traj: &Trajectory) -> Result<Estimate> {
    let (y, tau) = traj.stacked(model, ExecPolicy::Parallel)?;
    let (params, used) = pinv_solve(&y, &tau, FIT_RTOL);
    let resid = &y * &params - &tau;
    let train_rms = (resid.norm_squared() / resid.len().max(1) as f64).sqrt();
    let opts = RpnaOptions {
        gravity: model.gravity.norm() > 0.0,
        ..RpnaOptions::default()
    };
    let (_, sys) = nullspace::analyze(model, &opts)?;
    let structural = sys.base_param_count();
    let warning = (used < structural).then(|| {
        format!("data excite {used} directions but {structural} combinations are identifiable")
    });
    Ok(Estimate {
        params,
        rank: used,
        rtol: FIT_RTOL,
        train_rms,
        warning,
    })
}

/// Named sets of force channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grouping(pub Vec<(String, Vec<usize>)>);

impl Grouping {
    /// Joint torques for a fixed base; for a floating base the base moment
    /// and force channels are split off as well.
    pub fn for_model(model: &Model) -> Self {
        let n = model.dof();
        match model.base {
            BaseKind::Fixed => Grouping(vec![("leg torques".into(), (0..n).collect())]),
            BaseKind::Floating => Grouping(vec![
                ("leg torques".into(), (6..n).collect()),
                ("body torques".into(), (0..3).collect()),
                ("body forces".into(), (3..6).collect()),
            ]),
        }
    }
}

/// RMS residual of each channel, grouped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelResiduals {
    pub groups: Vec<(String, Vec<f64>)>,
}

impl ChannelResiduals {
    pub fn max(&self) -> f64 {
        self.groups
            .iter()
            .flat_map(|g| g.1.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn group(&self, name: &str) -> Option<&[f64]> {
        self.groups
            .iter()
            .find(|g| g.0 == name)
            .map(|g| g.1.as_slice())
    }
}

/// Channel-wise RMS of `τ − Y π` over `traj`.
pub fn cross_validate(
    model: &Model,
    params: &DVector<f64>,
    traj: &Trajectory,
    grouping: &Grouping,
) -> Result<ChannelResiduals> {
    traj.check(model)?;
    let n = model.dof();
    let mut sq = vec![0.0; n];
    for (s, t) in traj.states.iter().zip(&traj.tau) {
        let pred = inverse_dynamics(model, s, params)?;
        for c in 0..n {
            sq[c] += (t[c] - pred[c]).powi(2);
        }
    }
    let count = traj.len().max(1) as f64;
    let rms: Vec<f64> = sq.iter().map(|x| (x / count).sqrt()).collect();
    Ok(ChannelResiduals {
        groups: grouping
            .0
            .iter()
            .map(|(name, idx)| (name.clone(), idx.iter().map(|&c| rms[c]).collect()))
            .collect(),
    })
}

/// Which data set a step of the experiment uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    Fixed,
    Floating,
}

impl std::str::FromStr for Base {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Base::Fixed),
            "floating" => Ok(Base::Floating),
            other => Err(Error::Parse(format!(
                "expected 'fixed' or 'floating', got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for Base {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Base::Fixed => "fixed",
            Base::Floating => "floating",
        })
    }
}

/// Simulated data for the leg bolted to the world and for the same leg
/// mounted on a moving trunk. Both data sets share the leg joint signals.
#[derive(Clone, Debug)]
pub struct LegExperiment {
    pub fixed_model: Model,
    pub floating_model: Model,
    pub fixed_truth: DVector<f64>,
    pub floating_truth: DVector<f64>,
    pub fixed_data: Trajectory,
    pub floating_data: Trajectory,
}

/// Validation residuals of one (identification, validation) pairing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub identified_on: Base,
    pub validated_on: Base,
    pub rank: usize,
    pub train_rms: f64,
    pub residuals: ChannelResiduals,
}

impl LegExperiment {
    /// Builds both data sets with `n_samples` samples each.
    pub fn cheetah(n_samples: usize, seed: u64) -> Result<Self> {
        let fixed_model = builtin("cheetah3_leg_fixed")?;
        let floating_model = builtin("cheetah3_leg_floating")?;
        Self::new(fixed_model, floating_model, n_samples, seed)
    }

    /// `floating_model` must be `fixed_model` mounted on a floating trunk.
    pub fn new(
        fixed_model: Model,
        floating_model: Model,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if floating_model.base != BaseKind::Floating
            || floating_model.len() != fixed_model.len() + 1
            || floating_model.rotor_bodies().len() != fixed_model.rotor_bodies().len()
        {
            return Err(Error::Model(format!(
                "'{}' is not '{}' on a floating trunk",
                floating_model.name, fixed_model.name
            )));
        }
        let fixed_truth = fixed_model.nominal_params()?;
        let floating_truth = floating_model.nominal_params()?;
        let mut rng = sample_rng(seed, 0);
        let leg: Vec<Signal> = (0..fixed_model.dof())
            .map(|_| Signal::random(&mut rng, 1.0))
            .collect();
        let mut rng = sample_rng(seed, 1);
        let trunk: Vec<Signal> = (0..6).map(|_| Signal::random(&mut rng, 0.5)).collect();

        let fixed_states = states_from_signals(&fixed_model, &leg, n_samples)?;
        let both: Vec<Signal> = trunk.into_iter().chain(leg.iter().cloned()).collect();
        let floating_states = states_from_signals(&floating_model, &both, n_samples)?;
        let source = format!("sinusoids seed={seed}");
        Ok(Self {
            fixed_data: Trajectory::simulate(
                &fixed_model,
                &fixed_truth,
                fixed_states,
                source.clone(),
            )?,
            floating_data: Trajectory::simulate(
                &floating_model,
                &floating_truth,
                floating_states,
                source,
            )?,
            fixed_model,
            floating_model,
            fixed_truth,
            floating_truth,
        })
    }

    fn model(&self, b: Base) -> &Model {
        match b {
            Base::Fixed => &self.fixed_model,
            Base::Floating => &self.floating_model,
        }
    }

    fn data(&self, b: Base) -> &Trajectory {
        match b {
            Base::Fixed => &self.fixed_data,
            Base::Floating => &self.floating_data,
        }
    }

    /// Moves an estimate between the two parameter layouts. Going from the
    /// fixed to the floating layout the trunk is taken at its true value;
    /// the other way the trunk block is dropped.
    pub fn transfer(&self, params: &DVector<f64>, from: Base, to: Base) -> DVector<f64> {
        match (from, to) {
            (Base::Fixed, Base::Floating) => {
                let mut out = DVector::zeros(self.floating_model.param_count());
                out.rows_mut(0, 10)
                    .copy_from(&self.floating_truth.rows(0, 10));
                out.rows_mut(10, params.len()).copy_from(params);
                out
            }
            (Base::Floating, Base::Fixed) => params.rows(10, params.len() - 10).into_owned(),
            _ => params.clone(),
        }
    }

    /// Identifies on one data set and validates on another.
    pub fn run(&self, identify_on: Base, validate_on: Base) -> Result<ExperimentCell> {
        let est = fit(self.model(identify_on), self.data(identify_on))?;
        let params = self.transfer(&est.params, identify_on, validate_on);
        let model = self.model(validate_on);
        let residuals = cross_validate(
            model,
            &params,
            self.data(validate_on),
            &Grouping::for_model(model),
        )?;
        Ok(ExperimentCell {
            identified_on: identify_on,
            validated_on: validate_on,
            rank: est.rank,
            train_rms: est.train_rms,
            residuals,
        })
    }

    /// All four pairings, identification-major.
    pub fn table(&self) -> Result<Vec<ExperimentCell>> {
        let mut out = Vec::with_capacity(4);
        for id in [Base::Fixed, Base::Floating] {
            for val in [Base::Fixed, Base::Floating] {
                out.push(self.run(id, val)?);
            }
        }
        Ok(out)
    }
}

/// Number of significant singular values of the stacked regressor over the
/// given parameter columns.
pub fn excited_rank(
    model: &Model,
    traj: &Trajectory,
    cols: std::ops::Range<usize>,
    rtol: f64,
) -> Result<usize> {
    let (y, _) = traj.stacked(model, ExecPolicy::Parallel)?;
    Ok(rank(&y.columns(cols.start, cols.len()).into_owned(), rtol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orth_rows;

    #[test]
    fn signal_derivatives_match_differences() {
        let mut rng = sample_rng(3, 0);
        let s = Signal::random(&mut rng, 1.0);
        let h = 1e-5;
        for t in [0.0, 0.37, 1.9] {
            let (p0, v0, a0) = s.eval(t);
            let (pp, vp, _) = s.eval(t + h);
            let (pm, vm, _) = s.eval(t - h);
            assert!(((pp - pm) / (2.0 * h) - v0).abs() < 1e-6);
            assert!(((vp - vm) / (2.0 * h) - a0).abs() < 1e-5);
            assert!(p0.abs() <= 1.0);
        }
    }

    #[test]
    fn quasi_velocity_matches_transform_difference() {
        let joint = crate::model::Joint::floating();
        let modes = joint.modes().modes().to_vec();
        let mut rng = sample_rng(9, 0);
        let sig: Vec<Signal> = (0..6).map(|_| Signal::random(&mut rng, 1.0)).collect();
        let coords = |t: f64| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            let e: Vec<_> = sig.iter().map(|s| s.eval(t)).collect();
            (
                e.iter().map(|x| x.0).collect(),
                e.iter().map(|x| x.1).collect(),
                e.iter().map(|x| x.2).collect(),
            )
        };
        let t = 0.8;
        let h = 1e-6;
        let (q, qd, qdd) = coords(t);
        let (nu, nud) = quasi_rates(&modes, &q, &qd, &qdd).unwrap();
        // X(t+h) X(t)⁻¹ ≈ 1 − h (v×)
        let x0 = joint.transform(&q);
        let x1 = joint.transform(&coords(t + h).0);
        let xm = joint.transform(&coords(t - h).0);
        let d = ((x1 * x0.inverse()).matrix() - (xm * x0.inverse()).matrix()) / (2.0 * h);
        let v = MotionVector::from_column_slice(&nu);
        assert!(
            (d + cross_motion(&v)).amax() < 1e-6,
            "{}",
            (d + cross_motion(&v)).amax()
        );
        let rate = |tt: f64| {
            let (a, b, c) = coords(tt);
            quasi_rates(&modes, &a, &b, &c).unwrap().0
        };
        let (np, nm) = (rate(t + 1e-5), rate(t - 1e-5));
        for k in 0..6 {
            assert!(((np[k] - nm[k]) / 2e-5 - nud[k]).abs() < 1e-5);
        }
    }

    #[test]
    fn spherical_quasi_velocity_stays_in_span() {
        let joint = crate::model::Joint::spherical();
        let (nu, _) = quasi_rates(
            joint.modes().modes(),
            &[0.3, -1.0, 2.0],
            &[1.0, 0.5, -0.2],
            &[0.0; 3],
        )
        .unwrap();
        assert_eq!(nu.len(), 3);
    }

    #[test]
    fn zero_amplitude_gives_gravity_torques() {
        let m = builtin("puma560").unwrap();
        let p = m.nominal_params().unwrap();
        let sig = vec![Signal::zero(); m.dof()];
        let states = states_from_signals(&m, &sig, 5).unwrap();
        let traj = Trajectory::simulate(&m, &p, states, "zero").unwrap();
        let g = inverse_dynamics(&m, &State::zeros(m.dof()), &p).unwrap();
        for t in &traj.tau {
            for (a, b) in t.iter().zip(g.iter()) {
                assert_eq!(a, b);
            }
        }
        assert!(g.norm() > 1.0);
    }

    #[test]
    fn replayed_forces_match_regressor() {
        let m = builtin("cheetah3_leg_fixed").unwrap();
        let p = m.nominal_params().unwrap();
        let traj = synth_trajectory(&m, &p, 50, 1).unwrap();
        let (y, tau) = traj.stacked(&m, ExecPolicy::Sequential).unwrap();
        assert!((&y * &p - &tau).amax() < 1e-10 * (1.0 + tau.amax()));
    }

    #[test]
    fn fit_error_lies_in_the_nullspace() {
        let m = builtin("cheetah3_leg_fixed").unwrap();
        let p = m.nominal_params().unwrap();
        let traj = synth_trajectory(&m, &p, 600, 2).unwrap();
        let est = fit(&m, &traj).unwrap();
        assert!(est.train_rms < 1e-8, "{}", est.train_rms);
        assert!(est.warning.is_none(), "{:?}", est.warning);
        let (_, sys) = nullspace::analyze(&m, &RpnaOptions::default()).unwrap();
        let rows = orth_rows(&sys.ndesc, 1e-10);
        let err = &est.params - &p;
        assert!(
            (&rows * &err).norm() < 1e-6 * (1.0 + p.norm()),
            "{}",
            (&rows * &err).norm()
        );
    }

    #[test]
    fn duplicated_samples_leave_estimate_unchanged() {
        let m = builtin("rr_perpendicular").unwrap();
        let p = m.nominal_params().unwrap();
        let traj = synth_trajectory(&m, &p, 200, 4).unwrap();
        let mut twice = traj.clone();
        twice.states.extend(traj.states.clone());
        twice.tau.extend(traj.tau.clone());
        let a = fit(&m, &traj).unwrap();
        let b = fit(&m, &twice).unwrap();
        assert!((a.params - b.params).amax() < 1e-8);
    }

    #[test]
    fn trajectory_json_round_trip() {
        let m = builtin("rr_parallel").unwrap();
        let p = m.nominal_params().unwrap();
        let traj = synth_trajectory(&m, &p, 10, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        traj.save_json(&path).unwrap();
        assert_eq!(Trajectory::load_json(&path).unwrap(), traj);
    }

    #[test]
    fn transfer_layouts() {
        let e = LegExperiment::cheetah(20, 1).unwrap();
        let lifted = e.transfer(&e.fixed_truth, Base::Fixed, Base::Floating);
        assert_eq!(lifted, e.floating_truth);
        assert_eq!(
            e.transfer(&e.floating_truth, Base::Floating, Base::Fixed),
            e.fixed_truth
        );
    }

    #[test]
    fn mismatched_experiment_models_rejected() {
        let a = builtin("rr_parallel").unwrap();
        let b = builtin("cheetah3_leg_floating").unwrap();
        assert!(LegExperiment::new(a, b, 10, 1).is_err());
    }
}
