//! Closed-loop inverse kinematics with a damped (singularity-robust) inverse
//! and a null-space posture policy taken from the closest demonstration.
//!
//! Per control step:
//!
//! ```text
//! q̇ = J*(q) (ẋ_d + K_p e) + (I − J†(q) J(q)) π(q)
//! J* = Jᵀ (J Jᵀ + λ² I)⁻¹        J† = Jᵀ (J Jᵀ)⁻¹
//! π(q) = g (q_ref − q)
//! ```
//!
//! where `e` stacks the position error and the rotation vector of
//! `ε_d ⊗ ε⁻¹`.

use alloc::vec::Vec;

use nalgebra::{Matrix6, SMatrix, Vector6};
// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::demonstrations::{DemoSet, Demonstration, StatePoint};
use crate::kinematics::{Jacobian, JointConfig, JointVector, KinematicChain, Pose};
use crate::quat::orientation_error;
use crate::{Error, Result, Vec3, DOF};

pub type SrInverse = SMatrix<f64, DOF, 6>;
pub type NullProjector = SMatrix<f64, DOF, DOF>;

#[derive(Clone, Debug, PartialEq)]
pub struct ClikParams {
    /// Damping λ of the SR inverse.
    pub damping: f64,
    /// Task-space feedback gain, s⁻¹; symmetric positive definite.
    pub kp: Matrix6<f64>,
    /// Seconds per Cartesian sample; one Euler step per sample.
    pub dt: f64,
    /// Gain of the null-space attraction toward the reference posture, s⁻¹.
    pub null_gain: f64,
    /// Smallest acceptable distance to any joint limit, rad.
    pub limit_margin_min: f64,
    pub max_retries: u32,
    /// Final position error above which tracking is declared diverged, m.
    pub final_tolerance: f64,
    /// Position error at any step above which tracking is abandoned, m.
    pub divergence_threshold: f64,
}

impl Default for ClikParams {
    fn default() -> Self {
        Self {
            damping: 0.05,
            kp: Matrix6::from_diagonal_element(10.0),
            dt: 0.05,
            null_gain: 1.0,
            limit_margin_min: 0.05,
            max_retries: 5,
            final_tolerance: 0.005,
            divergence_threshold: 0.10,
        }
    }
}

impl ClikParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.dt > 0.0) {
            return bad("dt must be > 0");
        }
        if !(self.damping >= 0.0) {
            return bad("damping must be >= 0");
        }
        if (self.kp - self.kp.transpose()).abs().max() > 1e-12 || self.kp.cholesky().is_none() {
            return bad("kp must be symmetric positive definite");
        }
        if !(self.null_gain >= 0.0) || !(self.limit_margin_min >= 0.0) {
            return bad("null_gain and limit_margin_min must be >= 0");
        }
        if !(self.final_tolerance > 0.0 && self.divergence_threshold > 0.0) {
            return bad("tolerances must be > 0");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureReason {
    Limits,
    Divergence,
}

impl FailureReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureReason::Limits => "limits",
            FailureReason::Divergence => "divergence",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackedSample {
    pub phase: f64,
    pub q: JointConfig,
    pub qdot: JointVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointTrajectory {
    pub samples: Vec<TrackedSample>,
    pub feasible: bool,
    pub failure_reason: Option<FailureReason>,
    /// Attempts used, 1 when the first tracking succeeded.
    pub attempts: u32,
    /// Position error at the last sample, m.
    pub final_position_error: f64,
    /// Orientation error at the last sample, rad.
    pub final_orientation_error: f64,
}

/// Damped least-squares inverse `Jᵀ (J Jᵀ + λ² I)⁻¹`.
pub fn sr_inverse(jac: &Jacobian, damping: f64) -> Result<SrInverse> {
    if !(damping >= 0.0) {
        return Err(Error::InvalidParameter("damping must be >= 0".into()));
    }
    let gram = jac * jac.transpose() + Matrix6::from_diagonal_element(damping * damping);
    let chol = gram.cholesky().ok_or(Error::SingularSystem)?;
    // (J Jᵀ + λ²I)⁻¹ J, transposed
    Ok(chol.solve(jac).transpose())
}

/// Null-space projector `I − J†J` with `J† = Jᵀ (J Jᵀ)⁻¹`; `J Jᵀ` gets a
/// `1e-12·I` ridge only when it is not numerically invertible.
pub fn null_projector(jac: &Jacobian) -> NullProjector {
    let gram = jac * jac.transpose();
    let chol = gram
        .cholesky()
        .or_else(|| (gram + Matrix6::from_diagonal_element(1e-12)).cholesky())
        .expect("ridge-regularized Gram matrix is positive definite");
    let pinv_times_jac = jac.transpose() * chol.solve(jac);
    NullProjector::identity() - pinv_times_jac
}

/// The demonstration whose last position is nearest `target`; the lowest
/// index wins ties.
pub fn closest_demonstration<'a>(set: &'a DemoSet, target: &Pose) -> Result<&'a Demonstration> {
    let mut best: Option<(&Demonstration, f64)> = None;
    for demo in &set.demos {
        let Some(end) = demo.final_position() else { continue };
        let d = (end - target.position).norm();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((demo, d));
        }
    }
    best.map(|(d, _)| d).ok_or(Error::EmptySet)
}

/// Task error `[x_d − x, rotvec(ε_d ⊗ ε⁻¹)]`.
pub fn task_error(desired: &Pose, actual: &Pose) -> Vector6<f64> {
    let p = desired.position - actual.position;
    let o = orientation_error(&desired.orientation, &actual.orientation);
    Vector6::new(p.x, p.y, p.z, o.x, o.y, o.z)
}

/// One CLIK velocity command.
pub fn clik_step(
    chain: &KinematicChain,
    q: &JointConfig,
    desired: &Pose,
    desired_velocity: &Vector6<f64>,
    q_ref: &JointConfig,
    params: &ClikParams,
) -> JointVector {
    let (jac, pose) = chain.jacobian_and_pose(q);
    step_from(&jac, &pose, q, desired, desired_velocity, q_ref, params.null_gain, params)
}

#[allow(clippy::too_many_arguments)]
fn step_from(
    jac: &Jacobian,
    pose: &Pose,
    q: &JointConfig,
    desired: &Pose,
    desired_velocity: &Vector6<f64>,
    q_ref: &JointConfig,
    null_gain: f64,
    params: &ClikParams,
) -> JointVector {
    let e = task_error(desired, pose);
    let jstar = match sr_inverse(jac, params.damping) {
        Ok(m) => m,
        // only reachable with zero damping at a singularity
        Err(_) => sr_inverse(jac, 1e-6).expect("damped inverse exists"),
    };
    let primary = jstar * (desired_velocity + params.kp * e);
    let policy = (q_ref.as_vector() - q.as_vector()) * null_gain;
    if null_gain == 0.0 {
        return primary;
    }
    primary + null_projector(jac) * policy
}

/// Desired task velocities by forward differences of the Cartesian samples
/// (zero at the last sample).
pub fn desired_velocities(traj: &[StatePoint], dt: f64) -> Vec<Vector6<f64>> {
    let mut out = Vec::with_capacity(traj.len());
    for w in traj.windows(2) {
        let v = (w[1].position - w[0].position) / dt;
        let o = orientation_error(&w[1].orientation, &w[0].orientation) / dt;
        out.push(Vector6::new(v.x, v.y, v.z, o.x, o.y, o.z));
    }
    if !traj.is_empty() {
        out.push(Vector6::zeros());
    }
    out
}

/// Upper bound on the distance from the base origin the tool can reach.
pub fn max_reach(chain: &KinematicChain) -> f64 {
    chain.dh().iter().map(|r| r.a.abs() + r.d.abs()).sum::<f64>() + chain.tip_box().offset
}

fn policy_at(policy: &[JointConfig], i: usize, n: usize) -> JointConfig {
    match policy.len() {
        0 => unreachable!("policy checked non-empty"),
        1 => policy[0],
        p if p == n => policy[i],
        p => {
            let idx = ((i as f64) * (p - 1) as f64 / (n.max(2) - 1) as f64).round() as usize;
            policy[idx.min(p - 1)]
        }
    }
}

/// Tracks a Cartesian trajectory from `q0`, one Euler step of `params.dt`
/// per sample.
///
/// The null-space policy follows `policy` (resampled to the trajectory by
/// phase index). When a joint comes within `limit_margin_min` of a limit the
/// whole tracking is redone with the null gain doubled and the reference
/// posture pulled halfway toward the joint midranges, at most
/// `max_retries` times. Failure is reported in the result, never as an error.
pub fn track_trajectory(
    chain: &KinematicChain,
    q0: &JointConfig,
    cart_traj: &[StatePoint],
    policy: &[JointConfig],
    params: &ClikParams,
) -> Result<JointTrajectory> {
    if cart_traj.len() < 2 {
        return Err(Error::InvalidParameter("trajectory needs at least 2 samples".into()));
    }
    if policy.is_empty() {
        return Err(Error::InvalidParameter("null-space policy is empty".into()));
    }
    params.validate()?;

    let reach = max_reach(chain);
    if cart_traj.iter().any(|s| s.position.norm() > reach) {
        return Ok(JointTrajectory {
            samples: Vec::new(),
            feasible: false,
            failure_reason: Some(FailureReason::Divergence),
            attempts: 0,
            final_position_error: f64::INFINITY,
            final_orientation_error: f64::INFINITY,
        });
    }

    let velocities = desired_velocities(cart_traj, params.dt);
    let mid = chain.midrange();
    let mut last = None;
    for attempt in 0..=params.max_retries {
        let (gain, blend) = if attempt == 0 {
            (params.null_gain, 0.0)
        } else {
            (params.null_gain * f64::from(1u32 << attempt.min(30)), 0.5)
        };
        let run = track_once(chain, q0, cart_traj, &velocities, policy, &mid, gain, blend, params);
        let retry = run.failure_reason == Some(FailureReason::Limits);
        let mut run = run;
        run.attempts = attempt + 1;
        if !retry {
            return Ok(run);
        }
        last = Some(run);
    }
    Ok(last.expect("at least one attempt"))
}

#[allow(clippy::too_many_arguments)]
fn track_once(
    chain: &KinematicChain,
    q0: &JointConfig,
    cart_traj: &[StatePoint],
    velocities: &[Vector6<f64>],
    policy: &[JointConfig],
    mid: &JointConfig,
    null_gain: f64,
    midrange_blend: f64,
    params: &ClikParams,
) -> JointTrajectory {
    let n = cart_traj.len();
    let mut samples = Vec::with_capacity(n);
    let mut q = *q0;
    let mut failure = None;
    let mut final_pos = f64::INFINITY;
    let mut final_ori = f64::INFINITY;
    for (i, (desired, velocity)) in cart_traj.iter().zip(velocities).enumerate() {
        if !q.is_finite() {
            failure = Some(FailureReason::Divergence);
            break;
        }
        if chain.min_limit_margin(&q) < params.limit_margin_min {
            failure = Some(FailureReason::Limits);
            break;
        }
        let target = Pose::new(desired.position, desired.orientation);
        let (jac, pose) = chain.jacobian_and_pose(&q);
        let err = task_error(&target, &pose);
        let pos_err = Vec3::new(err[0], err[1], err[2]).norm();
        if !(pos_err <= params.divergence_threshold) {
            failure = Some(FailureReason::Divergence);
            break;
        }
        let mut q_ref = policy_at(policy, i, n);
        if midrange_blend > 0.0 {
            q_ref = q_ref.lerp(mid, midrange_blend);
        }
        let qdot = step_from(&jac, &pose, &q, &target, velocity, &q_ref, null_gain, params);
        samples.push(TrackedSample {
            phase: desired.t,
            q,
            qdot,
        });
        if i + 1 == n {
            final_pos = pos_err;
            final_ori = Vec3::new(err[3], err[4], err[5]).norm();
        } else {
            q = JointConfig::from_vector(&(q.as_vector() + qdot * params.dt));
        }
    }
    if failure.is_none() && final_pos > params.final_tolerance {
        failure = Some(FailureReason::Divergence);
    }
    JointTrajectory {
        samples,
        feasible: failure.is_none(),
        failure_reason: failure,
        attempts: 1,
        final_position_error: final_pos,
        final_orientation_error: final_ori,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demonstrations::{DemoMeta, FaceId, JointSample};
    use alloc::string::ToString;
    use alloc::vec;

    fn pad_identity() -> Jacobian {
        let mut j = Jacobian::zeros();
        for i in 0..6 {
            j[(i, i)] = 1.0;
        }
        j
    }

    #[test]
    fn sr_inverse_of_padded_identity() {
        let j = pad_identity();
        let p = sr_inverse(&j, 0.0).unwrap();
        for r in 0..DOF {
            for c in 0..6 {
                let expected = if r == c { 1.0 } else { 0.0 };
                assert!((p[(r, c)] - expected).abs() < 1e-15);
            }
        }
        let p = sr_inverse(&j, 1.0).unwrap();
        for i in 0..6 {
            assert!((p[(i, i)] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sr_inverse_singular_without_damping() {
        let mut j = pad_identity();
        j[(5, 5)] = 0.0;
        assert_eq!(sr_inverse(&j, 0.0), Err(Error::SingularSystem));
        assert!(sr_inverse(&j, 0.01).is_ok());
    }

    fn demo_ending_at(p: Vec3, id: usize) -> Demonstration {
        let chain = KinematicChain::reference();
        let q = chain.start_config();
        let mut d = Demonstration::from_joints(
            &chain,
            vec![JointSample { t: 0.0, q }, JointSample { t: 1.0, q }],
            DemoMeta {
                target_id: id,
                face: FaceId::Low,
                session: 1,
                trial: 1,
                demonstrator: "x".to_string(),
            },
        )
        .unwrap();
        d.cart_traj[1].position = p;
        d
    }

    #[test]
    fn closest_demo_rules() {
        let target = Pose::new(Vec3::new(0.5, 0.0, 0.0), crate::Quat::identity());
        let near = demo_ending_at(Vec3::new(0.51, 0.0, 0.0), 0);
        let far = demo_ending_at(Vec3::new(0.6, 0.0, 0.0), 1);
        let set = DemoSet::new(vec![far.clone(), near.clone()]);
        assert_eq!(closest_demonstration(&set, &target).unwrap().meta.target_id, 0);
        let tie = DemoSet::new(vec![demo_ending_at(Vec3::new(0.5, 0.1, 0.0), 7), demo_ending_at(Vec3::new(0.5, -0.1, 0.0), 8)]);
        assert_eq!(closest_demonstration(&tie, &target).unwrap().meta.target_id, 7);
        let single = DemoSet::new(vec![far]);
        assert_eq!(closest_demonstration(&single, &target).unwrap().meta.target_id, 1);
        assert_eq!(closest_demonstration(&DemoSet::new(vec![]), &target).err(), Some(Error::EmptySet));
    }

    #[test]
    fn zero_error_gives_zero_velocity() {
        let chain = KinematicChain::reference();
        let q = chain.start_config();
        let pose = chain.forward_kinematics(&q);
        let qdot = clik_step(&chain, &q, &pose, &Vector6::zeros(), &q, &ClikParams::default());
        assert!(qdot.norm() < 1e-12);
    }

    #[test]
    fn stationary_tracking() {
        let chain = KinematicChain::reference();
        let q0 = chain.start_config();
        let pose = chain.forward_kinematics(&q0);
        let traj: Vec<StatePoint> = (0..30)
            .map(|i| StatePoint::new(i as f64 / 29.0, pose.position, pose.orientation))
            .collect();
        let out = track_trajectory(&chain, &q0, &traj, &[q0], &ClikParams::default()).unwrap();
        assert!(out.feasible);
        assert!(out.final_position_error < 1e-6);
        for s in &out.samples {
            for k in 0..DOF {
                assert!((s.q[k] - q0[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unreachable_target_diverges() {
        let chain = KinematicChain::reference();
        let q0 = chain.start_config();
        let start = chain.forward_kinematics(&q0);
        let goal = start.position + Vec3::new(2.0, 0.0, 0.0);
        let traj: Vec<StatePoint> = (0..50)
            .map(|i| {
                let s = i as f64 / 49.0;
                StatePoint::new(s, start.position + (goal - start.position) * s, start.orientation)
            })
            .collect();
        let out = track_trajectory(&chain, &q0, &traj, &[q0], &ClikParams::default()).unwrap();
        assert!(!out.feasible);
        assert_eq!(out.failure_reason, Some(FailureReason::Divergence));
    }

    #[test]
    fn params_validation() {
        let mut p = ClikParams::default();
        p.kp[(0, 1)] = 1.0;
        assert!(p.validate().is_err());
        let p = ClikParams {
            dt: 0.0,
            ..ClikParams::default()
        };
        assert!(p.validate().is_err());
        assert!(ClikParams::default().validate().is_ok());
    }
}
