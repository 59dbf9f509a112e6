//! Synthetic demonstrator cohorts.
//!
//! A deterministic planner produces one clean reference path per button;
//! demonstrator profiles then degrade it with smooth noise, detours and
//! approach jitter whose size decays with practice. Every demonstration has
//! its own derived seed, so generation order does not matter.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Unit, UnitQuaternion};
// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::clik::{track_trajectory, ClikParams, JointTrajectory};
use crate::demonstrations::{DemoMeta, DemoSet, Demonstration, FaceId, JointSample, StatePoint};
use crate::kinematics::KinematicChain;
use crate::taskworld::{check_collisions, goal_reached, TaskWorld, Target};
use crate::{Error, Quat, Result, Vec3};

/// Knobs of the reference planner.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Distance of the pre-approach point from the face, m.
    pub approach_offset: f64,
    /// Clearance of the wrap-around via points from the cube, m.
    pub clearance: f64,
    /// How far the tip end is pushed past the face plane, m.
    pub press_depth: f64,
    /// Samples per reference path.
    pub samples: usize,
    /// Tool roll about the approach axis, per face, rad.
    pub low_roll: f64,
    pub high_roll: f64,
    pub clik: ClikParams,
    /// Joint-limit margin the synthetic demonstrations must keep, rad. A
    /// demonstrator guiding the arm can push a joint right to its stop.
    pub demo_limit_margin: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            approach_offset: 0.08,
            clearance: 0.06,
            press_depth: 0.003,
            samples: 120,
            low_roll: -FRAC_PI_2,
            high_roll: 0.75 * PI,
            clik: ClikParams::default(),
            demo_limit_margin: 0.0,
        }
    }
}

impl PlannerConfig {
    pub fn roll(&self, face: FaceId) -> f64 {
        match face {
            FaceId::Low => self.low_roll,
            FaceId::High => self.high_roll,
        }
    }
}

/// Tool orientation for pressing `face`: tool z into the face, rotated by
/// `roll` about it.
pub fn approach_orientation(world: &TaskWorld, face: FaceId, roll: f64) -> Quat {
    world.face_orientation(face)
        * UnitQuaternion::from_axis_angle(&Vec3::x_axis(), PI)
        * UnitQuaternion::from_axis_angle(&Vec3::z_axis(), roll)
}

/// Tool-center position when the tip presses the button.
pub fn press_point(chain: &KinematicChain, world: &TaskWorld, target: &Target, press_depth: f64) -> Vec3 {
    let n = world.face_normal(target.face);
    target.position + n * (0.5 * chain.tip_box().height - press_depth)
}

/// Clean path for one button.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePath {
    pub target: Target,
    /// Cartesian samples, `t` in seconds.
    pub cart: Vec<StatePoint>,
    pub joints: JointTrajectory,
    /// Via points the path passes through, start and target included.
    pub via: Vec<Vec3>,
}

impl ReferencePath {
    pub fn joint_samples(&self) -> Vec<JointSample> {
        self.joints
            .samples
            .iter()
            .zip(&self.cart)
            .map(|(s, c)| JointSample { t: c.t, q: s.q })
            .collect()
    }
}

/// Via points: start, (high face: over the top edge and down the gap),
/// pre-approach, press point.
pub fn via_points(chain: &KinematicChain, world: &TaskWorld, target: &Target, cfg: &PlannerConfig) -> Vec<Vec3> {
    let start = chain.forward_kinematics(&chain.start_config()).position;
    let n = world.face_normal(target.face);
    let press = press_point(chain, world, target, cfg.press_depth);
    let pre = press + n * cfg.approach_offset;
    let mut via = Vec::with_capacity(5);
    via.push(start);
    if target.face == FaceId::High {
        // highest cube point along base z, measured from the target
        let up = Vec3::z();
        let cube = world.cube();
        let top = (0..8)
            .map(|k| {
                let s = Vec3::new(
                    if k & 1 == 0 { -1.0 } else { 1.0 },
                    if k & 2 == 0 { -1.0 } else { 1.0 },
                    if k & 4 == 0 { -1.0 } else { 1.0 },
                );
                (cube.center + cube.orientation * s.component_mul(&cube.half_extents)).dot(&up)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let out = cfg.clearance + 0.5 * chain.tip_box().height;
        let lateral = pre - up * pre.dot(&up);
        let over = lateral + n * (out - cfg.approach_offset).max(0.0) + up * (top + cfg.clearance + out);
        let beside = lateral + n * (out - cfg.approach_offset).max(0.0) + up * (top + 0.5 * (pre.dot(&up) - top));
        via.push(over);
        via.push(beside);
    }
    via.push(pre);
    via.push(press);
    via
}

/// Uniform Catmull–Rom spline through `pts`, sampled densely.
fn catmull_rom(pts: &[Vec3], per_segment: usize) -> Vec<Vec3> {
    let n = pts.len();
    let get = |i: isize| -> Vec3 {
        if i < 0 {
            pts[0] * 2.0 - pts[1]
        } else if i as usize >= n {
            pts[n - 1] * 2.0 - pts[n - 2]
        } else {
            pts[i as usize]
        }
    };
    let mut out = Vec::with_capacity((n - 1) * per_segment + 1);
    for seg in 0..n - 1 {
        let i = seg as isize;
        let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
        for k in 0..per_segment {
            let t = k as f64 / per_segment as f64;
            let (t2, t3) = (t * t, t * t * t);
            let p = (p1 * 2.0
                + (p2 - p0) * t
                + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2
                + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * t3)
                * 0.5;
            out.push(p);
        }
    }
    out.push(pts[n - 1]);
    out
}

fn min_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Resamples a dense polyline at arc lengths given by a minimum-jerk time
/// law; returns positions and their arc-length fractions.
fn time_parameterize(dense: &[Vec3], samples: usize) -> (Vec<Vec3>, Vec<f64>) {
    let mut cum = Vec::with_capacity(dense.len());
    cum.push(0.0);
    for w in dense.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let mut pos = Vec::with_capacity(samples);
    let mut frac = Vec::with_capacity(samples);
    let mut seg = 0;
    for k in 0..samples {
        let s = total * min_jerk(k as f64 / (samples - 1) as f64);
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let a = if span > 0.0 { ((s - cum[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
        pos.push(dense[seg] + (dense[seg + 1] - dense[seg]) * a);
        frac.push(if total > 0.0 { s / total } else { 1.0 });
    }
    (pos, frac)
}

/// Cartesian path through `via`, orientation slerped from `start` to
/// `approach` and settled before the last (approach) segment begins.
pub fn cartesian_path(via: &[Vec3], start: &Quat, approach: &Quat, samples: usize, dt: f64) -> Vec<StatePoint> {
    let dense = catmull_rom(via, 64);
    let (pos, frac) = time_parameterize(&dense, samples);
    let total: f64 = via.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let last_seg = (via[via.len() - 1] - via[via.len() - 2]).norm();
    let settle = if total > 0.0 { 1.0 - last_seg / total } else { 1.0 };
    pos.into_iter()
        .zip(frac)
        .enumerate()
        .map(|(k, (p, f))| {
            let s = smoothstep(if settle > 0.0 { f / settle } else { 1.0 });
            let q = start.slerp(approach, s);
            StatePoint::new(k as f64 * dt, p, q)
        })
        .collect()
}

/// Deterministic, collision-free joint path from the start configuration to
/// a button press.
pub fn plan_reference_path(
    chain: &KinematicChain,
    world: &TaskWorld,
    target: &Target,
    cfg: &PlannerConfig,
) -> Result<ReferencePath> {
    let q0 = chain.start_config();
    let start = chain.forward_kinematics(&q0);
    let via = via_points(chain, world, target, cfg);
    let approach = approach_orientation(world, target.face, cfg.roll(target.face));
    let approach = crate::quat::same_hemisphere(&start.orientation, approach);
    let cart = cartesian_path(&via, &start.orientation, &approach, cfg.samples, cfg.clik.dt);
    let joints = track_trajectory(chain, &q0, &cart, &[q0], &cfg.clik)?;
    let what = || format!("face {} target {}", target.face, target.index);
    if !joints.feasible {
        let reason = joints.failure_reason.map_or("unknown", |r| r.as_str());
        return Err(Error::NoFeasiblePlan(format!("{}: IK failed ({reason})", what())));
    }
    let report = check_collisions(chain, &joints, world, target);
    if !report.clear {
        return Err(Error::NoFeasiblePlan(format!("{}: collision {:?}", what(), report)));
    }
    let last = joints.samples.last().expect("feasible tracking has samples");
    if !goal_reached(&chain.forward_kinematics(&last.q), chain.tip_box(), world, target) {
        return Err(Error::NoFeasiblePlan(format!("{}: goal not reached", what())));
    }
    Ok(ReferencePath {
        target: *target,
        cart,
        joints,
        via,
    })
}

/// Plans the clean path of every demonstrated target on both faces, low
/// face first, each in target order.
pub fn plan_all_references(chain: &KinematicChain, world: &TaskWorld, cfg: &PlannerConfig) -> Result<Vec<ReferencePath>> {
    let mut out = Vec::with_capacity(18);
    for face in FaceId::ALL {
        for target in world.demonstrated_targets(face) {
            out.push(plan_reference_path(chain, world, &target, cfg)?);
        }
    }
    Ok(out)
}

/// How one demonstrator degrades the clean paths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DemonstratorProfile {
    /// Std of the smooth Cartesian wobble, m.
    pub base_noise: f64,
    /// Typical size of a detour away from the clean path, m.
    pub detour_amp: f64,
    /// 1 keeps the clean approach direction; lower values tilt it.
    pub approach_consistency: f64,
    /// Per-trial shrink factor of all degradations; trial `i` (counted
    /// across sessions from 0) is scaled by `(1 − rate)^i`.
    pub improvement_rate: f64,
    /// Chance that a detour heads into the cube instead of a random direction.
    pub collision_proneness: f64,
}

/// Largest approach tilt, reached with zero consistency and no practice, rad.
pub const MAX_APPROACH_TILT: f64 = 0.5;
/// Orientation wobble per meter of position wobble, rad/m.
pub const ORIENTATION_NOISE_PER_M: f64 = 4.0;

impl DemonstratorProfile {
    /// A demonstrator who reproduces the clean paths exactly.
    pub fn zero() -> Self {
        Self {
            base_noise: 0.0,
            detour_amp: 0.0,
            approach_consistency: 1.0,
            improvement_rate: 0.0,
            collision_proneness: 0.0,
        }
    }

    /// Calibrated so session-1 task success of the learned models stays
    /// above 0.8 on both faces.
    pub fn fast_default() -> Self {
        Self {
            base_noise: 0.004,
            detour_amp: 0.02,
            approach_consistency: 0.9,
            improvement_rate: 0.1,
            collision_proneness: 0.02,
        }
    }

    /// Calibrated so session-1 task success falls below 0.8 and improves
    /// in session 2.
    pub fn slow_default() -> Self {
        Self {
            base_noise: 0.015,
            detour_amp: 0.08,
            approach_consistency: 0.5,
            improvement_rate: 0.25,
            collision_proneness: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.base_noise >= 0.0
            && self.detour_amp >= 0.0
            && self.base_noise.is_finite()
            && self.detour_amp.is_finite()
            && (0.0..=1.0).contains(&self.approach_consistency)
            && (0.0..=1.0).contains(&self.improvement_rate)
            && (0.0..=1.0).contains(&self.collision_proneness);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid demonstrator profile {self:?}")))
        }
    }

    /// Degradation scale of trial `trial` (1..=3) in session `session` (1..=2).
    pub fn decay(&self, session: u8, trial: u8) -> f64 {
        let index = trial_index(session, trial);
        (1.0 - self.improvement_rate).powi(index as i32)
    }

    /// Multiplies every degradation by a log-normal factor of spread
    /// `spread`; bounded fields are clamped to their ranges.
    pub fn jittered(&self, spread: f64, rng: &mut impl RngCore) -> Self {
        let mut f = || {
            let z: f64 = StandardNormal.sample(rng);
            (spread * z).exp()
        };
        Self {
            base_noise: self.base_noise * f(),
            detour_amp: self.detour_amp * f(),
            approach_consistency: (1.0 - (1.0 - self.approach_consistency) * f()).clamp(0.0, 1.0),
            improvement_rate: (self.improvement_rate * f()).clamp(0.0, 1.0),
            collision_proneness: (self.collision_proneness * f()).clamp(0.0, 1.0),
        }
    }
}

pub const SESSIONS: u8 = 2;
pub const TRIALS_PER_FACE: u8 = 3;
pub const TARGETS_PER_FACE: usize = 9;
/// Demonstrations each demonstrator gives per session.
pub const DEMOS_PER_SESSION: usize = TRIALS_PER_FACE as usize * 2 * TARGETS_PER_FACE;

/// 0-based trial count across sessions.
pub fn trial_index(session: u8, trial: u8) -> u32 {
    u32::from(session.saturating_sub(1)) * u32::from(TRIALS_PER_FACE) + u32::from(trial.saturating_sub(1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortSpec {
    pub n_fast: usize,
    pub n_slow: usize,
    pub seed: u64,
    /// Log-normal spread of each demonstrator's profile around its group's.
    pub profile_spread: f64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_fast: 12,
            n_slow: 15,
            seed: 1,
            profile_spread: 0.15,
        }
    }
}

impl CohortSpec {
    pub fn demonstrators(&self) -> usize {
        self.n_fast + self.n_slow
    }

    pub fn total_demos(&self) -> usize {
        self.demonstrators() * SESSIONS as usize * DEMOS_PER_SESSION
    }
}

/// Generating group of a synthetic demonstrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    Fast,
    Slow,
}

impl Group {
    pub fn as_str(&self) -> &'static str {
        match self {
            Group::Fast => "fast",
            Group::Slow => "slow",
        }
    }
}

/// One synthetic participant.
#[derive(Clone, Debug, PartialEq)]
pub struct Demonstrator {
    pub name: String,
    pub group: Group,
    pub profile: DemonstratorProfile,
}

/// Identifies one trial: nine demonstrations on one face.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrialKey {
    pub demonstrator: String,
    pub session: u8,
    pub trial: u8,
    pub face: FaceId,
}

/// Demonstrations keyed by trial, iterated in sorted key order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cohort {
    pub demonstrators: Vec<Demonstrator>,
    pub trials: BTreeMap<TrialKey, DemoSet>,
    /// Demonstrations the arm could not follow to the end, by trial and
    /// target index.
    pub infeasible: Vec<(TrialKey, usize)>,
}

impl Cohort {
    pub fn extend(&mut self, trials: Vec<GeneratedTrial>) {
        for t in trials {
            self.infeasible.extend(t.infeasible.iter().map(|&i| (t.key.clone(), i)));
            self.trials.insert(t.key, t.set);
        }
        self.infeasible.sort();
    }

    pub fn total_demos(&self) -> usize {
        self.trials.values().map(DemoSet::len).sum()
    }
}

/// Mixes a base seed with a sequence of indices into a new seed
/// (splitmix64 finalizer per step).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h = h.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// The roster of a cohort: fast demonstrators first, names `p01`, `p02`, …
pub fn roster(spec: &CohortSpec, fast: &DemonstratorProfile, slow: &DemonstratorProfile) -> Result<Vec<Demonstrator>> {
    fast.validate()?;
    slow.validate()?;
    if !(spec.profile_spread >= 0.0) {
        return Err(Error::InvalidParameter("profile_spread must be >= 0".into()));
    }
    let width = if spec.demonstrators() >= 100 { 3 } else { 2 };
    Ok((0..spec.demonstrators())
        .map(|i| {
            let (group, base) = if i < spec.n_fast { (Group::Fast, fast) } else { (Group::Slow, slow) };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[i as u64]));
            Demonstrator {
                name: format!("p{:0width$}", i + 1),
                group,
                profile: base.jittered(spec.profile_spread, &mut rng),
            }
        })
        .collect())
}

/// Zero-phase low-pass of unit-RMS white noise: forward and backward
/// exponential smoothing, then rescaled to unit RMS.
fn smooth_noise(rng: &mut impl RngCore, n: usize, alpha: f64) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    for _ in 0..2 {
        for i in 1..n {
            x[i] = x[i - 1] + alpha * (x[i] - x[i - 1]);
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] = x[i + 1] + alpha * (x[i] - x[i + 1]);
        }
    }
    let mean = x.iter().sum::<f64>() / n.max(1) as f64;
    let rms = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v = (*v - mean) / rms);
    }
    x
}

fn random_unit(rng: &mut impl RngCore) -> Vec3 {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if v.norm() > 1e-9 {
            return v.normalize();
        }
    }
}

/// Smoothing factor of the wobble filter.
const NOISE_ALPHA: f64 = 0.08;

/// Degrades the Cartesian reference path the way the profile's demonstrator
/// would after `trial_index(session, trial)` trials of practice.
pub fn corrupt_cartesian(
    reference: &ReferencePath,
    world: &TaskWorld,
    profile: &DemonstratorProfile,
    session: u8,
    trial: u8,
    seed: u64,
) -> Vec<StatePoint> {
    let decay = profile.decay(session, trial);
    let noise = profile.base_noise * decay;
    let detour = profile.detour_amp * decay;
    let tilt_scale = (1.0 - profile.approach_consistency) * decay * MAX_APPROACH_TILT;
    if noise == 0.0 && detour == 0.0 && tilt_scale == 0.0 {
        return reference.cart.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cart = &reference.cart;
    let n = cart.len();
    let press = *reference.via.last().expect("reference has via points");
    let normal = world.face_normal(reference.target.face);

    // approach tilt about an axis in the face plane, phased in over the path
    let z: f64 = StandardNormal.sample(&mut rng);
    let tilt = tilt_scale * z;
    let axis = {
        let r = random_unit(&mut rng);
        let a = r - normal * r.dot(&normal);
        if a.norm() > 1e-9 { a.normalize() } else { normal.cross(&Vec3::x()).normalize() }
    };

    // detour: one smooth bump before the final approach
    let into_cube = (rng.next_u64() as f64 / u64::MAX as f64) < profile.collision_proneness;
    let z: f64 = StandardNormal.sample(&mut rng);
    let mid = cart[n / 2].position;
    let direction = if into_cube {
        (world.box_pose.position - mid).normalize()
    } else {
        random_unit(&mut rng)
    };
    let bump_amp = if into_cube { detour * (1.0 + z.abs()) } else { detour * z.abs() };
    // the approach segment starts where the orientation has settled
    let approach_start = cart
        .iter()
        .position(|p| p.orientation.angle_to(&cart[n - 1].orientation) < 1e-9)
        .unwrap_or(n - 1)
        .max(1);

    let wobble: Vec<Vec<f64>> = (0..6).map(|_| smooth_noise(&mut rng, n, NOISE_ALPHA)).collect();

    cart.iter()
        .enumerate()
        .map(|(i, p)| {
            let s = i as f64 / (n - 1) as f64;
            let turn = UnitQuaternion::from_axis_angle(&Unit::new_unchecked(axis), tilt * smoothstep(s / 0.6));
            let mut position = press + turn * (p.position - press);
            let mut orientation = turn * p.orientation;
            if i < approach_start {
                let b = (PI * i as f64 / approach_start as f64).sin();
                position += direction * (bump_amp * b * b);
            }
            // wobble fades in from the fixed start pose
            let env = smoothstep(s / 0.15);
            position += Vec3::new(wobble[0][i], wobble[1][i], wobble[2][i]) * (noise * env);
            let w = Vec3::new(wobble[3][i], wobble[4][i], wobble[5][i]) * (noise * env * ORIENTATION_NOISE_PER_M);
            orientation = UnitQuaternion::from_scaled_axis(w) * orientation;
            StatePoint::new(p.t, position, orientation)
        })
        .collect()
}

/// A synthetic demonstration plus whether the arm could follow it.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthDemo {
    pub demo: Demonstration,
    pub feasible: bool,
}

/// Degrades a reference path and re-solves the joints. Tracking failures are
/// kept: the arm holds its last configuration for the rest of the recording,
/// like a demonstrator stopped by a joint limit.
pub fn corrupt_path(
    chain: &KinematicChain,
    world: &TaskWorld,
    reference: &ReferencePath,
    profile: &DemonstratorProfile,
    meta: DemoMeta,
    seed: u64,
    cfg: &PlannerConfig,
) -> Result<SynthDemo> {
    profile.validate()?;
    let cart = corrupt_cartesian(reference, world, profile, meta.session, meta.trial, seed);
    if cart == reference.cart {
        let demo = Demonstration::from_joints(chain, reference.joint_samples(), meta)?;
        return Ok(SynthDemo { demo, feasible: true });
    }
    let q0 = chain.start_config();
    let params = ClikParams {
        limit_margin_min: cfg.demo_limit_margin,
        ..cfg.clik.clone()
    };
    let tracked = track_trajectory(chain, &q0, &cart, &[q0], &params)?;
    let mut joints: Vec<JointSample> = tracked
        .samples
        .iter()
        .zip(&cart)
        .map(|(s, c)| JointSample { t: c.t, q: s.q })
        .collect();
    let hold = joints.last().map_or(q0, |s| s.q);
    for c in &cart[joints.len()..] {
        joints.push(JointSample { t: c.t, q: hold });
    }
    let demo = Demonstration::from_joints(chain, joints, meta)?;
    Ok(SynthDemo {
        demo,
        feasible: tracked.feasible,
    })
}

/// One generated trial.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedTrial {
    pub key: TrialKey,
    pub set: DemoSet,
    /// Target indices of demonstrations the arm could not follow.
    pub infeasible: Vec<usize>,
}

/// Every demonstration of one demonstrator, trial by trial.
pub fn generate_demonstrator(
    chain: &KinematicChain,
    world: &TaskWorld,
    references: &[ReferencePath],
    who: &Demonstrator,
    seed: u64,
    cfg: &PlannerConfig,
) -> Result<Vec<GeneratedTrial>> {
    let mut out = Vec::with_capacity(SESSIONS as usize * TRIALS_PER_FACE as usize * 2);
    for session in 1..=SESSIONS {
        for trial in 1..=TRIALS_PER_FACE {
            for (f, face) in FaceId::ALL.into_iter().enumerate() {
                let mut demos = Vec::with_capacity(TARGETS_PER_FACE);
                let mut infeasible = Vec::new();
                for r in references.iter().filter(|r| r.target.face == face) {
                    let meta = DemoMeta {
                        target_id: r.target.index,
                        face,
                        session,
                        trial,
                        demonstrator: who.name.clone(),
                    };
                    let s = derive_seed(
                        seed,
                        &[u64::from(session), u64::from(trial), f as u64, r.target.index as u64],
                    );
                    let synth = corrupt_path(chain, world, r, &who.profile, meta, s, cfg)?;
                    if !synth.feasible {
                        infeasible.push(r.target.index);
                    }
                    demos.push(synth.demo);
                }
                let key = TrialKey {
                    demonstrator: who.name.clone(),
                    session,
                    trial,
                    face,
                };
                out.push(GeneratedTrial {
                    key,
                    set: DemoSet::new(demos),
                    infeasible,
                });
            }
        }
    }
    Ok(out)
}

/// Seed of the `index`-th demonstrator's demonstrations.
pub fn demonstrator_seed(spec: &CohortSpec, index: usize) -> u64 {
    derive_seed(spec.seed, &[u64::MAX, index as u64])
}

/// The whole cohort, generated serially; see [`generate_demonstrator`] for
/// the unit of parallel work.
pub fn generate_cohort(
    chain: &KinematicChain,
    world: &TaskWorld,
    spec: &CohortSpec,
    fast: &DemonstratorProfile,
    slow: &DemonstratorProfile,
    cfg: &PlannerConfig,
) -> Result<Cohort> {
    let demonstrators = roster(spec, fast, slow)?;
    let mut cohort = Cohort::default();
    if demonstrators.is_empty() {
        return Ok(cohort);
    }
    let references = plan_all_references(chain, world, cfg)?;
    for (i, who) in demonstrators.iter().enumerate() {
        let seed = demonstrator_seed(spec, i);
        cohort.extend(generate_demonstrator(chain, world, &references, who, seed, cfg)?);
    }
    cohort.demonstrators = demonstrators;
    Ok(cohort)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskworld::{TargetKind, Target};
    use crate::Vec3;

    fn setup() -> (KinematicChain, TaskWorld, PlannerConfig) {
        (KinematicChain::reference(), TaskWorld::reference(), PlannerConfig::default())
    }

    fn center(world: &TaskWorld, face: FaceId) -> Target {
        world.demonstrated_targets(face)[0]
    }

    fn meta(face: FaceId, session: u8, trial: u8) -> DemoMeta {
        DemoMeta {
            target_id: 0,
            face,
            session,
            trial,
            demonstrator: "p01".into(),
        }
    }

    #[test]
    fn center_buttons_plan_clean_paths() {
        let (chain, world, cfg) = setup();
        for face in FaceId::ALL {
            let target = center(&world, face);
            let path = plan_reference_path(&chain, &world, &target, &cfg).unwrap();
            assert!(path.joints.feasible);
            assert!(check_collisions(&chain, &path.joints, &world, &target).clear);
            let last = path.joints.samples.last().unwrap().q;
            assert!(goal_reached(&chain.forward_kinematics(&last), chain.tip_box(), &world, &target));
            let expected_via = if face == FaceId::High { 5 } else { 3 };
            assert_eq!(path.via.len(), expected_via);
        }
    }

    #[test]
    fn high_face_via_points_clear_the_cube() {
        let (chain, world, cfg) = setup();
        let path = plan_reference_path(&chain, &world, &center(&world, FaceId::High), &cfg).unwrap();
        let cube = world.cube();
        // the over-the-top point keeps the configured clearance from the cube
        assert!(cube.point_distance(&path.via[1]) >= cfg.clearance - 1e-12);
    }

    #[test]
    fn target_behind_the_robot_has_no_plan() {
        let (chain, world, cfg) = setup();
        let mut target = center(&world, FaceId::Low);
        target.position = Vec3::new(-1.0, 0.0, 0.0);
        target.kind = TargetKind::Grid;
        assert!(matches!(
            plan_reference_path(&chain, &world, &target, &cfg),
            Err(Error::NoFeasiblePlan(_))
        ));
    }

    #[test]
    fn zero_profile_reproduces_the_reference() {
        let (chain, world, cfg) = setup();
        let reference = plan_reference_path(&chain, &world, &center(&world, FaceId::High), &cfg).unwrap();
        let synth = corrupt_path(&chain, &world, &reference, &DemonstratorProfile::zero(), meta(FaceId::High, 1, 1), 7, &cfg)
            .unwrap();
        assert!(synth.feasible);
        for (a, b) in synth.demo.joint_traj.iter().zip(reference.joint_samples()) {
            assert_eq!(a.t, b.t);
            assert!((a.q.as_vector() - b.q.as_vector()).abs().max() < 1e-9);
        }
    }

    #[test]
    fn corruption_is_deterministic_per_seed() {
        let (chain, world, cfg) = setup();
        let reference = plan_reference_path(&chain, &world, &center(&world, FaceId::Low), &cfg).unwrap();
        let p = DemonstratorProfile::slow_default();
        let a = corrupt_path(&chain, &world, &reference, &p, meta(FaceId::Low, 1, 2), 99, &cfg).unwrap();
        let b = corrupt_path(&chain, &world, &reference, &p, meta(FaceId::Low, 1, 2), 99, &cfg).unwrap();
        let c = corrupt_path(&chain, &world, &reference, &p, meta(FaceId::Low, 1, 2), 100, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.demo.joint_traj, c.demo.joint_traj);
        assert_eq!(a.demo.len(), reference.cart.len());
    }

    #[test]
    fn corrupted_paths_start_at_the_start_pose() {
        let (chain, world, cfg) = setup();
        let reference = plan_reference_path(&chain, &world, &center(&world, FaceId::High), &cfg).unwrap();
        let cart = corrupt_cartesian(&reference, &world, &DemonstratorProfile::slow_default(), 1, 1, 5);
        assert!((cart[0].position - reference.cart[0].position).norm() < 1e-12);
        assert!(cart[0].orientation.angle_to(&reference.cart[0].orientation) < 1e-12);
    }

    fn mean_deviation(reference: &ReferencePath, world: &TaskWorld, p: &DemonstratorProfile, session: u8, trial: u8, seed: u64) -> f64 {
        let cart = corrupt_cartesian(reference, world, p, session, trial, seed);
        cart.iter()
            .zip(&reference.cart)
            .map(|(a, b)| (a.position - b.position).norm())
            .sum::<f64>()
            / cart.len() as f64
    }

    #[test]
    fn degradation_shrinks_with_practice() {
        let (chain, world, cfg) = setup();
        let reference = plan_reference_path(&chain, &world, &center(&world, FaceId::Low), &cfg).unwrap();
        let p = DemonstratorProfile::slow_default();
        let trials: Vec<(u8, u8)> = (1..=2).flat_map(|s| (1..=3).map(move |t| (s, t))).collect();
        let means: Vec<f64> = trials
            .iter()
            .map(|&(s, t)| (0..24).map(|seed| mean_deviation(&reference, &world, &p, s, t, seed)).sum::<f64>() / 24.0)
            .collect();
        for w in means.windows(2) {
            assert!(w[1] <= w[0], "{means:?}");
        }
        // the same seed with more practice deviates less in most cases
        let wins = (0..24)
            .filter(|&seed| {
                mean_deviation(&reference, &world, &p, 2, 3, seed) < mean_deviation(&reference, &world, &p, 1, 1, seed)
            })
            .count();
        assert!(wins >= 20, "{wins}/24");
    }

    #[test]
    fn decay_counts_trials_across_sessions() {
        let p = DemonstratorProfile {
            improvement_rate: 0.5,
            ..DemonstratorProfile::zero()
        };
        assert_eq!(p.decay(1, 1), 1.0);
        assert_eq!(p.decay(1, 3), 0.25);
        assert_eq!(p.decay(2, 1), 0.125);
        assert_eq!(trial_index(2, 3), 5);
    }

    #[test]
    fn profiles_are_validated() {
        assert!(DemonstratorProfile::fast_default().validate().is_ok());
        assert!(DemonstratorProfile::slow_default().validate().is_ok());
        let bad = DemonstratorProfile {
            approach_consistency: 1.5,
            ..DemonstratorProfile::zero()
        };
        assert!(bad.validate().is_err());
        let bad = DemonstratorProfile {
            base_noise: -0.1,
            ..DemonstratorProfile::zero()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn smooth_noise_has_unit_rms_and_is_smooth() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = smooth_noise(&mut rng, 400, NOISE_ALPHA);
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / 400.0).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
        let step = x.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(step < 0.5, "{step}");
    }

    #[test]
    fn empty_spec_gives_empty_cohort() {
        let (chain, world, cfg) = setup();
        let spec = CohortSpec {
            n_fast: 0,
            n_slow: 0,
            ..CohortSpec::default()
        };
        let cohort =
            generate_cohort(&chain, &world, &spec, &DemonstratorProfile::fast_default(), &DemonstratorProfile::slow_default(), &cfg)
                .unwrap();
        assert!(cohort.trials.is_empty());
        assert_eq!(cohort.total_demos(), 0);
    }

    #[test]
    fn roster_names_and_groups() {
        let spec = CohortSpec {
            n_fast: 2,
            n_slow: 1,
            ..CohortSpec::default()
        };
        let r = roster(&spec, &DemonstratorProfile::fast_default(), &DemonstratorProfile::slow_default()).unwrap();
        let names: Vec<&str> = r.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["p01", "p02", "p03"]);
        assert_eq!(r[1].group, Group::Fast);
        assert_eq!(r[2].group, Group::Slow);
        assert_ne!(r[0].profile, r[1].profile);
        assert_eq!(spec.total_demos(), 3 * 108);
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 1, 1, 0, 3]);
        assert_ne!(a, derive_seed(1, &[0, 1, 1, 0, 4]));
        assert_ne!(a, derive_seed(2, &[0, 1, 1, 0, 3]));
        assert_ne!(derive_seed(1, &[1, 0]), derive_seed(1, &[0, 1]));
        assert_eq!(a, derive_seed(1, &[0, 1, 1, 0, 3]));
    }
}
