//! Demonstration records, the Cartesian state representation learned from,
//! and time alignment of demonstration sets.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::SVector;
// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::kinematics::{JointConfig, KinematicChain};
use crate::quat::{from_wxyz, same_hemisphere, to_wxyz};
use crate::{Error, Quat, Result, Vec3};

/// Dimension of the learned state: time, position, quaternion.
pub const STATE_DIM: usize = 8;
pub type StateVector = SVector<f64, STATE_DIM>;

/// Default number of samples per aligned demonstration.
pub const DEFAULT_ALIGNED_LENGTH: usize = 100;

/// One state `(t, x, ε)`; `t` is seconds for raw recordings and phase in
/// `[0, 1]` after alignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatePoint {
    pub t: f64,
    pub position: Vec3,
    pub orientation: Quat,
}

impl StatePoint {
    pub fn new(t: f64, position: Vec3, orientation: Quat) -> Self {
        Self {
            t,
            position,
            orientation,
        }
    }

    /// `[t, x, y, z, w, qx, qy, qz]`, the quaternion kept in the stored sign.
    pub fn to_vector(&self) -> StateVector {
        let q = to_wxyz(&self.orientation);
        StateVector::from_column_slice(&[
            self.t,
            self.position.x,
            self.position.y,
            self.position.z,
            q[0],
            q[1],
            q[2],
            q[3],
        ])
    }

    /// Inverse of [`to_vector`](Self::to_vector); the quaternion part is renormalized.
    pub fn from_vector(v: &StateVector) -> Self {
        Self {
            t: v[0],
            position: Vec3::new(v[1], v[2], v[3]),
            orientation: from_wxyz([v[4], v[5], v[6], v[7]]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaceId {
    Low,
    High,
}

impl FaceId {
    pub const ALL: [FaceId; 2] = [FaceId::Low, FaceId::High];

    pub fn as_str(&self) -> &'static str {
        match self {
            FaceId::Low => "low",
            FaceId::High => "high",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(FaceId::Low),
            "high" => Ok(FaceId::High),
            other => Err(Error::UnknownFace(other.into())),
        }
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DemoMeta {
    pub target_id: usize,
    pub face: FaceId,
    /// 1 or 2.
    pub session: u8,
    /// 1..=3 within a session.
    pub trial: u8,
    pub demonstrator: alloc::string::String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointSample {
    pub t: f64,
    pub q: JointConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration {
    pub joint_traj: Vec<JointSample>,
    pub cart_traj: Vec<StatePoint>,
    pub meta: DemoMeta,
}

impl Demonstration {
    /// Builds a demonstration from its joint recording, deriving the
    /// Cartesian states through forward kinematics.
    pub fn from_joints(chain: &KinematicChain, joint_traj: Vec<JointSample>, meta: DemoMeta) -> Result<Self> {
        let cart_traj = derive_states(chain, &joint_traj)?;
        Ok(Self {
            joint_traj,
            cart_traj,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.cart_traj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cart_traj.is_empty()
    }

    pub fn final_position(&self) -> Option<Vec3> {
        self.cart_traj.last().map(|s| s.position)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoSet {
    pub demos: Vec<Demonstration>,
}

impl DemoSet {
    pub fn new(demos: Vec<Demonstration>) -> Self {
        Self { demos }
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    /// Common length of all demonstrations, if they share one.
    pub fn aligned_length(&self) -> Option<usize> {
        let first = self.demos.first()?.len();
        self.demos.iter().all(|d| d.len() == first).then_some(first)
    }

    /// True when every demonstration has exactly `len` samples stamped on the
    /// uniform phase grid `k / (len - 1)`.
    pub fn is_phase_aligned(&self, len: usize) -> bool {
        len >= 2
            && self.demos.iter().all(|d| {
                d.len() == len
                    && d.joint_traj.len() == len
                    && d.cart_traj.iter().enumerate().all(|(k, s)| s.t == phase(k, len))
            })
    }
}

fn phase(k: usize, len: usize) -> f64 {
    k as f64 / (len - 1) as f64
}

pub fn check_monotonic(times: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for (index, t) in times.into_iter().enumerate() {
        if !(t > prev) {
            return Err(Error::NonMonotonicTime { index });
        }
        prev = t;
    }
    Ok(())
}

/// Forward kinematics per sample, with quaternion signs chosen so that
/// consecutive quaternions have a non-negative dot product.
pub fn derive_states(chain: &KinematicChain, joint_traj: &[JointSample]) -> Result<Vec<StatePoint>> {
    check_monotonic(joint_traj.iter().map(|s| s.t))?;
    let mut out: Vec<StatePoint> = Vec::with_capacity(joint_traj.len());
    for s in joint_traj {
        let pose = chain.forward_kinematics(&s.q);
        let orientation = match out.last() {
            Some(prev) => same_hemisphere(&prev.orientation, pose.orientation),
            None => pose.orientation,
        };
        out.push(StatePoint::new(s.t, pose.position, orientation));
    }
    Ok(out)
}

/// Dynamic time warping on positions. Returns the accumulated cost and the
/// optimal warping path as `(reference index, query index)` pairs from
/// `(0, 0)` to `(n-1, m-1)`. Ties prefer the diagonal step.
pub fn dtw_path(reference: &[Vec3], query: &[Vec3]) -> (f64, Vec<(usize, usize)>) {
    let (n, m) = (reference.len(), query.len());
    debug_assert!(n > 0 && m > 0);
    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let cost = (reference[i] - query[j]).norm();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[at(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[at(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[at(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = cost + best;
        }
    }
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        let step = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        (i, j) = step;
        path.push(step);
    }
    path.reverse();
    (acc[at(n - 1, m - 1)], path)
}

/// Index of the demonstration with the smallest summed DTW cost to all
/// others (lowest index on ties).
pub fn medoid_index(demos: &[Demonstration]) -> usize {
    let positions: Vec<Vec<Vec3>> = demos
        .iter()
        .map(|d| d.cart_traj.iter().map(|s| s.position).collect())
        .collect();
    let n = positions.len();
    let mut cost = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let c = dtw_path(&positions[a], &positions[b]).0;
            cost[a * n + b] = c;
            cost[b * n + a] = c;
        }
    }
    let mut best = (0, f64::INFINITY);
    for a in 0..n {
        let total: f64 = cost[a * n..(a + 1) * n].iter().sum();
        if total < best.1 {
            best = (a, total);
        }
    }
    best.0
}

/// Warps every demonstration onto exactly `target_length` samples.
///
/// Each demonstration is DTW-matched (Euclidean cost on position) against
/// the medoid demonstration, and its samples are read off the warping path
/// at `target_length` uniformly spaced path positions; joint and Cartesian
/// channels are warped together. Time becomes normalized phase. A set that
/// is already on the phase grid of `target_length` is returned unchanged.
pub fn dtw_align(set: &DemoSet, target_length: usize) -> Result<DemoSet> {
    if target_length < 2 {
        return Err(Error::InvalidParameter("aligned length must be at least 2".into()));
    }
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    for (index, d) in set.demos.iter().enumerate() {
        if d.len() < 2 {
            return Err(Error::EmptyDemonstration { index });
        }
        if d.joint_traj.len() != d.cart_traj.len() {
            return Err(Error::LengthMismatch {
                left: d.joint_traj.len(),
                right: d.cart_traj.len(),
            });
        }
    }
    if set.is_phase_aligned(target_length) {
        return Ok(set.clone());
    }

    let medoid = medoid_index(&set.demos);
    let reference: Vec<Vec3> = set.demos[medoid].cart_traj.iter().map(|s| s.position).collect();
    let demos = set
        .demos
        .iter()
        .map(|d| {
            let query: Vec<Vec3> = d.cart_traj.iter().map(|s| s.position).collect();
            let (_, path) = dtw_path(&reference, &query);
            resample_along_path(d, &path, target_length)
        })
        .collect();
    Ok(DemoSet { demos })
}

fn resample_along_path(demo: &Demonstration, path: &[(usize, usize)], len: usize) -> Demonstration {
    let last = (path.len() - 1) as f64;
    let mut joint_traj = Vec::with_capacity(len);
    let mut cart_traj: Vec<StatePoint> = Vec::with_capacity(len);
    for k in 0..len {
        let t = phase(k, len);
        let s = t * last;
        let lo = (s.floor() as usize).min(path.len() - 1);
        let hi = (lo + 1).min(path.len() - 1);
        let frac = s - lo as f64;
        let (ja, jb) = (path[lo].1, path[hi].1);

        let (ca, cb) = (&demo.cart_traj[ja], &demo.cart_traj[jb]);
        let (position, orientation) = if frac == 0.0 || ja == jb {
            (ca.position, ca.orientation)
        } else {
            let p = ca.position + (cb.position - ca.position) * frac;
            let qa = ca.orientation.coords;
            let qb = same_hemisphere(&ca.orientation, cb.orientation).coords;
            let v = qa + (qb - qa) * frac;
            (p, Quat::from_quaternion(nalgebra::Quaternion::from(v)))
        };
        let orientation = match cart_traj.last() {
            Some(prev) => same_hemisphere(&prev.orientation, orientation),
            None => orientation,
        };
        cart_traj.push(StatePoint::new(t, position, orientation));

        let q = if frac == 0.0 || ja == jb {
            demo.joint_traj[ja].q
        } else {
            demo.joint_traj[ja].q.lerp(&demo.joint_traj[jb].q, frac)
        };
        joint_traj.push(JointSample { t, q });
    }
    Demonstration {
        joint_traj,
        cart_traj,
        meta: demo.meta.clone(),
    }
}

/// Plain uniform-in-time resampling to `len` samples (linear interpolation
/// over sample index); the baseline alignment is compared against.
pub fn uniform_resample(demo: &Demonstration, len: usize) -> Demonstration {
    let n = demo.len();
    let path: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    resample_along_path(demo, &path, len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::KinematicChain;
    use alloc::string::ToString;

    fn meta() -> DemoMeta {
        DemoMeta {
            target_id: 0,
            face: FaceId::Low,
            session: 1,
            trial: 1,
            demonstrator: "u00".to_string(),
        }
    }

    fn sweep(chain: &KinematicChain, n: usize, joint: usize, span: f64) -> Demonstration {
        let q0 = chain.start_config();
        let traj = (0..n)
            .map(|i| {
                let mut q = q0;
                q[joint] += span * i as f64 / (n.max(2) - 1) as f64;
                JointSample { t: 0.1 * i as f64, q }
            })
            .collect();
        Demonstration::from_joints(chain, traj, meta()).unwrap()
    }

    #[test]
    fn constant_trajectory_gives_constant_state() {
        let chain = KinematicChain::reference();
        let demo = sweep(&chain, 10, 0, 0.0);
        for s in &demo.cart_traj {
            assert_eq!(s.position, demo.cart_traj[0].position);
            assert_eq!(s.orientation, demo.cart_traj[0].orientation);
        }
    }

    #[test]
    fn quaternions_stay_in_one_hemisphere() {
        let chain = KinematicChain::reference();
        let demo = sweep(&chain, 200, 6, 6.0);
        for w in demo.cart_traj.windows(2) {
            assert!(w[0].orientation.coords.dot(&w[1].orientation.coords) >= 0.0);
        }
    }

    #[test]
    fn rejects_non_monotonic_time() {
        let chain = KinematicChain::reference();
        let q = chain.start_config();
        let traj = vec![
            JointSample { t: 0.0, q },
            JointSample { t: 0.2, q },
            JointSample { t: 0.2, q },
        ];
        assert_eq!(
            derive_states(&chain, &traj),
            Err(Error::NonMonotonicTime { index: 2 })
        );
    }

    #[test]
    fn self_alignment_is_identity() {
        let chain = KinematicChain::reference();
        let demo = sweep(&chain, 37, 1, 0.5);
        let set = DemoSet::new(vec![demo.clone()]);
        let out = dtw_align(&set, 37).unwrap();
        for (a, b) in out.demos[0].cart_traj.iter().zip(&demo.cart_traj) {
            assert!((a.position - b.position).norm() < 1e-12);
        }
        assert_eq!(out.demos[0].cart_traj.last().unwrap().t, 1.0);
    }

    #[test]
    fn identical_copies_align_identically() {
        let chain = KinematicChain::reference();
        let demo = sweep(&chain, 50, 2, 0.8);
        let out = dtw_align(&DemoSet::new(vec![demo.clone(), demo]), 100).unwrap();
        assert_eq!(out.demos[0].cart_traj, out.demos[1].cart_traj);
        assert_eq!(out.demos[0].joint_traj, out.demos[1].joint_traj);
    }

    #[test]
    fn aligned_sets_are_left_alone() {
        let chain = KinematicChain::reference();
        let set = DemoSet::new(vec![sweep(&chain, 41, 0, 0.4), sweep(&chain, 63, 3, -0.6)]);
        let once = dtw_align(&set, 80).unwrap();
        assert!(once.is_phase_aligned(80));
        let twice = dtw_align(&once, 80).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn too_short_demonstration() {
        let chain = KinematicChain::reference();
        let set = DemoSet::new(vec![sweep(&chain, 10, 0, 0.4), sweep(&chain, 1, 0, 0.0)]);
        assert_eq!(dtw_align(&set, 20), Err(Error::EmptyDemonstration { index: 1 }));
    }
}
