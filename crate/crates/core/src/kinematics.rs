//! Serial 7-DoF arm described by standard Denavit–Hartenberg rows.
//!
//! Each row `i` maps frame `i-1` to frame `i` as `Rz(θ₀+qᵢ)·Tz(d)·Tx(a)·Rx(α)`;
//! joint `i` rotates about the z axis of frame `i-1`. The tool frame sits at
//! the center of the tip box, `tip_box.offset` metres along the z axis of the
//! last DH frame (the flange).

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use nalgebra::{Isometry3, SMatrix, SVector, Translation3, UnitQuaternion};
// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::Capsule;
use crate::{Error, Quat, Result, Vec3, DOF};

pub type Jacobian = SMatrix<f64, 6, DOF>;
pub type JointVector = SVector<f64, DOF>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta0: f64,
}

impl DhRow {
    pub const fn new(a: f64, alpha: f64, d: f64, theta0: f64) -> Self {
        Self { a, alpha, d, theta0 }
    }

    fn transform(&self, q: f64) -> Isometry3<f64> {
        let theta = self.theta0 + q;
        let (st, ct) = Float::sin_cos(theta);
        let rot = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), theta)
            * UnitQuaternion::from_axis_angle(&Vec3::x_axis(), self.alpha);
        Isometry3::from_parts(Translation3::new(self.a * ct, self.a * st, self.d), rot)
    }
}

/// Tip (fingertip block) dimensions in the tool frame, metres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TipBox {
    /// Extent along tool x.
    pub width: f64,
    /// Extent along tool y.
    pub length: f64,
    /// Extent along tool z, the approach axis.
    pub height: f64,
    /// Distance from the flange to the box center along the flange z axis.
    pub offset: f64,
}

impl TipBox {
    pub fn half_extents(&self) -> Vec3 {
        Vec3::new(self.width, self.length, self.height) * 0.5
    }

    /// Full space diagonal of the box.
    pub fn diagonal(&self) -> f64 {
        (self.width * self.width + self.length * self.length + self.height * self.height).sqrt()
    }
}

impl Default for TipBox {
    fn default() -> Self {
        Self {
            width: 0.021,
            length: 0.022,
            height: 0.035,
            offset: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointConfig(pub [f64; DOF]);

impl JointConfig {
    pub const fn zeros() -> Self {
        Self([0.0; DOF])
    }

    pub fn from_vector(v: &JointVector) -> Self {
        let mut q = [0.0; DOF];
        q.copy_from_slice(v.as_slice());
        Self(q)
    }

    pub fn as_vector(&self) -> JointVector {
        JointVector::from_row_slice(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn lerp(&self, other: &Self, s: f64) -> Self {
        let mut out = *self;
        for (o, b) in out.0.iter_mut().zip(other.0.iter()) {
            *o += (b - *o) * s;
        }
        out
    }
}

impl Index<usize> for JointConfig {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for JointConfig {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quat) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vec3::zeros(), Quat::identity())
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self::new(iso.translation.vector, iso.rotation)
    }

    /// Maps a point expressed in this frame to the parent frame.
    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation * p + self.position
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KinematicChain {
    dh: [DhRow; DOF],
    limits: [(f64, f64); DOF],
    link_radii: [f64; DOF],
    tip_box: TipBox,
    start_config: JointConfig,
}

impl KinematicChain {
    pub fn new(
        dh: [DhRow; DOF],
        limits: [(f64, f64); DOF],
        link_radii: [f64; DOF],
        tip_box: TipBox,
        start_config: JointConfig,
    ) -> Result<Self> {
        for (i, row) in dh.iter().enumerate() {
            if ![row.a, row.alpha, row.d, row.theta0].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidChain(format!("DH row {} is not finite", i + 1)));
            }
        }
        for (i, &(lo, hi)) in limits.iter().enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidChain(format!(
                    "joint {} limits must satisfy lower < upper, got ({lo}, {hi})",
                    i + 1
                )));
            }
        }
        if let Some(i) = link_radii.iter().position(|r| !(*r > 0.0)) {
            return Err(Error::InvalidChain(format!("link {} radius must be > 0", i + 1)));
        }
        let t = &tip_box;
        if !(t.width > 0.0 && t.length > 0.0 && t.height > 0.0 && t.offset >= 0.0) {
            return Err(Error::InvalidChain("tip box dimensions must be positive".into()));
        }
        if !start_config.is_finite() {
            return Err(Error::InvalidChain("start configuration is not finite".into()));
        }
        Ok(Self {
            dh,
            limits,
            link_radii,
            tip_box,
            start_config,
        })
    }

    /// The bundled PR2-right-arm-like chain. Base frame at the shoulder pan
    /// joint, x forward, z up. Link lengths follow the published PR2 arm
    /// (0.1 m shoulder offset, 0.4 m upper arm, 0.321 m forearm, 0.18 m
    /// wrist-to-tip); limits and collision radii are stand-ins.
    #[allow(clippy::approx_constant)] // limits are datasheet values, not -π/6
    pub fn reference() -> Self {
        use core::f64::consts::{FRAC_PI_2, PI};
        let dh = [
            DhRow::new(0.1, -FRAC_PI_2, 0.0, 0.0),
            DhRow::new(0.0, FRAC_PI_2, 0.0, FRAC_PI_2),
            DhRow::new(0.0, -FRAC_PI_2, 0.4, 0.0),
            DhRow::new(0.0, FRAC_PI_2, 0.0, 0.0),
            DhRow::new(0.0, -FRAC_PI_2, 0.321, 0.0),
            DhRow::new(0.0, FRAC_PI_2, 0.0, 0.0),
            DhRow::new(0.0, 0.0, 0.12, 0.0),
        ];
        let limits = [
            (-2.2854, 0.7146),
            (-0.5236, 1.3963),
            (-3.9, 0.8),
            (-2.3213, 0.0),
            (-PI, PI),
            (-2.18, 0.0),
            (-PI, PI),
        ];
        let link_radii = [0.06, 0.06, 0.06, 0.06, 0.05, 0.05, 0.03];
        let tip_box = TipBox {
            offset: 0.06,
            ..TipBox::default()
        };
        let start = JointConfig([-0.8, 0.0, -0.3, -2.0, 0.0, -1.3, 0.0]);
        Self::new(dh, limits, link_radii, tip_box, start).expect("reference chain is valid")
    }

    pub fn dh(&self) -> &[DhRow; DOF] {
        &self.dh
    }

    pub fn limits(&self) -> &[(f64, f64); DOF] {
        &self.limits
    }

    pub fn link_radii(&self) -> &[f64; DOF] {
        &self.link_radii
    }

    pub fn tip_box(&self) -> &TipBox {
        &self.tip_box
    }

    /// The "untucked" configuration every demonstration starts from.
    pub fn start_config(&self) -> JointConfig {
        self.start_config
    }

    pub fn midrange(&self) -> JointConfig {
        let mut q = JointConfig::zeros();
        for (i, (lo, hi)) in self.limits.iter().enumerate() {
            q[i] = 0.5 * (lo + hi);
        }
        q
    }

    /// Frames 0..=7 of the DH chain (base, after each joint). Frame 7 is the flange.
    pub fn joint_frames(&self, q: &JointConfig) -> [Isometry3<f64>; DOF + 1] {
        let mut frames = [Isometry3::identity(); DOF + 1];
        for i in 0..DOF {
            frames[i + 1] = frames[i] * self.dh[i].transform(q[i]);
        }
        frames
    }

    fn tool_from_flange(&self, flange: &Isometry3<f64>) -> Isometry3<f64> {
        flange * Translation3::new(0.0, 0.0, self.tip_box.offset)
    }

    pub fn forward_kinematics(&self, q: &JointConfig) -> Pose {
        let frames = self.joint_frames(q);
        Pose::from_isometry(&self.tool_from_flange(&frames[DOF]))
    }

    /// Geometric Jacobian of the tool frame: rows 0..3 linear, 3..6 angular.
    pub fn jacobian(&self, q: &JointConfig) -> Jacobian {
        let frames = self.joint_frames(q);
        self.jacobian_from_frames(&frames)
    }

    /// Jacobian and tool pose from a single pass over the chain.
    pub fn jacobian_and_pose(&self, q: &JointConfig) -> (Jacobian, Pose) {
        let frames = self.joint_frames(q);
        let tool = self.tool_from_flange(&frames[DOF]);
        (self.jacobian_from_frames(&frames), Pose::from_isometry(&tool))
    }

    fn jacobian_from_frames(&self, frames: &[Isometry3<f64>; DOF + 1]) -> Jacobian {
        let tip = self.tool_from_flange(&frames[DOF]).translation.vector;
        let mut jac = Jacobian::zeros();
        for i in 0..DOF {
            let z = frames[i].rotation * Vec3::z();
            let lin = z.cross(&(tip - frames[i].translation.vector));
            jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
        }
        jac
    }

    /// Collision capsules: one per link between consecutive joint origins,
    /// then one bounding the tip box.
    pub fn link_capsules(&self, q: &JointConfig) -> Vec<Capsule> {
        let frames = self.joint_frames(q);
        let mut out = Vec::with_capacity(DOF + 1);
        for i in 0..DOF {
            out.push(Capsule::new(
                frames[i].translation.vector,
                frames[i + 1].translation.vector,
                self.link_radii[i],
            ));
        }
        let tool = self.tool_from_flange(&frames[DOF]);
        let axis = tool.rotation * Vec3::z() * (0.5 * self.tip_box.height);
        let center = tool.translation.vector;
        let t = &self.tip_box;
        let radius = 0.5 * (t.width * t.width + t.length * t.length).sqrt();
        out.push(Capsule::new(center - axis, center + axis, radius));
        out
    }

    /// Per joint `min(q - lower, upper - q)`; negative means the limit is violated.
    pub fn limit_margin(&self, q: &JointConfig) -> [f64; DOF] {
        let mut m = [0.0; DOF];
        for (i, (lo, hi)) in self.limits.iter().enumerate() {
            m[i] = (q[i] - lo).min(hi - q[i]);
        }
        m
    }

    pub fn min_limit_margin(&self, q: &JointConfig) -> f64 {
        self.limit_margin(q)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}
