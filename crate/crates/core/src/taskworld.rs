//! The button box: a cube with two instrumented faces, the demonstrated and
//! generalization target sets, the goal-sphere test and collision checks.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Rotation3};
// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::clik::JointTrajectory;
use crate::demonstrations::FaceId;
use crate::geometry::{Capsule, OrientedBox};
use crate::kinematics::{KinematicChain, Pose, TipBox};
use crate::{Error, Quat, Result, Vec3, DOF};

/// A face of the cube, named by its outward normal in the cube frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CubeFace {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl CubeFace {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "+x" => CubeFace::PosX,
            "-x" => CubeFace::NegX,
            "+y" => CubeFace::PosY,
            "-y" => CubeFace::NegY,
            "+z" => CubeFace::PosZ,
            "-z" => CubeFace::NegZ,
            other => return Err(Error::UnknownFace(other.to_string())),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CubeFace::PosX => "+x",
            CubeFace::NegX => "-x",
            CubeFace::PosY => "+y",
            CubeFace::NegY => "-y",
            CubeFace::PosZ => "+z",
            CubeFace::NegZ => "-z",
        }
    }

    /// `(u, v, n)` in the cube frame, right-handed (`u × v = n`).
    pub fn axes(&self) -> (Vec3, Vec3, Vec3) {
        let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
        match self {
            CubeFace::PosX => (y, z, x),
            CubeFace::NegX => (-y, z, -x),
            CubeFace::PosY => (-x, z, y),
            CubeFace::NegY => (x, z, -y),
            CubeFace::PosZ => (x, y, z),
            CubeFace::NegZ => (x, -y, -z),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Demonstrated,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Target {
    pub face: FaceId,
    /// Index within its target set.
    pub index: usize,
    /// Face coordinates in `[0, edge]²`, origin at a face corner.
    pub uv: [f64; 2],
    /// Button center in the robot base frame.
    pub position: Vec3,
    pub kind: TargetKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskWorld {
    /// Cube center and orientation in the robot base frame.
    pub box_pose: Pose,
    pub edge: f64,
    pub low_face: CubeFace,
    pub high_face: CubeFace,
    /// Radius of the goal sphere around each button, m.
    pub goal_radius: f64,
    /// Inset of the corner buttons from the face edges, m.
    pub corner_inset: f64,
}

impl TaskWorld {
    pub fn new(
        box_pose: Pose,
        edge: f64,
        low_face: CubeFace,
        high_face: CubeFace,
        goal_radius: f64,
        corner_inset: f64,
    ) -> Result<Self> {
        if !(edge > 0.0) || !(goal_radius > 0.0) {
            return Err(Error::InvalidParameter("edge and goal radius must be > 0".into()));
        }
        if low_face == high_face {
            return Err(Error::InvalidParameter("the two instrumented faces must differ".into()));
        }
        if !(corner_inset >= 0.0 && corner_inset < 0.5 * edge) {
            return Err(Error::InvalidParameter("corner inset must lie in [0, edge/2)".into()));
        }
        Ok(Self {
            box_pose,
            edge,
            low_face,
            high_face,
            goal_radius,
            corner_inset,
        })
    }

    /// The bundled placement used with [`KinematicChain::reference`]: a
    /// 26 cm cube in front of and below the right shoulder. The low-constraint
    /// face looks back at the robot; the high-constraint face is the side
    /// facing the robot's midline, approached over the top edge.
    pub fn reference() -> Self {
        Self::new(
            Pose::new(Vec3::new(0.60, -0.47, -0.22), Quat::identity()),
            0.26,
            CubeFace::NegX,
            CubeFace::PosY,
            0.015,
            0.02,
        )
        .expect("reference world is valid")
    }

    pub fn cube_face(&self, face: FaceId) -> CubeFace {
        match face {
            FaceId::Low => self.low_face,
            FaceId::High => self.high_face,
        }
    }

    pub fn cube(&self) -> OrientedBox {
        OrientedBox::new(self.box_pose, Vec3::repeat(0.5 * self.edge))
    }

    /// Face axes `(u, v, n)` in the base frame.
    pub fn face_axes(&self, face: FaceId) -> (Vec3, Vec3, Vec3) {
        let (u, v, n) = self.cube_face(face).axes();
        let r = &self.box_pose.orientation;
        (r * u, r * v, r * n)
    }

    /// Outward unit normal of a face in the base frame.
    pub fn face_normal(&self, face: FaceId) -> Vec3 {
        self.face_axes(face).2
    }

    /// Base-frame point of face coordinates `uv`.
    pub fn face_point(&self, face: FaceId, uv: [f64; 2]) -> Vec3 {
        let (u, v, n) = self.face_axes(face);
        let h = 0.5 * self.edge;
        self.box_pose.position + n * h + u * (uv[0] - h) + v * (uv[1] - h)
    }

    /// Orientation whose x, y, z axes are the face's u, v and outward normal.
    pub fn face_orientation(&self, face: FaceId) -> Quat {
        let (u, v, n) = self.face_axes(face);
        let m = Matrix3::from_columns(&[u, v, n]);
        Quat::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
    }

    /// Task frame of a target: origin at the button, axes from the face.
    pub fn target_frame(&self, target: &Target) -> Pose {
        Pose::new(target.position, self.face_orientation(target.face))
    }

    fn target(&self, face: FaceId, index: usize, uv: [f64; 2], kind: TargetKind) -> Target {
        Target {
            face,
            index,
            uv,
            position: self.face_point(face, uv),
            kind,
        }
    }

    /// Center, the four inset corners, then the four corner–center midpoints
    /// (in the same corner order).
    pub fn demonstrated_targets(&self, face: FaceId) -> Vec<Target> {
        let e = self.edge;
        let c = 0.5 * e;
        let i = self.corner_inset;
        let corners = [[i, i], [e - i, i], [i, e - i], [e - i, e - i]];
        let mut uvs = Vec::with_capacity(9);
        uvs.push([c, c]);
        uvs.extend(corners);
        uvs.extend(corners.iter().map(|p| [0.5 * (p[0] + c), 0.5 * (p[1] + c)]));
        uvs.into_iter()
            .enumerate()
            .map(|(k, uv)| self.target(face, k, uv, TargetKind::Demonstrated))
            .collect()
    }

    /// Interior 7×7 grid at `(i·edge/8, j·edge/8)`, `i, j ∈ 1..=7`, row-major in `i`.
    pub fn generalization_grid(&self, face: FaceId) -> Vec<Target> {
        let step = self.edge / 8.0;
        let mut out = Vec::with_capacity(49);
        for i in 1..=7 {
            for j in 1..=7 {
                let uv = [i as f64 * step, j as f64 * step];
                out.push(self.target(face, out.len(), uv, TargetKind::Grid));
            }
        }
        out
    }

    /// Signed distance of a point from a face plane (positive outside).
    pub fn plane_distance(&self, face: FaceId, p: &Vec3) -> f64 {
        let n = self.face_normal(face);
        let center = self.box_pose.position + n * (0.5 * self.edge);
        (p - center).dot(&n)
    }
}

/// Tip box placed at a tool pose.
pub fn tip_obb(tip_pose: &Pose, tip: &TipBox) -> OrientedBox {
    OrientedBox::new(*tip_pose, tip.half_extents())
}

/// True iff some point of the tip box lies within the goal sphere.
pub fn goal_reached(tip_pose: &Pose, tip: &TipBox, world: &TaskWorld, target: &Target) -> bool {
    tip_obb(tip_pose, tip).point_distance(&target.position) <= world.goal_radius
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CollisionReport {
    /// First sample index at which a link capsule penetrates the cube.
    pub box_hit: Option<usize>,
    /// First sample index and capsule pair in self-collision.
    pub self_hit: Option<(usize, (usize, usize))>,
    /// First sample at which the tip touched the goal sphere.
    pub goal_contact: Option<usize>,
    pub clear: bool,
}

/// Capsule pairs checked for self-collision.
///
/// Zero-length links only mark coincident joint origins, so they are
/// dropped and the remaining capsules (links plus the tip) are paired when
/// at least one other capsule separates them along the chain.
pub fn self_collision_pairs(chain: &KinematicChain) -> Vec<(usize, usize)> {
    let mut bodies: Vec<usize> = chain
        .dh()
        .iter()
        .enumerate()
        .filter(|(_, r)| (r.a * r.a + r.d * r.d).sqrt() > 1e-9)
        .map(|(i, _)| i)
        .collect();
    bodies.push(DOF);
    let mut pairs = Vec::new();
    for a in 0..bodies.len() {
        for b in (a + 2)..bodies.len() {
            pairs.push((bodies[a], bodies[b]));
        }
    }
    pairs
}

/// Collision check of a tracked trajectory against the cube and itself.
///
/// Samples after the first goal contact are not checked, and the tip capsule
/// is exempt from the cube test while the tool is within
/// `goal_radius + tip diagonal` of the target.
pub fn check_collisions(
    chain: &KinematicChain,
    traj: &JointTrajectory,
    world: &TaskWorld,
    target: &Target,
) -> CollisionReport {
    let cube = world.cube();
    let pairs = self_collision_pairs(chain);
    let tip = chain.tip_box();
    let exempt_radius = world.goal_radius + tip.diagonal();
    let mut report = CollisionReport::default();
    let mut capsules: Vec<Capsule>;
    for (s, sample) in traj.samples.iter().enumerate() {
        capsules = chain.link_capsules(&sample.q);
        let tool = chain.forward_kinematics(&sample.q);
        let tip_exempt = (tool.position - target.position).norm() <= exempt_radius;
        if report.box_hit.is_none() {
            let hit = capsules
                .iter()
                .enumerate()
                .any(|(k, c)| !(k == DOF && tip_exempt) && cube.capsule_distance(c) < 0.0);
            if hit {
                report.box_hit = Some(s);
            }
        }
        if report.self_hit.is_none() {
            if let Some(&pair) = pairs
                .iter()
                .find(|(a, b)| capsules[*a].distance(&capsules[*b]) < 0.0)
            {
                report.self_hit = Some((s, pair));
            }
        }
        if goal_reached(&tool, tip, world, target) {
            report.goal_contact = Some(s);
            break;
        }
    }
    report.clear = report.box_hit.is_none() && report.self_hit.is_none();
    report
}
