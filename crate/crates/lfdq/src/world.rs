//! Task world files.
//!
//! ```json
//! {
//!   "units": "meters",
//!   "box_pose": {"position": [0.6, -0.47, -0.22], "orientation": [1.0, 0.0, 0.0, 0.0]},
//!   "edge": 0.26,
//!   "face_assignments": {"low": "-x", "high": "+y"},
//!   "goal_radius": 0.015,
//!   "corner_inset": 0.02
//! }
//! ```
//!
//! Orientations are `[w, x, y, z]`; faces are named by their outward normal
//! in the cube frame.

use std::path::Path;

use lfdq_core::kinematics::Pose;
use lfdq_core::quat::{from_wxyz, to_wxyz};
use lfdq_core::taskworld::{CubeFace, TaskWorld};
use lfdq_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::json::{read_json, write_json};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFile {
    pub position: [f64; 3],
    /// `[w, x, y, z]`, unit norm.
    pub orientation: [f64; 4],
}

impl PoseFile {
    pub fn from_pose(pose: &Pose) -> Self {
        Self {
            position: pose.position.into(),
            orientation: to_wxyz(&pose.orientation),
        }
    }

    pub fn to_pose(&self, path: &Path) -> Result<Pose> {
        let norm = self.orientation.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs().is_nan() || (norm - 1.0).abs() > 1e-6 {
            return Err(Error::schema(path, format!("orientation must be a unit quaternion, norm is {norm}")));
        }
        Ok(Pose::new(Vec3::from(self.position), from_wxyz(self.orientation)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceAssignments {
    pub low: String,
    pub high: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    #[serde(default = "meters")]
    pub units: String,
    pub box_pose: PoseFile,
    pub edge: f64,
    pub face_assignments: FaceAssignments,
    pub goal_radius: f64,
    pub corner_inset: f64,
}

fn meters() -> String {
    "meters".into()
}

impl WorldFile {
    pub fn from_world(world: &TaskWorld) -> Self {
        Self {
            units: meters(),
            box_pose: PoseFile::from_pose(&world.box_pose),
            edge: world.edge,
            face_assignments: FaceAssignments {
                low: world.low_face.as_str().into(),
                high: world.high_face.as_str().into(),
            },
            goal_radius: world.goal_radius,
            corner_inset: world.corner_inset,
        }
    }

    pub fn to_world(&self, path: &Path) -> Result<TaskWorld> {
        let face = |s: &str| CubeFace::parse(s).map_err(|e| Error::invalid(path, e));
        TaskWorld::new(
            self.box_pose.to_pose(path)?,
            self.edge,
            face(&self.face_assignments.low)?,
            face(&self.face_assignments.high)?,
            self.goal_radius,
            self.corner_inset,
        )
        .map_err(|e| Error::invalid(path, e))
    }
}

pub fn load_world(path: &Path) -> Result<TaskWorld> {
    read_json::<WorldFile>(path)?.to_world(path)
}

pub fn save_world(world: &TaskWorld, path: &Path) -> Result<()> {
    write_json(path, &WorldFile::from_world(world))
}
