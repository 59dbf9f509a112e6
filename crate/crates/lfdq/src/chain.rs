//! Chain description files.
//!
//! ```json
//! {
//!   "units": "lengths in meters, angles in radians; dh rows are [a, alpha, d, theta0]",
//!   "dh": [[0.1, -1.5707963267948966, 0.0, 0.0], ...],
//!   "limits": [[-2.2854, 0.7146], ...],
//!   "link_radii": [0.06, ...],
//!   "tip_box": {"width": 0.021, "length": 0.022, "height": 0.035, "offset": 0.06},
//!   "start_config": [-0.8, 0.0, -0.3, -2.0, 0.0, -1.3, 0.0]
//! }
//! ```

use std::path::Path;

use lfdq_core::kinematics::{DhRow, JointConfig, KinematicChain, TipBox};
use lfdq_core::DOF;
use serde::{Deserialize, Serialize};

use crate::json::{read_json, write_json};
use crate::{fixed, Error, Result};

pub const CHAIN_UNITS: &str = "lengths in meters, angles in radians; dh rows are [a, alpha, d, theta0]";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TipBoxFile {
    pub width: f64,
    pub length: f64,
    pub height: f64,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub units: String,
    pub dh: Vec<[f64; 4]>,
    pub limits: Vec<[f64; 2]>,
    pub link_radii: Vec<f64>,
    pub tip_box: TipBoxFile,
    pub start_config: Vec<f64>,
}

impl ChainFile {
    pub fn from_chain(chain: &KinematicChain) -> Self {
        let t = chain.tip_box();
        Self {
            units: CHAIN_UNITS.into(),
            dh: chain.dh().iter().map(|r| [r.a, r.alpha, r.d, r.theta0]).collect(),
            limits: chain.limits().iter().map(|&(lo, hi)| [lo, hi]).collect(),
            link_radii: chain.link_radii().to_vec(),
            tip_box: TipBoxFile {
                width: t.width,
                length: t.length,
                height: t.height,
                offset: t.offset,
            },
            start_config: chain.start_config().0.to_vec(),
        }
    }

    /// `path` only labels errors.
    pub fn to_chain(&self, path: &Path) -> Result<KinematicChain> {
        let rows = |n: usize, what: &str| {
            if n == DOF {
                Ok(())
            } else {
                Err(Error::schema(path, format!("{what} has {n} rows, expected {DOF}")))
            }
        };
        rows(self.dh.len(), "dh")?;
        rows(self.limits.len(), "limits")?;
        let mut dh = [DhRow::new(0.0, 0.0, 0.0, 0.0); DOF];
        let mut limits = [(0.0, 0.0); DOF];
        for i in 0..DOF {
            let [a, alpha, d, theta0] = self.dh[i];
            dh[i] = DhRow::new(a, alpha, d, theta0);
            limits[i] = (self.limits[i][0], self.limits[i][1]);
        }
        let link_radii = fixed::<DOF>(&self.link_radii, "link_radii", path)?;
        let start = fixed::<DOF>(&self.start_config, "start_config", path)?;
        let t = &self.tip_box;
        let tip = TipBox {
            width: t.width,
            length: t.length,
            height: t.height,
            offset: t.offset,
        };
        KinematicChain::new(dh, limits, link_radii, tip, JointConfig(start)).map_err(|e| Error::invalid(path, e))
    }
}

pub fn load_chain(path: &Path) -> Result<KinematicChain> {
    read_json::<ChainFile>(path)?.to_chain(path)
}

pub fn save_chain(chain: &KinematicChain, path: &Path) -> Result<()> {
    write_json(path, &ChainFile::from_chain(chain))
}
