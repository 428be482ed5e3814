//! Aggregated run configuration: everything that influences detection in
//! one serializable struct, with a stable fingerprint that reports embed so
//! results can be traced back to the exact settings that produced them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::preprocess::PreprocessConfig;
use crate::profile::ProfileConfig;
use crate::thresholds::{ALPHA_LH_DEFAULT, ALPHA_WS_DEFAULT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub preprocess: PreprocessConfig,
    pub profile: ProfileConfig,
    pub detector: DetectorConfig,
    /// Word-space threshold multiplier, open interval (1, 2).
    pub alpha_ws: f64,
    /// Line-height threshold multiplier, open interval (1, 1.5).
    pub alpha_lh: f64,
    /// Overlap ratio a detection must reach to count as correct.
    pub iou_min: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preprocess: PreprocessConfig::default(),
            profile: ProfileConfig::default(),
            detector: DetectorConfig::default(),
            alpha_ws: ALPHA_WS_DEFAULT,
            alpha_lh: ALPHA_LH_DEFAULT,
            iou_min: 0.5,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.profile.validate()?;
        self.detector.validate()?;
        crate::thresholds::validate_alphas(self.alpha_ws, self.alpha_lh)?;
        if !(self.iou_min > 0.0 && self.iou_min <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "iou_min must lie in (0, 1], got {}",
                self.iou_min
            )));
        }
        Ok(())
    }

    /// Hex digest over the canonical serialized form; any field change
    /// changes the fingerprint.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialization cannot fail");
        let digest = Sha256::digest(&bytes);
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            use std::fmt::Write;
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}
