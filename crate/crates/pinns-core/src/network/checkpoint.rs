//! Text checkpoint of a trained network.
//!
//! Layout (JSON object):
//!
//! ```text
//! {
//!   "format": "pinns-checkpoint",
//!   "version": 1,
//!   "problem": "poisson",          // catalog id, optional
//!   "arch": { "input_dim": 2, "output_dim": 1, "hidden_layers": 4,
//!             "hidden_width": 24, "activation": "tanh" },
//!   "theta": [ ... ]               // W1 row-major, b1, W2, b2, ...
//! }
//! ```
//!
//! Floats are written with shortest round-trip formatting so a save/load
//! cycle reproduces θ bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{MlpArchitecture, ParameterVector};

pub const CHECKPOINT_FORMAT: &str = "pinns-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    pub arch: MlpArchitecture,
    pub theta: ParameterVector,
}

impl Checkpoint {
    pub fn new(arch: MlpArchitecture, theta: ParameterVector, problem: Option<String>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            problem,
            arch,
            theta,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format tag `{}`", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        ck.arch.validate()?;
        if ck.theta.len() != ck.arch.param_count() {
            return Err(Error::Checkpoint(format!(
                "theta has {} entries, architecture needs {}",
                ck.theta.len(),
                ck.arch.param_count()
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init;

    #[test]
    fn roundtrip_is_bit_exact() {
        let arch = MlpArchitecture::new(3, 2, 2, 7);
        let theta = init(&arch, 99);
        let ck = Checkpoint::new(arch, theta.clone(), Some("heatnd:2".into()));
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);
        assert!(back.theta.0.iter().zip(&theta.0).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_wrong_tag_and_length() {
        let arch = MlpArchitecture::new(1, 1, 1, 2);
        let mut ck = Checkpoint::new(arch.clone(), init(&arch, 0), None);
        ck.format = "other".into();
        assert!(Checkpoint::from_json(&ck.to_json().unwrap()).is_err());
        let mut ck = Checkpoint::new(arch.clone(), init(&arch, 0), None);
        ck.theta.0.pop();
        assert!(Checkpoint::from_json(&ck.to_json().unwrap()).is_err());
    }
}
