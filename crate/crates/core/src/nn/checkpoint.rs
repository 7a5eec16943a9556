//! JSON checkpoints of encoder and classifier parameters.
//!
//! Floats are written in shortest round-trip form and parsed with exact
//! rounding, so `read(write(p)) == p` bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{ClassifierParams, EncoderParams};
use crate::error::{Error, Result};

pub const FORMAT: &str = "ssltsc-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<EncoderParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierParams>,
}

impl Checkpoint {
    pub fn new(encoder: Option<EncoderParams>, classifier: Option<ClassifierParams>) -> Self {
        Checkpoint { format: FORMAT.into(), version: VERSION, encoder, classifier }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != FORMAT || ck.version != VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint {:?} v{} (expected {FORMAT} v{VERSION})",
                ck.format, ck.version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_json(&text)
    }
}

/// SHA-256 (hex) of the encoder's checkpoint serialization.
pub fn encoder_hash(encoder: &EncoderParams) -> String {
    let json = Checkpoint::new(Some(encoder.clone()), None).to_json().expect("parameters serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ClassifierConfig, EncoderConfig, EncoderKind, Params};
    use crate::rng::from_seed;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = from_seed(1);
        let enc = EncoderParams::init(&EncoderConfig { kind: EncoderKind::Cnn, ..Default::default() }, 240, &mut rng).unwrap();
        let cls = ClassifierParams::init(&ClassifierConfig::default(), 64, &mut rng).unwrap();
        let ck = Checkpoint::new(Some(enc.clone()), Some(cls));
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);
        let bits = |p: &EncoderParams| -> Vec<u64> {
            p.param_tensors().iter().flat_map(|(_, t)| t.iter().map(|v| v.to_bits())).collect()
        };
        assert_eq!(bits(back.encoder.as_ref().unwrap()), bits(&enc));
        assert_eq!(encoder_hash(back.encoder.as_ref().unwrap()), encoder_hash(&enc));
    }

    #[test]
    fn rejects_foreign_format() {
        assert!(Checkpoint::from_json(r#"{"format":"other","version":1}"#).is_err());
        assert!(Checkpoint::from_json(r#"{"format":"ssltsc-checkpoint","version":2}"#).is_err());
    }
}
