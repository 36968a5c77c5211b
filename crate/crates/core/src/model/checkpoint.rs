//! Self-describing checkpoint files: encoder spec, encoder parameters, and
//! head parameters behind a format-version field. JSON with shortest
//! round-trip float encoding, so save/load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Classifier, EncoderName, EncoderSpec, LinearHead, ToyEncoder, ToyParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderParams {
    /// Dense parameters of the built-in toy encoder.
    Toy(ToyParams),
    /// Opaque parameter handle for an externally managed encoder (a model
    /// directory, a hub identifier, ...). The adapter that owns the handle
    /// supplies the weights.
    Adapter { handle: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub spec: EncoderSpec,
    pub normalize_text: bool,
    pub encoder: EncoderParams,
    pub head: LinearHead,
}

impl Checkpoint {
    pub fn from_classifier(model: &Classifier) -> Self {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            spec: *model.spec(),
            normalize_text: model.normalize_text,
            encoder: EncoderParams::Toy(model.encoder.params().clone()),
            head: model.head.clone(),
        }
    }

    /// Reassembles a runnable classifier. Adapter checkpoints cannot run
    /// without the external encoder and fail with a configuration error.
    pub fn into_classifier(self) -> Result<Classifier> {
        if self.spec.hidden_dim != self.head.dim() {
            return Err(Error::Config(format!(
                "checkpoint head dimension {} does not match encoder hidden_dim {}",
                self.head.dim(),
                self.spec.hidden_dim
            )));
        }
        match self.encoder {
            EncoderParams::Toy(params) => {
                if self.spec.name != EncoderName::Toy {
                    return Err(Error::Config(format!(
                        "checkpoint stores toy parameters but declares encoder {:?}",
                        self.spec.name.as_str()
                    )));
                }
                Ok(Classifier {
                    encoder: ToyEncoder::from_params(self.spec, params)?,
                    head: self.head,
                    normalize_text: self.normalize_text,
                })
            }
            EncoderParams::Adapter { handle } => Err(Error::Config(format!(
                "checkpoint references external encoder {:?} via handle {handle:?}; \
                 an adapter implementation is required to run it",
                self.spec.name.as_str()
            ))),
        }
    }

    /// Atomic write: the file appears complete or not at all.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.check_finite()?;
        let mut body = serde_json::to_string(self).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        body.push('\n');
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let invalid = |detail: String| Error::CheckpointFormat {
            path: path.into(),
            expected: CHECKPOINT_FORMAT_VERSION,
            detail,
        };
        let value: serde_json::Value =
            serde_json::from_slice(&bytes).map_err(|e| invalid(e.to_string()))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CHECKPOINT_FORMAT_VERSION) => {}
            Some(v) => return Err(invalid(format!("file declares format_version {v}"))),
            None => return Err(invalid("missing format_version field".into())),
        }
        serde_json::from_value(value).map_err(|e| invalid(e.to_string()))
    }

    fn check_finite(&self) -> Result<()> {
        let head_ok = self.head.b.is_finite() && self.head.w.iter().all(|v| v.is_finite());
        let encoder_ok = match &self.encoder {
            EncoderParams::Toy(p) => [&p.embed, &p.wq, &p.wk, &p.wv, &p.wo]
                .iter()
                .all(|m| m.iter().all(|v| v.is_finite())),
            EncoderParams::Adapter { .. } => true,
        };
        if head_ok && encoder_ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "refusing to write a checkpoint with non-finite parameters".into(),
            ))
        }
    }
}
