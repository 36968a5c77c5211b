//! Contextual encoders and the linear sigmoid classification head.
//!
//! An encoder turns a framed token sequence into one vector per token; the
//! first vector (the begin-of-sequence position) summarizes the whole input
//! and feeds a one-row linear head whose sigmoid output is the probability
//! of the informative class.

mod checkpoint;
mod toy;

pub use checkpoint::{Checkpoint, EncoderParams, CHECKPOINT_FORMAT_VERSION};
pub use toy::{
    Classifier, EncodedExample, Gradients, ToyEncoder, ToyParams, BOS_TOKEN,
    DEFAULT_VOCAB_SIZE, EOS_TOKEN,
};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

/// Registry key for the supported encoder families. Only `toy` ships with
/// this crate; the others are reached through external adapters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncoderName {
    #[serde(rename = "toy")]
    Toy,
    #[serde(rename = "bertweet")]
    Bertweet,
    #[serde(rename = "roberta-base")]
    RobertaBase,
    #[serde(rename = "roberta-large")]
    RobertaLarge,
    #[serde(rename = "xlm-roberta-base")]
    XlmRobertaBase,
    #[serde(rename = "xlm-roberta-large")]
    XlmRobertaLarge,
    #[serde(rename = "electra-base")]
    ElectraBase,
    #[serde(rename = "electra-large")]
    ElectraLarge,
}

impl EncoderName {
    pub fn all() -> &'static [EncoderName] {
        &[
            EncoderName::Toy,
            EncoderName::Bertweet,
            EncoderName::RobertaBase,
            EncoderName::RobertaLarge,
            EncoderName::XlmRobertaBase,
            EncoderName::XlmRobertaLarge,
            EncoderName::ElectraBase,
            EncoderName::ElectraLarge,
        ]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderName::Toy => "toy",
            EncoderName::Bertweet => "bertweet",
            EncoderName::RobertaBase => "roberta-base",
            EncoderName::RobertaLarge => "roberta-large",
            EncoderName::XlmRobertaBase => "xlm-roberta-base",
            EncoderName::XlmRobertaLarge => "xlm-roberta-large",
            EncoderName::ElectraBase => "electra-base",
            EncoderName::ElectraLarge => "electra-large",
        }
    }

    /// Hidden dimension the family publishes (toy uses its own small default).
    pub fn default_hidden_dim(self) -> usize {
        match self {
            EncoderName::Toy => 32,
            EncoderName::Bertweet
            | EncoderName::RobertaBase
            | EncoderName::XlmRobertaBase
            | EncoderName::ElectraBase => 768,
            EncoderName::RobertaLarge
            | EncoderName::XlmRobertaLarge
            | EncoderName::ElectraLarge => 1024,
        }
    }
}

impl fmt::Display for EncoderName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EncoderName::all()
            .iter()
            .copied()
            .find(|name| name.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown encoder {s:?} (expected one of: {})",
                    EncoderName::all()
                        .iter()
                        .map(|n| n.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }
}

/// Shape contract for one encoder instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub name: EncoderName,
    pub hidden_dim: usize,
    pub max_len: usize,
}

impl EncoderSpec {
    pub fn with_defaults(name: EncoderName) -> Self {
        EncoderSpec {
            name,
            hidden_dim: name.default_hidden_dim(),
            max_len: 128,
        }
    }
}

/// The per-token vectors an encoder produces for one sequence: an `n x d`
/// matrix with one row per framed token.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualEncoding {
    vectors: Array2<f64>,
}

impl ContextualEncoding {
    pub fn new(vectors: Array2<f64>) -> Result<Self> {
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "encoding contains non-finite components".into(),
            ));
        }
        Ok(ContextualEncoding { vectors })
    }

    pub fn seq_len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }
}

/// Adapter interface every encoder satisfies: tokenize raw text with the
/// encoder's own vocabulary, then map a framed sequence to vectors.
pub trait TokenEncoder {
    fn spec(&self) -> &EncoderSpec;
    fn tokenize(&self, text: &str) -> Result<TokenSequence>;
    fn encode(&self, seq: &TokenSequence) -> Result<ContextualEncoding>;
}

/// The classification head: one weight row and a scalar bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub w: Array1<f64>,
    pub b: f64,
}

impl LinearHead {
    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// Returns the first token's vector, the whole-sequence summary.
pub fn pool_first(encoding: &ContextualEncoding) -> Result<Array1<f64>> {
    if encoding.seq_len() == 0 {
        return Err(Error::InvalidArgument(
            "cannot pool an empty encoding".into(),
        ));
    }
    Ok(encoding.vectors.row(0).to_owned())
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Informative-class probability `sigmoid(w . h1 + b)`, clamped into the open
/// interval (0, 1) so downstream probability vectors stay well formed.
pub fn head_prob(head: &LinearHead, h1: &Array1<f64>) -> Result<f64> {
    if head.dim() != h1.len() {
        return Err(Error::InvalidArgument(format!(
            "head dimension {} does not match input dimension {}",
            head.dim(),
            h1.len()
        )));
    }
    if !head.b.is_finite()
        || head.w.iter().any(|v| !v.is_finite())
        || h1.iter().any(|v| !v.is_finite())
    {
        return Err(Error::InvalidArgument(
            "head_prob requires finite inputs".into(),
        ));
    }
    let z = head.w.dot(h1) + head.b;
    Ok(sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0_f64.next_down()))
}

/// Expands the scalar informative-class probability into the two-class
/// vector `[p_uninformative, p_informative]`.
pub fn to_prob_vector(y: f64) -> Result<[f64; 2]> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "probability must lie strictly inside (0, 1), got {y}"
        )));
    }
    Ok([1.0 - y, y])
}

/// The 0.5 decision threshold: probabilities at or above it are informative.
pub fn decide(y: f64) -> Label {
    if y >= 0.5 {
        Label::Informative
    } else {
        Label::Uninformative
    }
}
