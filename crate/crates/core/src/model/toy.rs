//! The built-in trainable encoder: hashed token embeddings, a sinusoidal
//! position signal, and one single-head self-attention block with a residual
//! connection. Small enough to fine-tune on a laptop core, yet exercises the
//! full contract of a contextual encoder.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::preprocess::{self, TokenSequence};

use super::{
    head_prob, pool_first, sigmoid, ContextualEncoding, EncoderName, EncoderSpec, LinearHead,
    TokenEncoder,
};

pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const DEFAULT_VOCAB_SIZE: usize = 4096;

/// FNV-1a, fixed so hashed vocabulary ids stay stable across builds and
/// platforms (checkpoints depend on the token -> row mapping).
fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Trainable parameters of the toy encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub vocab_size: usize,
    pub embed: Array2<f64>,
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEncoder {
    spec: EncoderSpec,
    params: ToyParams,
    /// Sinusoidal position table, `max_len x d`. Derived, never trained.
    pos: Array2<f64>,
}

fn position_table(max_len: usize, dim: usize) -> Array2<f64> {
    Array2::from_shape_fn((max_len, dim), |(p, j)| {
        let i = (j / 2) as f64;
        let angle = p as f64 / 10_000f64.powf(2.0 * i / dim as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

/// Per-sequence intermediates kept for the backward pass.
pub(crate) struct ForwardCache {
    ids: Vec<usize>,
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Array2<f64>,
    z: Array2<f64>,
    pub(crate) h: Array2<f64>,
}

impl ToyEncoder {
    pub fn new(hidden_dim: usize, max_len: usize, vocab_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init(hidden_dim, max_len, vocab_size, &mut rng)
    }

    pub(crate) fn init(
        hidden_dim: usize,
        max_len: usize,
        vocab_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let attn_bound = (3.0 / hidden_dim as f64).sqrt();
        let params = ToyParams {
            vocab_size,
            embed: uniform(rng, vocab_size, hidden_dim, 0.1),
            wq: uniform(rng, hidden_dim, hidden_dim, attn_bound),
            wk: uniform(rng, hidden_dim, hidden_dim, attn_bound),
            wv: uniform(rng, hidden_dim, hidden_dim, attn_bound),
            wo: uniform(rng, hidden_dim, hidden_dim, attn_bound),
        };
        ToyEncoder {
            spec: EncoderSpec {
                name: EncoderName::Toy,
                hidden_dim,
                max_len,
            },
            pos: position_table(max_len, hidden_dim),
            params,
        }
    }

    /// Rebuilds an encoder from checkpointed parameters, validating shapes.
    pub fn from_params(spec: EncoderSpec, params: ToyParams) -> Result<Self> {
        let d = spec.hidden_dim;
        if params.embed.dim() != (params.vocab_size, d) {
            return Err(Error::Config(format!(
                "embedding matrix is {:?}, expected ({}, {d})",
                params.embed.dim(),
                params.vocab_size
            )));
        }
        for (label, m) in [
            ("wq", &params.wq),
            ("wk", &params.wk),
            ("wv", &params.wv),
            ("wo", &params.wo),
        ] {
            if m.dim() != (d, d) {
                return Err(Error::Config(format!(
                    "attention matrix {label} is {:?}, expected ({d}, {d})",
                    m.dim()
                )));
            }
        }
        Ok(ToyEncoder {
            pos: position_table(spec.max_len, d),
            spec,
            params,
        })
    }

    pub fn params(&self) -> &ToyParams {
        &self.params
    }

    pub fn vocab_size(&self) -> usize {
        self.params.vocab_size
    }

    /// Hashed vocabulary id. Out-of-vocabulary tokens cannot occur: every
    /// token hashes somewhere.
    pub fn token_id(&self, token: &str) -> usize {
        (fnv1a64(token) % self.params.vocab_size as u64) as usize
    }

    pub fn token_ids(&self, seq: &TokenSequence) -> Vec<usize> {
        seq.tokens().iter().map(|t| self.token_id(t)).collect()
    }

    pub(crate) fn forward(&self, ids: &[usize]) -> ForwardCache {
        let n = ids.len();
        let d = self.spec.hidden_dim;
        let mut x = Array2::zeros((n, d));
        for (i, &id) in ids.iter().enumerate() {
            let row = &self.params.embed.row(id) + &self.pos.row(i);
            x.row_mut(i).assign(&row);
        }
        let q = x.dot(&self.params.wq);
        let k = x.dot(&self.params.wk);
        let v = x.dot(&self.params.wv);
        let mut attn = q.dot(&k.t());
        attn *= 1.0 / (d as f64).sqrt();
        softmax_rows_in_place(&mut attn);
        let z = attn.dot(&v);
        let h = &x + &z.dot(&self.params.wo);
        ForwardCache {
            ids: ids.to_vec(),
            x,
            q,
            k,
            v,
            attn,
            z,
            h,
        }
    }

    /// Accumulates `scale * dL/dparams` into `grads`, given `d_h = dL/dH`.
    pub(crate) fn backward(
        &self,
        cache: &ForwardCache,
        d_h: &Array2<f64>,
        grads: &mut Gradients,
        scale: f64,
    ) {
        let d = self.spec.hidden_dim;
        let attn_scale = 1.0 / (d as f64).sqrt();

        // H = X + Z Wo
        grads.wo.scaled_add(scale, &cache.z.t().dot(d_h));
        let d_z = d_h.dot(&self.params.wo.t());

        // Z = A V
        let d_attn = d_z.dot(&cache.v.t());
        let d_v = cache.attn.t().dot(&d_z);

        // A = rowwise softmax of (Q K^T) * attn_scale
        let n = cache.attn.nrows();
        let mut d_scores = Array2::zeros((n, n));
        for i in 0..n {
            let a = cache.attn.row(i);
            let da = d_attn.row(i);
            let dot = a.dot(&da);
            for j in 0..n {
                d_scores[[i, j]] = a[j] * (da[j] - dot) * attn_scale;
            }
        }
        let d_q = d_scores.dot(&cache.k);
        let d_k = d_scores.t().dot(&cache.q);

        grads.wq.scaled_add(scale, &cache.x.t().dot(&d_q));
        grads.wk.scaled_add(scale, &cache.x.t().dot(&d_k));
        grads.wv.scaled_add(scale, &cache.x.t().dot(&d_v));

        // Residual plus the three projection paths back into X.
        let d_x = d_h
            + &(d_q.dot(&self.params.wq.t())
                + d_k.dot(&self.params.wk.t())
                + d_v.dot(&self.params.wv.t()));
        for (i, &id) in cache.ids.iter().enumerate() {
            let mut row = grads.embed.row_mut(id);
            row.scaled_add(scale, &d_x.row(i));
        }
    }
}

fn softmax_rows_in_place(scores: &mut Array2<f64>) {
    for mut row in scores.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

impl TokenEncoder for ToyEncoder {
    fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence> {
        let tokens = preprocess::whitespace_tokenize(text);
        preprocess::frame(&tokens, self.spec.max_len, BOS_TOKEN, EOS_TOKEN)
    }

    fn encode(&self, seq: &TokenSequence) -> Result<ContextualEncoding> {
        if seq.len() > self.spec.max_len {
            return Err(Error::InvalidArgument(format!(
                "sequence of length {} exceeds the encoder's max_len {}",
                seq.len(),
                self.spec.max_len
            )));
        }
        let ids = self.token_ids(seq);
        ContextualEncoding::new(self.forward(&ids).h)
    }
}

/// One tokenized training example: hashed ids plus the 0/1 target.
#[derive(Debug, Clone)]
pub struct EncodedExample {
    pub ids: Vec<usize>,
    pub target: f64,
}

/// Toy encoder plus linear head, trained jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub encoder: ToyEncoder,
    pub head: LinearHead,
    /// Whether raw text is normalized before tokenization. Recorded in
    /// checkpoints so prediction preprocessing matches training.
    pub normalize_text: bool,
}

impl Classifier {
    pub fn new(
        hidden_dim: usize,
        max_len: usize,
        vocab_size: usize,
        normalize_text: bool,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = ToyEncoder::init(hidden_dim, max_len, vocab_size, &mut rng);
        let head = LinearHead {
            w: Array1::from_shape_fn(hidden_dim, |_| rng.random_range(-0.1..0.1)),
            b: 0.0,
        };
        Classifier {
            encoder,
            head,
            normalize_text,
        }
    }

    pub fn spec(&self) -> &EncoderSpec {
        self.encoder.spec()
    }

    /// Normalizes (when configured), tokenizes, and frames raw text.
    pub fn prepare(&self, text: &str) -> Result<TokenSequence> {
        let cleaned = if self.normalize_text {
            preprocess::normalize(text)
        } else {
            text.to_string()
        };
        self.encoder.tokenize(&cleaned)
    }

    pub fn encode_example(&self, text: &str, label: Label) -> Result<EncodedExample> {
        let seq = self.prepare(text)?;
        Ok(EncodedExample {
            ids: self.encoder.token_ids(&seq),
            target: label.to_index() as f64,
        })
    }

    /// Informative-class probability for a framed sequence.
    pub fn predict_prob(&self, seq: &TokenSequence) -> Result<f64> {
        let encoding = self.encoder.encode(seq)?;
        let h1 = pool_first(&encoding)?;
        head_prob(&self.head, &h1)
    }

    pub fn predict_text(&self, text: &str) -> Result<f64> {
        let seq = self.prepare(text)?;
        self.predict_prob(&seq)
    }

    /// Mean binary cross-entropy over the batch, forward only. Computed from
    /// logits, so it stays finite for any finite parameters.
    pub fn batch_loss(&self, batch: &[EncodedExample]) -> f64 {
        let mut total = 0.0;
        for example in batch {
            let cache = self.encoder.forward(&example.ids);
            let z = self.head.w.dot(&cache.h.row(0)) + self.head.b;
            total += bce_with_logit(z, example.target);
        }
        total / batch.len() as f64
    }

    /// Mean loss plus gradients of that mean, accumulated into `grads`
    /// (which is zeroed first).
    pub fn batch_loss_and_grads(&self, batch: &[EncodedExample], grads: &mut Gradients) -> f64 {
        grads.zero();
        let inv = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for example in batch {
            let cache = self.encoder.forward(&example.ids);
            let h1 = cache.h.row(0);
            let z = self.head.w.dot(&h1) + self.head.b;
            total += bce_with_logit(z, example.target);

            let dz = sigmoid(z) - example.target;
            grads.head_w.scaled_add(dz * inv, &h1);
            grads.head_b += dz * inv;

            let mut d_h = Array2::zeros(cache.h.dim());
            d_h.row_mut(0).assign(&(&self.head.w * dz));
            self.encoder.backward(&cache, &d_h, grads, inv);
        }
        total * inv
    }

    /// Number of trainable scalars.
    pub fn param_count(&self) -> usize {
        let p = &self.encoder.params;
        p.embed.len() + p.wq.len() + p.wk.len() + p.wv.len() + p.wo.len() + self.head.w.len() + 1
    }

    /// Flattened view of all trainable parameters, in a fixed order.
    pub fn params_flat(&self) -> Vec<f64> {
        let p = &self.encoder.params;
        let mut flat = Vec::with_capacity(self.param_count());
        for tensor in [&p.embed, &p.wq, &p.wk, &p.wv, &p.wo] {
            flat.extend(tensor.iter());
        }
        flat.extend(self.head.w.iter());
        flat.push(self.head.b);
        flat
    }

    /// Overwrites all trainable parameters from a flat slice produced by
    /// [`Classifier::params_flat`].
    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut offset = 0;
        for slice in self.param_slices_mut() {
            slice.copy_from_slice(&flat[offset..offset + slice.len()]);
            offset += slice.len();
        }
        Ok(())
    }

    /// Parameter tensors as mutable slices, in the same order as
    /// [`Classifier::params_flat`]. Used by the optimizer.
    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let p = &mut self.encoder.params;
        vec![
            p.embed.as_slice_mut().expect("contiguous"),
            p.wq.as_slice_mut().expect("contiguous"),
            p.wk.as_slice_mut().expect("contiguous"),
            p.wv.as_slice_mut().expect("contiguous"),
            p.wo.as_slice_mut().expect("contiguous"),
            self.head.w.as_slice_mut().expect("contiguous"),
            std::slice::from_mut(&mut self.head.b),
        ]
    }
}

pub(crate) fn bce_with_logit(z: f64, target: f64) -> f64 {
    z.max(0.0) - z * target + (-z.abs()).exp().ln_1p()
}

/// Gradient (or optimizer-moment) storage shaped like a [`Classifier`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub embed: Array2<f64>,
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub head_w: Array1<f64>,
    pub head_b: f64,
}

impl Gradients {
    pub fn zeros_like(model: &Classifier) -> Self {
        let p = &model.encoder.params;
        Gradients {
            embed: Array2::zeros(p.embed.dim()),
            wq: Array2::zeros(p.wq.dim()),
            wk: Array2::zeros(p.wk.dim()),
            wv: Array2::zeros(p.wv.dim()),
            wo: Array2::zeros(p.wo.dim()),
            head_w: Array1::zeros(model.head.w.len()),
            head_b: 0.0,
        }
    }

    pub fn zero(&mut self) {
        self.embed.fill(0.0);
        self.wq.fill(0.0);
        self.wk.fill(0.0);
        self.wv.fill(0.0);
        self.wo.fill(0.0);
        self.head_w.fill(0.0);
        self.head_b = 0.0;
    }

    /// Flattened gradients, ordered like [`Classifier::params_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for tensor in [&self.embed, &self.wq, &self.wk, &self.wv, &self.wo] {
            flat.extend(tensor.iter());
        }
        flat.extend(self.head_w.iter());
        flat.push(self.head_b);
        flat
    }

    pub(crate) fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.embed.as_slice().expect("contiguous"),
            self.wq.as_slice().expect("contiguous"),
            self.wk.as_slice().expect("contiguous"),
            self.wv.as_slice().expect("contiguous"),
            self.wo.as_slice().expect("contiguous"),
            self.head_w.as_slice().expect("contiguous"),
            std::slice::from_ref(&self.head_b),
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.embed.as_slice_mut().expect("contiguous"),
            self.wq.as_slice_mut().expect("contiguous"),
            self.wk.as_slice_mut().expect("contiguous"),
            self.wv.as_slice_mut().expect("contiguous"),
            self.wo.as_slice_mut().expect("contiguous"),
            self.head_w.as_slice_mut().expect("contiguous"),
            std::slice::from_mut(&mut self.head_b),
        ]
    }
}
