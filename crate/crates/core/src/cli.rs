//! Command implementations behind the `tweetsift` binary: stats, train,
//! predict, ensemble, evaluate. Kept in the library so integration tests can
//! drive them directly.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{self, CorpusStats, SplitName};
use crate::ensemble::{self, Scheme};
use crate::error::{Error, Result};
use crate::metrics::{self, EvaluationReport};
use crate::model::{decide, to_prob_vector, Checkpoint, Classifier, EncoderName};
use crate::trainer::{self, format_epoch_line, TrainConfig};

/// Everything a training run needs, read from a flat key=value file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train_file: PathBuf,
    pub valid_file: PathBuf,
    pub out_dir: PathBuf,
    pub encoder: EncoderName,
    pub hidden_dim: usize,
    pub vocab_size: usize,
    pub max_len: usize,
    pub batch_size: usize,
    pub learning_rates: Vec<f64>,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub lr_multiplier: f64,
    pub normalize: bool,
}

const CONFIG_KEYS: &[&str] = &[
    "train_file",
    "valid_file",
    "out_dir",
    "encoder",
    "hidden_dim",
    "vocab_size",
    "max_len",
    "batch_size",
    "learning_rates",
    "epochs",
    "weight_decay",
    "seed",
    "lr_multiplier",
    "normalize",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("key {key:?}: cannot parse value {value:?}")))
}

impl RunConfig {
    /// Parses `key = value` lines. `#` starts a comment; unknown keys are
    /// rejected by name. Relative paths resolve against the config file's
    /// directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_str_with_base(&contents, base)
    }

    fn from_str_with_base(contents: &str, base: &Path) -> Result<RunConfig> {
        let mut pairs: HashMap<String, String> = HashMap::new();
        for (index, raw_line) in contents.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key = value, got {raw_line:?}",
                    index + 1
                )));
            };
            let key = key.trim().to_string();
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown key {key:?} (expected one of: {})",
                    CONFIG_KEYS.join(", ")
                )));
            }
            pairs.insert(key, value.trim().to_string());
        }

        let require = |key: &str| -> Result<String> {
            pairs
                .get(key)
                .cloned()
                .ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
        };
        let resolve = |value: String| -> PathBuf {
            let p = PathBuf::from(value);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let encoder: EncoderName = match pairs.get("encoder") {
            Some(value) => value.trim().parse()?,
            None => EncoderName::Toy,
        };
        let learning_rates = match pairs.get("learning_rates") {
            Some(value) => value
                .split(',')
                .map(|part| parse_value::<f64>("learning_rates", part))
                .collect::<Result<Vec<f64>>>()?,
            None => vec![1e-5, 2e-5, 5e-5],
        };
        // The published grid is tuned for large pretrained encoders; the toy
        // regime runs 200x hotter unless the config says otherwise.
        let lr_multiplier = match pairs.get("lr_multiplier") {
            Some(value) => parse_value("lr_multiplier", value)?,
            None if encoder == EncoderName::Toy => 200.0,
            None => 1.0,
        };

        Ok(RunConfig {
            train_file: resolve(require("train_file")?),
            valid_file: resolve(require("valid_file")?),
            out_dir: resolve(require("out_dir")?),
            hidden_dim: match pairs.get("hidden_dim") {
                Some(v) => parse_value("hidden_dim", v)?,
                None => encoder.default_hidden_dim(),
            },
            vocab_size: match pairs.get("vocab_size") {
                Some(v) => parse_value("vocab_size", v)?,
                None => crate::model::DEFAULT_VOCAB_SIZE,
            },
            max_len: match pairs.get("max_len") {
                Some(v) => parse_value("max_len", v)?,
                None => 128,
            },
            batch_size: match pairs.get("batch_size") {
                Some(v) => parse_value("batch_size", v)?,
                None => 32,
            },
            epochs: match pairs.get("epochs") {
                Some(v) => parse_value("epochs", v)?,
                None => 30,
            },
            weight_decay: match pairs.get("weight_decay") {
                Some(v) => parse_value("weight_decay", v)?,
                None => 0.01,
            },
            seed: match pairs.get("seed") {
                Some(v) => parse_value("seed", v)?,
                None => 42,
            },
            normalize: match pairs.get("normalize") {
                Some(v) => parse_value("normalize", v)?,
                None => true,
            },
            encoder,
            learning_rates,
            lr_multiplier,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rates: self.learning_rates.clone(),
            epochs: self.epochs,
            weight_decay: self.weight_decay,
            seed: self.seed,
            max_len: self.max_len,
            lr_multiplier: self.lr_multiplier,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, path) in [("train_file", &self.train_file), ("valid_file", &self.valid_file)] {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "{key} does not exist: {}",
                    path.display()
                )));
            }
        }
        self.train_config().validate()
    }
}

/// Counts labels in a split file. Labels are optional here; unlabeled
/// records are counted as such.
pub fn cmd_stats(input: impl AsRef<Path>) -> Result<CorpusStats> {
    let split = corpus::load_split(input, SplitName::Test, false)?;
    Ok(corpus::compute_stats(&split))
}

/// What `cmd_train` writes into `best/manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub best_lr: f64,
    pub best_epoch: usize,
    pub dev_f1: f64,
}

/// Runs the learning-rate grid and writes the checkpoint directory:
/// one `lr_<rate>/checkpoint.json` per rate, `best/checkpoint.json`,
/// `best/manifest.json`, and `train.log` (one line per epoch).
pub fn cmd_train(config: &RunConfig) -> Result<Manifest> {
    config.validate()?;
    if config.encoder != EncoderName::Toy {
        return Err(Error::Config(format!(
            "encoder {:?} needs an external adapter; this binary trains the built-in 'toy' encoder",
            config.encoder.as_str()
        )));
    }

    let train = corpus::load_split(&config.train_file, SplitName::Train, true)?;
    let valid = corpus::load_split(&config.valid_file, SplitName::Valid, true)?;
    let init = Classifier::new(
        config.hidden_dim,
        config.max_len,
        config.vocab_size,
        config.normalize,
        config.seed,
    );

    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let mut log_lines: Vec<String> = Vec::new();
    let result = trainer::grid_search_observed(
        &config.train_config(),
        &train,
        &valid,
        &init,
        |lr, record| {
            let line = format_epoch_line(lr, record);
            println!("{line}");
            log_lines.push(line);
        },
    )?;

    let mut log = log_lines.join("\n");
    log.push('\n');
    let log_path = config.out_dir.join("train.log");
    fs::write(&log_path, log).map_err(|e| Error::io(&log_path, e))?;

    for (run, best) in result.history.iter().zip(&result.per_lr_best) {
        let lr_dir = config.out_dir.join(format!("lr_{}", run.lr));
        fs::create_dir_all(&lr_dir).map_err(|e| Error::io(&lr_dir, e))?;
        Checkpoint::from_classifier(best).save(lr_dir.join("checkpoint.json"))?;
    }

    let best_dir = config.out_dir.join("best");
    fs::create_dir_all(&best_dir).map_err(|e| Error::io(&best_dir, e))?;
    Checkpoint::from_classifier(&result.best_checkpoint)
        .save(best_dir.join("checkpoint.json"))?;

    let manifest = Manifest {
        best_lr: result.best_lr,
        best_epoch: result.best_epoch,
        dev_f1: result.best_dev_f1,
    };
    let manifest_path = best_dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
        path: manifest_path.clone(),
        source: e,
    })?;
    body.push('\n');
    fs::write(&manifest_path, body).map_err(|e| Error::io(&manifest_path, e))?;

    Ok(manifest)
}

/// Labels a split file with a trained checkpoint. With `probs_out`, also
/// writes the per-model probability file that `cmd_ensemble` consumes.
pub fn cmd_predict(
    checkpoint: impl AsRef<Path>,
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    probs_out: Option<&Path>,
) -> Result<usize> {
    let model = Checkpoint::load(checkpoint)?.into_classifier()?;
    let split = corpus::load_split(input, SplitName::Test, false)?;

    let mut ids = Vec::with_capacity(split.len());
    let mut labels = Vec::with_capacity(split.len());
    let mut prob_rows = Vec::with_capacity(split.len());
    for record in &split.records {
        let y = model.predict_text(&record.text)?;
        ids.push(record.id.clone());
        labels.push(decide(y));
        prob_rows.push((record.id.clone(), to_prob_vector(y)?));
    }

    corpus::write_predictions(&ids, &labels, output)?;
    if let Some(path) = probs_out {
        ensemble::write_probability_file(&prob_rows, path)?;
    }
    Ok(ids.len())
}

/// Combines per-model probability files into one prediction file.
pub fn cmd_ensemble(
    prob_files: &[PathBuf],
    scheme: Scheme,
    output: impl AsRef<Path>,
) -> Result<usize> {
    let combined = ensemble::combine_files(prob_files, scheme)?;
    let (ids, labels): (Vec<String>, Vec<_>) = combined.into_iter().unzip();
    corpus::write_predictions(&ids, &labels, output)?;
    Ok(ids.len())
}

/// Scores a prediction file against a labeled split, joining on id.
pub fn cmd_evaluate(gold: impl AsRef<Path>, pred: impl AsRef<Path>) -> Result<EvaluationReport> {
    let gold_split = corpus::load_split(gold, SplitName::Test, true)?;
    let predictions = corpus::read_predictions(pred)?;

    let mut by_id: HashMap<&str, crate::corpus::Label> = HashMap::new();
    for (id, label) in &predictions {
        if by_id.insert(id.as_str(), *label).is_some() {
            return Err(Error::InvalidArgument(format!(
                "prediction file lists id {id:?} more than once"
            )));
        }
    }

    let gold_labels = gold_split.labels();
    let mut aligned = Vec::with_capacity(gold_split.len());
    for record in &gold_split.records {
        let label = by_id
            .get(record.id.as_str())
            .ok_or_else(|| Error::MissingPrediction {
                id: record.id.clone(),
            })?;
        aligned.push(*label);
    }
    metrics::evaluate(&gold_labels, &aligned)
}
