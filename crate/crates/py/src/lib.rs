//! Python bindings for the tweetsift toolkit: text normalization and
//! framing, the sigmoid head, both ensemble rules, positive-class F1, split
//! I/O, and a trainable `ToyClassifier`.

use ndarray::Array1;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use tweetsift::corpus::{self, Label, SplitName};
use tweetsift::ensemble::{self, ProbabilityMatrix, TieBreak};
use tweetsift::error::Error;
use tweetsift::metrics;
use tweetsift::model::{self, Checkpoint, Classifier, LinearHead};
use tweetsift::preprocess;
use tweetsift::trainer::{self, TrainConfig};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_label(s: &str) -> PyResult<Label> {
    s.parse()
        .map_err(|_| PyValueError::new_err(format!("unknown label {s:?}")))
}

/// Mask mentions and URLs, collapse whitespace, trim.
#[pyfunction]
fn normalize(text: &str) -> String {
    preprocess::normalize(text)
}

/// Wrap tokens in boundary tokens and truncate to max_len.
#[pyfunction]
fn frame(tokens: Vec<String>, max_len: usize, bos: &str, eos: &str) -> PyResult<Vec<String>> {
    let seq = preprocess::frame(&tokens, max_len, bos, eos).map_err(to_py_err)?;
    Ok(seq.tokens().to_vec())
}

/// sigmoid(w . h1 + b), clamped into (0, 1).
#[pyfunction]
fn head_prob(w: Vec<f64>, b: f64, h1: Vec<f64>) -> PyResult<f64> {
    let head = LinearHead {
        w: Array1::from_vec(w),
        b,
    };
    model::head_prob(&head, &Array1::from_vec(h1)).map_err(to_py_err)
}

/// [p_uninformative, p_informative] from the scalar informative probability.
#[pyfunction]
fn to_prob_vector(y: f64) -> PyResult<(f64, f64)> {
    let [pu, pi] = model::to_prob_vector(y).map_err(to_py_err)?;
    Ok((pu, pi))
}

/// Column-wise mean plus argmax. Returns (class_index, (mean_u, mean_i)).
#[pyfunction]
fn average_combine(rows: Vec<(f64, f64)>) -> PyResult<(usize, (f64, f64))> {
    let pm = ProbabilityMatrix::from_rows(rows.iter().map(|&(a, b)| [a, b]).collect());
    let (class, mean) = ensemble::average_combine(&pm).map_err(to_py_err)?;
    Ok((class, (mean[0], mean[1])))
}

/// Majority vote over binary decisions, with the averaging fallback when
/// probability rows are supplied. Returns
/// (class_index, (votes_uninformative, votes_informative), tie_break).
#[pyfunction]
#[pyo3(signature = (decisions, rows=None))]
fn vote_combine(
    decisions: Vec<usize>,
    rows: Option<Vec<(f64, f64)>>,
) -> PyResult<(usize, (usize, usize), String)> {
    let pm = rows.map(|rows| {
        ProbabilityMatrix::from_rows(rows.iter().map(|&(a, b)| [a, b]).collect())
    });
    let outcome = ensemble::vote_combine(&decisions, pm.as_ref()).map_err(to_py_err)?;
    let tie_break = match outcome.tie_break {
        TieBreak::None => "none",
        TieBreak::AveragedProbabilities => "averaged",
        TieBreak::DefaultUninformative => "default_uninformative",
    };
    Ok((
        outcome.class_index,
        (outcome.tally.count(0), outcome.tally.count(1)),
        tie_break.to_string(),
    ))
}

/// Positive-class precision/recall/F1 report.
#[pyclass(name = "EvaluationReport")]
struct PyEvaluationReport {
    #[pyo3(get)]
    true_pos: usize,
    #[pyo3(get)]
    false_pos: usize,
    #[pyo3(get)]
    false_neg: usize,
    #[pyo3(get)]
    true_neg: usize,
    #[pyo3(get)]
    precision: f64,
    #[pyo3(get)]
    recall: f64,
    #[pyo3(get)]
    f1: f64,
}

#[pymethods]
impl PyEvaluationReport {
    fn render(&self) -> String {
        format!(
            "P={:.4} R={:.4} F1={:.4}",
            self.precision, self.recall, self.f1
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "EvaluationReport(tp={}, fp={}, fn={}, tn={}, f1={:.4})",
            self.true_pos, self.false_pos, self.false_neg, self.true_neg, self.f1
        )
    }
}

/// Score predictions against gold labels (label strings, case-insensitive).
#[pyfunction]
fn evaluate(gold: Vec<String>, pred: Vec<String>) -> PyResult<PyEvaluationReport> {
    let gold = gold
        .iter()
        .map(|s| parse_label(s))
        .collect::<PyResult<Vec<_>>>()?;
    let pred = pred
        .iter()
        .map(|s| parse_label(s))
        .collect::<PyResult<Vec<_>>>()?;
    let r = metrics::evaluate(&gold, &pred).map_err(to_py_err)?;
    Ok(PyEvaluationReport {
        true_pos: r.true_pos,
        false_pos: r.false_pos,
        false_neg: r.false_neg,
        true_neg: r.true_neg,
        precision: r.precision,
        recall: r.recall,
        f1: r.f1,
    })
}

/// Read a tab-separated split file as (id, text, label-or-None) tuples.
#[pyfunction]
#[pyo3(signature = (path, expect_labels=false))]
fn load_split(path: &str, expect_labels: bool) -> PyResult<Vec<(String, String, Option<String>)>> {
    let split = corpus::load_split(path, SplitName::Test, expect_labels).map_err(to_py_err)?;
    Ok(split
        .records
        .into_iter()
        .map(|r| (r.id, r.text, r.label.map(|l| l.as_str().to_string())))
        .collect())
}

/// Per-label counts: (informative, uninformative, unlabeled, total).
#[pyfunction]
fn split_stats(path: &str) -> PyResult<(usize, usize, usize, usize)> {
    let split = corpus::load_split(path, SplitName::Test, false).map_err(to_py_err)?;
    let stats = corpus::compute_stats(&split);
    Ok((
        stats.informative,
        stats.uninformative,
        stats.unlabeled,
        stats.total,
    ))
}

/// Write one id<TAB>LABEL line per record.
#[pyfunction]
fn write_predictions(ids: Vec<String>, labels: Vec<String>, path: &str) -> PyResult<()> {
    let labels = labels
        .iter()
        .map(|s| parse_label(s))
        .collect::<PyResult<Vec<_>>>()?;
    corpus::write_predictions(&ids, &labels, path).map_err(to_py_err)
}

/// Combine per-model probability files; returns (id, label) pairs.
#[pyfunction]
#[pyo3(signature = (paths, scheme="voting"))]
fn ensemble_files(paths: Vec<String>, scheme: &str) -> PyResult<Vec<(String, String)>> {
    let scheme = scheme.parse().map_err(to_py_err)?;
    let combined = ensemble::combine_files(&paths, scheme).map_err(to_py_err)?;
    Ok(combined
        .into_iter()
        .map(|(id, label)| (id, label.as_str().to_string()))
        .collect())
}

/// The built-in trainable classifier: hashed embeddings, one self-attention
/// block, first-token pooling, and a sigmoid head.
#[pyclass]
struct ToyClassifier {
    inner: Classifier,
}

#[pymethods]
impl ToyClassifier {
    #[new]
    #[pyo3(signature = (hidden_dim=32, max_len=128, vocab_size=4096, normalize=true, seed=42))]
    fn new(hidden_dim: usize, max_len: usize, vocab_size: usize, normalize: bool, seed: u64) -> Self {
        ToyClassifier {
            inner: Classifier::new(hidden_dim, max_len, vocab_size, normalize, seed),
        }
    }

    #[getter]
    fn hidden_dim(&self) -> usize {
        self.inner.spec().hidden_dim
    }

    #[getter]
    fn max_len(&self) -> usize {
        self.inner.spec().max_len
    }

    /// Fine-tune on labeled split files over a learning-rate grid; keeps the
    /// parameters of the best validation epoch. Returns
    /// (best_lr, best_epoch, dev_f1).
    #[pyo3(signature = (
        train_path,
        valid_path,
        *,
        epochs=30,
        batch_size=32,
        learning_rates=None,
        lr_multiplier=200.0,
        weight_decay=0.01,
        seed=42,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        &mut self,
        train_path: &str,
        valid_path: &str,
        epochs: usize,
        batch_size: usize,
        learning_rates: Option<Vec<f64>>,
        lr_multiplier: f64,
        weight_decay: f64,
        seed: u64,
    ) -> PyResult<(f64, usize, f64)> {
        let train =
            corpus::load_split(train_path, SplitName::Train, true).map_err(to_py_err)?;
        let valid =
            corpus::load_split(valid_path, SplitName::Valid, true).map_err(to_py_err)?;
        let config = TrainConfig {
            batch_size,
            learning_rates: learning_rates.unwrap_or_else(|| vec![1e-5, 2e-5, 5e-5]),
            epochs,
            weight_decay,
            seed,
            max_len: self.inner.spec().max_len,
            lr_multiplier,
        };
        let result =
            trainer::grid_search(&config, &train, &valid, &self.inner).map_err(to_py_err)?;
        self.inner = result.best_checkpoint;
        Ok((result.best_lr, result.best_epoch, result.best_dev_f1))
    }

    /// Informative-class probability per text.
    fn predict_proba(&self, texts: Vec<String>) -> PyResult<Vec<f64>> {
        texts
            .iter()
            .map(|t| self.inner.predict_text(t).map_err(to_py_err))
            .collect()
    }

    /// Hard labels per text, thresholded at 0.5.
    fn predict(&self, texts: Vec<String>) -> PyResult<Vec<String>> {
        Ok(self
            .predict_proba(texts)?
            .into_iter()
            .map(|y| model::decide(y).as_str().to_string())
            .collect())
    }

    /// Score this model on a labeled split file.
    fn evaluate_on(&self, path: &str) -> PyResult<PyEvaluationReport> {
        let split = corpus::load_split(path, SplitName::Valid, true).map_err(to_py_err)?;
        let r = trainer::evaluate_classifier(&self.inner, &split).map_err(to_py_err)?;
        Ok(PyEvaluationReport {
            true_pos: r.true_pos,
            false_pos: r.false_pos,
            false_neg: r.false_neg,
            true_neg: r.true_neg,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        })
    }

    /// Write a format-versioned checkpoint; reloads bit-exactly.
    fn save(&self, path: &str) -> PyResult<()> {
        Checkpoint::from_classifier(&self.inner)
            .save(path)
            .map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<ToyClassifier> {
        let inner = Checkpoint::load(path)
            .and_then(Checkpoint::into_classifier)
            .map_err(to_py_err)?;
        Ok(ToyClassifier { inner })
    }
}

#[pymodule]
fn tweetsift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ToyClassifier>()?;
    m.add_class::<PyEvaluationReport>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(frame, m)?)?;
    m.add_function(wrap_pyfunction!(head_prob, m)?)?;
    m.add_function(wrap_pyfunction!(to_prob_vector, m)?)?;
    m.add_function(wrap_pyfunction!(average_combine, m)?)?;
    m.add_function(wrap_pyfunction!(vote_combine, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(load_split, m)?)?;
    m.add_function(wrap_pyfunction!(split_stats, m)?)?;
    m.add_function(wrap_pyfunction!(write_predictions, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_files, m)?)?;
    Ok(())
}
