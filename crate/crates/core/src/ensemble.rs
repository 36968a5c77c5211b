//! Combining per-model outputs: unweighted probability averaging and
//! majority voting.
//!
//! Class indices follow the corpus convention: 0 = UNINFORMATIVE,
//! 1 = INFORMATIVE. Argmax ties break toward UNINFORMATIVE. A voting tie
//! falls back to probability averaging when the per-model probability rows
//! are available, and to UNINFORMATIVE otherwise; the chosen path is
//! reported with the result.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::Label;
use crate::error::{Error, Result};

/// How far a probability row may drift from summing to one.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// Per-model class probabilities for a single example: one row per model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    pub model_ids: Vec<String>,
    pub rows: Vec<[f64; 2]>,
}

impl ProbabilityMatrix {
    /// Builds a matrix with generated model identifiers.
    pub fn from_rows(rows: Vec<[f64; 2]>) -> Self {
        let model_ids = (1..=rows.len()).map(|i| format!("model-{i}")).collect();
        ProbabilityMatrix { model_ids, rows }
    }

    pub fn num_models(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::InvalidArgument(
                "probability matrix needs at least one model row".into(),
            ));
        }
        if self.model_ids.len() != self.rows.len() {
            return Err(Error::InvalidArgument(format!(
                "{} model ids for {} rows",
                self.model_ids.len(),
                self.rows.len()
            )));
        }
        for (model, row) in self.model_ids.iter().zip(&self.rows) {
            let sum = row[0] + row[1];
            if row[0] < 0.0 || row[1] < 0.0 || (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                return Err(Error::InvalidProbabilityRow {
                    model: model.clone(),
                    id: String::new(),
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// Vote counts per class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteTally {
    votes: [usize; 2],
}

impl VoteTally {
    pub fn count(&self, class_index: usize) -> usize {
        self.votes[class_index]
    }

    pub fn total(&self) -> usize {
        self.votes[0] + self.votes[1]
    }
}

/// Which rule produced a voting decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// A strict majority existed; no tie handling ran.
    None,
    /// Tie resolved by averaging the models' probability rows.
    AveragedProbabilities,
    /// Tie with no probabilities available; defaulted to UNINFORMATIVE.
    DefaultUninformative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteOutcome {
    pub class_index: usize,
    pub tally: VoteTally,
    pub tie_break: TieBreak,
}

fn argmax_tie_low(v: [f64; 2]) -> usize {
    usize::from(v[1] > v[0])
}

/// Column-wise mean of the rows, then argmax (ties toward UNINFORMATIVE).
/// Returns the winning class index and the averaged vector.
pub fn average_combine(pm: &ProbabilityMatrix) -> Result<(usize, [f64; 2])> {
    pm.validate()?;
    let m = pm.num_models() as f64;
    let mut mean = [0.0_f64; 2];
    for row in &pm.rows {
        mean[0] += row[0];
        mean[1] += row[1];
    }
    mean[0] /= m;
    mean[1] /= m;
    Ok((argmax_tie_low(mean), mean))
}

/// Tallies per-model binary decisions and returns the most-voted class.
///
/// `probs`, when given, must carry one row per decision; it is consulted
/// only if the vote ties.
pub fn vote_combine(decisions: &[usize], probs: Option<&ProbabilityMatrix>) -> Result<VoteOutcome> {
    if decisions.is_empty() {
        return Err(Error::InvalidArgument(
            "vote_combine needs at least one decision".into(),
        ));
    }
    if let Some(&bad) = decisions.iter().find(|&&d| d > 1) {
        return Err(Error::InvalidArgument(format!(
            "decisions must be class indices 0 or 1, got {bad}"
        )));
    }
    if let Some(pm) = probs {
        if pm.num_models() != decisions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} probability rows for {} decisions",
                pm.num_models(),
                decisions.len()
            )));
        }
    }

    let mut votes = [0_usize; 2];
    for &d in decisions {
        votes[d] += 1;
    }
    let tally = VoteTally { votes };

    let (class_index, tie_break) = if votes[1] > votes[0] {
        (1, TieBreak::None)
    } else if votes[0] > votes[1] {
        (0, TieBreak::None)
    } else {
        match probs {
            Some(pm) => (average_combine(pm)?.0, TieBreak::AveragedProbabilities),
            None => (0, TieBreak::DefaultUninformative),
        }
    };

    Ok(VoteOutcome {
        class_index,
        tally,
        tie_break,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Averaging,
    Voting,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Averaging => "averaging",
            Scheme::Voting => "voting",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "averaging" => Ok(Scheme::Averaging),
            "voting" => Ok(Scheme::Voting),
            other => Err(Error::InvalidArgument(format!(
                "unknown ensemble scheme {other:?} (expected averaging or voting)"
            ))),
        }
    }
}

/// One model's probability file, in file order.
#[derive(Debug, Clone)]
pub struct ModelProbabilities {
    pub model_id: String,
    pub entries: Vec<(String, [f64; 2])>,
}

/// Writes `id<TAB>p_uninformative<TAB>p_informative` lines. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_probability_file(
    entries: &[(String, [f64; 2])],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (id, row) in entries {
        out.push_str(&format!("{id}\t{}\t{}\n", row[0], row[1]));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a `id<TAB>p_uninformative<TAB>p_informative` file.
pub fn read_probability_file(path: impl AsRef<Path>) -> Result<ModelProbabilities> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (index, raw_line) in contents.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::MalformedLine {
                path: path.into(),
                line: line_no,
                found: fields.len(),
            });
        }
        let parse = |field: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| Error::InvalidRecord {
                path: path.into(),
                line: line_no,
                reason: format!("not a probability: {field:?}"),
            })
        };
        entries.push((fields[0].to_string(), [parse(fields[1])?, parse(fields[2])?]));
    }
    Ok(ModelProbabilities {
        model_id: path.display().to_string(),
        entries,
    })
}

/// Combines aligned per-model probability tables into one label per example.
pub fn combine_batch(
    models: &[ModelProbabilities],
    scheme: Scheme,
) -> Result<Vec<(String, Label)>> {
    let Some(reference) = models.first() else {
        return Err(Error::InvalidArgument(
            "ensembling needs at least one model".into(),
        ));
    };

    // Alignment first: every file must list the same ids in the same order.
    for model in &models[1..] {
        let positions = reference.entries.len().max(model.entries.len());
        for k in 0..positions {
            let expected = reference.entries.get(k).map(|(id, _)| id.as_str());
            let found = model.entries.get(k).map(|(id, _)| id.as_str());
            if expected != found {
                return Err(Error::Misaligned {
                    position: k,
                    expected: expected.unwrap_or("<end of file>").to_string(),
                    expected_model: reference.model_id.clone(),
                    found: found.unwrap_or("<end of file>").to_string(),
                    found_model: model.model_id.clone(),
                });
            }
        }
    }

    let model_ids: Vec<String> = models.iter().map(|m| m.model_id.clone()).collect();
    let mut out = Vec::with_capacity(reference.entries.len());
    for k in 0..reference.entries.len() {
        let id = reference.entries[k].0.clone();
        let pm = ProbabilityMatrix {
            model_ids: model_ids.clone(),
            rows: models.iter().map(|m| m.entries[k].1).collect(),
        };
        pm.validate().map_err(|e| match e {
            Error::InvalidProbabilityRow { model, sum, .. } => Error::InvalidProbabilityRow {
                model,
                id: id.clone(),
                sum,
            },
            other => other,
        })?;
        let class_index = match scheme {
            Scheme::Averaging => average_combine(&pm)?.0,
            Scheme::Voting => {
                let decisions: Vec<usize> = pm.rows.iter().map(|&r| argmax_tie_low(r)).collect();
                vote_combine(&decisions, Some(&pm))?.class_index
            }
        };
        out.push((id, Label::from_index(class_index).expect("binary class")));
    }
    Ok(out)
}

/// Reads every probability file, then combines them.
pub fn combine_files(paths: &[impl AsRef<Path>], scheme: Scheme) -> Result<Vec<(String, Label)>> {
    let models = paths
        .iter()
        .map(read_probability_file)
        .collect::<Result<Vec<_>>>()?;
    combine_batch(&models, scheme)
}
