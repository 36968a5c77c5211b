//! Dataset loading, validation, statistics, and prediction files.
//!
//! Split files are UTF-8 and tab-separated with 2 or 3 columns
//! (`id<TAB>text` or `id<TAB>text<TAB>label`). An optional header line whose
//! first cell is `Id` is skipped. Tab characters inside tweet text are not
//! supported; they break the column layout.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label. `Informative` maps to 1, `Uninformative` to 0 in every
/// numeric context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "UNINFORMATIVE")]
    Uninformative,
    #[serde(rename = "INFORMATIVE")]
    Informative,
}

impl Label {
    pub fn to_index(self) -> usize {
        match self {
            Label::Uninformative => 0,
            Label::Informative => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::Uninformative),
            1 => Some(Label::Informative),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Uninformative => "UNINFORMATIVE",
            Label::Informative => "INFORMATIVE",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ();

    /// Case-insensitive, whitespace-trimmed.
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_uppercase().as_str() {
            "INFORMATIVE" => Ok(Label::Informative),
            "UNINFORMATIVE" => Ok(Label::Uninformative),
            _ => Err(()),
        }
    }
}

/// One tweet: opaque id, raw text, and an optional gold label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Valid => "valid",
            SplitName::Test => "test",
        })
    }
}

/// An ordered dataset split. Record order mirrors the source file exactly.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub records: Vec<TweetRecord>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Panics if called on a split with unlabeled records; callers must load
    /// with `expect_labels` when labels are required.
    pub fn labels(&self) -> Vec<Label> {
        self.records
            .iter()
            .map(|r| r.label.expect("split is fully labeled"))
            .collect()
    }
}

/// Per-label record counts for one split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub informative: usize,
    pub uninformative: usize,
    pub unlabeled: usize,
    pub total: usize,
}

impl CorpusStats {
    pub fn count(&self, label: Label) -> usize {
        match label {
            Label::Informative => self.informative,
            Label::Uninformative => self.uninformative,
        }
    }
}

/// Loads one split file. With `expect_labels`, every data line must carry a
/// label; otherwise the label column is optional and parsed when present.
///
/// Errors name the 1-based line number of the offending line.
pub fn load_split(
    path: impl AsRef<Path>,
    name: SplitName,
    expect_labels: bool,
) -> Result<DatasetSplit> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (index, raw_line) in contents.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let fields: Vec<&str> = line.split('\t').collect();

        // Optional header: first line whose first cell is "Id".
        if line_no == 1 && fields.first() == Some(&"Id") {
            continue;
        }

        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::MalformedLine {
                path: path.into(),
                line: line_no,
                found: fields.len(),
            });
        }

        let id = fields[0].trim();
        if id.is_empty() {
            return Err(Error::InvalidRecord {
                path: path.into(),
                line: line_no,
                reason: "empty id".into(),
            });
        }
        if !seen_ids.insert(id.to_string()) {
            return Err(Error::InvalidRecord {
                path: path.into(),
                line: line_no,
                reason: format!("duplicate id {id:?}"),
            });
        }

        let text = fields[1];
        if text.trim().is_empty() {
            return Err(Error::InvalidRecord {
                path: path.into(),
                line: line_no,
                reason: "empty text".into(),
            });
        }

        let label = match fields.get(2) {
            Some(value) => Some(value.parse::<Label>().map_err(|_| Error::UnknownLabel {
                path: path.into(),
                line: line_no,
                value: value.to_string(),
            })?),
            None => {
                if expect_labels {
                    return Err(Error::MissingLabel {
                        path: path.into(),
                        line: line_no,
                    });
                }
                None
            }
        };

        records.push(TweetRecord {
            id: id.to_string(),
            text: text.to_string(),
            label,
        });
    }

    Ok(DatasetSplit { name, records })
}

/// Counts labels and unlabeled records. `total` always equals the record count.
pub fn compute_stats(split: &DatasetSplit) -> CorpusStats {
    let mut stats = CorpusStats {
        informative: 0,
        uninformative: 0,
        unlabeled: 0,
        total: split.records.len(),
    };
    for record in &split.records {
        match record.label {
            Some(Label::Informative) => stats.informative += 1,
            Some(Label::Uninformative) => stats.uninformative += 1,
            None => stats.unlabeled += 1,
        }
    }
    stats
}

/// Writes one `id<TAB>LABEL` line per record, in input order, newline-terminated.
pub fn write_predictions(ids: &[String], labels: &[Label], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if ids.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "ids and labels differ in length: {} vs {}",
            ids.len(),
            labels.len()
        )));
    }
    let mut out = String::new();
    for (id, label) in ids.iter().zip(labels) {
        out.push_str(id);
        out.push('\t');
        out.push_str(label.as_str());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a split in the tab-separated input format. With `include_labels`,
/// every record must carry a label.
pub fn write_split(split: &DatasetSplit, path: impl AsRef<Path>, include_labels: bool) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for record in &split.records {
        out.push_str(&record.id);
        out.push('\t');
        out.push_str(&record.text);
        if include_labels {
            let label = record.label.ok_or_else(|| {
                Error::InvalidArgument(format!("record {:?} has no label to write", record.id))
            })?;
            out.push('\t');
            out.push_str(label.as_str());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a prediction file written by [`write_predictions`].
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<(String, Label)>> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (index, raw_line) in contents.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::MalformedLine {
                path: path.into(),
                line: line_no,
                found: fields.len(),
            });
        }
        let label = fields[1].parse::<Label>().map_err(|_| Error::UnknownLabel {
            path: path.into(),
            line: line_no,
            value: fields[1].to_string(),
        })?;
        pairs.push((fields[0].to_string(), label));
    }
    Ok(pairs)
}
