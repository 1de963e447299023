//! Annotation interchange records produced by the external tagger/parser exporter.
//!
//! One JSON object per line, in corpus order:
//!
//! ```text
//! {"id": "s1", "sentences": [{"tokens": ["I", "love", "it"], "pos": ["PRP", "VBP", "PRP"],
//!   "deps": [["nsubj", 2, 1], ["root", 0, 2], ["obj", 2, 3]]}]}
//! ```
//!
//! Dependency indices are 1-based token positions within the sentence; 0 is ROOT.
//! The exporter may emit a leading header object `{"header": {...}}` describing the
//! label scheme; lines beginning with `#` are comments.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    #[serde(default)]
    pub deps: Vec<(String, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: String,
    #[serde(default)]
    pub sentences: Vec<AnnotatedSentence>,
}

/// Metadata line written by the exporter ahead of the records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotationHeader {
    #[serde(default)]
    pub parser: Option<String>,
    #[serde(default)]
    pub label_scheme: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct AnnotationFile {
    pub header: Option<AnnotationHeader>,
    pub records: Vec<AnnotationRecord>,
}

impl AnnotationFile {
    /// Index of records by sample id.
    pub fn by_id(&self) -> HashMap<&str, &AnnotationRecord> {
        self.records.iter().map(|r| (r.id.as_str(), r)).collect()
    }
}

impl AnnotatedSentence {
    /// Word form of a 1-based token position; 0 is the artificial ROOT node.
    pub fn form(&self, index: usize) -> Option<&str> {
        if index == 0 {
            Some("ROOT")
        } else {
            self.tokens.get(index - 1).map(String::as_str)
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.pos.len() != self.tokens.len() {
            return Err(format!(
                "{} POS tags for {} tokens",
                self.pos.len(),
                self.tokens.len()
            ));
        }
        for (rel, gov, dep) in &self.deps {
            if rel.trim().is_empty() {
                return Err("empty dependency relation".into());
            }
            let n = self.tokens.len();
            if *gov > n || *dep > n || *dep == 0 {
                return Err(format!(
                    "dependency {rel}({gov}, {dep}) out of range for {n} tokens"
                ));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Header { header: AnnotationHeader },
    Record(AnnotationRecord),
}

pub fn load_annotations(path: &Path) -> Result<AnnotationFile> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = AnnotationFile::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        match serde_json::from_str::<Line>(trimmed).map_err(|e| parse_err(e.to_string()))? {
            Line::Header { header } => out.header = Some(header),
            Line::Record(record) => {
                for sentence in &record.sentences {
                    sentence.validate().map_err(&parse_err)?;
                }
                out.records.push(record);
            }
        }
    }
    Ok(out)
}

pub fn save_annotations(path: &Path, file: &AnnotationFile) -> Result<()> {
    let mut out = Vec::new();
    if let Some(header) = &file.header {
        serde_json::to_writer(&mut out, &serde_json::json!({ "header": header }))?;
        out.push(b'\n');
    }
    for r in &file.records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}
