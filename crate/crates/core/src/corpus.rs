//! Citation datasets: loading, saving, augmentation and context-less derivation.
//!
//! Two on-disk layouts are supported. JSON Lines is canonical:
//!
//! ```text
//! {"id": "s1", "source_doc": "S0167739X13001349", "text": "...", "label": "positive", "context_kind": "context_full", "citation_sentence_index": 1}
//! ```
//!
//! The TSV layout carries the columns `id, source_doc, label, context_kind, text`
//! with the text last; tabs inside the text are not allowed.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::split_sentences;

/// Sentiment polarity of a citation. Integer codes index confusion matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive = 0,
    Negative = 1,
    Neutral = 2,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Negative, Polarity::Neutral];
    pub const COUNT: usize = 3;

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Polarity> {
        Self::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "neutral" => Ok(Polarity::Neutral),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContextKind {
    #[default]
    ContextLess,
    ContextFull,
    ContextFullDerived,
}

impl ContextKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextKind::ContextLess => "context_less",
            ContextKind::ContextFull => "context_full",
            ContextKind::ContextFullDerived => "context_full_derived",
        }
    }
}

impl FromStr for ContextKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "context_less" | "" => Ok(ContextKind::ContextLess),
            "context_full" => Ok(ContextKind::ContextFull),
            "context_full_derived" => Ok(ContextKind::ContextFullDerived),
            other => Err(Error::Invalid(format!("unknown context_kind {other:?}"))),
        }
    }
}

/// One labeled citation unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationSample {
    pub id: String,
    #[serde(default)]
    pub source_doc: String,
    pub text: String,
    #[serde(deserialize_with = "de_polarity")]
    pub label: Polarity,
    #[serde(default, deserialize_with = "de_context_kind")]
    pub context_kind: ContextKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation_sentence_index: Option<usize>,
}

fn de_polarity<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Polarity, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

fn de_context_kind<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<ContextKind, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

/// Per-class sample counts, indexed by polarity code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
}

impl ClassCounts {
    pub fn new(positive: usize, negative: usize, neutral: usize) -> Self {
        ClassCounts {
            positive,
            negative,
            neutral,
        }
    }

    pub fn of<'a>(labels: impl IntoIterator<Item = &'a Polarity>) -> Self {
        let mut counts = ClassCounts::default();
        for label in labels {
            *counts.get_mut(*label) += 1;
        }
        counts
    }

    pub fn get(&self, p: Polarity) -> usize {
        match p {
            Polarity::Positive => self.positive,
            Polarity::Negative => self.negative,
            Polarity::Neutral => self.neutral,
        }
    }

    fn get_mut(&mut self, p: Polarity) -> &mut usize {
        match p {
            Polarity::Positive => &mut self.positive,
            Polarity::Negative => &mut self.negative,
            Polarity::Neutral => &mut self.neutral,
        }
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative + self.neutral
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.positive, self.negative, self.neutral]
    }
}

impl std::ops::Add for ClassCounts {
    type Output = ClassCounts;

    fn add(self, rhs: ClassCounts) -> ClassCounts {
        ClassCounts {
            positive: self.positive + rhs.positive,
            negative: self.negative + rhs.negative,
            neutral: self.neutral + rhs.neutral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Tsv,
}

impl Format {
    /// Guesses the format from a file extension; anything other than `.tsv` is JSONL.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => Format::Tsv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "tsv" => Ok(Format::Tsv),
            other => Err(Error::Invalid(format!("unknown dataset format {other:?}"))),
        }
    }
}

/// An ordered, immutable collection of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    samples: Vec<CitationSample>,
    class_counts: ClassCounts,
}

impl Dataset {
    /// Builds a dataset, checking that texts are non-empty and ids unique.
    pub fn new(name: impl Into<String>, samples: Vec<CitationSample>) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.text.trim().is_empty() {
                return Err(Error::Invalid(format!("sample {:?} has empty text", s.id)));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        let class_counts = ClassCounts::of(samples.iter().map(|s| &s.label));
        Ok(Dataset {
            name,
            samples,
            class_counts,
        })
    }

    pub fn samples(&self) -> &[CitationSample] {
        &self.samples
    }

    pub fn class_counts(&self) -> ClassCounts {
        self.class_counts
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<Polarity> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn save(&self, path: &Path, format: Format) -> Result<()> {
        let mut out = Vec::new();
        for s in &self.samples {
            match format {
                Format::Jsonl => {
                    serde_json::to_writer(&mut out, s)?;
                    out.push(b'\n');
                }
                Format::Tsv => {
                    if s.text.contains(['\t', '\n']) {
                        return Err(Error::Invalid(format!(
                            "sample {:?}: text contains a tab or newline, not representable as TSV",
                            s.id
                        )));
                    }
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}",
                        s.id,
                        s.source_doc,
                        s.label,
                        s.context_kind.as_str(),
                        s.text
                    )
                    .expect("write to Vec");
                }
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Loads a dataset; the name is taken from the file stem.
pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            Format::Jsonl => parse_jsonl_row(line),
            Format::Tsv => parse_tsv_row(line),
        };
        let sample = parsed.map_err(|e| match e {
            Error::UnknownLabel(_) => e,
            other => Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: other.to_string(),
            },
        })?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::NoSamples(name));
    }
    Dataset::new(name, samples)
}

fn parse_jsonl_row(line: &str) -> Result<CitationSample> {
    // Parse loosely first so an unknown label surfaces as its own error.
    let value: serde_json::Value = serde_json::from_str(line)?;
    if let Some(label) = value.get("label").and_then(|l| l.as_str()) {
        label.parse::<Polarity>()?;
    }
    Ok(serde_json::from_value(value)?)
}

fn parse_tsv_row(line: &str) -> Result<CitationSample> {
    let cols: Vec<&str> = line.splitn(5, '\t').collect();
    if cols.len() != 5 {
        return Err(Error::Invalid(format!(
            "expected 5 tab-separated columns, found {}",
            cols.len()
        )));
    }
    Ok(CitationSample {
        id: cols[0].to_string(),
        source_doc: cols[1].to_string(),
        label: cols[2].parse()?,
        context_kind: cols[3].parse()?,
        text: cols[4].to_string(),
        citation_sentence_index: None,
    })
}

/// Concatenates two datasets, `a` first. Ids are prefixed with the source dataset name.
pub fn augment(a: &Dataset, b: &Dataset, name: &str) -> Result<Dataset> {
    if a.is_empty() {
        return Err(Error::NoSamples(a.name.clone()));
    }
    if b.is_empty() {
        return Err(Error::NoSamples(b.name.clone()));
    }
    // The name prefix keeps ids unique unless both inputs share a name.
    let same_name = a.name == b.name;
    let mut samples = Vec::with_capacity(a.len() + b.len());
    for (part, d) in [a, b].into_iter().enumerate() {
        for s in &d.samples {
            let id = if same_name {
                format!("{}#{}:{}", d.name, part, s.id)
            } else {
                format!("{}:{}", d.name, s.id)
            };
            samples.push(CitationSample { id, ..s.clone() });
        }
    }
    Dataset::new(name, samples)
}

static CITATION_MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"\[\s*\d+(?:\s*[,;\-–]\s*\d+)*\s*\]",
        r"|\([A-Z][^()]*?\b\d{4}[a-z]?\)",
        r"|[A-Z][\w\-]+(?:\s+et\s+al\.?|\s+(?:and|&)\s+[A-Z][\w\-]+)?,?\s*\(\s*\d{4}[a-z]?\s*\)",
    ))
    .expect("valid citation regex")
});

/// True when the text contains a bracketed number or an author-year citation.
pub fn has_citation_marker(text: &str) -> bool {
    CITATION_MARKER.is_match(text)
}

/// Builds the id → sentence ordinal map used by [`derive_context_less`].
///
/// Uses each sample's `citation_sentence_index` when present, otherwise the first
/// sentence carrying a citation marker. Ids that resolve neither way are returned
/// separately.
pub fn citation_sentence_index(d: &Dataset) -> (HashMap<String, usize>, Vec<String>) {
    let mut index = HashMap::with_capacity(d.len());
    let mut missing = Vec::new();
    for s in d.samples() {
        let ordinal = s.citation_sentence_index.or_else(|| {
            split_sentences(&s.text)
                .iter()
                .position(|sent| has_citation_marker(sent))
        });
        match ordinal {
            Some(o) => {
                index.insert(s.id.clone(), o);
            }
            None => missing.push(s.id.clone()),
        }
    }
    (index, missing)
}

/// Replaces every context window by its single citation sentence, keeping labels.
pub fn derive_context_less(d: &Dataset, index: &HashMap<String, usize>) -> Result<Dataset> {
    if let Some(s) = d
        .samples()
        .iter()
        .find(|s| s.context_kind != ContextKind::ContextFull)
    {
        return Err(Error::Invalid(format!(
            "sample {:?} is {}, derivation needs context_full samples",
            s.id,
            s.context_kind.as_str()
        )));
    }
    let missing: Vec<String> = d
        .samples()
        .iter()
        .filter(|s| !index.contains_key(&s.id))
        .map(|s| s.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingSentenceIndex(missing));
    }
    let mut out = Vec::with_capacity(d.len());
    for s in d.samples() {
        let ordinal = index[&s.id];
        let sentences = split_sentences(&s.text);
        let sentence = sentences.get(ordinal).ok_or_else(|| Error::SentenceOrdinal {
            id: s.id.clone(),
            ordinal,
            count: sentences.len(),
        })?;
        out.push(CitationSample {
            text: sentence.to_string(),
            context_kind: ContextKind::ContextFullDerived,
            citation_sentence_index: None,
            ..s.clone()
        });
    }
    Dataset::new(format!("{}_derived", d.name), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample(id: &str, label: Polarity, text: &str) -> CitationSample {
        CitationSample {
            id: id.into(),
            source_doc: "doc".into(),
            text: text.into(),
            label,
            context_kind: ContextKind::ContextFull,
            citation_sentence_index: None,
        }
    }

    fn write_tmp(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_three_labels() {
        let f = write_tmp(
            concat!(
                r#"{"id":"a","source_doc":"d","text":"good [1]","label":"positive","context_kind":"context_less"}"#,
                "\n",
                r#"{"id":"b","source_doc":"d","text":"bad [2]","label":"NEGATIVE","context_kind":"context_less"}"#,
                "\n",
                r#"{"id":"c","source_doc":"d","text":"meh [3]","label":"Neutral","context_kind":"context_less"}"#,
                "\n"
            ),
            ".jsonl",
        );
        let d = load_dataset(f.path(), Format::Jsonl).unwrap();
        assert_eq!(d.class_counts(), ClassCounts::new(1, 1, 1));
        assert_eq!(d.samples()[1].label, Polarity::Negative);
        assert_eq!(d.samples()[2].id, "c");
    }

    #[test]
    fn empty_file_has_no_samples() {
        let f = write_tmp("\n\n", ".jsonl");
        let err = load_dataset(f.path(), Format::Jsonl).unwrap_err();
        assert!(err.to_string().contains("no samples"), "{err}");
    }

    #[test]
    fn malformed_row_names_line() {
        let f = write_tmp("a\td\tpositive\tcontext_less\tok\nbroken row\n", ".tsv");
        let err = load_dataset(f.path(), Format::Tsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_label_names_value() {
        let f = write_tmp("a\td\tglowing\tcontext_less\tok\n", ".tsv");
        let err = load_dataset(f.path(), Format::Tsv).unwrap_err();
        assert!(err.to_string().contains("glowing"), "{err}");
        let f = write_tmp(r#"{"id":"a","text":"t","label":"meh"}"#, ".jsonl");
        let err = load_dataset(f.path(), Format::Jsonl).unwrap_err();
        assert!(err.to_string().contains("meh"), "{err}");
    }

    #[test]
    fn save_and_reload_round_trips() {
        let d = Dataset::new(
            "x",
            vec![
                sample("1", Polarity::Positive, "Ünïcode “quotes” [4]."),
                sample("2", Polarity::Neutral, "plain"),
            ],
        )
        .unwrap();
        for format in [Format::Jsonl, Format::Tsv] {
            let f = tempfile::NamedTempFile::new().unwrap();
            d.save(f.path(), format).unwrap();
            let back = load_dataset(f.path(), format).unwrap();
            assert_eq!(back.samples(), d.samples());
        }
    }

    #[test]
    fn augment_with_itself_doubles_counts() {
        let d = Dataset::new(
            "d",
            vec![
                sample("1", Polarity::Positive, "a"),
                sample("2", Polarity::Neutral, "b"),
            ],
        )
        .unwrap();
        let dd = augment(&d, &d, "dd").unwrap();
        assert_eq!(dd.len(), 4);
        assert_eq!(dd.class_counts(), ClassCounts::new(2, 0, 2));
    }

    #[test]
    fn augment_preserves_order_and_prefixes_ids() {
        let a = Dataset::new("a", vec![sample("1", Polarity::Positive, "x")]).unwrap();
        let b = Dataset::new("b", vec![sample("1", Polarity::Negative, "y")]).unwrap();
        let ab = augment(&a, &b, "ab").unwrap();
        let ids: Vec<_> = ab.samples().iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a:1", "b:1"]);
    }

    #[test]
    fn derive_single_sentence_is_identity() {
        let d = Dataset::new("d", vec![sample("1", Polarity::Negative, "Only one [3].")]).unwrap();
        let idx = HashMap::from([("1".to_string(), 0)]);
        let out = derive_context_less(&d, &idx).unwrap();
        assert_eq!(out.samples()[0].text, "Only one [3].");
        assert_eq!(out.samples()[0].context_kind, ContextKind::ContextFullDerived);
    }

    #[test]
    fn derive_extracts_middle_sentence() {
        let text = "First we look. Smith et al. (2010) failed badly. Then it ended.";
        let d = Dataset::new("d", vec![sample("1", Polarity::Negative, text)]).unwrap();
        let idx = HashMap::from([("1".to_string(), 1)]);
        let out = derive_context_less(&d, &idx).unwrap();
        // Manual split of the fixture.
        assert_eq!(out.samples()[0].text, "Smith et al. (2010) failed badly.");
        assert_eq!(out.samples()[0].label, Polarity::Negative);
    }

    #[test]
    fn derive_reports_missing_ids() {
        let d = Dataset::new(
            "d",
            vec![
                sample("1", Polarity::Negative, "a"),
                sample("2", Polarity::Neutral, "b"),
            ],
        )
        .unwrap();
        let idx = HashMap::from([("1".to_string(), 0)]);
        let err = derive_context_less(&d, &idx).unwrap_err();
        assert!(matches!(&err, Error::MissingSentenceIndex(ids) if ids == &["2"]));
    }

    #[test]
    fn marker_fallback_picks_citing_sentence() {
        let mut s = sample(
            "1",
            Polarity::Positive,
            "This is background. The DAM model [22] counts transfers. It is good.",
        );
        let mut t = sample("2", Polarity::Neutral, "We follow (Athar, 2011) here. Nothing else.");
        let u = sample("3", Polarity::Neutral, "No marker at all.");
        let d = Dataset::new("d", vec![s.clone(), t.clone(), u]).unwrap();
        let (idx, missing) = citation_sentence_index(&d);
        assert_eq!(idx["1"], 1);
        assert_eq!(idx["2"], 0);
        assert_eq!(missing, ["3"]);

        s.citation_sentence_index = Some(2);
        t.citation_sentence_index = Some(1);
        let d = Dataset::new("d", vec![s, t]).unwrap();
        let (idx, _) = citation_sentence_index(&d);
        assert_eq!((idx["1"], idx["2"]), (2, 1));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Dataset::new(
            "d",
            vec![
                sample("1", Polarity::Negative, "a"),
                sample("1", Polarity::Neutral, "b"),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }
}
