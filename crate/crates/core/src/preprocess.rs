//! Text cleaning, stemming and assembly of the ensemble token stream.
//!
//! The ensemble stream of a sample is its cleaned text tokens, followed by every
//! flattened dependency triple (`rel_governor_dependent`), followed by every
//! `word_TAG` composite. Stop-word removal and stemming only ever touch the text
//! tokens; composites keep their surface word forms.

use std::collections::HashSet;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::LazyLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::annotation::AnnotationRecord;
use crate::corpus::CitationSample;
use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

static ENGLISH_STEMMER: LazyLock<Stemmer> = LazyLock::new(|| Stemmer::create(Algorithm::English));

#[derive(Debug, Clone, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn none() -> Self {
        StopWords(HashSet::new())
    }

    /// Reads a list with one word per line; blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopWords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Cleaned word tokens with the sentence each one came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    /// Contiguous, disjoint ranges over `tokens`, one per sentence (possibly empty).
    pub sentences: Vec<Range<usize>>,
}

impl TokenizedText {
    pub fn sentence_tokens(&self) -> impl Iterator<Item = &[String]> {
        self.sentences.iter().map(|r| &self.tokens[r.clone()])
    }
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closer(c: char) -> bool {
    matches!(c, ')' | ']' | '"' | '\'' | '”' | '’')
}

fn is_opener(c: char) -> bool {
    matches!(c, '(' | '[' | '"' | '\'' | '“' | '‘')
}

/// Rule-based splitter: a sentence ends at `.`, `?` or `!` (plus any closing
/// brackets or quotes) when followed by whitespace and a capital letter.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if is_sentence_end(chars[i].1) {
            let mut j = i + 1;
            while j < chars.len() && (is_closer(chars[j].1) || is_sentence_end(chars[j].1)) {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let mut m = k;
            while m < chars.len() && is_opener(chars[m].1) {
                m += 1;
            }
            if k > j && m < chars.len() && chars[m].1.is_uppercase() {
                let end = chars[j - 1].0 + chars[j - 1].1.len_utf8();
                push_trimmed(&mut out, &text[start..end]);
                start = chars[k].0;
                i = k;
                continue;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed<'a>(out: &mut Vec<&'a str>, s: &'a str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s);
    }
}

/// Lowercases a word and drops every non-alphanumeric character.
pub fn clean_word(word: &str) -> String {
    word.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

fn raw_words(sentence: &str) -> impl Iterator<Item = String> + '_ {
    sentence
        .split(|c: char| c.is_whitespace() || matches!(c, '\'' | '’' | '‘'))
        .map(clean_word)
        .filter(|w| !w.is_empty())
}

/// Word tokens of a text before stop-word removal, in order.
pub fn word_tokens(text: &str) -> Vec<String> {
    split_sentences(text).into_iter().flat_map(raw_words).collect()
}

pub fn tokenize_and_clean(text: &str, stopwords: &StopWords) -> TokenizedText {
    let mut out = TokenizedText::default();
    for sentence in split_sentences(text) {
        let start = out.tokens.len();
        out.tokens
            .extend(raw_words(sentence).filter(|w| !stopwords.contains(w)));
        out.sentences.push(start..out.tokens.len());
    }
    out
}

/// English Snowball (Porter2) stem of a lowercase word.
pub fn stem(token: &str) -> String {
    ENGLISH_STEMMER.stem(token).into_owned()
}

/// A typed dependency between two word forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyTriple {
    pub relation: String,
    pub governor: String,
    pub dependent: String,
}

impl DependencyTriple {
    pub fn new(
        relation: impl Into<String>,
        governor: impl Into<String>,
        dependent: impl Into<String>,
    ) -> Self {
        DependencyTriple {
            relation: relation.into(),
            governor: governor.into(),
            dependent: dependent.into(),
        }
    }

    /// Parses the `rel(gov-1, dep-2)` notation; position suffixes are optional.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let open = s.find('(')?;
        let inner = s[open + 1..].strip_suffix(')')?;
        let (gov, dep) = inner.rsplit_once(", ")?;
        Some(Self::new(&s[..open], strip_position(gov), strip_position(dep)))
    }
}

fn strip_position(word: &str) -> &str {
    match word.rsplit_once('-') {
        Some((w, n)) if !w.is_empty() && !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) => w,
        _ => word,
    }
}

/// Normalises a word form for use inside a composite token: lowercase, keeping
/// alphanumerics, `-` and `_` (so `-LSB-` survives as `-lsb-`, `e.g.` becomes `eg`).
fn composite_form(word: &str) -> String {
    word.chars()
        .filter(|c| c.is_alphanumeric() || matches!(c, '-' | '_'))
        .flat_map(char::to_lowercase)
        .collect()
}

/// `relation_governor_dependent`, lowercased; `:` in relation subtypes becomes `_`.
pub fn flatten_dependency(t: &DependencyTriple) -> String {
    let relation: String = t
        .relation
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| if c == ':' { '_' } else { c })
        .flat_map(char::to_lowercase)
        .collect();
    format!(
        "{}_{}_{}",
        relation,
        composite_form(strip_position(&t.governor)),
        composite_form(strip_position(&t.dependent))
    )
}

/// `word_TAG` with the word lowercased and the tag verbatim.
pub fn pos_token(word: &str, tag: &str) -> Result<String> {
    if tag.trim().is_empty() {
        return Err(Error::EmptyTag(word.to_string()));
    }
    Ok(format!("{}_{}", word.to_lowercase(), tag))
}

/// Word-class tags start with a letter; punctuation and empty-element tags
/// (`,`, `-LRB-`, `-NONE-`) do not.
fn is_word_tag(tag: &str) -> bool {
    tag.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
}

/// A sample with its cleaned tokens, stems, annotations and ensemble stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSample {
    pub base: CitationSample,
    pub tokenized: TokenizedText,
    /// Stems parallel to `tokenized.tokens`.
    pub stems: Vec<String>,
    pub pos_tags: Vec<(String, String)>,
    pub deps: Vec<DependencyTriple>,
    pub ensemble_stream: Vec<String>,
}

/// Which form of the text tokens feeds the bag-of-words features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextForm {
    Cleaned,
    #[default]
    Stemmed,
}

impl AnnotatedSample {
    /// Sample without syntactic annotations; the stream is the cleaned text alone.
    pub fn text_only(sample: &CitationSample, stopwords: &StopWords) -> Self {
        let tokenized = tokenize_and_clean(&sample.text, stopwords);
        let stems = tokenized.tokens.iter().map(|t| stem(t)).collect();
        AnnotatedSample {
            base: sample.clone(),
            ensemble_stream: tokenized.tokens.clone(),
            tokenized,
            stems,
            pos_tags: Vec::new(),
            deps: Vec::new(),
        }
    }

    /// Composite tokens (dependencies then POS) of the stream.
    pub fn composite_tokens(&self) -> &[String] {
        &self.ensemble_stream[self.tokenized.tokens.len()..]
    }

    /// Segments for n-gram extraction: one per text sentence, then a single run of
    /// composite tokens. N-grams never cross a segment boundary.
    pub fn feature_segments(&self, form: TextForm) -> Vec<Vec<String>> {
        let words = match form {
            TextForm::Cleaned => &self.tokenized.tokens,
            TextForm::Stemmed => &self.stems,
        };
        let mut segments: Vec<Vec<String>> = self
            .tokenized
            .sentences
            .iter()
            .map(|r| words[r.clone()].to_vec())
            .filter(|s| !s.is_empty())
            .collect();
        let composites = self.composite_tokens();
        if !composites.is_empty() {
            segments.push(composites.to_vec());
        }
        segments
    }
}

pub fn assemble_ensemble(
    sample: &CitationSample,
    annotations: &AnnotationRecord,
    stopwords: &StopWords,
) -> Result<AnnotatedSample> {
    let text_words = word_tokens(&sample.text).len();
    let mut pos_tags = Vec::new();
    let mut deps = Vec::new();
    for sentence in &annotations.sentences {
        for (rel, gov, dep) in &sentence.deps {
            let form = |i: usize| {
                sentence.form(i).ok_or_else(|| Error::Shape {
                    tensor: format!("dependency {rel} of sample {}", sample.id),
                    expected: format!("index <= {}", sentence.tokens.len()),
                    actual: i.to_string(),
                })
            };
            deps.push(DependencyTriple::new(rel.clone(), form(*gov)?, form(*dep)?));
        }
        for (token, tag) in sentence.tokens.iter().zip(&sentence.pos) {
            let word = clean_word(token);
            if is_word_tag(tag) && !word.is_empty() {
                pos_tags.push((word, tag.clone()));
            }
        }
    }
    if pos_tags.len() != text_words {
        return Err(Error::Alignment {
            id: sample.id.clone(),
            annotation_tokens: pos_tags.len(),
            text_tokens: text_words,
        });
    }

    let tokenized = tokenize_and_clean(&sample.text, stopwords);
    let stems = tokenized.tokens.iter().map(|t| stem(t)).collect();
    let mut ensemble_stream =
        Vec::with_capacity(tokenized.tokens.len() + deps.len() + pos_tags.len());
    ensemble_stream.extend(tokenized.tokens.iter().cloned());
    ensemble_stream.extend(deps.iter().map(flatten_dependency));
    for (word, tag) in &pos_tags {
        ensemble_stream.push(pos_token(word, tag)?);
    }
    Ok(AnnotatedSample {
        base: sample.clone(),
        tokenized,
        stems,
        pos_tags,
        deps,
        ensemble_stream,
    })
}
