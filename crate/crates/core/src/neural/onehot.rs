use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::sparse::SparseVec;

/// Token list with positions; one joint vocabulary covers words and composites.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TokenVocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for TokenVocab {
    fn from(tokens: Vec<String>) -> Self {
        TokenVocab::new(tokens)
    }
}

impl From<TokenVocab> for Vec<String> {
    fn from(v: TokenVocab) -> Self {
        v.tokens
    }
}

impl TokenVocab {
    /// Keeps the given order; later duplicates are ignored.
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut v = TokenVocab::default();
        for t in tokens {
            let t = t.into();
            if !v.index.contains_key(&t) {
                v.index.insert(t.clone(), v.tokens.len());
                v.tokens.push(t);
            }
        }
        v
    }

    /// Sorted set of every token occurring in `docs`.
    pub fn build(docs: &[Vec<String>]) -> Self {
        let set: BTreeSet<&str> = docs.iter().flatten().map(String::as_str).collect();
        Self::new(set)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Token ids; out-of-vocabulary tokens become `None`.
    pub fn ids(&self, doc: &[String]) -> Vec<Option<usize>> {
        doc.iter().map(|t| self.get(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionVariant {
    /// Concatenated per-position one-hot blocks, dimension p·V.
    #[default]
    Seq,
    /// Summed word counts, dimension V.
    Bow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub size: usize,
    pub stride: usize,
    pub variant: RegionVariant,
}

impl RegionSpec {
    pub fn seq(size: usize, stride: usize) -> Self {
        RegionSpec {
            size,
            stride,
            variant: RegionVariant::Seq,
        }
    }

    pub fn dim(&self, vocab_len: usize) -> usize {
        match self.variant {
            RegionVariant::Seq => self.size * vocab_len,
            RegionVariant::Bow => vocab_len,
        }
    }
}

/// 1 when the document fits in a single (zero-padded) region, else ⌊(n − p)/s⌋ + 1.
pub fn region_count(n: usize, spec: &RegionSpec) -> usize {
    if n <= spec.size {
        1
    } else {
        (n - spec.size) / spec.stride.max(1) + 1
    }
}

/// Active input coordinates of every region, as indices into a `dim(V)` vector.
pub(crate) fn region_coords(ids: &[Option<usize>], vocab_len: usize, spec: &RegionSpec) -> Vec<Vec<usize>> {
    (0..region_count(ids.len(), spec))
        .map(|r| {
            let start = r * spec.stride.max(1);
            (0..spec.size)
                .filter_map(|k| {
                    let id = (*ids.get(start + k)?)?;
                    Some(match spec.variant {
                        RegionVariant::Seq => k * vocab_len + id,
                        RegionVariant::Bow => id,
                    })
                })
                .collect()
        })
        .collect()
}

/// Region vectors of a document; OOV positions and padding are zero blocks.
pub fn encode_one_hot(tokens: &[String], vocab: &TokenVocab, spec: &RegionSpec) -> Vec<SparseVec> {
    region_coords(&vocab.ids(tokens), vocab.len(), spec)
        .into_iter()
        .map(|coords| SparseVec::from_pairs(coords.into_iter().map(|c| (c as u32, 1.0)).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn vocab() -> TokenVocab {
        TokenVocab::new(["don't", "hate", "I", "it", "love"])
    }

    fn bits(v: &SparseVec, dim: usize, block: usize) -> String {
        v.to_dense(dim)
            .chunks(block)
            .map(|c| c.iter().map(|&x| if x == 1.0 { '1' } else { '0' }).collect::<String>())
            .collect::<Vec<_>>()
            .join("|")
    }

    #[test]
    fn i_love_it() {
        let regions = encode_one_hot(&words("I love it"), &vocab(), &RegionSpec::seq(3, 1));
        assert_eq!(regions.len(), 1);
        assert_eq!(bits(&regions[0], 15, 5), "00100|00001|00010");
    }

    #[test]
    fn region_size_two_stride_one() {
        let regions = encode_one_hot(&words("I love it"), &vocab(), &RegionSpec::seq(2, 1));
        assert_eq!(regions.len(), 2);
        assert_eq!(bits(&regions[1], 10, 5), "00001|00010");
    }

    #[test]
    fn empty_and_oov() {
        let spec = RegionSpec::seq(3, 1);
        let empty = encode_one_hot(&[], &vocab(), &spec);
        assert_eq!(empty.len(), 1);
        assert_eq!(empty[0].nnz(), 0);
        let r = encode_one_hot(&words("I adore it"), &vocab(), &spec);
        assert_eq!(bits(&r[0], 15, 5), "00100|00000|00010");
    }

    #[test]
    fn bow_counts() {
        let spec = RegionSpec {
            size: 3,
            stride: 1,
            variant: RegionVariant::Bow,
        };
        let r = encode_one_hot(&words("it love it"), &vocab(), &spec);
        assert_eq!(r[0].to_dense(5), [0.0, 0.0, 0.0, 2.0, 1.0]);
    }

    #[test]
    fn vocab_serializes_as_list() {
        let json = serde_json::to_string(&vocab()).unwrap();
        assert_eq!(json, r#"["don't","hate","I","it","love"]"#);
        let back: TokenVocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back.get("it"), Some(3));
    }
}
