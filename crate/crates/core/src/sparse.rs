use serde::{Deserialize, Serialize};

/// Sparse row with strictly increasing column indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVec {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVec {
    /// Builds a vector from unsorted `(column, value)` pairs; duplicate columns are summed.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut out = SparseVec::default();
        for (i, v) in pairs {
            if out.indices.last() == Some(&i) {
                *out.values.last_mut().unwrap() += v;
            } else {
                out.indices.push(i);
                out.values.push(v);
            }
        }
        out
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let mut out = SparseVec::default();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                out.indices.push(i as u32);
                out.values.push(v);
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn contains(&self, col: u32) -> bool {
        self.indices.binary_search(&col).is_ok()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_are_sorted_and_merged() {
        let v = SparseVec::from_pairs(vec![(3, 1.0), (1, 2.0), (3, 0.5)]);
        assert_eq!(v.indices, [1, 3]);
        assert_eq!(v.values, [2.0, 1.5]);
        assert!(v.contains(3) && !v.contains(2));
    }

    #[test]
    fn dot_matches_dense() {
        let a = SparseVec::from_dense(&[1.0, 0.0, 2.0, 3.0]);
        let b = SparseVec::from_dense(&[0.0, 5.0, 4.0, -1.0]);
        assert_eq!(a.dot(&b), 5.0);
        assert_eq!(a.squared_norm(), 14.0);
        assert_eq!(a.to_dense(4), [1.0, 0.0, 2.0, 3.0]);
    }
}
