use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        let k = KernelSpec::Rbf { gamma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::Invalid(format!("rbf gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            KernelSpec::Linear => None,
            KernelSpec::Rbf { gamma } => Some(gamma),
        }
    }

    /// Kernel value given both vectors and their squared norms.
    #[inline]
    pub fn eval_with_norms(&self, a: &SparseVec, na: f64, b: &SparseVec, nb: f64) -> f64 {
        match *self {
            KernelSpec::Linear => a.dot(b),
            KernelSpec::Rbf { gamma } => {
                let d = (na + nb - 2.0 * a.dot(b)).max(0.0);
                (-gamma * d).exp()
            }
        }
    }

    pub fn eval(&self, a: &SparseVec, b: &SparseVec) -> f64 {
        self.eval_with_norms(a, a.squared_norm(), b, b.squared_norm())
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => f.write_str("linear"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf(g = {gamma})"),
        }
    }
}
