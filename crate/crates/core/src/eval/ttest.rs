use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-tailed 1% critical value of Student's t with 18 degrees of freedom.
pub const T_CRITICAL_995_DF18: f64 = 2.878;

pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub critical: f64,
    pub significant: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

/// Critical |t| for a two-tailed test at the 1% level.
pub fn critical_value(df: usize) -> f64 {
    if df == 18 {
        return T_CRITICAL_995_DF18;
    }
    StudentsT::new(0.0, 1.0, df as f64)
        .map(|d| d.inverse_cdf(1.0 - SIGNIFICANCE_LEVEL / 2.0))
        .unwrap_or(f64::INFINITY)
}

/// Pooled-variance two-sample t statistic of `a` against `b`, with df = |a| + |b| − 2.
///
/// With zero pooled variance the statistic is 0 for equal means and ±∞ otherwise.
pub fn two_sample_t(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Invalid(format!(
            "t-test needs at least two scores per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let df = a.len() + b.len() - 2;
    let pooled = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / df as f64;
    let se = (pooled * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    let diff = ma - mb;
    let t = if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY.copysign(diff)
    } else {
        diff / se
    };
    let critical = critical_value(df);
    Ok(TTest {
        t,
        df,
        critical,
        significant: t.abs() > critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: [f64; 10] = [64., 66., 68., 70., 65., 67., 69., 71., 66., 68.];
    const B: [f64; 10] = [58., 59., 61., 62., 60., 63., 57., 60., 59., 61.];

    #[test]
    fn textbook_example() {
        // Means 67.4 and 60.0; sums of squares 44.4 and 30; s_p² = 74.4 / 18.
        let hand = 7.4 / (74.4 / 18.0 * 0.2f64).sqrt();
        let r = two_sample_t(&A, &B).unwrap();
        assert!((r.t - hand).abs() < 1e-9);
        assert!((r.t - 8.138914883685114).abs() < 1e-6);
        assert_eq!(r.df, 18);
        assert_eq!(r.critical, 2.878);
        assert!(r.significant);
    }

    #[test]
    fn equal_samples_give_zero() {
        let r = two_sample_t(&A, &A).unwrap();
        assert_eq!(r.t, 0.0);
        assert!(!r.significant);
        let c = [0.5; 10];
        assert_eq!(two_sample_t(&c, &c).unwrap().t, 0.0);
    }

    #[test]
    fn zero_variance_different_means() {
        let r = two_sample_t(&[1.0; 10], &[0.0; 10]).unwrap();
        assert_eq!(r.t, f64::INFINITY);
        assert!(r.significant);
        assert_eq!(two_sample_t(&[0.0; 10], &[1.0; 10]).unwrap().t, f64::NEG_INFINITY);
    }

    #[test]
    fn other_degrees_of_freedom_use_quantile() {
        assert!((critical_value(8) - 3.3553873313).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn antisymmetric(a in prop::collection::vec(0.0f64..1.0, 10), b in prop::collection::vec(0.0f64..1.0, 10)) {
            let ab = two_sample_t(&a, &b).unwrap().t;
            let ba = two_sample_t(&b, &a).unwrap().t;
            prop_assert!((ab + ba).abs() < 1e-9 || (ab.is_infinite() && ab == -ba));
        }
    }
}
