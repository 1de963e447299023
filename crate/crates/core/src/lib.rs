//! Citation sentiment classification toolkit.
//!
//! The pipeline runs corpus loading ([`corpus`]) through text cleaning and
//! ensemble-stream assembly ([`preprocess`]), then either bag-of-words features
//! ([`features`]) fed to support vector machines ([`svm`]) or token sequences fed
//! to region-embedding networks ([`neural`]). Everything is scored under stratified
//! cross-validation ([`eval`]) and orchestrated by [`experiment`].

pub mod annotation;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod neural;
pub mod preprocess;
pub mod sparse;
pub mod svm;

pub use error::{Error, Result};
