//! Building blocks for grammar-book ablation experiments on extremely
//! low-resource (XLR) languages.
//!
//! The crate covers the offline half of the pipeline:
//!
//! - [`corpus`]: parallel data, interlinear glossed text (IGT), wordlists,
//!   grammar-book segmentation into parallel / non-parallel text, and
//!   Grambank feature tables.
//! - [`textproc`]: Treebank-style tokenization, vocabulary types and
//!   longest-common-subsequence similarity.
//! - [`prompts`]: every prompt setting (wordlist, parallel sentences, book
//!   subsets, typological features, per-word retrieval) plus the
//!   word-for-word dictionary baseline.
//! - [`grammaticality`]: word-order corruptions and forced-choice scoring.
//! - [`glossing`]: gloss classification, the Top-Class baseline and gloss
//!   prompts.
//! - [`metrics`]: ChrF++ and IGT metrics.
//! - [`analysis`]: type coverage, least-squares regression and the
//!   incomplete beta kernel behind its p-values.

pub mod analysis;
pub mod corpus;
pub mod glossing;
pub mod grammaticality;
pub mod lang;
pub mod metrics;
pub mod prompts;
pub mod textproc;
