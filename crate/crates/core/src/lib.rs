//! Transcript-to-screening pipeline for child language samples.
//!
//! The crate reads CHAT transcripts (locally or from a TalkBank-style HTTP
//! source), derives per-child language measures such as MLU, turn-length
//! ratios and part-of-speech shares, and runs a fixed suite of five
//! classifiers with SMOTE rebalancing and recursive feature elimination.
//!
//! Module map:
//!
//! * [`corpus`]: raw corpus acquisition and the fixture layout
//! * [`chat`]: CHAT parsing and emission
//! * [`features`]: language measures and the feature matrix
//! * [`preprocess`]: imputation, encoding, scaling, splitting, SMOTE
//! * [`learners`]: the classifier suite
//! * [`metrics`]: confusion counts, F1, ROC/AUC
//! * [`rfe`]: recursive feature elimination
//! * [`pipeline`]: experiment configuration, orchestration and reports

pub mod chat;
pub mod corpus;
pub mod features;
pub mod learners;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod rfe;
pub mod rng;
