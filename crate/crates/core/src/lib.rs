//! Core engine for credibility scoring of financial social-media advisors:
//! post ingestion and cleaning, feature engineering, hybrid lexicon + ML
//! forecast classification, market-data verification, credibility ranking,
//! social-metric correlation, and natural-language explanations.

pub mod classify;
pub mod corpus;
pub mod error;
pub mod explain;
pub mod features;
pub mod insight;
pub mod lexicon;
pub mod preprocess;
pub mod verify;

pub use error::{Error, Result};
