//! Systemic-risk early warning from rolling correlation networks.
//!
//! The crate covers the whole modelling path: price ingestion, node features
//! and forward-drawdown labels, rolling Spearman correlation graphs, a small
//! dense tensor core with hand-written gradients, the four model families
//! (snapshot GCN, GCN+GRU, logistic regression, random forest) and the
//! evaluation suite with lead-time analysis.

pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod hash;
pub mod market_data;
pub mod models;
pub mod plot;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
