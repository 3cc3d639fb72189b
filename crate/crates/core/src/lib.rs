//! Silver-labeled multilingual non-factoid QA toolkit.
//!
//! Articles are split into paragraph and subheading blocks; interrogative
//! subheadings become questions whose silver answers are the paragraphs that
//! follow them. From there the crate builds answer paragraph selection
//! instances, scores them with lexical, embedding or external backends and
//! evaluates the results, including against human gold annotations.

// Negated float comparisons are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod builtin_profiles;
pub mod curation;
pub mod error;
pub mod eval;
pub mod gold;
pub mod instances;
pub mod model;
pub mod profiles;
pub mod scorers;
pub mod store;
pub mod textproc;

pub use error::{Error, Result};
