//! Layer-wise linear probing of persona attributes in language-model hidden
//! states, with methodological controls, high-signal token extraction,
//! dependency-based annotation, and the statistics that tie them together.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotate;
pub mod controls;
pub mod corpus;
pub mod error;
pub mod extract;
pub mod matrix;
pub mod par;
pub mod pipeline;
pub mod probe;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
