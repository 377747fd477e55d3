//! Bottom-up enumerative program synthesis with cost-ordered search.

pub mod bank;
pub mod costs;
pub mod error;
pub mod grammar;
pub mod harness;
pub mod interp;
pub mod learn;
pub mod search;

pub use error::{Error, Result};
