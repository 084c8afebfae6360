pub mod bitset;
pub mod data;
pub mod discretize;
pub mod error;
pub mod evaluation;
pub mod fuzzy;
pub mod inference;
pub mod pipeline;
pub mod rough;
pub mod rules;
pub mod selection;
pub mod service;

pub use error::{Error, Result};
