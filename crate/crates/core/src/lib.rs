//! Conclusion-supplement answer generation.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod model;
pub mod numkit;
pub mod sentclass;
pub mod trainer;

pub use error::{Error, Result};
