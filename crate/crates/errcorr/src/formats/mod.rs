//! Readers and writers for every file the tool consumes or produces.

pub mod config;
pub mod json;
pub mod outputs;
pub mod responses;
pub mod trials;
pub mod zcsv;

pub use responses::{parse_responses, write_responses, Format};
