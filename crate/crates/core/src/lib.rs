//! Image narrative engine: question generation contracts, question to
//! statement conversion, interactive region selection and preference
//! learning.

pub mod backends;
pub mod config;
pub mod converter;
pub mod pipeline;
pub mod selector;
pub mod preference;
pub mod text;
pub mod evalkit;
