//! Scenario files, synthetic instance generation, and output rendering
//! for the closed-loop supply chain planning toolkit.

pub mod error;
pub mod generate;
pub mod output;
pub mod scenario;
