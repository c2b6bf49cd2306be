pub mod cli;
pub mod error;
pub mod fields;
pub mod fixtures;
pub mod finsler;
pub mod jets;
pub mod linalg;
pub mod randers;
pub mod report;
pub mod riemann;
pub mod sampling;
pub mod soliton;
pub mod suites;
