pub mod blowup;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod poly;
pub mod quadrature;
pub mod singular_set;
pub mod solver;
pub mod very_thin;

pub use error::{LabError, Result};
