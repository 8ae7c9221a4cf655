pub mod appendix;
pub mod catalog;
pub mod cli;
pub mod closed_form;
pub mod config;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod reorder;
pub mod wire;

pub use config::Tolerances;
pub use error::{EqoError, Result};
pub use matrix::ComplexMatrix;
pub use reorder::{Factorization, QuadraticGenerator, TransferMatrix};
