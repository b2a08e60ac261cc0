pub mod error;
pub mod dyson1d;
pub mod em3d;
pub mod gates;
pub mod genmatch;
pub mod iontrap;
pub mod matrix;
pub mod oracle;
pub mod oscillator;
pub mod secular;
pub mod signal;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
