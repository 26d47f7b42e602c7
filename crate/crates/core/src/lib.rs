pub mod cli;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod formula;
pub mod limits;
pub mod linalg;
pub mod phf;
pub mod solver;
pub mod spectral;
pub mod statevec;

pub use error::{Error, Result};
