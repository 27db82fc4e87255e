pub mod bessel;
pub mod baselines;
pub mod bead;
pub mod complexity;
pub mod error;
pub mod gp;
pub mod harness;
pub mod instance;
pub mod kernel;
pub mod oracle;
pub mod stats;
pub mod trace;
pub mod tree;

pub use error::{Error, Result};
