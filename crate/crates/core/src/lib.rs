pub mod canonical;
pub mod cli;
pub mod equivalence;
pub mod error;
pub mod linalg;
pub mod observability;
pub mod spectral;
pub mod system;
pub mod trajectory;

pub use error::{Error, Result};
pub use system::ObservedSystem;
