pub mod ball_spectrum;
pub mod boundary_operators;
pub mod cli;
pub mod dd;
pub mod error;
pub mod quadrature;
pub mod roots;
pub mod special_functions;
pub mod trial_profile;
pub mod verdict;
pub mod verification;

pub use error::{Error, Result};
