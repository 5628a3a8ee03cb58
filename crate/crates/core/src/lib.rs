pub mod cli;
pub mod codec;
pub mod corpus;
pub mod demos;
pub mod error;
pub mod eval;
pub mod features;
pub mod inference;
pub mod learning;
pub mod network;
pub mod synth;

pub use error::{Error, Result};
