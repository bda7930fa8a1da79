pub mod error;
pub mod fode;
pub mod fracops;
pub mod harness;
pub mod potential;
pub mod radial;
pub mod special;

pub use error::{Error, Result};
