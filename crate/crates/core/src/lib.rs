pub mod certificate;
pub mod crafting;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod langmodel;
pub mod metrics;
pub mod tokenization;

pub use error::{Error, Result};
