//! Verification toolkit for near-symplectic forms on R^4.

pub mod error;
pub mod calibration;
pub mod contour;
pub mod forms;
pub mod handle;
pub mod models;
pub mod moser;
pub mod obstruction;
pub mod parity;
pub mod tracker;

pub use error::{Error, Result};
