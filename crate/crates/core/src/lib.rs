//! Trigonometric BC_n Sutherland system and its action-angle dual.

pub mod duality;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod matrix;
pub mod params;
pub mod rsvd;
pub mod sutherland;
pub mod verification;

pub use error::{Error, Result};
pub use params::{CouplingParams, DualPoint, Membership, OscillatorPoint, SutherlandPoint};
