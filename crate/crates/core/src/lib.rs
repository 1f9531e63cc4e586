//! Agent-based simulator of a banking system coupled to a real economy,
//! comparing Basel II, Basel III with G-SIB capital surcharges, and a
//! systemic risk tax on interbank loans.

pub mod abm;
pub mod basel;
pub mod config;
pub mod debtrank;
pub mod error;
pub mod harness;
pub mod netcore;
pub mod sysloss;

pub use error::{Result, SimError};
