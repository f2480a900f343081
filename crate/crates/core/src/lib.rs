//! Finite-element level-set simulation of inextensible membranes in
//! Newtonian and power-law flow.

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod flow;
pub mod io;
pub mod levelset;
pub mod mesh;
pub mod rheology;
pub mod sparse;

pub use error::{Error, Result};
