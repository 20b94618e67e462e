//! Semigroup dynamics on p-adic flag manifolds and the Bruhat-Tits tree of
//! `SL_2(Q_p)`.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod controlsets;
pub mod coxeter;
pub mod decomp;
pub mod error;
pub mod flag;
pub mod lattice_tree;
pub mod matrix;
pub mod padic;
pub mod rational;
pub mod sample;

pub use error::{Error, Result};
