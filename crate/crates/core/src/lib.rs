//! Exact soliton solutions of the nonlinear von Neumann equation
//! i d(rho)/dt = [H, f(rho)] for three-level systems, built by a Darboux
//! transformation of a stationary-block seed, with numerical verification.

pub mod config;
pub mod darboux;
pub mod error;
pub mod export;
pub mod matrix;
pub mod models;
pub mod nonlinearity;
pub mod scenario;
pub mod seed;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
