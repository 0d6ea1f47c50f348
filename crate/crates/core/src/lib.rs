//! Fourier-feature physics-informed networks for the second-order wave
//! equation `u_tt = a²Δu + f` on large space-time domains, with optional
//! spatial, temporal or spatio-temporal normalization of the network inputs.

pub mod activation;
pub mod check;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod deriv;
pub mod error;
pub mod exec;
pub mod expr;
pub mod geometry;
mod kernels;
pub mod loss;
pub mod network;
pub mod normalize;
pub mod optim;
pub mod problems;
pub mod report;
pub mod train;

pub use error::{Error, Result};
