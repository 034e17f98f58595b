//! Multi-tenor interest-rate term structure driven by roll-over risk.
//!
//! The collateral short rate `r_c`, the panel default intensity `λ` and the
//! funding-liquidity spread `φ` are affine in a vector of independent CIR
//! factors. Every expectation the pricing layer needs reduces to the extended
//! affine transform in [`affine`], evaluated in closed form.
//!
//! Modules:
//! - [`affine`]: Riccati transforms for independent CIR factors (closed form and RK4).
//! - [`curve`]: model state and the discounting / LIBOR expectations.
//! - [`instruments`]: OIS, swaps, basis swaps, term LIBOR, CDS and caplets.
//! - [`calibration`]: objectives, global optimizers and the staged fit.
//! - [`market`]: quote normalization and instrument construction.
//!
//! The crate is `no_std` (it needs `alloc`); transcendental functions come from
//! `libm`, so results are bit-identical across platforms.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod affine;
pub mod calibration;
pub mod curve;
pub mod date;
pub mod error;
pub mod instruments;
pub mod market;
mod math;

pub use error::{Error, Result};
