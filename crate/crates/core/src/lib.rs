//! Deterministic 1D free-particle simulation of superbandwidth wavepackets.
//!
//! The crate synthesizes band-limited states whose local momentum locally
//! exceeds (or falls below) their spectral support, propagates them exactly
//! in the spectral representation, and provides the analysis toolbox:
//! local-momentum extrema, probability current and flux accounting,
//! spreading and interference-time estimates, a classical free-streaming
//! ensemble analogy, and Bohmian trajectory integration.
//!
//! The core is `no_std` + `alloc`; all floating-point math goes through
//! `libm`-backed trait methods. Everything is deterministic: propagation is
//! a single exact phase multiplication, and all randomness is seeded
//! counter-based RNG.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

mod error;
mod fft;
mod util;

pub mod analysis;
pub mod bohmian;
pub mod classical;
pub mod grid;
pub mod synthesis;

pub use error::{Error, Result};
