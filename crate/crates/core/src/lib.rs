//! Ground imaging from the reflections of multi-static OFDM base-station
//! transmissions.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: bistatic distances, look directions, beam footprints.
//! * [`scene`]: ground-truth reflectivity and height fields.
//! * [`forward`]: synthesis of per-antenna, per-subcarrier channel samples.
//! * [`patches`]: alignment of raw patches and placement in the wavenumber plane.
//! * [`reconstruct`]: zero-filled inversion, per-patch IDFT with fusion,
//!   range-line intersection and surface-height estimation.
//! * [`isar`]: volumetric recovery by pseudo-inverting the sensing tensor.
//! * [`analysis`]: projection-slice check, resolution formulas and the
//!   one-dimensional multi-window error model.
//! * [`tradeoff`]: information terms of a joint communication/sensing channel.
//! * [`run`]: configuration, dataset layout and the end-to-end experiment
//!   used by the `netsar` binary.
//!
//! Conventions used throughout: wavenumbers are angular (`k = 2π/λ`), the
//! aligned sample of a patch is a sample of the ground spectrum
//! `G(κ) = Σ g(p)·exp(-jκ·p)`, and all positions feeding slicing geometry are
//! relative to the center of the illuminated region.

pub mod analysis;
mod error;
pub mod fft;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod isar;
pub mod patches;
pub mod reconstruct;
pub mod rng;
pub mod run;
pub mod scene;
pub mod tradeoff;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
