//! Quantum transport on shearless tori of the driven Harper model.
//!
//! A ferromagnetic Heisenberg ring in the one-down-spin sector, driven by an
//! oscillating sinusoidal field, maps onto the driven Harper Hamiltonian
//! `J cos p + B0 F(t) cos(2 pi x / N)`. This crate provides the classical
//! image dynamics ([`classical`]), split-operator evolution of the spin
//! wavefunction ([`quantum`]), Floquet spectra local to a wavepacket
//! ([`floquet`]) and nearest-neighbour concurrence ([`entanglement`]).

pub mod classical;
pub mod entanglement;
pub mod error;
pub mod floquet;
pub mod params;
pub mod quantum;
pub mod scheme;

pub use error::{Error, Result};
pub use params::{Drive, PacketSpec, SimParams, ValidatedParams};
