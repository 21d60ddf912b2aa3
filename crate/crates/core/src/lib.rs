//! Simulation and certification of path-encoded four-dimensional entangled
//! photon pairs produced by a multi-core fiber (MCF) down-conversion source.
//!
//! The crate is organised bottom-up:
//!
//! * [`qcore`]: dense linear algebra on the 4-dimensional core basis and the
//!   16-dimensional two-photon space, Born-rule evaluation and fidelity.
//! * [`devices`]: the four-core fiber beam splitter, phase plates, demultiplexer
//!   losses and the five measurement bases `Z`, `X0`..`X3`.
//! * [`source`]: two-photon states emitted by the four-region source.
//! * [`measure`]: co-propagation coincidence model, Poisson count sampling,
//!   accidental subtraction and estimation with propagated errors.
//! * [`certify`]: fidelity from mutually unbiased measurements, Schmidt-number
//!   witness, entropic steering, Bhattacharyya similarity, marginal entropies.
//! * [`drift`]: slow interferometric phase drift and its coincidence spectrum.
//! * [`linkbudget`]: distributable-entanglement distance from source brightness.
//! * [`config`] and [`pipeline`]: the experiment file format and the
//!   orchestration behind the command-line tool.

pub mod certify;
pub mod config;
pub mod devices;
pub mod drift;
pub mod error;
pub mod linkbudget;
pub mod measure;
pub mod pipeline;
pub mod qcore;
pub mod source;

pub use error::{Error, Result};
