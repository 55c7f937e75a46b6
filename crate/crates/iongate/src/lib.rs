//! Simulator and analysis toolkit for microwave-driven two-qubit trapped-ion
//! entangling gates.
//!
//! The crate models the standard Mølmer-Sørensen (MS) gate, its dynamically
//! decoupled variant (DDMS: a co-applied resonant carrier plus a mid-gate
//! refocusing π-pulse), and the single-sideband (SSB) gate, on two spin-1/2
//! qubits coupled to one truncated motional mode. It provides:
//!
//! - [`operators`]: dense operators and density matrices on the composite
//!   space, with Hermiticity/unitarity/positivity predicates;
//! - [`model`]: gate and Ramsey configurations compiled into timed schedules;
//! - [`dynamics`]: von Neumann / Lindblad propagation of schedules;
//! - [`analysis`]: populations, parity scans, Bell-state fidelity and SPAM
//!   channels;
//! - [`zeeman`]: off-resonant a.c. Zeeman shift budgets from spectator
//!   transition tables;
//! - [`noise`]: seeded Monte-Carlo and deterministic sweeps (shot-to-shot
//!   dephasing, mode-frequency jitter, heating, carrier-amplitude scans).
//!
//! Monte-Carlo shots and sweep points run on a rayon pool when the default
//! `parallel` feature is enabled; a sequential fallback is always compiled
//! and produces bit-identical results.

pub mod analysis;
pub mod dynamics;
pub mod model;
pub mod noise;
pub mod operators;
pub mod report;
pub mod zeeman;

pub use model::{GateConfig, RamseyConfig, Schedule, Scheme};
pub use operators::{HilbertSpec, ModeSign, Operator, State};
