//! Command implementations behind the `iongate` binary.
//!
//! Each command reads a TOML config (frequencies in Hz, durations in
//! seconds, angles in radians; unknown keys rejected), writes CSV/JSON
//! outputs into an output directory, and drops a `run_manifest.json`
//! sufficient to re-run it. All floating-point output is printed with 17
//! significant digits, so identical configs and seeds produce byte-identical
//! files.

pub mod commands;
pub mod config;
pub mod manifest;

pub use manifest::RunManifest;
