//! Config-file schemas for the CLI commands.
//!
//! Every file is TOML with `deny_unknown_fields` everywhere: a typo in a
//! physics parameter is an error, not a silently ignored key.

use anyhow::{Context, Result};
use serde::Deserialize;
use std::path::Path;

use iongate::model::{GateSection, RamseySection};
use iongate::zeeman::DriveSection;

fn parse<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).with_context(|| format!("invalid config {}", path.display()))
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, Vec<u8>)> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let text = std::str::from_utf8(&bytes)
        .with_context(|| format!("config {} is not utf-8", path.display()))?;
    let parsed = parse(text, path)?;
    Ok((parsed, bytes))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub gate: GateSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Record observables every this many integrator steps.
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    /// Phase points for the parity fit reported in the final-state summary.
    #[serde(default = "default_phase_points")]
    pub parity_phase_points: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { sample_stride: default_stride(), parity_phase_points: default_phase_points() }
    }
}

fn default_stride() -> usize {
    1
}

fn default_phase_points() -> usize {
    24
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2aFile {
    pub gate: GateSection,
    pub fig2a: Fig2aSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2aSection {
    pub detuning_start_hz: f64,
    pub detuning_stop_hz: f64,
    pub points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2bFile {
    pub gate: GateSection,
    pub fig2b: Fig2bSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2bSection {
    #[serde(default = "default_phase_points")]
    pub phase_points: usize,
    /// 0 runs the noiseless least-squares fit; otherwise synthetic binomial
    /// counts per point with a maximum-likelihood fit.
    #[serde(default)]
    pub shots_per_point: u32,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3aFile {
    pub fig3a: RamseySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3bFile {
    pub gate: GateSection,
    pub fig3b: Fig3bSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3bSection {
    pub sigma_hz: Vec<f64>,
    pub shots: u32,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig5aFile {
    pub gate: GateSection,
    #[serde(default)]
    pub fig5a: Fig5aSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig5aSection {
    #[serde(default = "default_fig5a_stride")]
    pub sample_stride: usize,
}

impl Default for Fig5aSection {
    fn default() -> Self {
        Self { sample_stride: default_fig5a_stride() }
    }
}

fn default_fig5a_stride() -> usize {
    8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig5bFile {
    pub gate: GateSection,
    pub fig5b: Fig5bSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig5bSection {
    pub carrier_start_hz: f64,
    pub carrier_stop_hz: f64,
    pub points: usize,
    pub delta_prime_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table2File {
    /// Transition table path, relative to this config file.
    pub table: String,
    pub drive: DriveSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeemanFile {
    pub drive: DriveSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub gate: GateSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// One of: `carrier_rabi_hz`, `heating_rate_quanta_per_s`,
    /// `delta_prime_rms_hz`, `mode_freq_rms_hz`.
    pub axis: String,
    pub values: Vec<f64>,
    #[serde(default = "default_shots")]
    pub shots: u32,
    #[serde(default)]
    pub seed: u64,
    /// Constant uncompensated shift for the carrier-axis sweep (Hz).
    #[serde(default)]
    pub delta_prime_hz: f64,
}

fn default_shots() -> u32 {
    100
}
