//! Gate and Ramsey configurations, and their compilation into executable
//! schedules.
//!
//! A [`Schedule`] is a list of timed segments, each carrying a symbolic
//! Hamiltonian recipe (sideband, carrier and static-shift terms with
//! time-dependent coefficients), plus instantaneous unitaries at segment
//! boundaries. Compilation is a pure function: identical configurations
//! produce identical schedules, byte for byte once serialized.
//!
//! All frequencies are angular (rad/s) in memory; the file schema accepts
//! Hz and converts on ingestion. Durations are seconds, angles radians.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{Axis, HilbertSpec, ModeSign, State, StateError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("gate detuning must be nonzero to define the gate time")]
    ZeroDetuning,
    #[error("loop count must be at least 1")]
    ZeroLoops,
    #[error(
        "refocusing pulse requires an even number of phase-space loops so the \
         pulse lands at loop closure; got {0}"
    )]
    OddLoopsWithRefocus(u32),
    #[error("fock dimension must be at least 2, got {0}")]
    FockDimension(usize),
    #[error("{quantity} must be non-negative, got {value}")]
    NegativeQuantity { quantity: &'static str, value: f64 },
    #[error("rabi frequency must be non-negative, got {0}")]
    NegativeRabi(f64),
    #[error(
        "raised-cosine ramp time {ramp:.3e} s does not fit in the schedule of \
         duration {total:.3e} s (need 2*ramp <= total)"
    )]
    RampTooLong { ramp: f64, total: f64 },
    #[error("refocus pulse duration must be positive, got {0}")]
    BadRefocusDuration(f64),
    #[error("ramsey exposure time must be positive, got {0}")]
    BadExposure(f64),
    #[error("ramsey shot count must be at least 1")]
    ZeroShots,
    #[error("initial state construction failed: {0}")]
    InitialState(#[from] StateError),
    #[error("unknown scheme `{0}` (expected one of: ms, ddms, ssb)")]
    UnknownScheme(String),
    #[error("unknown mode sign `{0}` (expected `+` or `-`)")]
    UnknownModeSign(String),
    #[error("unknown envelope `{0}` (expected `rectangular` or `raised_cosine`)")]
    UnknownEnvelope(String),
    #[error("envelope `raised_cosine` requires `ramp_time_s`")]
    MissingRampTime,
    #[error("config file parse error: {0}")]
    Parse(String),
}

/// Which two-qubit gate scheme to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Bichromatic spin-dependent force, no carrier.
    Ms,
    /// MS force with a co-applied resonant carrier for dynamical decoupling.
    Ddms,
    /// Single-sideband gate: one sideband at doubled Rabi frequency plus the
    /// carrier as part of the gate mechanism.
    Ssb,
}

/// Amplitude profile applied to the sideband drives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EnvelopeSpec {
    Rectangular,
    /// Half-cosine ramp of the given duration at both ends of the schedule;
    /// unity in between.
    RaisedCosine { ramp: f64 },
}

impl EnvelopeSpec {
    /// Amplitude at absolute schedule time `t`, for a schedule spanning
    /// `[0, total]`.
    pub fn amplitude(&self, t: f64, total: f64) -> f64 {
        match *self {
            EnvelopeSpec::Rectangular => 1.0,
            EnvelopeSpec::RaisedCosine { ramp } => {
                if t <= 0.0 || t >= total {
                    0.0
                } else if t < ramp {
                    0.5 * (1.0 - (PI * t / ramp).cos())
                } else if t > total - ramp {
                    0.5 * (1.0 - (PI * (total - t) / ramp).cos())
                } else {
                    1.0
                }
            }
        }
    }
}

/// All physical parameters of a single two-qubit gate run.
///
/// Frequencies are angular (rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub scheme: Scheme,
    /// Gate (sideband) Rabi frequency Ω.
    pub omega: f64,
    /// Gate detuning δ; sign convention: positive detunes the sidebands
    /// outward from the motional mode.
    pub delta: f64,
    /// Carrier Rabi frequency Ω_c (ignored for the MS scheme).
    pub omega_c: f64,
    /// Residual qubit-frequency shift Δ′, constant within one run.
    pub delta_prime: f64,
    /// Number of phase-space loops K.
    pub loops: u32,
    pub mode_sign: ModeSign,
    /// Mid-schedule π rotation about y.
    pub refocus_pulse: bool,
    /// `None` models the refocusing pulse as instantaneous; `Some(τ)`
    /// inserts a τ-long strong σ_y drive segment instead.
    pub refocus_duration: Option<f64>,
    /// Phase offset of the carrier drive from the force axis (x).
    pub carrier_phase: f64,
    pub fock_dim: usize,
    /// Mean thermal occupation of the motional mode at t = 0.
    pub initial_nbar: f64,
    pub envelope: EnvelopeSpec,
    /// Motional heating rate in quanta/s; 0 disables the dissipator.
    pub heating_rate: f64,
}

impl Default for GateConfig {
    /// Defaults match the bundled example configuration: a four-loop
    /// dynamically decoupled gate on the anti-phase mode with
    /// Ω = 2π·308 Hz, δ = 2π·1230.8 Hz, Ω_c = 2π·3690 Hz.
    fn default() -> Self {
        Self {
            scheme: Scheme::Ddms,
            omega: TAU * 308.0,
            delta: TAU * 1230.8,
            omega_c: TAU * 3690.0,
            delta_prime: 0.0,
            loops: 4,
            mode_sign: ModeSign::Minus,
            refocus_pulse: true,
            refocus_duration: None,
            carrier_phase: 0.0,
            fock_dim: 30,
            initial_nbar: 0.0,
            envelope: EnvelopeSpec::Rectangular,
            heating_rate: 0.0,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.delta == 0.0 || !self.delta.is_finite() {
            return Err(ConfigError::ZeroDetuning);
        }
        if self.loops == 0 {
            return Err(ConfigError::ZeroLoops);
        }
        if self.refocus_pulse && self.loops % 2 != 0 {
            return Err(ConfigError::OddLoopsWithRefocus(self.loops));
        }
        if self.fock_dim < 2 {
            return Err(ConfigError::FockDimension(self.fock_dim));
        }
        if self.omega < 0.0 {
            return Err(ConfigError::NegativeRabi(self.omega));
        }
        if self.omega_c < 0.0 {
            return Err(ConfigError::NegativeRabi(self.omega_c));
        }
        if self.initial_nbar < 0.0 {
            return Err(ConfigError::NegativeQuantity {
                quantity: "initial_nbar",
                value: self.initial_nbar,
            });
        }
        if self.heating_rate < 0.0 {
            return Err(ConfigError::NegativeQuantity {
                quantity: "heating_rate",
                value: self.heating_rate,
            });
        }
        if let Some(tau) = self.refocus_duration {
            if !(tau > 0.0) {
                return Err(ConfigError::BadRefocusDuration(tau));
            }
        }
        if let EnvelopeSpec::RaisedCosine { ramp } = self.envelope {
            let total = self.gate_time()?;
            if !(ramp > 0.0) || 2.0 * ramp > total {
                return Err(ConfigError::RampTooLong { ramp, total });
            }
        }
        Ok(())
    }

    /// Total gate duration `t_g = 2πK/|δ|`.
    pub fn gate_time(&self) -> Result<f64, ConfigError> {
        if self.delta == 0.0 || !self.delta.is_finite() {
            return Err(ConfigError::ZeroDetuning);
        }
        Ok(TAU * self.loops as f64 / self.delta.abs())
    }

    pub fn hilbert(&self) -> Result<HilbertSpec, ConfigError> {
        HilbertSpec::new(self.fock_dim).map_err(|_| ConfigError::FockDimension(self.fock_dim))
    }

    /// Initial state |↓↓⟩ with the configured thermal motional occupation.
    pub fn initial_state(&self) -> Result<State, ConfigError> {
        let spec = self.hilbert()?;
        Ok(State::thermal(
            spec,
            crate::operators::SPIN_DOWN,
            crate::operators::SPIN_DOWN,
            self.initial_nbar,
        )?)
    }
}

/// Total gate duration `t_g = 2πK/|δ|`.
pub fn gate_time(config: &GateConfig) -> Result<f64, ConfigError> {
    config.gate_time()
}

/// Single-ion Ramsey sequence parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseyConfig {
    pub exposure_time: f64,
    /// Enable the carrier drive and the mid-exposure π[y] pulse.
    pub dd_enabled: bool,
    /// Carrier Rabi frequency (rad/s), used when `dd_enabled`.
    pub omega_c: f64,
    /// RMS of the shot-to-shot Gaussian qubit-frequency shift (rad/s).
    pub delta_prime_rms: f64,
    /// Phase of the second π/2 analysis pulse.
    pub analysis_phase: f64,
    pub shots: u32,
    pub seed: u64,
}

impl RamseyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.exposure_time > 0.0) {
            return Err(ConfigError::BadExposure(self.exposure_time));
        }
        if self.shots == 0 {
            return Err(ConfigError::ZeroShots);
        }
        if self.omega_c < 0.0 {
            return Err(ConfigError::NegativeRabi(self.omega_c));
        }
        if self.delta_prime_rms < 0.0 {
            return Err(ConfigError::NegativeQuantity {
                quantity: "delta_prime_rms",
                value: self.delta_prime_rms,
            });
        }
        Ok(())
    }
}

/// Hilbert space a schedule acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceSpec {
    /// Two spins and the truncated motional mode.
    SpinPair { fock_dim: usize, mode_sign: ModeSign },
    /// One bare spin, no motional factor.
    SingleSpin,
}

impl SpaceSpec {
    pub fn dim(&self) -> usize {
        match *self {
            SpaceSpec::SpinPair { fock_dim, .. } => 4 * fock_dim,
            SpaceSpec::SingleSpin => 2,
        }
    }
}

/// One symbolic Hamiltonian term. Rabi frequencies and shifts are angular
/// (rad/s); the time-dependent coefficients are materialized by the
/// dynamics module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TermSpec {
    /// Red-sideband interaction `(Ω_r/2)(S⁺ a e^{iδt} + S⁻ a† e^{-iδt})`.
    SidebandRed { rabi: f64 },
    /// Blue-sideband interaction `(Ω_b/2)(S⁺ a† e^{-iδt} + S⁻ a e^{iδt})`.
    SidebandBlue { rabi: f64 },
    /// Resonant drive `(Ω_c/2) Σ_i (cos φ σ_x,i + sin φ σ_y,i)`.
    Carrier { rabi: f64, phase: f64 },
    /// Static qubit-frequency shift `(Δ′/2) Σ_i σ_z,i`.
    StaticShift { shift: f64 },
}

/// Instantaneous unitary at a segment boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PulseSpec {
    /// Rotation about a Pauli axis on every spin.
    AxisRotation { axis: Axis, angle: f64 },
    /// Rotation about `cos φ·x + sin φ·y` on every spin.
    PhasedRotation { phase: f64, angle: f64 },
}

/// Incoherent channel attached to a segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DissipatorSpec {
    /// Jump operator `√rate · a†` (rate in quanta/s).
    MotionHeatingUp { rate: f64 },
    /// Jump operator `√rate · a`.
    MotionHeatingDown { rate: f64 },
}

/// One timed slice of the schedule. Coefficient oscillations use absolute
/// schedule time, so sideband phases stay continuous across segment
/// boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Absolute start time within the schedule.
    pub start: f64,
    pub duration: f64,
    /// Sideband oscillation frequency δ for this segment (rad/s).
    pub detuning: f64,
    pub terms: Vec<TermSpec>,
    pub dissipators: Vec<DissipatorSpec>,
}

/// Ordered list of timed segments plus boundary unitaries. Boundary index
/// `k` applies before segment `k`; index `segments.len()` applies after the
/// final segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub space: SpaceSpec,
    pub envelope: EnvelopeSpec,
    pub total_duration: f64,
    pub segments: Vec<Segment>,
    pub boundary_pulses: BTreeMap<usize, PulseSpec>,
}

impl Schedule {
    /// Sum of segment durations.
    pub fn segments_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Largest sideband Rabi coefficient across segments, and the number of
    /// distinct sideband terms in the first segment. Used by tests.
    pub fn sideband_terms(&self) -> Vec<TermSpec> {
        self.segments
            .first()
            .map(|s| {
                s.terms
                    .iter()
                    .copied()
                    .filter(|t| matches!(t, TermSpec::SidebandRed { .. } | TermSpec::SidebandBlue { .. }))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Carrier Rabi frequency of the first segment, if a carrier term is
    /// present.
    pub fn carrier_rabi(&self) -> Option<f64> {
        self.segments.first().and_then(|s| {
            s.terms.iter().find_map(|t| match t {
                TermSpec::Carrier { rabi, .. } => Some(*rabi),
                _ => None,
            })
        })
    }
}

/// Per-shot perturbation applied on top of a [`GateConfig`] when compiling:
/// the detuning offset models mode-frequency jitter (the programmed segment
/// durations stay fixed by the nominal detuning), and `delta_prime` adds to
/// the configured static shift.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ShotNoise {
    pub delta_prime: f64,
    pub detuning_offset: f64,
}

/// Compile a gate configuration into a schedule.
pub fn compile(config: &GateConfig) -> Result<Schedule, ConfigError> {
    compile_with_noise(config, &ShotNoise::default())
}

/// Compile with a per-shot perturbation. Segment durations are set by the
/// nominal configuration; only the Hamiltonian coefficients move.
pub fn compile_with_noise(config: &GateConfig, noise: &ShotNoise) -> Result<Schedule, ConfigError> {
    config.validate()?;
    let t_g = config.gate_time()?;
    let delta_eff = config.delta + noise.detuning_offset;
    let shift = config.delta_prime + noise.delta_prime;

    let mut terms: Vec<TermSpec> = Vec::new();
    match config.scheme {
        Scheme::Ms => {
            terms.push(TermSpec::SidebandRed { rabi: config.omega });
            terms.push(TermSpec::SidebandBlue { rabi: config.omega });
            // carrier is compiled to zero amplitude regardless of Ω_c
            terms.push(TermSpec::Carrier { rabi: 0.0, phase: config.carrier_phase });
        }
        Scheme::Ddms => {
            terms.push(TermSpec::SidebandRed { rabi: config.omega });
            terms.push(TermSpec::SidebandBlue { rabi: config.omega });
            terms.push(TermSpec::Carrier { rabi: config.omega_c, phase: config.carrier_phase });
        }
        Scheme::Ssb => {
            // single sideband at doubled Rabi frequency; no blue term
            terms.push(TermSpec::SidebandRed { rabi: 2.0 * config.omega });
            terms.push(TermSpec::Carrier { rabi: config.omega_c, phase: config.carrier_phase });
        }
    }
    terms.push(TermSpec::StaticShift { shift });

    let mut dissipators = Vec::new();
    if config.heating_rate > 0.0 {
        dissipators.push(DissipatorSpec::MotionHeatingUp { rate: config.heating_rate });
        dissipators.push(DissipatorSpec::MotionHeatingDown { rate: config.heating_rate });
    }

    let space = SpaceSpec::SpinPair { fock_dim: config.fock_dim, mode_sign: config.mode_sign };

    let mut segments = Vec::new();
    let mut boundary_pulses = BTreeMap::new();
    if config.refocus_pulse {
        let half = t_g / 2.0;
        segments.push(Segment {
            start: 0.0,
            duration: half,
            detuning: delta_eff,
            terms: terms.clone(),
            dissipators: dissipators.clone(),
        });
        match config.refocus_duration {
            None => {
                boundary_pulses.insert(1, PulseSpec::AxisRotation { axis: Axis::Y, angle: PI });
                segments.push(Segment {
                    start: half,
                    duration: half,
                    detuning: delta_eff,
                    terms,
                    dissipators,
                });
            }
            Some(tau) => {
                // strong σ_y drive; the sideband fields stay on
                let mut pulse_terms = terms.clone();
                for t in pulse_terms.iter_mut() {
                    if let TermSpec::Carrier { rabi, phase } = t {
                        *rabi = PI / tau;
                        *phase = PI / 2.0;
                    }
                }
                segments.push(Segment {
                    start: half,
                    duration: tau,
                    detuning: delta_eff,
                    terms: pulse_terms,
                    dissipators: dissipators.clone(),
                });
                segments.push(Segment {
                    start: half + tau,
                    duration: half,
                    detuning: delta_eff,
                    terms,
                    dissipators,
                });
            }
        }
    } else {
        segments.push(Segment {
            start: 0.0,
            duration: t_g,
            detuning: delta_eff,
            terms,
            dissipators,
        });
    }

    let total_duration = segments.iter().map(|s| s.duration).sum();
    Ok(Schedule {
        space,
        envelope: config.envelope,
        total_duration,
        segments,
        boundary_pulses,
    })
}

/// Compile a single-spin Ramsey schedule: π/2 about x, an exposure segment
/// with `H = ½Δ′σ_z` (plus `½Ω_c σ_x` and a mid-exposure π[y] when
/// dynamical decoupling is enabled), then π/2 about the analysis axis.
pub fn compile_ramsey(config: &RamseyConfig) -> Result<Schedule, ConfigError> {
    compile_ramsey_with(config, 0.0, true)
}

/// Ramsey compilation with an explicit per-shot shift value. The final
/// analysis pulse can be omitted so callers may scan its phase cheaply on
/// the evolved state.
pub fn compile_ramsey_with(
    config: &RamseyConfig,
    delta_prime: f64,
    include_analysis_pulse: bool,
) -> Result<Schedule, ConfigError> {
    config.validate()?;
    let t = config.exposure_time;
    let mut terms = vec![TermSpec::StaticShift { shift: delta_prime }];
    if config.dd_enabled {
        terms.push(TermSpec::Carrier { rabi: config.omega_c, phase: 0.0 });
    }

    let mut segments = Vec::new();
    let mut boundary_pulses = BTreeMap::new();
    boundary_pulses.insert(0, PulseSpec::AxisRotation { axis: Axis::X, angle: PI / 2.0 });
    if config.dd_enabled {
        segments.push(Segment {
            start: 0.0,
            duration: t / 2.0,
            detuning: 0.0,
            terms: terms.clone(),
            dissipators: Vec::new(),
        });
        boundary_pulses.insert(1, PulseSpec::AxisRotation { axis: Axis::Y, angle: PI });
        segments.push(Segment {
            start: t / 2.0,
            duration: t / 2.0,
            detuning: 0.0,
            terms,
            dissipators: Vec::new(),
        });
    } else {
        segments.push(Segment {
            start: 0.0,
            duration: t,
            detuning: 0.0,
            terms,
            dissipators: Vec::new(),
        });
    }
    if include_analysis_pulse {
        boundary_pulses.insert(
            segments.len(),
            PulseSpec::PhasedRotation { phase: config.analysis_phase, angle: PI / 2.0 },
        );
    }

    Ok(Schedule {
        space: SpaceSpec::SingleSpin,
        envelope: EnvelopeSpec::Rectangular,
        total_duration: t,
        segments,
        boundary_pulses,
    })
}

// ---------------------------------------------------------------------------
// File schema (key-value TOML; frequencies in Hz, durations in seconds)
// ---------------------------------------------------------------------------

/// `[gate]` section of a config file. Frequencies in Hz, durations in
/// seconds; unknown keys are rejected.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    pub scheme: String,
    pub rabi_hz: f64,
    pub detuning_hz: f64,
    #[serde(default)]
    pub carrier_rabi_hz: f64,
    #[serde(default)]
    pub zeeman_shift_hz: f64,
    pub loops: u32,
    #[serde(default = "default_mode_sign")]
    pub mode_sign: String,
    #[serde(default)]
    pub refocus_pulse: bool,
    #[serde(default)]
    pub refocus_duration_s: Option<f64>,
    #[serde(default)]
    pub carrier_phase_rad: f64,
    #[serde(default = "default_fock_dim")]
    pub fock_dim: usize,
    #[serde(default)]
    pub initial_nbar: f64,
    #[serde(default = "default_envelope")]
    pub envelope: String,
    #[serde(default)]
    pub ramp_time_s: Option<f64>,
    #[serde(default)]
    pub heating_rate_quanta_per_s: f64,
}

fn default_mode_sign() -> String {
    "-".into()
}

fn default_fock_dim() -> usize {
    30
}

fn default_envelope() -> String {
    "rectangular".into()
}

impl GateSection {
    pub fn to_config(&self) -> Result<GateConfig, ConfigError> {
        let scheme = match self.scheme.to_ascii_lowercase().as_str() {
            "ms" => Scheme::Ms,
            "ddms" => Scheme::Ddms,
            "ssb" => Scheme::Ssb,
            other => return Err(ConfigError::UnknownScheme(other.to_string())),
        };
        let mode_sign = match self.mode_sign.as_str() {
            "+" | "plus" => ModeSign::Plus,
            "-" | "minus" => ModeSign::Minus,
            other => return Err(ConfigError::UnknownModeSign(other.to_string())),
        };
        let envelope = match self.envelope.to_ascii_lowercase().as_str() {
            "rectangular" => EnvelopeSpec::Rectangular,
            "raised_cosine" => {
                let ramp = self.ramp_time_s.ok_or(ConfigError::MissingRampTime)?;
                EnvelopeSpec::RaisedCosine { ramp }
            }
            other => return Err(ConfigError::UnknownEnvelope(other.to_string())),
        };
        let config = GateConfig {
            scheme,
            omega: TAU * self.rabi_hz,
            delta: TAU * self.detuning_hz,
            omega_c: TAU * self.carrier_rabi_hz,
            delta_prime: TAU * self.zeeman_shift_hz,
            loops: self.loops,
            mode_sign,
            refocus_pulse: self.refocus_pulse,
            refocus_duration: self.refocus_duration_s,
            carrier_phase: self.carrier_phase_rad,
            fock_dim: self.fock_dim,
            initial_nbar: self.initial_nbar,
            envelope,
            heating_rate: self.heating_rate_quanta_per_s,
        };
        config.validate()?;
        Ok(config)
    }
}

/// `[ramsey]` section of a config file.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RamseySection {
    pub exposure_time_s: f64,
    pub dd_enabled: bool,
    #[serde(default)]
    pub carrier_rabi_hz: f64,
    #[serde(default)]
    pub delta_prime_rms_hz: f64,
    #[serde(default)]
    pub analysis_phase_rad: f64,
    pub shots: u32,
    #[serde(default)]
    pub seed: u64,
}

impl RamseySection {
    pub fn to_config(&self) -> Result<RamseyConfig, ConfigError> {
        let config = RamseyConfig {
            exposure_time: self.exposure_time_s,
            dd_enabled: self.dd_enabled,
            omega_c: TAU * self.carrier_rabi_hz,
            delta_prime_rms: TAU * self.delta_prime_rms_hz,
            analysis_phase: self.analysis_phase_rad,
            shots: self.shots,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}
