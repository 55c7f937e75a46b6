//! Monte-Carlo and deterministic sweep harness.
//!
//! Shot-to-shot noise is modeled by redrawing the static qubit-frequency
//! shift Δ′ and the effective gate detuning once per shot (both frozen
//! within a shot), evolving the schedule, and averaging the Bell-state
//! error. All randomness comes from per-shot `ChaCha12` streams derived
//! from an explicit seed, so results are bit-identical for a given seed
//! regardless of thread count.
//!
//! Every sweep and shot loop runs through [`Execution`]: a rayon pool when
//! the `parallel` feature is enabled (the default), or a plain sequential
//! loop. Points are always aggregated in axis order.
//!
//! Error evaluations here integrate at half the default step density: the
//! residual integrator bias (~1e-9 on gate error) sits many orders below
//! both the Monte-Carlo shot noise and the acceptance tolerances, and the
//! reference and shot runs share the same settings so zero-jitter shots
//! reproduce the deterministic error exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, BellPhase};
use crate::dynamics::{self, DynamicsError, EvolveOptions};
use crate::model::{
    self, compile_ramsey_with, ConfigError, GateConfig, RamseyConfig, Scheme, ShotNoise,
};
use crate::operators::{phase_rotation_single, State, SPIN_DOWN};
use crate::report::format_g17;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("shot {shot} failed: {source}")]
    ShotFailed { shot: usize, source: Box<NoiseError> },
    #[error("sweep point {index} (axis value {value}) failed: {source}")]
    PointFailed { index: usize, value: f64, source: Box<NoiseError> },
    #[error("contrast-to-error mapping requires the ms scheme")]
    RequiresMs,
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("degenerate fringe data: {0}")]
    DegenerateFringe(&'static str),
}

/// Shot-to-shot Gaussian noise model: both r.m.s. values are angular
/// frequencies (rad/s) and are frozen within a shot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterModel {
    pub delta_prime_rms: f64,
    pub mode_freq_rms: f64,
    pub seed: u64,
    pub shots: u32,
}

impl JitterModel {
    pub fn quiet(seed: u64) -> Self {
        Self { delta_prime_rms: 0.0, mode_freq_rms: 0.0, seed, shots: 1 }
    }
}

/// How to run the embarrassingly parallel loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    /// Rayon pool when compiled with the `parallel` feature; falls back to
    /// sequential otherwise.
    Parallel,
    Sequential,
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel
    }
}

/// Ordered map over `0..n`, parallel or sequential; output order is by
/// index either way.
pub(crate) fn try_map_indexed<T, F>(
    n: usize,
    exec: Execution,
    f: F,
) -> Result<Vec<T>, NoiseError>
where
    T: Send,
    F: Fn(usize) -> Result<T, NoiseError> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => (0..n).map(f).collect(),
        Execution::Sequential => (0..n).map(f).collect(),
    }
}

/// One point of a sweep: the axis value, the mean gate error with its
/// standard error, and the shot count behind it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub shots: u32,
}

/// Sweep output, ordered by axis value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// CSV with one row per sweep point (full double precision).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis_value,mean_error,std_error,shots\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_g17(p.axis_value),
                format_g17(p.mean_error),
                format_g17(p.std_error),
                p.shots
            ));
        }
        out
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Evolution settings for error evaluation: endpoint sampling at half the
/// default step density (see the module docs).
fn mc_options() -> EvolveOptions {
    EvolveOptions::sparse().with_refine(0.5)
}

/// Per-shot seed stream: same seed, stream index = shot.
fn shot_rng(seed: u64, shot: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

fn draw_normal(rng: &mut ChaCha12Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}

/// Bell-state phase calibrated on the noiseless run of this configuration
/// (Δ′ = 0, no heating, no jitter), plus the reference fidelity.
fn reference_phase(config: &GateConfig) -> Result<(f64, f64), NoiseError> {
    let mut quiet = config.clone();
    quiet.delta_prime = 0.0;
    quiet.heating_rate = 0.0;
    let schedule = model::compile(&quiet)?;
    let initial = quiet.initial_state()?;
    let result = dynamics::evolve(&schedule, &initial, &mc_options())?;
    Ok(analysis::optimal_bell_phase(&result.final_state))
}

/// Deterministic Bell-state error of a single run: the target phase is
/// frozen on the noiseless reference, then `1 - F` is evaluated on the
/// configured run (with its Δ′ and heating).
pub fn gate_error_deterministic(config: &GateConfig) -> Result<f64, NoiseError> {
    let (theta, _) = reference_phase(config)?;
    let schedule = model::compile(config)?;
    let initial = config.initial_state()?;
    let result = dynamics::evolve(&schedule, &initial, &mc_options())?;
    Ok(1.0 - analysis::direct_fidelity(&result.final_state, BellPhase::Fixed(theta)))
}

/// Per-shot Bell-state errors under the jitter model.
pub fn gate_error_shots(
    config: &GateConfig,
    jitter: &JitterModel,
    exec: Execution,
) -> Result<Vec<f64>, NoiseError> {
    let (theta, _) = reference_phase(config)?;
    let initial = config.initial_state()?;
    try_map_indexed(jitter.shots as usize, exec, |shot| {
        let run = || -> Result<f64, NoiseError> {
            let mut rng = shot_rng(jitter.seed, shot as u64);
            let noise = ShotNoise {
                delta_prime: draw_normal(&mut rng, jitter.delta_prime_rms),
                detuning_offset: draw_normal(&mut rng, jitter.mode_freq_rms),
            };
            let schedule = model::compile_with_noise(config, &noise)?;
            let result = dynamics::evolve(&schedule, &initial, &mc_options())?;
            Ok(1.0 - analysis::direct_fidelity(&result.final_state, BellPhase::Fixed(theta)))
        };
        run().map_err(|source| NoiseError::ShotFailed { shot, source: Box::new(source) })
    })
}

/// Monte-Carlo mean gate error and its standard error.
pub fn mc_gate_error(config: &GateConfig, jitter: &JitterModel) -> Result<(f64, f64), NoiseError> {
    mc_gate_error_exec(config, jitter, Execution::default())
}

pub fn mc_gate_error_exec(
    config: &GateConfig,
    jitter: &JitterModel,
    exec: Execution,
) -> Result<(f64, f64), NoiseError> {
    let errors = gate_error_shots(config, jitter, exec)?;
    Ok(mean_and_stderr(&errors))
}

/// Ramsey fringe outcome: fitted contrast, its Monte-Carlo standard error,
/// and the shot-averaged fringe `P_↑(φ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RamseyOutcome {
    pub contrast: f64,
    pub std_error: f64,
    pub fringe: Vec<(f64, f64)>,
}

/// Default analysis-phase grid for fringe fitting.
pub fn default_phase_grid() -> Vec<f64> {
    (0..24).map(|k| std::f64::consts::TAU * k as f64 / 24.0).collect()
}

/// Monte-Carlo Ramsey experiment: per shot, draw Δ′, evolve the exposure
/// once, then scan the analysis-pulse phase on the evolved state. Fits
/// `P_↑(φ) = (1 + C cos φ)/2` (conventions put the noiseless peak at
/// φ = 0).
pub fn ramsey_contrast(config: &RamseyConfig) -> Result<RamseyOutcome, NoiseError> {
    ramsey_contrast_with_phases(config, &default_phase_grid(), Execution::default())
}

pub fn ramsey_contrast_with_phases(
    config: &RamseyConfig,
    phases: &[f64],
    exec: Execution,
) -> Result<RamseyOutcome, NoiseError> {
    config.validate()?;
    if phases.len() < 2 {
        return Err(NoiseError::DegenerateFringe("need at least 2 phase points"));
    }
    let cos_norm: f64 = phases.iter().map(|p| p.cos() * p.cos()).sum();
    if cos_norm < 1e-12 {
        return Err(NoiseError::DegenerateFringe("phase grid orthogonal to cos φ"));
    }
    let initial = State::spin_basis(SPIN_DOWN);
    let analysis_pulses: Vec<_> = phases
        .iter()
        .map(|&phi| phase_rotation_single(phi, std::f64::consts::PI / 2.0))
        .collect();

    // each shot yields (per-shot contrast, fringe values)
    let per_shot: Vec<(f64, Vec<f64>)> =
        try_map_indexed(config.shots as usize, exec, |shot| {
            let run = || -> Result<(f64, Vec<f64>), NoiseError> {
                let mut rng = shot_rng(config.seed, shot as u64);
                let delta_prime = draw_normal(&mut rng, config.delta_prime_rms);
                let schedule = compile_ramsey_with(config, delta_prime, false)?;
                let result = dynamics::evolve(&schedule, &initial, &mc_options())?;
                let mut p_up = Vec::with_capacity(phases.len());
                for pulse in &analysis_pulses {
                    let analyzed = result.final_state.apply_unitary(pulse);
                    p_up.push(analyzed.spin_populations()[0]);
                }
                let contrast: f64 = phases
                    .iter()
                    .zip(&p_up)
                    .map(|(phi, p)| (2.0 * p - 1.0) * phi.cos())
                    .sum::<f64>()
                    / cos_norm;
                Ok((contrast, p_up))
            };
            run().map_err(|source| NoiseError::ShotFailed { shot, source: Box::new(source) })
        })?;

    let contrasts: Vec<f64> = per_shot.iter().map(|(c, _)| *c).collect();
    let (contrast, std_error) = mean_and_stderr(&contrasts);
    let shots = per_shot.len() as f64;
    let fringe = phases
        .iter()
        .enumerate()
        .map(|(i, &phi)| (phi, per_shot.iter().map(|(_, p)| p[i]).sum::<f64>() / shots))
        .collect();
    Ok(RamseyOutcome { contrast, std_error, fringe })
}

/// Analytic fringe contrast for Gaussian shot-to-shot dephasing over an
/// exposure time `t`: `exp(-(σt)²/2)`.
pub fn gaussian_contrast(sigma: f64, t: f64) -> f64 {
    (-(sigma * t) * (sigma * t) / 2.0).exp()
}

/// One row of the contrast → gate-error mapping.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContrastErrorPoint {
    /// Δ′ r.m.s. (rad/s).
    pub sigma: f64,
    pub contrast_analytic: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub shots: u32,
}

/// For each σ on the grid, pair the analytic Ramsey contrast over the gate
/// time with the Monte-Carlo gate error of this (MS) configuration.
pub fn contrast_to_error_curve(
    config: &GateConfig,
    sigma_grid: &[f64],
    shots: u32,
    seed: u64,
) -> Result<Vec<ContrastErrorPoint>, NoiseError> {
    if config.scheme != Scheme::Ms {
        return Err(NoiseError::RequiresMs);
    }
    if sigma_grid.is_empty() {
        return Err(NoiseError::EmptyGrid);
    }
    let t_g = config.gate_time()?;
    let mut sorted: Vec<f64> = sigma_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(sorted.len());
    for (index, &sigma) in sorted.iter().enumerate() {
        let jitter = JitterModel {
            delta_prime_rms: sigma,
            mode_freq_rms: 0.0,
            seed: seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            shots,
        };
        let (mean_error, std_error) =
            mc_gate_error(config, &jitter).map_err(|source| NoiseError::PointFailed {
                index,
                value: sigma,
                source: Box::new(source),
            })?;
        out.push(ContrastErrorPoint {
            sigma,
            contrast_analytic: gaussian_contrast(sigma, t_g),
            mean_error,
            std_error,
            shots,
        });
    }
    Ok(out)
}

/// Deterministic carrier-amplitude comparison between the decoupled and
/// single-sideband schemes, with the two carrier-free baselines.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CarrierComparison {
    pub ddms: SweepResult,
    pub ssb: SweepResult,
    /// No carrier, no refocusing pulse.
    pub ms_baseline_error: f64,
    /// Refocusing pulse only (carrier off).
    pub refocus_only_error: f64,
}

/// Gate error versus carrier Rabi frequency at a constant uncompensated
/// shift Δ′, for the DDMS and SSB schemes. Deterministic (no Monte-Carlo).
pub fn error_vs_carrier(
    config_base: &GateConfig,
    omega_c_grid: &[f64],
    delta_prime_fixed: f64,
) -> Result<CarrierComparison, NoiseError> {
    error_vs_carrier_exec(config_base, omega_c_grid, delta_prime_fixed, Execution::default())
}

pub fn error_vs_carrier_exec(
    config_base: &GateConfig,
    omega_c_grid: &[f64],
    delta_prime_fixed: f64,
    exec: Execution,
) -> Result<CarrierComparison, NoiseError> {
    if omega_c_grid.is_empty() {
        return Err(NoiseError::EmptyGrid);
    }
    let mut grid: Vec<f64> = omega_c_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let scan = |scheme: Scheme| -> Result<SweepResult, NoiseError> {
        let points = try_map_indexed(grid.len(), exec, |index| {
            let omega_c = grid[index];
            let mut cfg = config_base.clone();
            cfg.scheme = scheme;
            cfg.omega_c = omega_c;
            cfg.delta_prime = delta_prime_fixed;
            let error =
                gate_error_deterministic(&cfg).map_err(|source| NoiseError::PointFailed {
                    index,
                    value: omega_c,
                    source: Box::new(source),
                })?;
            Ok(SweepPoint { axis_value: omega_c, mean_error: error, std_error: 0.0, shots: 1 })
        })?;
        Ok(SweepResult { axis: "omega_c".into(), points })
    };

    let ddms = scan(Scheme::Ddms)?;
    let ssb = scan(Scheme::Ssb)?;

    let mut ms = config_base.clone();
    ms.scheme = Scheme::Ms;
    ms.refocus_pulse = false;
    ms.omega_c = 0.0;
    ms.delta_prime = delta_prime_fixed;
    let ms_baseline_error = gate_error_deterministic(&ms)?;

    let mut refocus_only = config_base.clone();
    refocus_only.scheme = Scheme::Ddms;
    refocus_only.refocus_pulse = true;
    refocus_only.omega_c = 0.0;
    refocus_only.delta_prime = delta_prime_fixed;
    let refocus_only_error = gate_error_deterministic(&refocus_only)?;

    Ok(CarrierComparison { ddms, ssb, ms_baseline_error, refocus_only_error })
}

/// Deterministic gate error versus heating rate (quanta/s).
pub fn heating_error(config: &GateConfig, rate_grid: &[f64]) -> Result<SweepResult, NoiseError> {
    heating_error_exec(config, rate_grid, Execution::default())
}

pub fn heating_error_exec(
    config: &GateConfig,
    rate_grid: &[f64],
    exec: Execution,
) -> Result<SweepResult, NoiseError> {
    if rate_grid.is_empty() {
        return Err(NoiseError::EmptyGrid);
    }
    let mut grid: Vec<f64> = rate_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let points = try_map_indexed(grid.len(), exec, |index| {
        let rate = grid[index];
        let mut cfg = config.clone();
        cfg.heating_rate = rate;
        let error = gate_error_deterministic(&cfg).map_err(|source| NoiseError::PointFailed {
            index,
            value: rate,
            source: Box::new(source),
        })?;
        Ok(SweepPoint { axis_value: rate, mean_error: error, std_error: 0.0, shots: 1 })
    })?;
    Ok(SweepResult { axis: "heating_rate".into(), points })
}

/// Which jitter channel a Monte-Carlo sweep scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JitterAxis {
    DeltaPrimeRms,
    ModeFreqRms,
}

/// Monte-Carlo gate error along a grid of r.m.s. values for one jitter
/// channel.
pub fn jitter_sweep(
    config: &GateConfig,
    axis: JitterAxis,
    rms_grid: &[f64],
    shots: u32,
    seed: u64,
) -> Result<SweepResult, NoiseError> {
    if rms_grid.is_empty() {
        return Err(NoiseError::EmptyGrid);
    }
    let mut grid: Vec<f64> = rms_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(grid.len());
    for (index, &rms) in grid.iter().enumerate() {
        let jitter = JitterModel {
            delta_prime_rms: if axis == JitterAxis::DeltaPrimeRms { rms } else { 0.0 },
            mode_freq_rms: if axis == JitterAxis::ModeFreqRms { rms } else { 0.0 },
            seed: seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            shots,
        };
        let (mean_error, std_error) =
            mc_gate_error(config, &jitter).map_err(|source| NoiseError::PointFailed {
                index,
                value: rms,
                source: Box::new(source),
            })?;
        points.push(SweepPoint { axis_value: rms, mean_error, std_error, shots });
    }
    let axis_name = match axis {
        JitterAxis::DeltaPrimeRms => "delta_prime_rms",
        JitterAxis::ModeFreqRms => "mode_freq_rms",
    };
    Ok(SweepResult { axis: axis_name.into(), points })
}
