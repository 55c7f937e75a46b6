//! The four commands: `simulate`, `figure`, `zeeman`, `sweep`.

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use std::f64::consts::TAU;
use std::path::Path;

use iongate::analysis::{self, BellPhase, PopulationSummary};
use iongate::dynamics::{self, EvolveOptions, EvolutionResult};
use iongate::model::{self, GateConfig, RamseyConfig, Scheme, ShotNoise};
use iongate::noise::{self, JitterAxis};
use iongate::report::{csv_document, format_g17};
use iongate::zeeman;

use crate::config::{self as cfgfile};
use crate::manifest::RunManifest;

/// Command-line overrides applied on top of config-file values.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u32>,
}

pub const FIGURE_NAMES: &[&str] =
    &["fig2a", "fig2b", "fig3a", "fig3b", "fig5a", "fig5b", "table2"];

fn g(x: f64) -> String {
    format_g17(x)
}

fn evolve_gate(
    config: &GateConfig,
    noise_shift: &ShotNoise,
    options: &EvolveOptions,
) -> Result<EvolutionResult> {
    let schedule = model::compile_with_noise(config, noise_shift)?;
    let initial = config.initial_state()?;
    Ok(dynamics::evolve(&schedule, &initial, options)?)
}

#[derive(Serialize)]
struct FinalStateSummary {
    fidelity: f64,
    bell_phase_rad: f64,
    parity_amplitude: f64,
    parity_phase_offset_rad: f64,
    populations: PopulationSummary,
    spin_purity: f64,
    mean_fock: f64,
    trace: f64,
    steps: usize,
    max_top_fock_occupancy: f64,
}

/// Run one gate configuration end to end: time-series CSV, final-state
/// summary JSON, and the run manifest.
pub fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::SimulateFile>(config_path)?;
    let gate = file.gate.to_config()?;
    let mut manifest = RunManifest::new("simulate", &[&bytes], 0);

    let options = EvolveOptions {
        sample_stride: file.simulate.sample_stride.max(1),
        ..EvolveOptions::default()
    };
    let result = evolve_gate(&gate, &ShotNoise::default(), &options)?;

    let rows: Vec<Vec<String>> = result
        .times
        .iter()
        .zip(&result.observables)
        .map(|(t, obs)| {
            let p = obs.spin_populations;
            vec![g(*t), g(p[0]), g(p[1]), g(p[2]), g(p[3]), g(obs.mean_fock), g(obs.spin_purity)]
        })
        .collect();
    let csv = csv_document(
        &["time_s", "p_uu", "p_ud", "p_du", "p_dd", "mean_fock", "spin_purity"],
        &rows,
    );
    manifest.write_output(out_dir, "time_series.csv", &csv)?;

    let phases: Vec<f64> = (0..file.simulate.parity_phase_points.max(4))
        .map(|k| TAU * k as f64 / file.simulate.parity_phase_points.max(4) as f64)
        .collect();
    let scan = analysis::parity_scan(&result.final_state, &phases)?;
    let (bell_phase, fidelity) = analysis::optimal_bell_phase(&result.final_state);
    let summary = FinalStateSummary {
        fidelity,
        bell_phase_rad: bell_phase,
        parity_amplitude: scan.fitted_amplitude,
        parity_phase_offset_rad: scan.fitted_phase_offset,
        populations: analysis::populations(&result.final_state),
        spin_purity: result.final_state.spin_purity(gate.fock_dim),
        mean_fock: result.final_state.mean_fock(gate.fock_dim),
        trace: result.final_state.trace().re,
        steps: result.stats.steps,
        max_top_fock_occupancy: result.stats.max_top_occupancy,
    };
    manifest.write_output(out_dir, "final_state.json", &serde_json::to_string_pretty(&summary)?)?;
    Ok(manifest)
}

/// Regenerate the data behind one named figure.
pub fn cmd_figure(
    name: &str,
    config_path: &Path,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    match name {
        "fig2a" => figure_detuning_scan(config_path, out_dir),
        "fig2b" => figure_parity_scan(config_path, out_dir, overrides),
        "fig3a" => figure_ramsey_fringe(config_path, out_dir, overrides),
        "fig3b" => figure_contrast_error(config_path, out_dir, overrides),
        "fig5a" => figure_time_scan(config_path, out_dir),
        "fig5b" => figure_carrier_scan(config_path, out_dir),
        "table2" => figure_shift_table(config_path, out_dir),
        other => bail!(
            "unknown figure `{other}`; supported figures: {}",
            FIGURE_NAMES.join(", ")
        ),
    }
}

fn figure_detuning_scan(config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::Fig2aFile>(config_path)?;
    let gate = file.gate.to_config()?;
    let scan = &file.fig2a;
    if scan.points < 2 {
        bail!("fig2a needs at least 2 scan points");
    }
    let mut manifest = RunManifest::new("figure fig2a", &[&bytes], 0);

    let detunings_hz: Vec<f64> = (0..scan.points)
        .map(|k| {
            scan.detuning_start_hz
                + (scan.detuning_stop_hz - scan.detuning_start_hz) * k as f64
                    / (scan.points - 1) as f64
        })
        .collect();

    let populations: Vec<[f64; 4]> = run_parallel_points(&detunings_hz, |&detuning_hz| {
        let noise_shift =
            ShotNoise { delta_prime: 0.0, detuning_offset: TAU * detuning_hz - gate.delta };
        let result = evolve_gate(&gate, &noise_shift, &EvolveOptions::sparse())?;
        Ok(result.final_state.spin_populations())
    })?;

    let rows: Vec<Vec<String>> = detunings_hz
        .iter()
        .zip(&populations)
        .map(|(d, p)| vec![g(*d), g(p[0]), g(p[1] + p[2]), g(p[3])])
        .collect();
    let csv = csv_document(&["detuning_hz", "p2_up", "p1_up", "p0_up"], &rows);
    manifest.write_output(out_dir, "fig2a.csv", &csv)?;

    #[derive(Serialize)]
    struct Summary {
        gate_detuning_hz: f64,
        gate_time_s: f64,
        points: usize,
    }
    let summary = Summary {
        gate_detuning_hz: gate.delta / TAU,
        gate_time_s: gate.gate_time()?,
        points: detunings_hz.len(),
    };
    manifest.write_output(out_dir, "fig2a_summary.json", &serde_json::to_string_pretty(&summary)?)?;
    Ok(manifest)
}

fn figure_parity_scan(
    config_path: &Path,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::Fig2bFile>(config_path)?;
    let gate = file.gate.to_config()?;
    let seed = overrides.seed.unwrap_or(file.fig2b.seed);
    let shots = overrides.shots.unwrap_or(file.fig2b.shots_per_point);
    let mut manifest = RunManifest::new("figure fig2b", &[&bytes], seed);

    let result = evolve_gate(&gate, &ShotNoise::default(), &EvolveOptions::sparse())?;
    let n = file.fig2b.phase_points.max(4);
    let phases: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let scan = if shots == 0 {
        analysis::parity_scan(&result.final_state, &phases)?
    } else {
        analysis::parity_scan_sampled(&result.final_state, &phases, shots, seed, None)?
    };

    let rows: Vec<Vec<String>> = scan
        .phases
        .iter()
        .zip(&scan.parities)
        .map(|(phi, parity)| vec![g(*phi), g(*parity)])
        .collect();
    manifest.write_output(out_dir, "fig2b.csv", &csv_document(&["phase_rad", "parity"], &rows))?;

    #[derive(Serialize)]
    struct Summary {
        parity_amplitude: f64,
        phase_offset_rad: f64,
        constant_offset: f64,
        shots_per_point: u32,
        even_population: f64,
        composed_fidelity: f64,
    }
    let populations = analysis::populations(&result.final_state);
    let report = analysis::bell_fidelity(&populations, scan.fitted_amplitude, 0.0);
    let summary = Summary {
        parity_amplitude: scan.fitted_amplitude,
        phase_offset_rad: scan.fitted_phase_offset,
        constant_offset: scan.fitted_offset,
        shots_per_point: shots,
        even_population: report.population_term,
        composed_fidelity: report.fidelity,
    };
    manifest.write_output(out_dir, "fig2b_summary.json", &serde_json::to_string_pretty(&summary)?)?;
    Ok(manifest)
}

fn figure_ramsey_fringe(
    config_path: &Path,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::Fig3aFile>(config_path)?;
    let mut ramsey: RamseyConfig = file.fig3a.to_config()?;
    if let Some(seed) = overrides.seed {
        ramsey.seed = seed;
    }
    if let Some(shots) = overrides.shots {
        ramsey.shots = shots;
    }
    let mut manifest = RunManifest::new("figure fig3a", &[&bytes], ramsey.seed);

    let dd_on = noise::ramsey_contrast(&ramsey)?;
    let no_dd = RamseyConfig { dd_enabled: false, omega_c: 0.0, ..ramsey.clone() };
    let dd_off = noise::ramsey_contrast(&no_dd)?;

    let rows: Vec<Vec<String>> = dd_on
        .fringe
        .iter()
        .zip(&dd_off.fringe)
        .map(|((phi, p_dd), (_, p_nodd))| vec![g(*phi), g(*p_dd), g(*p_nodd)])
        .collect();
    let csv = csv_document(&["phase_rad", "p_up_dd", "p_up_no_dd"], &rows);
    manifest.write_output(out_dir, "fig3a.csv", &csv)?;

    #[derive(Serialize)]
    struct Summary {
        contrast_dd: f64,
        contrast_dd_std_error: f64,
        contrast_no_dd: f64,
        contrast_no_dd_std_error: f64,
        contrast_no_dd_analytic: f64,
        exposure_time_s: f64,
        delta_prime_rms_hz: f64,
        shots: u32,
    }
    let summary = Summary {
        contrast_dd: dd_on.contrast,
        contrast_dd_std_error: dd_on.std_error,
        contrast_no_dd: dd_off.contrast,
        contrast_no_dd_std_error: dd_off.std_error,
        contrast_no_dd_analytic: noise::gaussian_contrast(
            ramsey.delta_prime_rms,
            ramsey.exposure_time,
        ),
        exposure_time_s: ramsey.exposure_time,
        delta_prime_rms_hz: ramsey.delta_prime_rms / TAU,
        shots: ramsey.shots,
    };
    manifest.write_output(out_dir, "fig3a_summary.json", &serde_json::to_string_pretty(&summary)?)?;
    Ok(manifest)
}

fn figure_contrast_error(
    config_path: &Path,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::Fig3bFile>(config_path)?;
    let gate = file.gate.to_config()?;
    let seed = overrides.seed.unwrap_or(file.fig3b.seed);
    let shots = overrides.shots.unwrap_or(file.fig3b.shots);
    let mut manifest = RunManifest::new("figure fig3b", &[&bytes], seed);

    let sigma_grid: Vec<f64> = file.fig3b.sigma_hz.iter().map(|s| TAU * s).collect();
    let curve = noise::contrast_to_error_curve(&gate, &sigma_grid, shots, seed)?;

    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| {
            vec![
                g(p.sigma / TAU),
                g(p.contrast_analytic),
                g(p.mean_error),
                g(p.std_error),
                p.shots.to_string(),
            ]
        })
        .collect();
    let csv = csv_document(
        &["sigma_hz", "contrast_analytic", "ms_gate_error", "std_error", "shots"],
        &rows,
    );
    manifest.write_output(out_dir, "fig3b.csv", &csv)?;

    #[derive(Serialize)]
    struct Summary {
        gate_time_s: f64,
        shots: u32,
        seed: u64,
    }
    let summary = Summary { gate_time_s: gate.gate_time()?, shots, seed };
    manifest.write_output(out_dir, "fig3b_summary.json", &serde_json::to_string_pretty(&summary)?)?;
    Ok(manifest)
}

fn figure_time_scan(config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::Fig5aFile>(config_path)?;
    let mut ddms = file.gate.to_config()?;
    ddms.scheme = Scheme::Ddms;
    let mut ssb = ddms.clone();
    ssb.scheme = Scheme::Ssb;
    let mut manifest = RunManifest::new("figure fig5a", &[&bytes], 0);

    let options = EvolveOptions {
        sample_stride: file.fig5a.sample_stride.max(1),
        ..EvolveOptions::default()
    };
    let ddms_run = evolve_gate(&ddms, &ShotNoise::default(), &options)?;
    let ssb_run = evolve_gate(&ssb, &ShotNoise::default(), &options)?;
    if ddms_run.times.len() != ssb_run.times.len() {
        return Err(anyhow!("time grids of the two schemes diverged"));
    }

    let rows: Vec<Vec<String>> = ddms_run
        .times
        .iter()
        .zip(ddms_run.observables.iter().zip(&ssb_run.observables))
        .map(|(t, (d, s))| {
            let dp = d.spin_populations;
            let sp = s.spin_populations;
            vec![
                g(*t),
                g(dp[0]),
                g(dp[1] + dp[2]),
                g(dp[3]),
                g(sp[0]),
                g(sp[1] + sp[2]),
                g(sp[3]),
            ]
        })
        .collect();
    let csv = csv_document(
        &["time_s", "ddms_p2", "ddms_p1", "ddms_p0", "ssb_p2", "ssb_p1", "ssb_p0"],
        &rows,
    );
    manifest.write_output(out_dir, "fig5a.csv", &csv)?;

    #[derive(Serialize)]
    struct Summary {
        ddms_final_fidelity: f64,
        ssb_final_fidelity: f64,
        gate_time_s: f64,
    }
    let summary = Summary {
        ddms_final_fidelity: analysis::direct_fidelity(&ddms_run.final_state, BellPhase::Optimize),
        ssb_final_fidelity: analysis::direct_fidelity(&ssb_run.final_state, BellPhase::Optimize),
        gate_time_s: ddms.gate_time()?,
    };
    manifest.write_output(out_dir, "fig5a_summary.json", &serde_json::to_string_pretty(&summary)?)?;
    Ok(manifest)
}

fn figure_carrier_scan(config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::Fig5bFile>(config_path)?;
    let gate = file.gate.to_config()?;
    let section = &file.fig5b;
    if section.points < 2 {
        bail!("fig5b needs at least 2 carrier points");
    }
    let mut manifest = RunManifest::new("figure fig5b", &[&bytes], 0);

    let grid: Vec<f64> = (0..section.points)
        .map(|k| {
            TAU * (section.carrier_start_hz
                + (section.carrier_stop_hz - section.carrier_start_hz) * k as f64
                    / (section.points - 1) as f64)
        })
        .collect();
    let comparison = noise::error_vs_carrier(&gate, &grid, TAU * section.delta_prime_hz)?;

    let rows: Vec<Vec<String>> = comparison
        .ddms
        .points
        .iter()
        .zip(&comparison.ssb.points)
        .map(|(d, s)| vec![g(d.axis_value / TAU), g(d.mean_error), g(s.mean_error)])
        .collect();
    let csv = csv_document(&["carrier_rabi_hz", "ddms_error", "ssb_error"], &rows);
    manifest.write_output(out_dir, "fig5b.csv", &csv)?;

    #[derive(Serialize)]
    struct Summary {
        ms_baseline_error: f64,
        refocus_only_error: f64,
        delta_prime_hz: f64,
        sideband_rabi_hz: f64,
    }
    let summary = Summary {
        ms_baseline_error: comparison.ms_baseline_error,
        refocus_only_error: comparison.refocus_only_error,
        delta_prime_hz: section.delta_prime_hz,
        sideband_rabi_hz: gate.omega / TAU,
    };
    manifest.write_output(out_dir, "fig5b_summary.json", &serde_json::to_string_pretty(&summary)?)?;
    Ok(manifest)
}

fn figure_shift_table(config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::Table2File>(config_path)?;
    let table_path = config_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&file.table);
    let table_bytes = std::fs::read(&table_path)
        .with_context(|| format!("cannot read transition table {}", table_path.display()))?;
    let mut manifest =
        RunManifest::new("figure table2", &[&bytes, &table_bytes], 0);
    write_budget_outputs(
        &mut manifest,
        out_dir,
        "table2.csv",
        "table2_summary.json",
        &table_bytes,
        &file.drive.to_drive(),
    )?;
    Ok(manifest)
}

fn write_budget_outputs(
    manifest: &mut RunManifest,
    out_dir: &Path,
    csv_name: &str,
    json_name: &str,
    table_bytes: &[u8],
    drive: &zeeman::DriveFrequencies,
) -> Result<()> {
    let text = std::str::from_utf8(table_bytes).context("transition table is not utf-8")?;
    let entries = zeeman::parse_transition_table(text)?;
    let budget = zeeman::budget(&entries, drive)?;

    let rows: Vec<Vec<String>> = budget
        .per_transition
        .iter()
        .map(|t| vec![t.label.clone(), g(t.rsb_shift / TAU), g(t.bsb_shift / TAU)])
        .collect();
    let csv = csv_document(&["label", "rsb_shift_hz", "bsb_shift_hz"], &rows);
    manifest.write_output(out_dir, csv_name, &csv)?;

    #[derive(Serialize)]
    struct Totals {
        rsb_total_hz: f64,
        bsb_total_hz: f64,
        differential_hz: f64,
        rsb_frequency_hz: f64,
        bsb_frequency_hz: f64,
    }
    let (omega_rsb, omega_bsb) = zeeman::sideband_frequencies(drive);
    let totals = Totals {
        rsb_total_hz: budget.rsb_total / TAU,
        bsb_total_hz: budget.bsb_total / TAU,
        differential_hz: budget.differential / TAU,
        rsb_frequency_hz: omega_rsb / TAU,
        bsb_frequency_hz: omega_bsb / TAU,
    };
    manifest.write_output(out_dir, json_name, &serde_json::to_string_pretty(&totals)?)?;
    Ok(())
}

/// Per-transition shift report from a transition table and drive config.
pub fn cmd_zeeman(table_path: &Path, config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::ZeemanFile>(config_path)?;
    let table_bytes = std::fs::read(table_path)
        .with_context(|| format!("cannot read transition table {}", table_path.display()))?;
    let mut manifest = RunManifest::new("zeeman", &[&bytes, &table_bytes], 0);
    write_budget_outputs(
        &mut manifest,
        out_dir,
        "zeeman_shifts.csv",
        "zeeman_totals.json",
        &table_bytes,
        &file.drive.to_drive(),
    )?;
    Ok(manifest)
}

/// Parameter sweep over one named axis.
pub fn cmd_sweep(config_path: &Path, out_dir: &Path, overrides: &Overrides) -> Result<RunManifest> {
    let (file, bytes) = cfgfile::load::<cfgfile::SweepFile>(config_path)?;
    let gate = file.gate.to_config()?;
    let section = &file.sweep;
    let seed = overrides.seed.unwrap_or(section.seed);
    let shots = overrides.shots.unwrap_or(section.shots);
    let mut manifest = RunManifest::new("sweep", &[&bytes], seed);

    #[derive(Serialize)]
    struct Summary<'a> {
        axis: &'a str,
        shots: u32,
        seed: u64,
        points: usize,
        ms_baseline_error: Option<f64>,
        refocus_only_error: Option<f64>,
        gate: &'a iongate::model::GateSection,
    }

    let (csv, summary) = match section.axis.as_str() {
        "carrier_rabi_hz" => {
            let grid: Vec<f64> = section.values.iter().map(|v| TAU * v).collect();
            let cmp = noise::error_vs_carrier(&gate, &grid, TAU * section.delta_prime_hz)?;
            let rows: Vec<Vec<String>> = cmp
                .ddms
                .points
                .iter()
                .zip(&cmp.ssb.points)
                .map(|(d, s)| {
                    vec![g(d.axis_value / TAU), g(d.mean_error), g(s.mean_error), "1".into()]
                })
                .collect();
            let csv = csv_document(&["carrier_rabi_hz", "ddms_error", "ssb_error", "shots"], &rows);
            let summary = Summary {
                axis: "carrier_rabi_hz",
                shots: 1,
                seed,
                points: cmp.ddms.points.len(),
                ms_baseline_error: Some(cmp.ms_baseline_error),
                refocus_only_error: Some(cmp.refocus_only_error),
                gate: &file.gate,
            };
            (csv, serde_json::to_string_pretty(&summary)?)
        }
        "heating_rate_quanta_per_s" => {
            let sweep = noise::heating_error(&gate, &section.values)?;
            let rows: Vec<Vec<String>> = sweep
                .points
                .iter()
                .map(|p| {
                    vec![g(p.axis_value), g(p.mean_error), g(p.std_error), p.shots.to_string()]
                })
                .collect();
            let csv = csv_document(
                &["heating_rate_quanta_per_s", "mean_error", "std_error", "shots"],
                &rows,
            );
            let summary = Summary {
                axis: "heating_rate_quanta_per_s",
                shots: 1,
                seed,
                points: sweep.points.len(),
                ms_baseline_error: None,
                refocus_only_error: None,
                gate: &file.gate,
            };
            (csv, serde_json::to_string_pretty(&summary)?)
        }
        axis @ ("delta_prime_rms_hz" | "mode_freq_rms_hz") => {
            let grid: Vec<f64> = section.values.iter().map(|v| TAU * v).collect();
            let which = if axis == "delta_prime_rms_hz" {
                JitterAxis::DeltaPrimeRms
            } else {
                JitterAxis::ModeFreqRms
            };
            let sweep = noise::jitter_sweep(&gate, which, &grid, shots, seed)?;
            let rows: Vec<Vec<String>> = sweep
                .points
                .iter()
                .map(|p| {
                    vec![
                        g(p.axis_value / TAU),
                        g(p.mean_error),
                        g(p.std_error),
                        p.shots.to_string(),
                    ]
                })
                .collect();
            let csv = csv_document(&[axis, "mean_error", "std_error", "shots"], &rows);
            let summary = Summary {
                axis,
                shots,
                seed,
                points: sweep.points.len(),
                ms_baseline_error: None,
                refocus_only_error: None,
                gate: &file.gate,
            };
            (csv, serde_json::to_string_pretty(&summary)?)
        }
        other => bail!(
            "unknown sweep axis `{other}`; supported: carrier_rabi_hz, \
             heating_rate_quanta_per_s, delta_prime_rms_hz, mode_freq_rms_hz"
        ),
    };

    manifest.write_output(out_dir, "sweep.csv", &csv)?;
    manifest.write_output(out_dir, "sweep_summary.json", &summary)?;
    Ok(manifest)
}

/// Parallel map over figure scan points when the pool is available.
fn run_parallel_points<T, F>(values: &[f64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&f64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    values.par_iter().map(f).collect()
}
