//! Off-resonant a.c. Zeeman shift budgets for the qubit transition.
//!
//! Each spectator transition driven at Rabi frequency Ω_i by a field at
//! ω_μw shifts the qubit by
//!
//! ```text
//! Δ_i = sign · Ω_i² ω_i / (2 (ω_i² − ω_μw²))
//! ```
//!
//! which keeps the counter-rotating (Bloch-Siegert) contribution — the
//! budgets here involve large cancellations, so the rotating-wave form
//! alone is not accurate enough. Bare (unshifted) transition frequencies
//! are used; no second-order self-consistency is attempted.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZeemanError {
    #[error("no transitions in table")]
    EmptyTable,
    #[error("transition `{label}` is resonant with the {sideband:?} field (|ω_i - ω_μw| below guard)")]
    Resonance { label: String, sideband: Sideband },
    #[error("transition table line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("drive frequencies fail sanity check: {0}")]
    BadDrive(String),
}

/// One spectator transition. Frequencies are angular (rad/s);
/// `sign_on_qubit` states whether exciting this transition raises (+1) or
/// lowers (−1) the qubit frequency (sign conventions fold matrix-element
/// data the table supplies, they are not computed here).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub label: String,
    pub omega: f64,
    pub rabi_rsb: f64,
    pub rabi_bsb: f64,
    pub sign_on_qubit: i8,
}

/// Microwave drive bookkeeping: unperturbed qubit frequency ω_0, bulk
/// differential shift Δ, motional mode frequency ω_r and gate detuning δ
/// (all rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveFrequencies {
    pub omega_0: f64,
    pub bulk_shift: f64,
    pub omega_mode: f64,
    pub detuning: f64,
}

impl DriveFrequencies {
    pub fn validate(&self) -> Result<(), ZeemanError> {
        for (name, v) in [
            ("omega_0", self.omega_0),
            ("bulk_shift", self.bulk_shift),
            ("omega_mode", self.omega_mode),
            ("detuning", self.detuning),
        ] {
            if !v.is_finite() {
                return Err(ZeemanError::BadDrive(format!("{name} is not finite")));
            }
        }
        if self.omega_0 <= 0.0 || self.omega_mode <= 0.0 {
            return Err(ZeemanError::BadDrive("frequencies must be positive".into()));
        }
        if self.omega_0 / self.omega_mode <= 100.0 {
            return Err(ZeemanError::BadDrive(format!(
                "expected ω_0 ≫ ω_r, got ratio {:.1}",
                self.omega_0 / self.omega_mode
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sideband {
    Red,
    Blue,
}

/// The two microwave frequencies, `ω_μw = (ω_0 + Δ) ∓ (ω_r + δ)` for the
/// red (−) and blue (+) sidebands.
pub fn sideband_frequencies(drive: &DriveFrequencies) -> (f64, f64) {
    let carrier = drive.omega_0 + drive.bulk_shift;
    let offset = drive.omega_mode + drive.detuning;
    (carrier - offset, carrier + offset)
}

/// Resonance guard: the shift diverges at ω_i = ω_μw, so reject effective
/// detunings below 1 Hz.
pub const RESONANCE_GUARD: f64 = TAU * 1.0;

/// Shift of the qubit frequency from one sideband field driving one
/// spectator transition.
pub fn single_shift(
    entry: &TransitionEntry,
    omega_mw: f64,
    which: Sideband,
) -> Result<f64, ZeemanError> {
    let rabi = match which {
        Sideband::Red => entry.rabi_rsb,
        Sideband::Blue => entry.rabi_bsb,
    };
    let denom = entry.omega * entry.omega - omega_mw * omega_mw;
    if denom.abs() < RESONANCE_GUARD * 2.0 * entry.omega {
        return Err(ZeemanError::Resonance { label: entry.label.clone(), sideband: which });
    }
    Ok(entry.sign_on_qubit as f64 * rabi * rabi * entry.omega / (2.0 * denom))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionShift {
    pub label: String,
    pub rsb_shift: f64,
    pub bsb_shift: f64,
}

/// Per-transition shifts and their column totals (rad/s).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftBudget {
    pub per_transition: Vec<TransitionShift>,
    pub rsb_total: f64,
    pub bsb_total: f64,
    /// Total qubit-frequency shift from both fields, `rsb_total + bsb_total`.
    pub differential: f64,
}

/// Evaluate both sidebands for every entry and total the columns.
pub fn budget(entries: &[TransitionEntry], drive: &DriveFrequencies) -> Result<ShiftBudget, ZeemanError> {
    if entries.is_empty() {
        return Err(ZeemanError::EmptyTable);
    }
    drive.validate()?;
    let (omega_rsb, omega_bsb) = sideband_frequencies(drive);
    let mut per_transition = Vec::with_capacity(entries.len());
    let mut rsb_total = 0.0;
    let mut bsb_total = 0.0;
    for entry in entries {
        let rsb = single_shift(entry, omega_rsb, Sideband::Red)?;
        let bsb = single_shift(entry, omega_bsb, Sideband::Blue)?;
        rsb_total += rsb;
        bsb_total += bsb;
        per_transition.push(TransitionShift {
            label: entry.label.clone(),
            rsb_shift: rsb,
            bsb_shift: bsb,
        });
    }
    Ok(ShiftBudget { per_transition, rsb_total, bsb_total, differential: rsb_total + bsb_total })
}

/// Parse a transition table.
///
/// Plain-text, comma-separated, one record per transition:
///
/// ```text
/// label,frequency_hz,rabi_rsb_hz,rabi_bsb_hz,sign
/// 4+0..3+0,3.2530886e9,3.55e6,3.55e6,+1
/// ```
///
/// Lines starting with `#` are comments. Frequencies and Rabi rates are in
/// Hz and converted to rad/s.
pub fn parse_transition_table(text: &str) -> Result<Vec<TransitionEntry>, ZeemanError> {
    let mut entries = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            let expected = "label,frequency_hz,rabi_rsb_hz,rabi_bsb_hz,sign";
            let normalized: String = trimmed.split(',').map(str::trim).collect::<Vec<_>>().join(",");
            if normalized != expected {
                return Err(ZeemanError::Parse {
                    line,
                    message: format!("expected header `{expected}`, got `{trimmed}`"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(ZeemanError::Parse {
                line,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64, ZeemanError> {
            s.parse::<f64>().map_err(|e| ZeemanError::Parse {
                line,
                message: format!("bad {what} `{s}`: {e}"),
            })
        };
        let freq = parse_f64(fields[1], "frequency")?;
        let rabi_rsb = parse_f64(fields[2], "rsb rabi frequency")?;
        let rabi_bsb = parse_f64(fields[3], "bsb rabi frequency")?;
        if freq <= 0.0 {
            return Err(ZeemanError::Parse { line, message: "frequency must be positive".into() });
        }
        if rabi_rsb < 0.0 || rabi_bsb < 0.0 {
            return Err(ZeemanError::Parse {
                line,
                message: "rabi frequencies must be non-negative".into(),
            });
        }
        let sign = match fields[4] {
            "+1" | "1" | "+" => 1,
            "-1" | "-" => -1,
            other => {
                return Err(ZeemanError::Parse {
                    line,
                    message: format!("bad sign `{other}` (expected +1 or -1)"),
                })
            }
        };
        entries.push(TransitionEntry {
            label: fields[0].to_string(),
            omega: TAU * freq,
            rabi_rsb: TAU * rabi_rsb,
            rabi_bsb: TAU * rabi_bsb,
            sign_on_qubit: sign,
        });
    }
    if entries.is_empty() {
        return Err(ZeemanError::EmptyTable);
    }
    Ok(entries)
}

/// `[drive]` section of a Zeeman config file (frequencies in Hz).
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub qubit_freq_hz: f64,
    #[serde(default)]
    pub bulk_shift_hz: f64,
    pub mode_freq_hz: f64,
    #[serde(default)]
    pub detuning_hz: f64,
}

impl DriveSection {
    pub fn to_drive(&self) -> DriveFrequencies {
        DriveFrequencies {
            omega_0: TAU * self.qubit_freq_hz,
            bulk_shift: TAU * self.bulk_shift_hz,
            omega_mode: TAU * self.mode_freq_hz,
            detuning: TAU * self.detuning_hz,
        }
    }
}
