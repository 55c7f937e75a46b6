//! Monte-Carlo checks at the experimental operating point that are too
//! heavy for unit tests: the decoupled gate must suppress the measured
//! shot-to-shot dephasing to below 0.1% error.

use std::f64::consts::TAU;

use iongate::model::GateConfig;
use iongate::noise::{self, JitterModel};

#[test]
fn decoupled_gate_suppresses_measured_dephasing() {
    let cfg = GateConfig::default(); // DDMS with refocus pulse
    let jitter =
        JitterModel { delta_prime_rms: TAU * 19.7, mode_freq_rms: 0.0, seed: 71, shots: 40 };
    let (mean, stderr) = noise::mc_gate_error(&cfg, &jitter).unwrap();
    assert!(
        mean < 1.0e-3,
        "DDMS error {:.4}% ± {:.4}% under 19.7 Hz rms dephasing",
        100.0 * mean,
        100.0 * stderr
    );
}
