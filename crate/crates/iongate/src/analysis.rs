//! Observables and figures of merit: spin populations, parity scans, the
//! two-observable Bell-state fidelity composition, and the per-qubit
//! misassignment (SPAM) channel.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{equatorial_rotation_matrix, kron, State};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("parity fit needs at least 4 phase points, got {0}")]
    TooFewPhases(usize),
    #[error("parity fit failed: {0}")]
    FitFailed(&'static str),
    #[error("spam error per qubit must lie in [0, 0.1], got {0}")]
    SpamOutOfRange(f64),
    #[error("spam confusion matrix is singular at ε = 0.5")]
    SingularSpam,
}

/// Diagonal two-qubit populations, ordered `(p_uu, p_ud, p_du, p_dd)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub p_uu: f64,
    pub p_ud: f64,
    pub p_du: f64,
    pub p_dd: f64,
}

impl PopulationSummary {
    pub fn from_array(p: [f64; 4]) -> Self {
        Self { p_uu: p[0], p_ud: p[1], p_du: p[2], p_dd: p[3] }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p_uu, self.p_ud, self.p_du, self.p_dd]
    }

    pub fn sum(&self) -> f64 {
        self.p_uu + self.p_ud + self.p_du + self.p_dd
    }

    /// Combined population of the even-parity pair, `P_↑↑ + P_↓↓`.
    pub fn even_population(&self) -> f64 {
        self.p_uu + self.p_dd
    }
}

/// Reduce to the 4x4 spin density matrix, tracing out motion if present.
fn spin_density(state: &State) -> Array2<C64> {
    match state.dim() {
        4 => state.rho().clone(),
        dim => {
            assert!(dim % 4 == 0, "composite dimension {dim} is not 4N");
            state.partial_trace_motion(dim / 4)
        }
    }
}

/// Diagonal spin populations of a (possibly composite) state.
pub fn populations(state: &State) -> PopulationSummary {
    PopulationSummary::from_array(state.spin_populations())
}

/// Parity `P_↑↑ + P_↓↓ - P_↑↓ - P_↓↑` of a 4x4 spin density matrix.
fn parity_of(spin: &Array2<C64>) -> f64 {
    spin[[0, 0]].re - spin[[1, 1]].re - spin[[2, 2]].re + spin[[3, 3]].re
}

/// Parity after applying a π/2 analysis pulse about `cos φ·x + sin φ·y` to
/// both spins.
pub fn parity_after_analysis_pulse(state: &State, phase: f64) -> f64 {
    let spin = spin_density(state);
    let r = equatorial_rotation_matrix(phase, std::f64::consts::PI / 2.0);
    let u = kron(&r, &r);
    let u_dag = u.t().mapv(|z| z.conj());
    let rotated = u.dot(&spin).dot(&u_dag);
    parity_of(&rotated)
}

/// Result of a parity scan: the raw curve and a sinusoid fit
/// `A sin(2φ + φ₀) + c`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParityScan {
    pub phases: Vec<f64>,
    pub parities: Vec<f64>,
    pub fitted_amplitude: f64,
    pub fitted_phase_offset: f64,
    pub fitted_offset: f64,
}

fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Result<[f64; 3], AnalysisError> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-12 {
        return Err(AnalysisError::FitFailed("degenerate phase grid"));
    }
    let mut out = [0.0; 3];
    for (col, entry) in out.iter_mut().enumerate() {
        let mut mm = m;
        for row in 0..3 {
            mm[row][col] = v[row];
        }
        let d = mm[0][0] * (mm[1][1] * mm[2][2] - mm[1][2] * mm[2][1])
            - mm[0][1] * (mm[1][0] * mm[2][2] - mm[1][2] * mm[2][0])
            + mm[0][2] * (mm[1][0] * mm[2][1] - mm[1][1] * mm[2][0]);
        *entry = d / det;
    }
    Ok(out)
}

/// Least-squares fit of `y = a sin 2φ + b cos 2φ + c`, returned as
/// `(A, φ₀, c)` with `A sin(2φ + φ₀) = a sin 2φ + b cos 2φ`.
fn fit_parity_curve(phases: &[f64], parities: &[f64]) -> Result<(f64, f64, f64), AnalysisError> {
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    for (&phi, &y) in phases.iter().zip(parities) {
        let basis = [(2.0 * phi).sin(), (2.0 * phi).cos(), 1.0];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
            v[r] += basis[r] * y;
        }
    }
    let [a, b, c] = solve3(m, v)?;
    Ok((a.hypot(b), b.atan2(a), c))
}

/// Scan the analysis-pulse phase and fit the parity oscillation
/// `A sin(2φ + φ₀) + c` by unweighted least squares.
pub fn parity_scan(state: &State, phases: &[f64]) -> Result<ParityScan, AnalysisError> {
    if phases.len() < 4 {
        return Err(AnalysisError::TooFewPhases(phases.len()));
    }
    let parities: Vec<f64> =
        phases.iter().map(|&phi| parity_after_analysis_pulse(state, phi)).collect();
    let (amplitude, phase_offset, offset) = fit_parity_curve(phases, &parities)?;
    Ok(ParityScan {
        phases: phases.to_vec(),
        parities,
        fitted_amplitude: amplitude,
        fitted_phase_offset: phase_offset,
        fitted_offset: offset,
    })
}

/// Parity scan on synthetic finite-shot data: per phase point, draws a
/// binomial count of even-parity outcomes and fits by maximum likelihood,
/// seeded and reproducible.
///
/// With `fixed_phase_offset`, the fit floats only the amplitude and the
/// constant, mirroring a calibrated-offset analysis.
pub fn parity_scan_sampled(
    state: &State,
    phases: &[f64],
    shots_per_point: u32,
    seed: u64,
    fixed_phase_offset: Option<f64>,
) -> Result<ParityScan, AnalysisError> {
    if phases.len() < 4 {
        return Err(AnalysisError::TooFewPhases(phases.len()));
    }
    if shots_per_point == 0 {
        return Err(AnalysisError::FitFailed("zero shots per point"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sampled = Vec::with_capacity(phases.len());
    let mut counts = Vec::with_capacity(phases.len());
    for &phi in phases {
        let p_even = (1.0 + parity_after_analysis_pulse(state, phi)) / 2.0;
        let p_even = p_even.clamp(0.0, 1.0);
        let mut k = 0u32;
        for _ in 0..shots_per_point {
            if rng.random::<f64>() < p_even {
                k += 1;
            }
        }
        counts.push(k);
        sampled.push(2.0 * k as f64 / shots_per_point as f64 - 1.0);
    }

    // maximum-likelihood refinement of the least-squares start, assuming
    // binomial statistics per point
    let (a0, phi0, c0) = fit_parity_curve(phases, &sampled)?;
    let nll = |params: &[f64; 3]| -> f64 {
        let (a, phi_off, c) = (params[0], params[1], params[2]);
        let mut acc = 0.0;
        for (&phi, &k) in phases.iter().zip(&counts) {
            let parity = a * (2.0 * phi + phi_off).sin() + c;
            let p = ((1.0 + parity) / 2.0).clamp(1e-9, 1.0 - 1e-9);
            let k = k as f64;
            let n = shots_per_point as f64;
            acc -= k * p.ln() + (n - k) * (1.0 - p).ln();
        }
        acc
    };
    let start = [a0, fixed_phase_offset.unwrap_or(phi0), c0];
    let best = nelder_mead(nll, start, fixed_phase_offset.is_some());
    Ok(ParityScan {
        phases: phases.to_vec(),
        parities: sampled,
        fitted_amplitude: best[0].abs(),
        fitted_phase_offset: best[1],
        fitted_offset: best[2],
    })
}

/// Small Nelder-Mead minimizer over (A, φ₀, c); with `freeze_phase` the
/// simplex never moves the phase coordinate.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(f: F, start: [f64; 3], freeze_phase: bool) -> [f64; 3] {
    let steps = if freeze_phase { [0.05, 0.0, 0.05] } else { [0.05, 0.05, 0.05] };
    let mut simplex: Vec<[f64; 3]> = vec![start];
    for (i, &s) in steps.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let mut v = start;
        v[i] += s;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..400 {
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let best = order[0];
        let worst = *order.last().unwrap();
        if (values[worst] - values[best]).abs() < 1e-12 {
            break;
        }
        let mut centroid = [0.0; 3];
        for &i in &order[..order.len() - 1] {
            for d in 0..3 {
                centroid[d] += simplex[i][d] / (order.len() - 1) as f64;
            }
        }
        let dir =
            std::array::from_fn::<f64, 3, _>(|d| centroid[d] - simplex[worst][d]);
        let try_point = |alpha: f64| {
            std::array::from_fn::<f64, 3, _>(|d| centroid[d] + alpha * dir[d])
        };
        let reflected = try_point(1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = try_point(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = try_point(-0.5);
            let fc = f(&contracted);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let anchor = simplex[best];
                for (i, vertex) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for d in 0..3 {
                        vertex[d] = anchor[d] + 0.5 * (vertex[d] - anchor[d]);
                    }
                    values[i] = f(vertex);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..simplex.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    simplex[best]
}

/// Bell-state fidelity composed from the two tomographic observables.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FidelityReport {
    /// `P_↑↑ + P_↓↓`.
    pub population_term: f64,
    pub parity_amplitude: f64,
    /// `population_term/2 + parity_amplitude/2`.
    pub fidelity: f64,
    /// Per-qubit misassignment error already removed from the inputs
    /// (0 when uncorrected).
    pub spam_per_qubit: f64,
}

/// `F = (P_↑↑ + P_↓↓)/2 + A/2`.
pub fn bell_fidelity(
    populations: &PopulationSummary,
    parity_amplitude: f64,
    spam_per_qubit: f64,
) -> FidelityReport {
    let population_term = populations.even_population();
    FidelityReport {
        population_term,
        parity_amplitude,
        fidelity: population_term / 2.0 + parity_amplitude / 2.0,
        spam_per_qubit,
    }
}

/// Target-state phase convention for [`direct_fidelity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BellPhase {
    Fixed(f64),
    Optimize,
}

/// Overlap with the Bell state `|Ψ(θ)⟩ = (|↑↑⟩ + e^{iθ}|↓↓⟩)/√2`, at a
/// fixed phase or maximized over it.
pub fn direct_fidelity(state: &State, phase: BellPhase) -> f64 {
    let spin = spin_density(state);
    let pop = (spin[[0, 0]].re + spin[[3, 3]].re) / 2.0;
    match phase {
        BellPhase::Fixed(theta) => {
            pop + (C64::from_polar(1.0, theta) * spin[[0, 3]]).re
        }
        BellPhase::Optimize => pop + spin[[0, 3]].norm(),
    }
}

/// Phase maximizing [`direct_fidelity`], with the maximal fidelity.
pub fn optimal_bell_phase(state: &State) -> (f64, f64) {
    let spin = spin_density(state);
    let coherence = spin[[0, 3]];
    let theta = -coherence.arg();
    let pop = (spin[[0, 0]].re + spin[[3, 3]].re) / 2.0;
    (theta, pop + coherence.norm())
}

fn spam_channel(eps: f64) -> [[f64; 4]; 4] {
    let c = [[1.0 - eps, eps], [eps, 1.0 - eps]];
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = c[i / 2][j / 2] * c[i % 2][j % 2];
        }
    }
    m
}

fn apply4(m: &[[f64; 4]; 4], p: [f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| (0..4).map(|j| m[i][j] * p[j]).sum())
}

fn check_eps(eps: f64) -> Result<(), AnalysisError> {
    if (eps - 0.5).abs() < 1e-12 {
        return Err(AnalysisError::SingularSpam);
    }
    if !(0.0..=0.1).contains(&eps) {
        return Err(AnalysisError::SpamOutOfRange(eps));
    }
    Ok(())
}

/// Forward-apply the symmetric independent per-qubit misassignment channel
/// (used to corrupt ideal populations into synthetic measured ones).
pub fn spam_corrupt(
    populations: &PopulationSummary,
    eps: f64,
) -> Result<PopulationSummary, AnalysisError> {
    check_eps(eps)?;
    Ok(PopulationSummary::from_array(apply4(&spam_channel(eps), populations.as_array())))
}

/// Invert the per-qubit misassignment channel, clamping to [0, 1] and
/// renormalizing.
pub fn spam_correct(
    populations: &PopulationSummary,
    eps: f64,
) -> Result<PopulationSummary, AnalysisError> {
    check_eps(eps)?;
    let d = 1.0 - 2.0 * eps;
    let inv = [[(1.0 - eps) / d, -eps / d], [-eps / d, (1.0 - eps) / d]];
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = inv[i / 2][j / 2] * inv[i % 2][j % 2];
        }
    }
    let mut p = apply4(&m, populations.as_array());
    for x in p.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        for x in p.iter_mut() {
            *x /= total;
        }
    }
    Ok(PopulationSummary::from_array(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{HilbertSpec, SPIN_DOWN};
    use ndarray::Array1;
    use std::f64::consts::PI;

    /// (|↑↑⟩ + e^{iθ}|↓↓⟩)/√2 ⊗ |0⟩ on a small composite space.
    fn bell_state(theta: f64, fock_dim: usize) -> State {
        let spec = HilbertSpec::new(fock_dim).unwrap();
        let mut ket = Array1::zeros(spec.dim());
        ket[spec.index_of(0, 0, 0)] = C64::new(0.5f64.sqrt(), 0.0);
        ket[spec.index_of(1, 1, 0)] = C64::from_polar(0.5f64.sqrt(), theta);
        State::pure(&ket)
    }

    fn phase_grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    #[test]
    fn populations_of_basis_and_bell_states() {
        let spec = HilbertSpec::new(4).unwrap();
        let dd = State::basis(spec, SPIN_DOWN, SPIN_DOWN, 0);
        let p = populations(&dd);
        assert_eq!(p.p_dd, 1.0);
        assert_eq!(p.p_uu + p.p_ud + p.p_du, 0.0);

        let bell = bell_state(PI / 2.0, 4);
        let p = populations(&bell);
        assert!((p.p_uu - 0.5).abs() < 1e-12);
        assert!((p.p_dd - 0.5).abs() < 1e-12);
        assert!((p.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_bell_parity_amplitude_is_unity() {
        let bell = bell_state(PI / 2.0, 2);
        let scan = parity_scan(&bell, &phase_grid(24)).unwrap();
        assert!((scan.fitted_amplitude - 1.0).abs() < 1e-6);
        assert!(scan.fitted_amplitude <= 1.0 + 1e-9);
    }

    #[test]
    fn mixed_state_parity_amplitude_is_zero() {
        let spec = HilbertSpec::new(2).unwrap();
        let dim = spec.dim();
        let mut rho = Array2::<C64>::zeros((dim, dim));
        // fully mixed spin state, motional ground state
        for s in 0..4 {
            rho[[s * 2, s * 2]] = C64::new(0.25, 0.0);
        }
        let st = State::from_density_unchecked(rho).unwrap();
        let scan = parity_scan(&st, &phase_grid(16)).unwrap();
        assert!(scan.fitted_amplitude.abs() < 1e-9);
    }

    #[test]
    fn werner_mixture_scales_amplitude_linearly() {
        let p = 0.9953;
        let bell = bell_state(PI / 2.0, 2);
        let dim = bell.dim();
        let mut rho = bell.rho().mapv(|z| z * p);
        for s in 0..4 {
            rho[[s * 2, s * 2]] += C64::new((1.0 - p) / 4.0, 0.0);
        }
        let st = State::from_density_unchecked(rho).unwrap();
        let scan = parity_scan(&st, &phase_grid(24)).unwrap();
        assert!((scan.fitted_amplitude - p).abs() < 1e-6, "A = {}", scan.fitted_amplitude);
    }

    #[test]
    fn parity_linearity_in_convex_mixtures() {
        let a = bell_state(0.7, 2);
        let b = bell_state(0.7, 2); // same offset, different weight path
        let w = 0.37;
        let rho = a.rho().mapv(|z| z * w) + b.rho().mapv(|z| z * (1.0 - w));
        let mixed = State::from_density_unchecked(rho).unwrap();
        let grid = phase_grid(24);
        let sa = parity_scan(&a, &grid).unwrap().fitted_amplitude;
        let sb = parity_scan(&b, &grid).unwrap().fitted_amplitude;
        let sm = parity_scan(&mixed, &grid).unwrap().fitted_amplitude;
        assert!((sm - (w * sa + (1.0 - w) * sb)).abs() < 1e-9);
    }

    #[test]
    fn too_few_phases_is_an_error() {
        let bell = bell_state(0.0, 2);
        assert!(matches!(
            parity_scan(&bell, &[0.0, 1.0, 2.0]),
            Err(AnalysisError::TooFewPhases(3))
        ));
    }

    #[test]
    fn fidelity_composition_values() {
        let p = PopulationSummary { p_uu: 0.4990, p_ud: 0.001, p_du: 0.001, p_dd: 0.4990 };
        let report = bell_fidelity(&p, 0.9953, 0.0034);
        assert!((report.fidelity - 0.99665).abs() < 1e-6);

        let ideal = PopulationSummary { p_uu: 0.5, p_ud: 0.0, p_du: 0.0, p_dd: 0.5 };
        assert!((bell_fidelity(&ideal, 1.0, 0.0).fidelity - 1.0).abs() < 1e-12);
        assert!((bell_fidelity(&ideal, 0.0, 0.0).fidelity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn direct_fidelity_fixed_and_optimized() {
        let st = bell_state(PI / 2.0, 2);
        assert!((direct_fidelity(&st, BellPhase::Fixed(PI / 2.0)) - 1.0).abs() < 1e-12);
        let (theta, f) = optimal_bell_phase(&st);
        assert!((f - 1.0).abs() < 1e-12);
        assert!((direct_fidelity(&st, BellPhase::Fixed(theta)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composed_and_direct_fidelity_agree_for_single_coherence_states() {
        // diagonal-plus-single-coherence spin state
        for theta in [0.0, 0.4, PI / 2.0, 2.4] {
            let bell = bell_state(theta, 2);
            let mut rho = bell.rho().mapv(|z| z * 0.93);
            for s in 0..4 {
                rho[[s * 2, s * 2]] += C64::new(0.07 / 4.0, 0.0);
            }
            let st = State::from_density_unchecked(rho).unwrap();
            let scan = parity_scan(&st, &phase_grid(24)).unwrap();
            let composed = bell_fidelity(&populations(&st), scan.fitted_amplitude, 0.0);
            let direct = direct_fidelity(&st, BellPhase::Optimize);
            assert!(
                (composed.fidelity - direct).abs() < 1e-6,
                "composed {} vs direct {}",
                composed.fidelity,
                direct
            );
        }
    }

    #[test]
    fn depolarization_strictly_reduces_fidelity() {
        let bell = bell_state(PI / 2.0, 2);
        let mut last = direct_fidelity(&bell, BellPhase::Optimize);
        for q in [0.01, 0.05, 0.2, 0.5] {
            let mut rho = bell.rho().mapv(|z| z * (1.0 - q));
            for s in 0..4 {
                rho[[s * 2, s * 2]] += C64::new(q / 4.0, 0.0);
            }
            let st = State::from_density_unchecked(rho).unwrap();
            let f = direct_fidelity(&st, BellPhase::Optimize);
            assert!(f < last);
            last = f;
        }
    }

    #[test]
    fn spam_round_trip_and_identity() {
        let p = PopulationSummary { p_uu: 0.0, p_ud: 0.0, p_du: 0.0, p_dd: 1.0 };
        let same = spam_corrupt(&p, 0.0).unwrap();
        assert_eq!(same.as_array(), p.as_array());

        let eps = 0.0034;
        let corrupted = spam_corrupt(&p, eps).unwrap();
        assert!((corrupted.p_dd - (1.0 - eps) * (1.0 - eps)).abs() < 1e-12);
        let recovered = spam_correct(&corrupted, eps).unwrap();
        assert!((recovered.p_dd - 1.0).abs() < 1e-9);

        let bell = PopulationSummary { p_uu: 0.5, p_ud: 0.0, p_du: 0.0, p_dd: 0.5 };
        let corrupted = spam_corrupt(&bell, eps).unwrap();
        assert!((corrupted.even_population() - 0.99322).abs() < 2e-5);
    }

    #[test]
    fn spam_rejects_out_of_range() {
        let p = PopulationSummary { p_uu: 1.0, p_ud: 0.0, p_du: 0.0, p_dd: 0.0 };
        assert!(matches!(spam_correct(&p, 0.2), Err(AnalysisError::SpamOutOfRange(_))));
        assert!(matches!(spam_correct(&p, 0.5), Err(AnalysisError::SingularSpam)));
    }

    #[test]
    fn sampled_parity_scan_recovers_amplitude() {
        let bell = bell_state(PI / 2.0, 2);
        let scan =
            parity_scan_sampled(&bell, &phase_grid(24), 4000, 7, None).unwrap();
        assert!((scan.fitted_amplitude - 1.0).abs() < 0.02, "A = {}", scan.fitted_amplitude);
        // fixed-offset mode pins the phase coordinate
        let fixed =
            parity_scan_sampled(&bell, &phase_grid(24), 4000, 7, Some(0.3)).unwrap();
        assert_eq!(fixed.fitted_phase_offset, 0.3);
    }

    proptest::proptest! {
        #[test]
        fn spam_round_trip_property(
            a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0,
            eps in 0.0f64..0.05,
        ) {
            let total = a + b + c + 1.0;
            let p = PopulationSummary {
                p_uu: a / total, p_ud: b / total, p_du: c / total, p_dd: 1.0 / total,
            };
            let round = spam_correct(&spam_corrupt(&p, eps).unwrap(), eps).unwrap();
            for (x, y) in round.as_array().iter().zip(p.as_array()) {
                proptest::prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
