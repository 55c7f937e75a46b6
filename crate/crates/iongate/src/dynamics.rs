//! Time-dependent Hamiltonian assembly and density-matrix propagation.
//!
//! Schedules compile to lists of [`HamiltonianTerm`]s (a base operator and a
//! time-dependent coefficient); the integrator advances the von Neumann
//! equation `dρ/dt = -i[H(t), ρ]`, plus Lindblad dissipators when a segment
//! carries them, and applies instantaneous boundary unitaries between
//! segments. ħ = 1 throughout: every frequency is angular.
//!
//! The default integrator is fixed-step fourth-order Runge-Kutta with
//! `h = min(t_seg/200, 1/(400 f_max))`, `f_max` being the largest
//! coefficient frequency of the segment in Hz; 400 samples per period keep
//! the global error below ~1e-8, so propagated density matrices stay
//! positive within the state invariants.
//!
//! Segments whose drive commutes with the carrier (paired sidebands with an
//! x-aligned carrier, i.e. the decoupled-gate configuration) are integrated
//! in the carrier rotating frame: an exact change of variables that removes
//! the stiff carrier scale from the stepper and is undone at every sample
//! time. The lab frame can be forced through [`EvolveOptions`], and an
//! embedded 4(5) adaptive lab-frame mode is available as a cross-check.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{
    DissipatorSpec, GateConfig, PulseSpec, Schedule, Scheme, Segment, SpaceSpec, TermSpec,
};
use crate::operators::{
    self, Axis, HilbertSpec, Ion, LadderKind, Operator, State, StateError,
};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state dimension {state} does not match schedule dimension {schedule}")]
    DimensionMismatch { state: usize, schedule: usize },
    #[error("sideband terms require the two-spin ⊗ motion space")]
    TermSpaceMismatch,
    #[error(
        "truncation breach at t = {time:.6e} s: top two Fock levels hold {occupancy:.3e} \
         population (limit 1e-6); increase fock_dim"
    )]
    TruncationBreach { time: f64, occupancy: f64 },
    #[error("adaptive step size underflow at t = {time:.6e} s")]
    StepUnderflow { time: f64 },
    #[error("schedule produced an invalid state: {0}")]
    State(#[from] StateError),
    #[error("interaction-frame check requires the ddms scheme")]
    RequiresDdms,
    #[error(transparent)]
    Config(#[from] crate::model::ConfigError),
}

/// Time-dependent scalar coefficient shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Oscillation {
    Constant,
    /// `e^{i ω t}`
    Exp { omega: f64 },
    /// `cos(ω t)`
    Cos { omega: f64 },
    /// `sin(ω t)`
    Sin { omega: f64 },
}

impl Oscillation {
    fn eval(&self, t: f64) -> C64 {
        match *self {
            Oscillation::Constant => C64::new(1.0, 0.0),
            Oscillation::Exp { omega } => C64::from_polar(1.0, omega * t),
            Oscillation::Cos { omega } => C64::new((omega * t).cos(), 0.0),
            Oscillation::Sin { omega } => C64::new((omega * t).sin(), 0.0),
        }
    }
}

/// One additive Hamiltonian term:
/// `amplitude · osc(t - t_ref) · [env(t)] · operator`.
pub struct HamiltonianTerm {
    pub operator: Array2<C64>,
    pub amplitude: C64,
    pub oscillation: Oscillation,
    /// Time origin of the oscillation (0 for sideband phases, which stay
    /// continuous across segments; the segment start for rotating-frame
    /// terms).
    pub t_ref: f64,
    /// Multiply by the schedule envelope, evaluated at absolute time.
    pub enveloped: bool,
}

/// Materialize the Hamiltonian terms of one segment.
pub fn assemble(segment: &Segment, space: SpaceSpec) -> Result<Vec<HamiltonianTerm>, DynamicsError> {
    let mut out = Vec::new();
    for term in &segment.terms {
        match (*term, space) {
            (TermSpec::SidebandRed { rabi }, SpaceSpec::SpinPair { fock_dim, mode_sign }) => {
                let spec = HilbertSpec::new(fock_dim)
                    .map_err(|_| DynamicsError::TermSpaceMismatch)?;
                let raise = operators::collective_flip(LadderKind::Raise, mode_sign, spec);
                let lower = operators::collective_flip(LadderKind::Lower, mode_sign, spec);
                let a = operators::ladder(LadderKind::Lower, spec);
                let adag = operators::ladder(LadderKind::Raise, spec);
                let half = C64::new(rabi / 2.0, 0.0);
                out.push(HamiltonianTerm {
                    operator: raise.mul(&a).into_matrix(),
                    amplitude: half,
                    oscillation: Oscillation::Exp { omega: segment.detuning },
                    t_ref: 0.0,
                    enveloped: true,
                });
                out.push(HamiltonianTerm {
                    operator: lower.mul(&adag).into_matrix(),
                    amplitude: half,
                    oscillation: Oscillation::Exp { omega: -segment.detuning },
                    t_ref: 0.0,
                    enveloped: true,
                });
            }
            (TermSpec::SidebandBlue { rabi }, SpaceSpec::SpinPair { fock_dim, mode_sign }) => {
                let spec = HilbertSpec::new(fock_dim)
                    .map_err(|_| DynamicsError::TermSpaceMismatch)?;
                let raise = operators::collective_flip(LadderKind::Raise, mode_sign, spec);
                let lower = operators::collective_flip(LadderKind::Lower, mode_sign, spec);
                let a = operators::ladder(LadderKind::Lower, spec);
                let adag = operators::ladder(LadderKind::Raise, spec);
                let half = C64::new(rabi / 2.0, 0.0);
                out.push(HamiltonianTerm {
                    operator: raise.mul(&adag).into_matrix(),
                    amplitude: half,
                    oscillation: Oscillation::Exp { omega: -segment.detuning },
                    t_ref: 0.0,
                    enveloped: true,
                });
                out.push(HamiltonianTerm {
                    operator: lower.mul(&a).into_matrix(),
                    amplitude: half,
                    oscillation: Oscillation::Exp { omega: segment.detuning },
                    t_ref: 0.0,
                    enveloped: true,
                });
            }
            (TermSpec::SidebandRed { .. } | TermSpec::SidebandBlue { .. }, SpaceSpec::SingleSpin) => {
                return Err(DynamicsError::TermSpaceMismatch);
            }
            (TermSpec::Carrier { rabi, phase }, space) => {
                if rabi == 0.0 {
                    continue;
                }
                let op = equatorial_drive(space, phase)?;
                out.push(HamiltonianTerm {
                    operator: op,
                    amplitude: C64::new(rabi / 2.0, 0.0),
                    oscillation: Oscillation::Constant,
                    t_ref: 0.0,
                    enveloped: false,
                });
            }
            (TermSpec::StaticShift { shift }, space) => {
                if shift == 0.0 {
                    continue;
                }
                let op = match space {
                    SpaceSpec::SpinPair { fock_dim, .. } => {
                        let spec = HilbertSpec::new(fock_dim)
                            .map_err(|_| DynamicsError::TermSpaceMismatch)?;
                        operators::pauli(Axis::Z, Ion::One, spec)
                            .add(&operators::pauli(Axis::Z, Ion::Two, spec))
                            .into_matrix()
                    }
                    SpaceSpec::SingleSpin => operators::pauli_single(Axis::Z).into_matrix(),
                };
                out.push(HamiltonianTerm {
                    operator: op,
                    amplitude: C64::new(shift / 2.0, 0.0),
                    oscillation: Oscillation::Constant,
                    t_ref: 0.0,
                    enveloped: false,
                });
            }
        }
    }
    Ok(out)
}

fn equatorial_drive(space: SpaceSpec, phase: f64) -> Result<Array2<C64>, DynamicsError> {
    let (c, s) = (C64::new(phase.cos(), 0.0), C64::new(phase.sin(), 0.0));
    Ok(match space {
        SpaceSpec::SpinPair { fock_dim, .. } => {
            let spec =
                HilbertSpec::new(fock_dim).map_err(|_| DynamicsError::TermSpaceMismatch)?;
            let mut acc = operators::pauli(Axis::X, Ion::One, spec).scaled(c);
            acc = acc.add(&operators::pauli(Axis::X, Ion::Two, spec).scaled(c));
            acc = acc.add(&operators::pauli(Axis::Y, Ion::One, spec).scaled(s));
            acc = acc.add(&operators::pauli(Axis::Y, Ion::Two, spec).scaled(s));
            acc.into_matrix()
        }
        SpaceSpec::SingleSpin => operators::pauli_single(Axis::X)
            .scaled(c)
            .add(&operators::pauli_single(Axis::Y).scaled(s))
            .into_matrix(),
    })
}

fn boundary_operator(pulse: &PulseSpec, space: SpaceSpec) -> Result<Operator, DynamicsError> {
    Ok(match (pulse, space) {
        (PulseSpec::AxisRotation { axis, angle }, SpaceSpec::SpinPair { fock_dim, .. }) => {
            let spec =
                HilbertSpec::new(fock_dim).map_err(|_| DynamicsError::TermSpaceMismatch)?;
            operators::instantaneous_rotation(*axis, *angle, spec)
        }
        (PulseSpec::PhasedRotation { phase, angle }, SpaceSpec::SpinPair { fock_dim, .. }) => {
            let spec =
                HilbertSpec::new(fock_dim).map_err(|_| DynamicsError::TermSpaceMismatch)?;
            operators::phase_rotation_with_phase(*phase, *angle, spec)
        }
        (PulseSpec::AxisRotation { axis, angle }, SpaceSpec::SingleSpin) => {
            operators::rotation_single(*axis, *angle)
        }
        (PulseSpec::PhasedRotation { phase, angle }, SpaceSpec::SingleSpin) => {
            operators::phase_rotation_single(*phase, *angle)
        }
    })
}

/// Step-size policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    /// Fixed step `h = min(t_seg/200, 1/(400 f_max)) / refine`.
    Fixed { refine: f64 },
    /// Embedded Runge-Kutta 4(5) pair with the given per-step tolerance on
    /// density-matrix entries.
    Adaptive { tol: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub step: StepControl,
    /// Record observables every this many accepted steps (segment ends are
    /// always recorded).
    pub sample_stride: usize,
    /// Keep full (validated) state snapshots at every recorded sample.
    pub store_states: bool,
    /// Disable the exact carrier rotating-frame reduction and integrate
    /// every segment in the lab frame (cross-check knob; the results agree
    /// to integrator precision).
    pub lab_frame_only: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            step: StepControl::Fixed { refine: 1.0 },
            sample_stride: 1,
            store_states: false,
            lab_frame_only: false,
        }
    }
}

impl EvolveOptions {
    /// Observables-only sampling at segment boundaries; the cheapest mode,
    /// used by Monte-Carlo sweeps.
    pub fn sparse() -> Self {
        Self { sample_stride: usize::MAX, ..Self::default() }
    }

    pub fn with_refine(mut self, refine: f64) -> Self {
        self.step = StepControl::Fixed { refine };
        self
    }
}

/// Scalar observables recorded along the evolution.
#[derive(Clone, Copy, Debug)]
pub struct Observables {
    /// Diagonal spin populations `(p_uu, p_ud, p_du, p_dd)`.
    pub spin_populations: [f64; 4],
    /// Mean Fock occupation (0 for single-spin schedules).
    pub mean_fock: f64,
    /// Purity of the reduced spin state.
    pub spin_purity: f64,
    pub trace: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvolutionStats {
    pub steps: usize,
    pub rhs_evals: usize,
    pub rejected_steps: usize,
    pub max_top_occupancy: f64,
}

/// Output of [`evolve`]: sampled observables over `[0, total_duration]`,
/// optional state snapshots, and the validated final state.
#[derive(Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub observables: Vec<Observables>,
    pub snapshots: Vec<(f64, State)>,
    pub final_state: State,
    pub stats: EvolutionStats,
}

struct Workspace {
    h: Array2<C64>,
    prod: Array2<C64>,
    tmp: Array2<C64>,
    k: Vec<Array2<C64>>,
    stage: Array2<C64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        let z = || Array2::zeros((dim, dim));
        Self { h: z(), prod: z(), tmp: z(), k: (0..6).map(|_| z()).collect(), stage: z() }
    }
}

struct Jump {
    l: Array2<C64>,
    l_dag: Array2<C64>,
    /// `L†L / 2`, precomputed.
    half_ldl: Array2<C64>,
}

fn build_jumps(specs: &[DissipatorSpec], space: SpaceSpec) -> Result<Vec<Jump>, DynamicsError> {
    let mut jumps = Vec::new();
    for d in specs {
        let (kind, rate) = match *d {
            DissipatorSpec::MotionHeatingUp { rate } => (LadderKind::Raise, rate),
            DissipatorSpec::MotionHeatingDown { rate } => (LadderKind::Lower, rate),
        };
        if rate == 0.0 {
            continue;
        }
        let SpaceSpec::SpinPair { fock_dim, .. } = space else {
            return Err(DynamicsError::TermSpaceMismatch);
        };
        let spec = HilbertSpec::new(fock_dim).map_err(|_| DynamicsError::TermSpaceMismatch)?;
        let l = operators::ladder(kind, spec).scaled(C64::new(rate.sqrt(), 0.0));
        let l_dag = l.dagger();
        let half_ldl = l_dag.mul(&l).scaled(C64::new(0.5, 0.0));
        jumps.push(Jump {
            l: l.into_matrix(),
            l_dag: l_dag.into_matrix(),
            half_ldl: half_ldl.into_matrix(),
        });
    }
    Ok(jumps)
}

/// Term list preprocessed for fast `H(t)` assembly: the constant part is
/// summed once and the oscillating operators (sparse sideband couplings)
/// are kept as index/value lists.
struct PreparedTerms {
    static_part: Array2<C64>,
    oscillating: Vec<OscillatingSparse>,
}

struct OscillatingSparse {
    entries: Vec<(usize, C64)>, // flat index into the matrix buffer
    amplitude: C64,
    oscillation: Oscillation,
    t_ref: f64,
    enveloped: bool,
}

fn prepare_terms(terms: &[HamiltonianTerm], dim: usize) -> PreparedTerms {
    let mut static_part = Array2::zeros((dim, dim));
    let mut oscillating = Vec::new();
    for term in terms {
        match term.oscillation {
            Oscillation::Constant if !term.enveloped => {
                static_part.scaled_add(term.amplitude, &term.operator);
            }
            _ => {
                let entries: Vec<(usize, C64)> = term
                    .operator
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| **z != C64::new(0.0, 0.0))
                    .map(|(k, z)| (k, *z))
                    .collect();
                oscillating.push(OscillatingSparse {
                    entries,
                    amplitude: term.amplitude,
                    oscillation: term.oscillation,
                    t_ref: term.t_ref,
                    enveloped: term.enveloped,
                });
            }
        }
    }
    PreparedTerms { static_part, oscillating }
}

/// Build `H(t)` into `h` from the prepared terms.
fn build_hamiltonian_fast(
    prepared: &PreparedTerms,
    t: f64,
    envelope: &crate::model::EnvelopeSpec,
    total: f64,
    h: &mut Array2<C64>,
) {
    h.assign(&prepared.static_part);
    let buf = h.as_slice_mut().expect("workspace matrices are contiguous");
    for term in &prepared.oscillating {
        let mut coeff = term.amplitude * term.oscillation.eval(t - term.t_ref);
        if term.enveloped {
            coeff *= envelope.amplitude(t, total);
        }
        if coeff == C64::new(0.0, 0.0) {
            continue;
        }
        for &(k, v) in &term.entries {
            buf[k] += coeff * v;
        }
    }
}

/// Build `H(t)` from raw terms (reference path; tests compare against the
/// prepared fast path).
#[cfg(test)]
fn build_hamiltonian(
    terms: &[HamiltonianTerm],
    t: f64,
    envelope: &crate::model::EnvelopeSpec,
    total: f64,
    h: &mut Array2<C64>,
) {
    h.fill(C64::new(0.0, 0.0));
    for term in terms {
        let mut coeff = term.amplitude * term.oscillation.eval(t - term.t_ref);
        if term.enveloped {
            coeff *= envelope.amplitude(t, total);
        }
        if coeff == C64::new(0.0, 0.0) {
            continue;
        }
        h.scaled_add(coeff, &term.operator);
    }
}

/// `out = a·b` for square standard-layout matrices.
///
/// Calls `zgemm` directly; the row blocks run on two rayon tasks when the
/// `parallel` feature is enabled, which composes with the shot-level
/// parallelism in the sweep harness through work stealing.
fn mat_mul_into(a: &Array2<C64>, b: &Array2<C64>, out: &mut Array2<C64>) {
    let n = b.nrows();
    debug_assert_eq!(a.dim(), (n, n));
    debug_assert_eq!(out.dim(), (n, n));
    let (Some(a_s), Some(b_s)) = (a.as_slice(), b.as_slice()) else {
        ndarray::linalg::general_mat_mul(
            C64::new(1.0, 0.0),
            a,
            b,
            C64::new(0.0, 0.0),
            out,
        );
        return;
    };
    let out_s = out.as_slice_mut().expect("workspace matrices are contiguous");

    #[cfg(feature = "parallel")]
    if n >= 64 {
        let half = n / 2;
        let (c_top, c_bot) = out_s.split_at_mut(half * n);
        let (a_top, a_bot) = a_s.split_at(half * n);
        rayon::join(
            || gemm_rows(half, n, a_top, b_s, c_top),
            || gemm_rows(n - half, n, a_bot, b_s, c_bot),
        );
        return;
    }
    gemm_rows(n, n, a_s, b_s, out_s);
}

/// `c[rows × n] = a[rows × n] · b[n × n]`, all row-major contiguous.
fn gemm_rows(rows: usize, n: usize, a: &[C64], b: &[C64], c: &mut [C64]) {
    debug_assert!(a.len() >= rows * n && b.len() >= n * n && c.len() >= rows * n);
    // SAFETY: slice lengths cover the requested blocks; strides are (n, 1).
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            rows,
            n,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        )
    }
}

/// `out = -i[H, ρ] + Σ_k (L_k ρ L_k† - ½{L_k†L_k, ρ})`.
///
/// The commutator is formed from a single product, `-i(Hρ - (Hρ)†)`, which
/// keeps the result exactly Hermitian in floating point.
fn rhs(
    terms: &PreparedTerms,
    jumps: &[Jump],
    t: f64,
    envelope: &crate::model::EnvelopeSpec,
    total: f64,
    rho: &Array2<C64>,
    ws_h: &mut Array2<C64>,
    ws_prod: &mut Array2<C64>,
    ws_tmp: &mut Array2<C64>,
    out: &mut Array2<C64>,
) {
    let n = rho.nrows();

    build_hamiltonian_fast(terms, t, envelope, total, ws_h);
    mat_mul_into(ws_h, rho, ws_prod);
    for i in 0..n {
        for j in 0..n {
            let c = ws_prod[[i, j]] - ws_prod[[j, i]].conj();
            out[[i, j]] = C64::new(c.im, -c.re); // -i * c
        }
    }

    for jump in jumps {
        // L ρ L†
        mat_mul_into(&jump.l, rho, ws_tmp);
        mat_mul_into(ws_tmp, &jump.l_dag, ws_prod);
        for i in 0..n {
            for j in 0..n {
                let g = (ws_prod[[i, j]] + ws_prod[[j, i]].conj()) * 0.5;
                out[[i, j]] += g;
            }
        }
        // -{L†L/2, ρ}
        mat_mul_into(&jump.half_ldl, rho, ws_prod);
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] -= ws_prod[[i, j]] + ws_prod[[j, i]].conj();
            }
        }
    }
}

fn segment_f_max_hz(segment: &Segment) -> f64 {
    let mut f = 0.0f64;
    for term in &segment.terms {
        match *term {
            TermSpec::SidebandRed { rabi } | TermSpec::SidebandBlue { rabi } => {
                if rabi != 0.0 {
                    f = f.max(segment.detuning.abs());
                }
            }
            TermSpec::Carrier { rabi, .. } => f = f.max(rabi.abs()),
            TermSpec::StaticShift { shift } => f = f.max(shift.abs()),
        }
    }
    f / std::f64::consts::TAU
}

fn fixed_step(segment: &Segment, refine: f64) -> f64 {
    let mut h = segment.duration / 200.0;
    let f_max = segment_f_max_hz(segment);
    if f_max > 0.0 {
        h = h.min(1.0 / (400.0 * f_max));
    }
    h / refine.max(1e-3)
}

/// Carrier rotating frame for a segment whose drive commutes with the
/// carrier: paired red/blue sidebands at equal Rabi frequency form a pure
/// σ_x-type force, and an x-aligned carrier (phase 0) then factors out of
/// the dynamics exactly. In that frame the carrier term disappears and a
/// static qubit shift acquires the carrier rotation; the change of
/// variables is undone at every sample time.
struct CarrierFrame {
    omega_c: f64,
    phase: f64,
    t0: f64,
}

fn carrier_frame_for(segment: &Segment, space: SpaceSpec) -> Option<CarrierFrame> {
    if !matches!(space, SpaceSpec::SpinPair { .. }) {
        return None;
    }
    let mut carrier: Option<(f64, f64)> = None;
    let mut red = 0.0f64;
    let mut blue = 0.0f64;
    for term in &segment.terms {
        match *term {
            TermSpec::SidebandRed { rabi } => red += rabi,
            TermSpec::SidebandBlue { rabi } => blue += rabi,
            TermSpec::Carrier { rabi, phase } => {
                if rabi != 0.0 {
                    if carrier.is_some() {
                        return None;
                    }
                    carrier = Some((rabi, phase));
                }
            }
            TermSpec::StaticShift { .. } => {}
        }
    }
    let (rabi, phase) = carrier?;
    if phase != 0.0 {
        return None; // carrier off the force axis: integrate in the lab frame
    }
    if (red - blue).abs() > 1e-9 * red.abs().max(blue.abs()).max(1.0) {
        return None; // unbalanced sidebands (σ_y force components survive)
    }
    Some(CarrierFrame { omega_c: rabi, phase, t0: segment.start })
}

/// Terms of `H̃ = V†(H - H_c)V` for an aligned segment: the force terms are
/// frame-invariant, the carrier is gone, and a static shift rotates at the
/// carrier frequency, `(Δ′/2) Σ_i [cos(Ω_c τ) σ_z,i + sin(Ω_c τ) σ_y',i]`
/// with `σ_y' = cos φ σ_y - sin φ σ_x` and `τ` measured from the segment
/// start.
fn assemble_in_frame(
    segment: &Segment,
    space: SpaceSpec,
    frame: &CarrierFrame,
) -> Result<Vec<HamiltonianTerm>, DynamicsError> {
    let SpaceSpec::SpinPair { fock_dim, .. } = space else {
        return Err(DynamicsError::TermSpaceMismatch);
    };
    let spec = HilbertSpec::new(fock_dim).map_err(|_| DynamicsError::TermSpaceMismatch)?;
    let mut stripped = segment.clone();
    stripped.terms.retain(|t| {
        !matches!(t, TermSpec::Carrier { .. } | TermSpec::StaticShift { .. })
    });
    let mut out = assemble(&stripped, space)?;
    for term in &segment.terms {
        if let TermSpec::StaticShift { shift } = *term {
            if shift == 0.0 {
                continue;
            }
            let sz = operators::pauli(Axis::Z, Ion::One, spec)
                .add(&operators::pauli(Axis::Z, Ion::Two, spec));
            let (c, s) = (frame.phase.cos(), frame.phase.sin());
            let sy_rot = operators::pauli(Axis::Y, Ion::One, spec)
                .add(&operators::pauli(Axis::Y, Ion::Two, spec))
                .scaled(C64::new(c, 0.0))
                .sub(
                    &operators::pauli(Axis::X, Ion::One, spec)
                        .add(&operators::pauli(Axis::X, Ion::Two, spec))
                        .scaled(C64::new(s, 0.0)),
                );
            out.push(HamiltonianTerm {
                operator: sz.into_matrix(),
                amplitude: C64::new(shift / 2.0, 0.0),
                oscillation: Oscillation::Cos { omega: frame.omega_c },
                t_ref: frame.t0,
                enveloped: false,
            });
            out.push(HamiltonianTerm {
                operator: sy_rot.into_matrix(),
                amplitude: C64::new(shift / 2.0, 0.0),
                oscillation: Oscillation::Sin { omega: frame.omega_c },
                t_ref: frame.t0,
                enveloped: false,
            });
        }
    }
    Ok(out)
}

/// Step rule for a frame-transformed segment: the stiff carrier scale is
/// gone, so the step resolves the slow coefficients at 400 samples per
/// period; when a rotating shift term is present, the carrier oscillation
/// itself (a small-amplitude coefficient) is resolved at 200 samples per
/// period.
fn fixed_step_in_frame(segment: &Segment, frame: &CarrierFrame, refine: f64) -> f64 {
    let mut f_slow = 0.0f64;
    let mut has_shift = false;
    for term in &segment.terms {
        match *term {
            TermSpec::SidebandRed { rabi } | TermSpec::SidebandBlue { rabi } => {
                if rabi != 0.0 {
                    f_slow = f_slow.max(segment.detuning.abs());
                }
            }
            TermSpec::Carrier { .. } => {}
            TermSpec::StaticShift { shift } => {
                if shift != 0.0 {
                    has_shift = true;
                    f_slow = f_slow.max(shift.abs());
                }
            }
        }
    }
    let mut h = segment.duration / 200.0;
    if f_slow > 0.0 {
        h = h.min(std::f64::consts::TAU / (400.0 * f_slow));
    }
    if has_shift {
        h = h.min(std::f64::consts::TAU / (200.0 * frame.omega_c.abs()));
    }
    h / refine.max(1e-3)
}

/// `V ρ̃ V†` with `V = exp(-i (Ω_c τ/2) Σ_i σ_φ,i)`.
fn to_lab_frame(
    rho_tilde: &Array2<C64>,
    frame: &CarrierFrame,
    tau: f64,
    space: SpaceSpec,
) -> Result<Array2<C64>, DynamicsError> {
    let SpaceSpec::SpinPair { fock_dim, .. } = space else {
        return Err(DynamicsError::TermSpaceMismatch);
    };
    let spec = HilbertSpec::new(fock_dim).map_err(|_| DynamicsError::TermSpaceMismatch)?;
    let v = operators::phase_rotation_with_phase(frame.phase, frame.omega_c * tau, spec);
    Ok(v.matrix().dot(rho_tilde).dot(&v.dagger().into_matrix()))
}

/// Integrate a schedule from an initial state.
///
/// Boundary unitaries are applied as `ρ → UρU†`. Fails with a truncation
/// error if the top two Fock levels ever hold more than 1e-6 population at
/// a sample point.
pub fn evolve(
    schedule: &Schedule,
    initial: &State,
    options: &EvolveOptions,
) -> Result<EvolutionResult, DynamicsError> {
    let dim = schedule.space.dim();
    if initial.dim() != dim {
        return Err(DynamicsError::DimensionMismatch { state: initial.dim(), schedule: dim });
    }
    let stride = options.sample_stride.max(1);
    let mut ws = Workspace::new(dim);
    let mut rho = initial.rho().clone();
    let total = schedule.total_duration;

    let mut times: Vec<f64> = Vec::new();
    let mut observables: Vec<Observables> = Vec::new();
    let mut snapshots: Vec<(f64, State)> = Vec::new();
    let mut stats = EvolutionStats::default();

    let fock_dim = match schedule.space {
        SpaceSpec::SpinPair { fock_dim, .. } => Some(fock_dim),
        SpaceSpec::SingleSpin => None,
    };

    let record = |t: f64,
                      rho: &Array2<C64>,
                      stats: &mut EvolutionStats,
                      times: &mut Vec<f64>,
                      observables: &mut Vec<Observables>,
                      snapshots: &mut Vec<(f64, State)>|
     -> Result<(), DynamicsError> {
        let state = State::from_density_unchecked(rho.clone())?;
        let obs = Observables {
            spin_populations: state.spin_populations(),
            mean_fock: fock_dim.map(|n| state.mean_fock(n)).unwrap_or(0.0),
            spin_purity: match fock_dim {
                Some(n) => state.spin_purity(n),
                None => state.purity(),
            },
            trace: state.trace().re,
        };
        if let Some(n) = fock_dim {
            let occ = state.top_fock_occupancy(n, 2);
            stats.max_top_occupancy = stats.max_top_occupancy.max(occ);
            if occ > 1e-6 {
                return Err(DynamicsError::TruncationBreach { time: t, occupancy: occ });
            }
        }
        // replace a duplicate sample (same time, e.g. after a boundary pulse)
        if times.last().is_some_and(|&last| (last - t).abs() < 1e-15) {
            times.pop();
            observables.pop();
            if snapshots.last().is_some_and(|(ts, _)| (ts - t).abs() < 1e-15) {
                snapshots.pop();
            }
        }
        times.push(t);
        observables.push(obs);
        if options.store_states {
            state.validate()?;
            snapshots.push((t, state));
        }
        Ok(())
    };

    for (k, segment) in schedule.segments.iter().enumerate() {
        if let Some(pulse) = schedule.boundary_pulses.get(&k) {
            let u = boundary_operator(pulse, schedule.space)?;
            rho = u.matrix().dot(&rho).dot(&u.dagger().into_matrix());
        }
        if k == 0 {
            record(0.0, &rho, &mut stats, &mut times, &mut observables, &mut snapshots)?;
        }
        let jumps = build_jumps(&segment.dissipators, schedule.space)?;

        match options.step {
            StepControl::Fixed { refine } => {
                let frame = if options.lab_frame_only {
                    None
                } else {
                    carrier_frame_for(segment, schedule.space)
                };
                let (raw_terms, h_rule) = match &frame {
                    Some(fr) => (
                        assemble_in_frame(segment, schedule.space, fr)?,
                        fixed_step_in_frame(segment, fr, refine),
                    ),
                    None => (assemble(segment, schedule.space)?, fixed_step(segment, refine)),
                };
                let terms = prepare_terms(&raw_terms, dim);
                let n_steps = (segment.duration / h_rule).ceil().max(1.0) as usize;
                let h = segment.duration / n_steps as f64;
                for i in 0..n_steps {
                    let t = segment.start + i as f64 * h;
                    rk4_step(&terms, &jumps, t, h, schedule, total, &mut rho, &mut ws);
                    stats.steps += 1;
                    stats.rhs_evals += 4;
                    let last = i + 1 == n_steps;
                    if last {
                        // leave the rotating frame before crossing into the
                        // next segment
                        if let Some(fr) = &frame {
                            rho = to_lab_frame(&rho, fr, segment.duration, schedule.space)?;
                        }
                    }
                    if (i + 1) % stride == 0 || last {
                        let t_next = segment.start + (i + 1) as f64 * h;
                        let lab_view;
                        let lab_rho = match (&frame, last) {
                            (Some(fr), false) => {
                                lab_view =
                                    to_lab_frame(&rho, fr, t_next - fr.t0, schedule.space)?;
                                &lab_view
                            }
                            _ => &rho,
                        };
                        record(
                            t_next,
                            lab_rho,
                            &mut stats,
                            &mut times,
                            &mut observables,
                            &mut snapshots,
                        )?;
                    }
                }
            }
            StepControl::Adaptive { tol } => {
                // the adaptive cross-check deliberately integrates in the
                // lab frame, independent of the rotating-frame reduction
                let terms = prepare_terms(&assemble(segment, schedule.space)?, dim);
                adaptive_segment(
                    &terms, &jumps, segment, schedule, total, tol, stride, &mut rho, &mut ws,
                    &mut stats,
                    &mut |t, rho, stats| {
                        record(t, rho, stats, &mut times, &mut observables, &mut snapshots)
                    },
                )?;
            }
        }
    }

    if let Some(pulse) = schedule.boundary_pulses.get(&schedule.segments.len()) {
        let u = boundary_operator(pulse, schedule.space)?;
        rho = u.matrix().dot(&rho).dot(&u.dagger().into_matrix());
        let t_end = schedule
            .segments
            .last()
            .map(|s| s.start + s.duration)
            .unwrap_or(0.0);
        record(t_end, &rho, &mut stats, &mut times, &mut observables, &mut snapshots)?;
    }

    // cheap invariants always hold on the final state; the positivity check
    // (an eigensolve) runs on snapshot-stored states, where the full State
    // contract applies
    let final_state = State::from_density_unchecked(rho)?;
    let herm = final_state.hermitian_deviation();
    if herm > crate::operators::STATE_HERMITICITY_TOL {
        return Err(StateError::NotHermitian(herm).into());
    }
    let trace_dev = (final_state.trace() - C64::new(1.0, 0.0)).norm();
    if trace_dev > crate::operators::STATE_TRACE_TOL {
        return Err(StateError::TraceDeviation(trace_dev).into());
    }
    Ok(EvolutionResult { times, observables, snapshots, final_state, stats })
}

#[allow(clippy::too_many_arguments)]
fn rk4_step(
    terms: &PreparedTerms,
    jumps: &[Jump],
    t: f64,
    h: f64,
    schedule: &Schedule,
    total: f64,
    rho: &mut Array2<C64>,
    ws: &mut Workspace,
) {
    let env = &schedule.envelope;
    // stage coefficients for the classic tableau: k_i at t + c_i h from rho + h a_i k_{i-1}
    let stages: [(f64, f64); 3] = [(0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];

    {
        let (head, _) = ws.k.split_at_mut(1);
        rhs(terms, jumps, t, env, total, rho, &mut ws.h, &mut ws.prod, &mut ws.tmp, &mut head[0]);
    }
    for (i, (c, a)) in stages.iter().enumerate() {
        let (done, rest) = ws.k.split_at_mut(i + 1);
        let w = C64::new(h * a, 0.0);
        ndarray::Zip::from(&mut ws.stage)
            .and(&*rho)
            .and(&done[i])
            .for_each(|s, &r, &k| *s = r + w * k);
        rhs(terms, jumps, t + c * h, env, total, &ws.stage, &mut ws.h, &mut ws.prod, &mut ws.tmp, &mut rest[0]);
    }

    let w = h / 6.0;
    ndarray::Zip::from(&mut *rho)
        .and(&ws.k[0])
        .and(&ws.k[1])
        .and(&ws.k[2])
        .and(&ws.k[3])
        .for_each(|r, &k1, &k2, &k3, &k4| {
            *r += (k1 + (k2 + k3) * 2.0 + k4) * w;
        });
}

// Fehlberg 4(5) tableau
const RKF_NODES: [f64; 6] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const RKF_COUPLINGS: [&[f64]; 6] = [
    &[],
    &[1.0 / 4.0],
    &[3.0 / 32.0, 9.0 / 32.0],
    &[1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0],
    &[439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0],
    &[-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const RKF_SOLUTION: [f64; 6] =
    [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];
const RKF_ERROR: [f64; 6] =
    [1.0 / 360.0, 0.0, -128.0 / 4275.0, -2197.0 / 75240.0, 1.0 / 50.0, 2.0 / 55.0];

#[allow(clippy::too_many_arguments)]
fn adaptive_segment(
    terms: &PreparedTerms,
    jumps: &[Jump],
    segment: &Segment,
    schedule: &Schedule,
    total: f64,
    tol: f64,
    stride: usize,
    rho: &mut Array2<C64>,
    ws: &mut Workspace,
    stats: &mut EvolutionStats,
    record: &mut dyn FnMut(f64, &Array2<C64>, &mut EvolutionStats) -> Result<(), DynamicsError>,
) -> Result<(), DynamicsError> {
    let env = &schedule.envelope;
    let t_end = segment.start + segment.duration;
    let mut t = segment.start;
    let mut h = fixed_step(segment, 1.0);
    let h_min = segment.duration * 1e-13;
    let mut accepted_since_sample = 0usize;

    while t < t_end - 1e-18 {
        if h < h_min {
            return Err(DynamicsError::StepUnderflow { time: t });
        }
        let h_eff = h.min(t_end - t);

        for i in 0..6 {
            let (done, rest) = ws.k.split_at_mut(i);
            ws.stage.assign(rho);
            for (w, kj) in RKF_COUPLINGS[i].iter().zip(done.iter()) {
                ws.stage.scaled_add(C64::new(h_eff * w, 0.0), kj);
            }
            rhs(
                terms,
                jumps,
                t + RKF_NODES[i] * h_eff,
                env,
                total,
                &ws.stage,
                &mut ws.h,
                &mut ws.prod,
                &mut ws.tmp,
                &mut rest[0],
            );
        }
        stats.rhs_evals += 6;

        // error estimate: max entry of h·Σ d_i k_i
        let n = rho.nrows();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (d, k) in RKF_ERROR.iter().zip(ws.k.iter()) {
                    if *d != 0.0 {
                        e += k[[i, j]] * *d;
                    }
                }
                err = err.max((e * h_eff).norm());
            }
        }

        if err <= tol {
            for i in 0..n {
                for j in 0..n {
                    let mut d = C64::new(0.0, 0.0);
                    for (c, k) in RKF_SOLUTION.iter().zip(ws.k.iter()) {
                        if *c != 0.0 {
                            d += k[[i, j]] * *c;
                        }
                    }
                    rho[[i, j]] += d * h_eff;
                }
            }
            t += h_eff;
            stats.steps += 1;
            accepted_since_sample += 1;
            let at_end = t >= t_end - 1e-18;
            if accepted_since_sample >= stride || at_end {
                record(t, rho, stats)?;
                accepted_since_sample = 0;
            }
        } else {
            stats.rejected_steps += 1;
        }

        let factor = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 4.0 };
        h = (h_eff * factor.clamp(0.2, 4.0)).min(segment.duration);
    }
    Ok(())
}

/// Result of [`interaction_frame_check`].
#[derive(Clone, Copy, Debug)]
pub struct FrameCheckReport {
    /// `1 - Tr(ρ_full ρ_ref)` between the full carrier-dressed evolution and
    /// the bare force evolution.
    pub fidelity_gap: f64,
    /// Carrier cycles over the gate, `Ω_c t_g / 2π`, as checked.
    pub carrier_cycles: f64,
    pub omega_c_requested: f64,
    pub omega_c_checked: f64,
}

/// Numerically verify the rotating-frame argument behind the dynamically
/// decoupled gate: the carrier-dressed evolution must reproduce the bare
/// spin-dependent-force evolution.
///
/// Without the refocusing pulse the argument presumes a whole number of
/// carrier cycles over the gate, so the carrier is snapped to the nearest
/// `Ω_c t_g = 2mπ` before evolving; with the refocusing pulse the requested
/// carrier is used as-is.
pub fn interaction_frame_check(config: &GateConfig) -> Result<FrameCheckReport, DynamicsError> {
    if config.scheme != Scheme::Ddms {
        return Err(DynamicsError::RequiresDdms);
    }
    let t_g = config.gate_time()?;
    let mut full = config.clone();
    full.delta_prime = 0.0;
    if !full.refocus_pulse && full.omega_c > 0.0 {
        let cycles = (full.omega_c * t_g / std::f64::consts::TAU).round();
        full.omega_c = cycles * std::f64::consts::TAU / t_g;
    }
    let mut reference = full.clone();
    reference.omega_c = 0.0;

    // integrate in the lab frame so the check is independent of the
    // rotating-frame reduction it is meant to verify
    let options = EvolveOptions { lab_frame_only: true, ..EvolveOptions::sparse() };
    let initial = config.initial_state()?;
    let rho_full = evolve(&crate::model::compile(&full)?, &initial, &options)?.final_state;
    let rho_ref = evolve(&crate::model::compile(&reference)?, &initial, &options)?.final_state;

    let mut overlap = C64::new(0.0, 0.0);
    let n = rho_full.dim();
    for i in 0..n {
        for j in 0..n {
            overlap += rho_full.rho()[[i, j]] * rho_ref.rho()[[j, i]];
        }
    }
    // normalized state overlap; exactly 1 when the two evolutions coincide
    let norm = (rho_full.purity() * rho_ref.purity()).sqrt();
    Ok(FrameCheckReport {
        fidelity_gap: (1.0 - overlap.re / norm).max(0.0),
        carrier_cycles: full.omega_c * t_g / std::f64::consts::TAU,
        omega_c_requested: config.omega_c,
        omega_c_checked: full.omega_c,
    })
}
