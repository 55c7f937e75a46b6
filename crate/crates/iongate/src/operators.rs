//! Operators and states on the composite Hilbert space of two spin-1/2
//! qubits and one truncated harmonic oscillator mode.
//!
//! The composite basis is indexed by `(s1, s2, n)` with the Fock index `n`
//! fastest-varying: `idx = (2*s1 + s2)*N + n`. Spin index 0 is |↑⟩ and index
//! 1 is |↓⟩, with the convention `σ_z|↑⟩ = +|↑⟩`.
//!
//! All values are immutable after construction and safe to share across
//! threads.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spin basis index of |↑⟩.
pub const SPIN_UP: usize = 0;
/// Spin basis index of |↓⟩.
pub const SPIN_DOWN: usize = 1;

/// Default tolerance for Hermiticity/unitarity predicates.
pub const OP_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("fock dimension must be at least 2, got {0}")]
    FockDimension(usize),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("density matrix is not Hermitian: max |ρ - ρ†| = {0:.3e}")]
    NotHermitian(f64),
    #[error("density matrix trace deviates from 1 by {0:.3e}")]
    TraceDeviation(f64),
    #[error("density matrix has negative eigenvalue {0:.3e}")]
    NegativeEigenvalue(f64),
    #[error("thermal occupation n̄ must be ≥ 0, got {0}")]
    NegativeOccupation(f64),
    #[error("thermal distribution loses {lost:.3e} probability beyond {fock_dim} Fock states")]
    ThermalTruncation { lost: f64, fock_dim: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Pauli axis label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Which of the two ions an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ion {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderKind {
    Lower,
    Raise,
}

/// Relative sign of the two ions' motional coupling: `Plus` for in-phase
/// modes, `Minus` for anti-phase modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSign {
    Plus,
    Minus,
}

impl ModeSign {
    /// Coupling sign of each ion, `(+1, ±1)`.
    pub fn ion_signs(self) -> (f64, f64) {
        match self {
            ModeSign::Plus => (1.0, 1.0),
            ModeSign::Minus => (1.0, -1.0),
        }
    }
}

/// Dimensions of the composite space: two spins and an `fock_dim`-level
/// oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    pub fock_dim: usize,
}

impl HilbertSpec {
    pub fn new(fock_dim: usize) -> Result<Self, OperatorError> {
        if fock_dim < 2 {
            return Err(OperatorError::FockDimension(fock_dim));
        }
        Ok(Self { fock_dim })
    }

    /// Total dimension `4 N`.
    pub fn dim(&self) -> usize {
        4 * self.fock_dim
    }

    /// Composite index of `(s1, s2, n)`, Fock index fastest-varying.
    pub fn index_of(&self, s1: usize, s2: usize, n: usize) -> usize {
        debug_assert!(s1 < 2 && s2 < 2 && n < self.fock_dim);
        (2 * s1 + s2) * self.fock_dim + n
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn split_index(&self, idx: usize) -> (usize, usize, usize) {
        let n = idx % self.fock_dim;
        let spins = idx / self.fock_dim;
        (spins / 2, spins % 2, n)
    }
}

fn pauli_matrix(axis: Axis) -> Array2<C64> {
    let i = C64::i();
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    match axis {
        Axis::X => ndarray::array![[o, one], [one, o]],
        Axis::Y => ndarray::array![[o, -i], [i, o]],
        Axis::Z => ndarray::array![[one, o], [o, -one]],
    }
}

fn identity(dim: usize) -> Array2<C64> {
    Array2::eye(dim)
}

/// Kronecker product of two dense complex matrices.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.zip_mut_with(b, |o, &bkl| *o = aij * bkl);
        }
    }
    out
}

/// Dense operator on the composite space (or any square complex space).
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: Array2<C64>,
}

impl Operator {
    pub fn from_matrix(mat: Array2<C64>) -> Result<Self, OperatorError> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(OperatorError::NotSquare { rows: r, cols: c });
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self { mat: self.mat.t().mapv(|z| z.conj()) }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { mat: self.mat.mapv(|z| factor * z) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { mat: &self.mat - &other.mat }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self { mat: self.mat.dot(&other.mat) }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_deviation(&self.mat) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let gram = self.dagger().mul(self);
        let eye = identity(self.dim());
        (&gram.mat - &eye).iter().map(|z| z.norm()).fold(0.0, f64::max) <= tol
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self { mat: kron(&self.mat, &other.mat) }
    }
}

/// Maximum entrywise deviation from Hermiticity, `max |A - A†|`.
pub fn hermitian_deviation(mat: &Array2<C64>) -> f64 {
    let n = mat.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (mat[[i, j]] - mat[[j, i]].conj()).norm();
            if d > dev {
                dev = d;
            }
        }
    }
    dev
}

/// Pauli operator on one ion, tensored with identity on the other spin and
/// the motional mode. Hermitian and squares to the identity.
pub fn pauli(axis: Axis, ion: Ion, spec: HilbertSpec) -> Operator {
    let sigma = pauli_matrix(axis);
    let eye2 = identity(2);
    let spin = match ion {
        Ion::One => kron(&sigma, &eye2),
        Ion::Two => kron(&eye2, &sigma),
    };
    Operator { mat: kron(&spin, &identity(spec.fock_dim)) }
}

/// Single-spin Pauli matrix (for one-qubit schedules with no motional
/// factor).
pub fn pauli_single(axis: Axis) -> Operator {
    Operator { mat: pauli_matrix(axis) }
}

/// Truncated ladder operator tensored with the spin identities:
/// `⟨n-1|a|n⟩ = √n`, with `a†|N-1⟩ = 0` in the truncated space.
pub fn ladder(kind: LadderKind, spec: HilbertSpec) -> Operator {
    let n = spec.fock_dim;
    let mut a = Array2::zeros((n, n));
    for m in 1..n {
        a[[m - 1, m]] = C64::new((m as f64).sqrt(), 0.0);
    }
    if kind == LadderKind::Raise {
        a = a.t().mapv(|z| z.conj());
    }
    Operator { mat: kron(&identity(4), &a) }
}

/// Collective spin operator `S = σ_{x,1} ± σ_{x,2}`.
pub fn collective_spin(sign: ModeSign, spec: HilbertSpec) -> Operator {
    let (e1, e2) = sign.ion_signs();
    pauli(Axis::X, Ion::One, spec)
        .scaled(C64::new(e1, 0.0))
        .add(&pauli(Axis::X, Ion::Two, spec).scaled(C64::new(e2, 0.0)))
}

/// Signed collective spin flip `Σ_i ε_i σ±_i`, used to build individual
/// sideband interactions.
pub fn collective_flip(kind: LadderKind, sign: ModeSign, spec: HilbertSpec) -> Operator {
    let (e1, e2) = sign.ion_signs();
    let half = C64::new(0.5, 0.0);
    let phase = match kind {
        // σ+ = (σx + iσy)/2, σ- = (σx - iσy)/2
        LadderKind::Raise => C64::i(),
        LadderKind::Lower => -C64::i(),
    };
    let flip = |ion: Ion| {
        pauli(Axis::X, ion, spec)
            .add(&pauli(Axis::Y, ion, spec).scaled(phase))
            .scaled(half)
    };
    flip(Ion::One)
        .scaled(C64::new(e1, 0.0))
        .add(&flip(Ion::Two).scaled(C64::new(e2, 0.0)))
}

fn single_rotation_matrix(axis_op: &Array2<C64>, angle: f64) -> Array2<C64> {
    let c = C64::new((angle / 2.0).cos(), 0.0);
    let s = C64::new(0.0, -(angle / 2.0).sin());
    identity(2).mapv(|z| c * z) + axis_op.mapv(|z| s * z)
}

/// Instantaneous global rotation `exp(-i (angle/2) (σ_axis,1 + σ_axis,2))`,
/// identity on the motional factor.
pub fn instantaneous_rotation(axis: Axis, angle: f64, spec: HilbertSpec) -> Operator {
    let r = single_rotation_matrix(&pauli_matrix(axis), angle);
    Operator { mat: kron(&kron(&r, &r), &identity(spec.fock_dim)) }
}

/// Global rotation about the equatorial axis `cos φ·x + sin φ·y` by `angle`,
/// applied to both spins. Reduces to [`instantaneous_rotation`] about x at
/// `φ = 0`.
pub fn phase_rotation_with_phase(phase: f64, angle: f64, spec: HilbertSpec) -> Operator {
    let r = equatorial_rotation_matrix(phase, angle);
    Operator { mat: kron(&kron(&r, &r), &identity(spec.fock_dim)) }
}

/// 2x2 rotation about `cos φ·x + sin φ·y` by `angle`.
pub fn equatorial_rotation_matrix(phase: f64, angle: f64) -> Array2<C64> {
    let axis_op = pauli_matrix(Axis::X).mapv(|z| z * phase.cos())
        + pauli_matrix(Axis::Y).mapv(|z| z * phase.sin());
    single_rotation_matrix(&axis_op, angle)
}

/// Single-spin rotation about a Pauli axis.
pub fn rotation_single(axis: Axis, angle: f64) -> Operator {
    Operator { mat: single_rotation_matrix(&pauli_matrix(axis), angle) }
}

/// Single-spin rotation about `cos φ·x + sin φ·y`.
pub fn phase_rotation_single(phase: f64, angle: f64) -> Operator {
    Operator { mat: equatorial_rotation_matrix(phase, angle) }
}

/// Density matrix with the same index layout as [`Operator`].
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    rho: Array2<C64>,
}

/// Tolerances used by [`State::validate`].
pub const STATE_HERMITICITY_TOL: f64 = 1e-10;
pub const STATE_TRACE_TOL: f64 = 1e-9;
pub const STATE_EIGENVALUE_FLOOR: f64 = -1e-8;

impl State {
    /// Wrap a density matrix, checking Hermiticity, trace and positivity.
    pub fn from_density(rho: Array2<C64>) -> Result<Self, StateError> {
        let state = Self::from_density_unchecked(rho)?;
        state.validate()?;
        Ok(state)
    }

    /// Wrap a density matrix without running the (eigenvalue-costly)
    /// validation. Callers are expected to validate stored states.
    pub fn from_density_unchecked(rho: Array2<C64>) -> Result<Self, StateError> {
        let (r, c) = rho.dim();
        if r != c {
            return Err(OperatorError::NotSquare { rows: r, cols: c }.into());
        }
        Ok(Self { rho })
    }

    /// Pure state from a ket.
    pub fn pure(ket: &Array1<C64>) -> Self {
        let n = ket.len();
        let mut rho = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                rho[[i, j]] = ket[i] * ket[j].conj();
            }
        }
        Self { rho }
    }

    /// Composite basis state |s1 s2, n⟩⟨s1 s2, n|.
    pub fn basis(spec: HilbertSpec, s1: usize, s2: usize, n: usize) -> Self {
        let mut rho = Array2::zeros((spec.dim(), spec.dim()));
        let idx = spec.index_of(s1, s2, n);
        rho[[idx, idx]] = C64::new(1.0, 0.0);
        Self { rho }
    }

    /// Single-spin basis state (dimension 2).
    pub fn spin_basis(s: usize) -> Self {
        let mut rho = Array2::zeros((2, 2));
        rho[[s, s]] = C64::new(1.0, 0.0);
        Self { rho }
    }

    /// Spin product state |s1 s2⟩ with a thermal motional mode of mean
    /// occupation `nbar`. Occupancies are `p_n = n̄^n/(1+n̄)^{n+1}`,
    /// truncated and renormalized; fails if more than 1e-6 of the
    /// distribution lies beyond the truncation.
    pub fn thermal(spec: HilbertSpec, s1: usize, s2: usize, nbar: f64) -> Result<Self, StateError> {
        if nbar < 0.0 {
            return Err(StateError::NegativeOccupation(nbar));
        }
        let n = spec.fock_dim;
        let mut probs = vec![0.0f64; n];
        if nbar == 0.0 {
            probs[0] = 1.0;
        } else {
            let ratio = nbar / (1.0 + nbar);
            let mut p = 1.0 / (1.0 + nbar);
            for entry in probs.iter_mut() {
                *entry = p;
                p *= ratio;
            }
        }
        let total: f64 = probs.iter().sum();
        let lost = 1.0 - total;
        if lost >= 1e-6 {
            return Err(StateError::ThermalTruncation { lost, fock_dim: n });
        }
        let mut rho = Array2::zeros((spec.dim(), spec.dim()));
        for (m, &p) in probs.iter().enumerate() {
            let idx = spec.index_of(s1, s2, m);
            rho[[idx, idx]] = C64::new(p / total, 0.0);
        }
        Ok(Self { rho })
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn rho(&self) -> &Array2<C64> {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.diag().sum()
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &Operator) -> C64 {
        // Tr(ρ A) = Σ_ij ρ_ij A_ji
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += self.rho[[i, j]] * op.matrix()[[j, i]];
            }
        }
        acc
    }

    /// ρ → U ρ U†.
    pub fn apply_unitary(&self, u: &Operator) -> Self {
        let m = u.matrix().dot(&self.rho).dot(&u.dagger().into_matrix());
        Self { rho: m }
    }

    /// Trace out the motional factor, leaving the 4x4 spin density matrix.
    pub fn partial_trace_motion(&self, fock_dim: usize) -> Array2<C64> {
        assert_eq!(self.dim(), 4 * fock_dim, "state dimension does not match fock_dim");
        let mut spin = Array2::zeros((4, 4));
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for n in 0..fock_dim {
                    acc += self.rho[[a * fock_dim + n, b * fock_dim + n]];
                }
                spin[[a, b]] = acc;
            }
        }
        spin
    }

    /// Diagonal spin populations `(p_uu, p_ud, p_du, p_dd)` after tracing
    /// out motion. For dimension-2 states returns `(p_up, 0, 0, p_down)`.
    pub fn spin_populations(&self) -> [f64; 4] {
        if self.dim() == 2 {
            return [self.rho[[0, 0]].re, 0.0, 0.0, self.rho[[1, 1]].re];
        }
        let fock_dim = self.dim() / 4;
        let mut pops = [0.0f64; 4];
        for (a, pop) in pops.iter_mut().enumerate() {
            for n in 0..fock_dim {
                *pop += self.rho[[a * fock_dim + n, a * fock_dim + n]].re;
            }
        }
        pops
    }

    /// Mean Fock occupation of the motional mode.
    pub fn mean_fock(&self, fock_dim: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..4 {
            for n in 0..fock_dim {
                acc += n as f64 * self.rho[[a * fock_dim + n, a * fock_dim + n]].re;
            }
        }
        acc
    }

    /// Population in the top `levels` Fock states, used to monitor
    /// truncation adequacy.
    pub fn top_fock_occupancy(&self, fock_dim: usize, levels: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..4 {
            for n in fock_dim.saturating_sub(levels)..fock_dim {
                acc += self.rho[[a * fock_dim + n, a * fock_dim + n]].re;
            }
        }
        acc
    }

    /// Purity of the reduced spin state.
    pub fn spin_purity(&self, fock_dim: usize) -> f64 {
        let spin = self.partial_trace_motion(fock_dim);
        spin.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.rho)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.rho)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Check the density-matrix invariants: Hermitian within 1e-10, unit
    /// trace within 1e-9, eigenvalues above -1e-8.
    pub fn validate(&self) -> Result<(), StateError> {
        let herm = self.hermitian_deviation();
        if herm > STATE_HERMITICITY_TOL {
            return Err(StateError::NotHermitian(herm));
        }
        let tr = (self.trace() - C64::new(1.0, 0.0)).norm();
        if tr > STATE_TRACE_TOL {
            return Err(StateError::TraceDeviation(tr));
        }
        let min = self.min_eigenvalue();
        if min < STATE_EIGENVALUE_FLOOR {
            return Err(StateError::NegativeEigenvalue(min));
        }
        Ok(())
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input is assumed Hermitian; only its upper triangle is trusted.
pub fn hermitian_eigenvalues(mat: &Array2<C64>) -> Vec<f64> {
    let n = mat.nrows();
    let mut a = mat.clone();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-14 * scale;
    for _sweep in 0..40 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[[p, q]].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                let r = apq.norm();
                if r <= tol * 1e-2 {
                    continue;
                }
                let u = apq / r; // phase of the pivot
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns: col_p' = c col_p - s u* col_q ; col_q' = s col_p + c u* col_q
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * c - aiq * (u.conj() * s);
                    a[[i, q]] = aip * s + aiq * (u.conj() * c);
                }
                // Rows (conjugate transformation)
                for j in 0..n {
                    let apj = a[[p, j]];
                    let aqj = a[[q, j]];
                    a[[p, j]] = apj * c - aqj * (u * s);
                    a[[q, j]] = apj * s + aqj * (u * c);
                }
                // Clean the pivot explicitly; roundoff leaves ~1e-16 residue.
                a[[p, q]] = C64::new(0.0, 0.0);
                a[[q, p]] = C64::new(0.0, 0.0);
            }
        }
    }
    (0..n).map(|i| a[[i, i]].re).collect()
}
