//! Dense n-qubit statevectors and gate kernels.
//!
//! Amplitude index `i` encodes the basis state whose qubit `q` is bit `q` of
//! `i`. When a state is written as a tensor product the highest qubit is the
//! leftmost factor.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::{PauliString, PauliSum};

/// Tolerance for the normalization and unitarity contracts.
pub const NORM_TOL: f64 = 1e-10;

/// Branch probabilities below this are treated as numerically dead.
pub const DEAD_BRANCH: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    Hadamard,
    PauliX,
    PauliY,
    PauliZ,
    /// `diag(1, e^{i angle})`.
    Phase(f64),
    Swap,
    /// `exp(-i angle P / 2)`; letter `k` of the generator acts on target `k`.
    GeneratorRotation { generator: PauliString, angle: f64 },
    /// Unitary on the targets; local index bit `k` is target `k`.
    Unitary(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
    controls: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<usize>) -> Result<Self> {
        let arity = match &kind {
            GateKind::Hadamard | GateKind::PauliX | GateKind::PauliY | GateKind::PauliZ | GateKind::Phase(_) => 1,
            GateKind::Swap => 2,
            GateKind::GeneratorRotation { generator, .. } => generator.n_qubits(),
            GateKind::Unitary(m) => {
                if m.nrows() != m.ncols() || !m.nrows().is_power_of_two() {
                    return Err(Error::InvalidParameter(format!(
                        "gate matrix must be square with power-of-two size, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let deviation = linalg::unitarity_deviation(m);
                if deviation > NORM_TOL {
                    return Err(Error::NonUnitary { deviation });
                }
                m.nrows().trailing_zeros() as usize
            }
        };
        if targets.len() != arity {
            return Err(Error::InvalidParameter(format!(
                "gate acts on {arity} qubit(s) but {} target(s) were given",
                targets.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &q in targets.iter().chain(controls.iter()) {
            if !seen.insert(q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        Ok(Self { kind, targets, controls })
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::Hadamard, targets: vec![q], controls: vec![] }
    }

    pub fn x(q: usize) -> Self {
        Self { kind: GateKind::PauliX, targets: vec![q], controls: vec![] }
    }

    pub fn y(q: usize) -> Self {
        Self { kind: GateKind::PauliY, targets: vec![q], controls: vec![] }
    }

    pub fn z(q: usize) -> Self {
        Self { kind: GateKind::PauliZ, targets: vec![q], controls: vec![] }
    }

    pub fn phase(q: usize, angle: f64) -> Self {
        Self { kind: GateKind::Phase(angle), targets: vec![q], controls: vec![] }
    }

    pub fn swap(a: usize, b: usize) -> Result<Self> {
        Self::new(GateKind::Swap, vec![a, b], vec![])
    }

    /// `exp(-i angle P / 2)` with the string spanning qubits `0..P.n_qubits()`.
    pub fn rotation(generator: PauliString, angle: f64) -> Self {
        let targets = (0..generator.n_qubits()).collect();
        Self { kind: GateKind::GeneratorRotation { generator, angle }, targets, controls: vec![] }
    }

    pub fn rotation_on(targets: Vec<usize>, generator: PauliString, angle: f64) -> Result<Self> {
        Self::new(GateKind::GeneratorRotation { generator, angle }, targets, vec![])
    }

    pub fn unitary(targets: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        Self::new(GateKind::Unitary(matrix), targets, vec![])
    }

    /// Add control qubits; the gate then acts only where all controls are `|1>`.
    pub fn controlled(self, controls: &[usize]) -> Result<Self> {
        let mut all = self.controls;
        all.extend_from_slice(controls);
        Self::new(self.kind, self.targets, all)
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    /// Matrix on the targets alone (controls not included).
    pub fn local_matrix(&self) -> CMatrix {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match &self.kind {
            GateKind::Hadamard => CMatrix::from_row_slice(2, 2, &[s, s, s, -s]),
            GateKind::PauliX => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            GateKind::PauliY => CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
            GateKind::PauliZ => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
            GateKind::Phase(a) => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, Complex64::from_polar(1.0, *a)]),
            GateKind::Swap => {
                let mut m = CMatrix::zeros(4, 4);
                m[(0, 0)] = ONE;
                m[(1, 2)] = ONE;
                m[(2, 1)] = ONE;
                m[(3, 3)] = ONE;
                m
            }
            GateKind::GeneratorRotation { generator, angle } => {
                let p = generator.to_dense().expect("gate generators are small");
                let dim = p.nrows();
                linalg::identity(dim).map(|z| z * (angle / 2.0).cos()) - p.map(|z| z * i * (angle / 2.0).sin())
            }
            GateKind::Unitary(m) => m.clone(),
        }
    }

    /// Exact inverse: same targets and controls, adjoint action.
    pub fn adjoint(&self) -> Self {
        let kind = match &self.kind {
            GateKind::Phase(a) => GateKind::Phase(-a),
            GateKind::GeneratorRotation { generator, angle } => {
                GateKind::GeneratorRotation { generator: *generator, angle: -angle }
            }
            GateKind::Unitary(m) => GateKind::Unitary(m.adjoint()),
            other => other.clone(),
        };
        Self { kind, targets: self.targets.clone(), controls: self.controls.clone() }
    }

    /// Same gate with every qubit index shifted by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            kind: self.kind.clone(),
            targets: self.targets.iter().map(|q| q + offset).collect(),
            controls: self.controls.iter().map(|q| q + offset).collect(),
        }
    }

    fn check_range(&self, n_qubits: usize) -> Result<()> {
        for &q in self.targets.iter().chain(self.controls.iter()) {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        Ok(())
    }
}

/// Apply a gate in place to a raw (not necessarily normalized) amplitude buffer.
pub fn apply_gate_raw(amplitudes: &mut [Complex64], n_qubits: usize, gate: &Gate) -> Result<()> {
    let dim = 1usize << n_qubits;
    if amplitudes.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: amplitudes.len() });
    }
    gate.check_range(n_qubits)?;
    let cmask = gate.controls.iter().fold(0usize, |m, &q| m | (1 << q));
    let active = |i: usize| i & cmask == cmask;

    match &gate.kind {
        GateKind::PauliX => {
            let bit = 1usize << gate.targets[0];
            for i in 0..dim {
                if i & bit == 0 && active(i) {
                    amplitudes.swap(i, i | bit);
                }
            }
        }
        GateKind::PauliZ => {
            let bit = 1usize << gate.targets[0];
            for (i, a) in amplitudes.iter_mut().enumerate() {
                if i & bit != 0 && active(i) {
                    *a = -*a;
                }
            }
        }
        GateKind::Phase(angle) => {
            let bit = 1usize << gate.targets[0];
            let ph = Complex64::from_polar(1.0, *angle);
            for (i, a) in amplitudes.iter_mut().enumerate() {
                if i & bit != 0 && active(i) {
                    *a *= ph;
                }
            }
        }
        GateKind::Swap => {
            let (ba, bb) = (1usize << gate.targets[0], 1usize << gate.targets[1]);
            for i in 0..dim {
                if i & ba != 0 && i & bb == 0 && active(i) {
                    amplitudes.swap(i, (i & !ba) | bb);
                }
            }
        }
        GateKind::GeneratorRotation { generator, angle } => {
            let full = embed_string(generator, &gate.targets);
            let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            let minus_i_s = Complex64::new(0.0, -s);
            let src = amplitudes.to_vec();
            for (i, &a) in src.iter().enumerate() {
                if !active(i) {
                    continue;
                }
                let (phase, j) = full.apply_to_basis(i);
                amplitudes[i] -= a * (1.0 - c);
                amplitudes[j] += minus_i_s * phase * a;
            }
        }
        GateKind::Hadamard | GateKind::PauliY | GateKind::Unitary(_) => {
            apply_dense_kernel(amplitudes, dim, &gate.targets, cmask, &gate.local_matrix());
        }
    }
    Ok(())
}

/// Place a string over `targets` into a full-register mask representation.
fn embed_string(generator: &PauliString, targets: &[usize]) -> PauliString {
    let n = targets.iter().copied().max().map_or(0, |m| m + 1);
    let ops: Vec<_> = (0..generator.n_qubits()).map(|k| (targets[k], generator.letter(k))).collect();
    PauliString::from_ops(n, &ops).expect("targets were range checked")
}

fn apply_dense_kernel(amplitudes: &mut [Complex64], dim: usize, targets: &[usize], cmask: usize, m: &CMatrix) {
    let k = targets.len();
    let local = 1usize << k;
    let tmask = targets.iter().fold(0usize, |acc, &q| acc | (1 << q));
    let offsets: Vec<usize> = (0..local)
        .map(|l| (0..k).filter(|&b| (l >> b) & 1 == 1).fold(0usize, |acc, b| acc | (1 << targets[b])))
        .collect();
    let mut gathered = vec![ZERO; local];
    for base in 0..dim {
        if base & tmask != 0 || base & cmask != cmask {
            continue;
        }
        for (g, &off) in gathered.iter_mut().zip(&offsets) {
            *g = amplitudes[base | off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (c, &g) in gathered.iter().enumerate() {
                acc += m[(r, c)] * g;
            }
            amplitudes[base | off] = acc;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub qubit: usize,
    pub outcome: u8,
    /// Born probability of `outcome` before the measurement.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0).expect("index 0 is always valid")
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    /// Equal superposition `H^{(x)n} |0>`.
    pub fn uniform(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self { n_qubits, amplitudes: vec![a; dim] }
    }

    /// Accept amplitudes that are already normalized within [`NORM_TOL`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = Self::qubits_for_len(amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("amplitudes have norm {norm}, expected 1")));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Normalize arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = Self::qubits_for_len(amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if norm < DEAD_BRANCH.sqrt() {
            return Err(Error::ZeroNorm { norm });
        }
        Ok(Self { n_qubits, amplitudes: amplitudes.into_iter().map(|a| a / norm).collect() })
    }

    pub(crate) fn from_raw(n_qubits: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1usize << n_qubits);
        Self { n_qubits, amplitudes }
    }

    fn qubits_for_len(len: usize) -> Result<usize> {
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("amplitude count {len} is not a power of two")));
        }
        Ok(len.trailing_zeros() as usize)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `U |psi>` for the full-register embedding of `gate`.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        apply_gate_raw(&mut self.amplitudes, self.n_qubits, gate)
    }

    pub fn with_gate(mut self, gate: &Gate) -> Result<Self> {
        self.apply_gate(gate)?;
        Ok(self)
    }

    pub fn apply_gates<'a, I>(&mut self, gates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// Multiply by a dense `2^n x 2^n` unitary.
    pub fn apply_matrix(&mut self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: m.nrows() });
        }
        self.amplitudes = linalg::mat_vec(m, &self.amplitudes);
        Ok(())
    }

    /// `(P(0), P(1))` for `qubit`.
    pub fn qubit_probabilities(&self, qubit: usize) -> Result<(f64, f64)> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange { index: qubit, n_qubits: self.n_qubits });
        }
        let bit = 1usize << qubit;
        let (mut p0, mut p1) = (0.0, 0.0);
        for (i, a) in self.amplitudes.iter().enumerate() {
            if i & bit == 0 {
                p0 += a.norm_sqr();
            } else {
                p1 += a.norm_sqr();
            }
        }
        Ok((p0, p1))
    }

    /// Renormalized projection onto `qubit = outcome`, with its Born probability.
    pub fn project(&self, qubit: usize, outcome: u8) -> Result<(f64, StateVector)> {
        let (p0, p1) = self.qubit_probabilities(qubit)?;
        let p = if outcome == 0 { p0 } else { p1 };
        if p < DEAD_BRANCH {
            return Err(Error::DeadState { p0, p1 });
        }
        let bit = 1usize << qubit;
        let want = if outcome == 0 { 0 } else { bit };
        let scale = 1.0 / p.sqrt();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| if i & bit == want { a * scale } else { ZERO })
            .collect();
        Ok((p, StateVector { n_qubits: self.n_qubits, amplitudes }))
    }

    /// Projective Z-basis measurement of one qubit with Born sampling.
    pub fn measure_qubit<R: Rng + ?Sized>(&self, qubit: usize, rng: &mut R) -> Result<(MeasurementRecord, StateVector)> {
        let (p0, p1) = self.qubit_probabilities(qubit)?;
        if p0 < DEAD_BRANCH && p1 < DEAD_BRANCH {
            return Err(Error::DeadState { p0, p1 });
        }
        let u: f64 = rng.random();
        let outcome = if u * (p0 + p1) < p0 { 0 } else { 1 };
        let (probability, state) = self.project(qubit, outcome)?;
        Ok((MeasurementRecord { qubit, outcome, probability: probability / (p0 + p1) }, state))
    }

    /// `<psi| O |psi>` for a Hermitian Pauli sum.
    pub fn expectation(&self, observable: &PauliSum) -> Result<f64> {
        if observable.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: observable.n_qubits() });
        }
        let mut acc = ZERO;
        for (c, s) in observable.terms() {
            for (col, &a) in self.amplitudes.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let (phase, row) = s.apply_to_basis(col);
                acc += self.amplitudes[row].conj() * phase * a * *c;
            }
        }
        Ok(acc.re)
    }

    /// `<self|other>`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm())
    }

    /// `self (x) low`: `self` occupies the high qubits.
    pub fn kron(&self, low: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.dim() * low.dim());
        for &h in &self.amplitudes {
            for &l in &low.amplitudes {
                amplitudes.push(h * l);
            }
        }
        StateVector { n_qubits: self.n_qubits + low.n_qubits, amplitudes }
    }

    /// Block of amplitudes whose high bits (above `n_low`) equal `high`, unnormalized.
    pub fn low_block(&self, n_low: usize, high: usize) -> Vec<Complex64> {
        let dim_low = 1usize << n_low;
        self.amplitudes[high * dim_low..(high + 1) * dim_low].to_vec()
    }
}

fn norm_of(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}
