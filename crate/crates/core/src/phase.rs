//! Phase detection: the quantum Fourier transform, phase estimation (full
//! register and iterative) and the rodeo algorithm.
//!
//! Registers are laid out with the system on the low qubits and the
//! ancillas above it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::{PauliSum, Spectrum};
use crate::rng::{self, StreamRng};
use crate::statevector::{Gate, StateVector, DEAD_BRANCH};
use crate::stats;

/// Unitarity tolerance for explicit phase unitaries.
pub const UNITARY_TOL: f64 = 1e-10;

/// Residual `||U psi - e^{i phi} psi||` above which a state is not an eigenstate.
pub const EIGENSTATE_TOL: f64 = 1e-6;

/// Phase `theta` in `[0, 1)` of `exp(-i E dt) = exp(2 pi i theta)`.
pub fn phase_of_energy(energy: f64, dt: f64) -> f64 {
    (-energy * dt / (2.0 * PI)).rem_euclid(1.0)
}

/// Energy for a phase, taking `theta` in `(-1/2, 1/2]` as the principal branch.
pub fn energy_of_phase(theta: f64, dt: f64) -> f64 {
    let mut t = theta.rem_euclid(1.0);
    if t > 0.5 {
        t -= 1.0;
    }
    -2.0 * PI * t / dt
}

/// Signed distance between two phases on the unit circle, in `[-1/2, 1/2)`.
pub fn circular_difference(a: f64, b: f64) -> f64 {
    (a - b + 0.5).rem_euclid(1.0) - 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSource {
    Hamiltonian { h: PauliSum, dt: f64 },
    Matrix,
}

/// The unitary whose eigenphases are read out.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseUnitary {
    source: PhaseSource,
    n_system_qubits: usize,
    matrix: CMatrix,
}

impl PhaseUnitary {
    /// `U = exp(-i H dt)`.
    pub fn from_hamiltonian(h: PauliSum, dt: f64) -> Result<Self> {
        if !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be finite, got {dt}")));
        }
        let matrix = linalg::expm_hermitian(&h.to_dense()?, dt);
        Ok(Self { n_system_qubits: h.n_qubits(), source: PhaseSource::Hamiltonian { h, dt }, matrix })
    }

    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "phase unitary must be square with power-of-two size >= 2, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = linalg::unitarity_deviation(&matrix);
        if deviation > UNITARY_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        let n = dim.trailing_zeros() as usize;
        linalg::check_dense_limit(n)?;
        Ok(Self { source: PhaseSource::Matrix, n_system_qubits: n, matrix })
    }

    /// Diagonal unitary with eigenvalues `exp(2 pi i theta_k)` on basis states.
    pub fn diagonal(phases: &[f64]) -> Result<Self> {
        let diag = phases.iter().map(|&t| Complex64::from_polar(1.0, 2.0 * PI * t)).collect::<Vec<_>>();
        Self::from_matrix(CMatrix::from_diagonal(&linalg::CVector::from_vec(diag)))
    }

    pub fn source(&self) -> &PhaseSource {
        &self.source
    }

    pub fn n_system_qubits(&self) -> usize {
        self.n_system_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `U^(2^j)` by repeated squaring.
    pub fn power_of_two(&self, j: usize) -> CMatrix {
        let mut m = self.matrix.clone();
        for _ in 0..j {
            m = &m * &m;
        }
        m
    }

    /// Eigenphases in `[0, 1)` for Hamiltonian-sourced unitaries, ordered by energy.
    pub fn eigenphases(&self) -> Option<Result<Vec<f64>>> {
        match &self.source {
            PhaseSource::Hamiltonian { h, dt } => Some(
                h.exact_spectrum().map(|s| s.eigenvalues.iter().map(|&e| phase_of_energy(e, *dt)).collect()),
            ),
            PhaseSource::Matrix => None,
        }
    }

    /// `||U psi - e^{i phi} psi||` with the best-fitting phase.
    pub fn eigenstate_residual(&self, state: &StateVector) -> Result<f64> {
        if state.n_qubits() != self.n_system_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_system_qubits, found: state.n_qubits() });
        }
        let u_psi = linalg::mat_vec(&self.matrix, state.amplitudes());
        let overlap: Complex64 = state.amplitudes().iter().zip(&u_psi).map(|(a, b)| a.conj() * b).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
        Ok(u_psi.iter().zip(state.amplitudes()).map(|(b, a)| (b - phase * a).norm_sqr()).sum::<f64>().sqrt())
    }
}

/// Gates of the QFT on qubits `0..n`: a Hadamard and controlled-phase cascade
/// per qubit from the top down, then the reversing swaps.
pub fn qft_circuit(n: usize) -> Result<Vec<Gate>> {
    if n == 0 {
        return Err(Error::InvalidParameter("QFT needs at least one qubit".into()));
    }
    let mut gates = Vec::new();
    for target in (0..n).rev() {
        gates.push(Gate::h(target));
        for control in (0..target).rev() {
            let angle = 2.0 * PI * (1u64 << control) as f64 / (1u64 << (target + 1)) as f64;
            gates.push(Gate::phase(target, angle).controlled(&[control])?);
        }
    }
    for q in 0..n / 2 {
        gates.push(Gate::swap(q, n - 1 - q)?);
    }
    Ok(gates)
}

/// Exact adjoint of [`qft_circuit`].
pub fn inverse_qft_circuit(n: usize) -> Result<Vec<Gate>> {
    Ok(qft_circuit(n)?.iter().rev().map(Gate::adjoint).collect())
}

/// Dense matrix of a gate sequence on `n` qubits, built column by column.
pub fn circuit_matrix(gates: &[Gate], n: usize) -> Result<CMatrix> {
    linalg::check_dense_limit(n)?;
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut s = StateVector::basis(n, col)?;
        s.apply_gates(gates)?;
        m.set_column(col, &linalg::CVector::from_column_slice(s.amplitudes()));
    }
    Ok(m)
}

/// Exact Born distribution over the ancilla register.
#[derive(Debug, Clone, PartialEq)]
pub struct QPEResult {
    pub n_ancilla: usize,
    pub histogram: Vec<f64>,
}

impl QPEResult {
    pub fn probability(&self, k: usize) -> f64 {
        self.histogram.get(k).copied().unwrap_or(0.0)
    }

    pub fn argmax(&self) -> usize {
        self.histogram.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(0)
    }

    pub fn estimate(&self) -> f64 {
        self.argmax() as f64 / self.histogram.len() as f64
    }

    /// Root-mean-square circular distance of `k / 2^n` from `theta`.
    pub fn phase_spread(&self, theta: f64) -> f64 {
        let scale = self.histogram.len() as f64;
        self.histogram
            .iter()
            .enumerate()
            .map(|(k, p)| p * circular_difference(k as f64 / scale, theta).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn total(&self) -> f64 {
        self.histogram.iter().sum()
    }
}

/// A completed phase-estimation circuit, kept to sample collapsed system states.
#[derive(Debug, Clone, PartialEq)]
pub struct QpeRun {
    pub result: QPEResult,
    joint: StateVector,
    n_system: usize,
}

impl QpeRun {
    pub fn joint_state(&self) -> &StateVector {
        &self.joint
    }

    /// Normalized system state after reading `k` on the ancillas.
    pub fn collapsed_system(&self, k: usize) -> Result<StateVector> {
        if k >= self.result.histogram.len() {
            return Err(Error::InvalidParameter(format!("outcome {k} out of range")));
        }
        let p = self.result.histogram[k];
        if p < DEAD_BRANCH {
            return Err(Error::DeadState { p0: p, p1: 1.0 - p });
        }
        StateVector::normalized(self.joint.low_block(self.n_system, k))
    }

    /// Draw an ancilla outcome from the Born distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, StateVector)> {
        let u: f64 = rng.random::<f64>() * self.result.total();
        let mut acc = 0.0;
        let mut chosen = self.result.argmax();
        for (k, &p) in self.result.histogram.iter().enumerate() {
            acc += p;
            if p > 0.0 && u < acc {
                chosen = k;
                break;
            }
        }
        Ok((chosen, self.collapsed_system(chosen)?))
    }
}

/// Hadamards, the controlled `U^(2^j)` ladder and the inverse QFT on the ancillas.
pub fn qpe_circuit(u: &PhaseUnitary, n_ancilla: usize) -> Result<Vec<Gate>> {
    if n_ancilla == 0 {
        return Err(Error::InvalidParameter("phase estimation needs at least one ancilla".into()));
    }
    let ns = u.n_system_qubits();
    let targets: Vec<usize> = (0..ns).collect();
    let mut gates: Vec<Gate> = (0..n_ancilla).map(|j| Gate::h(ns + j)).collect();
    let mut power = u.matrix().clone();
    for j in 0..n_ancilla {
        if j > 0 {
            power = &power * &power;
        }
        gates.push(Gate::unitary(targets.clone(), power.clone())?.controlled(&[ns + j])?);
    }
    gates.extend(inverse_qft_circuit(n_ancilla)?.iter().map(|g| g.shifted(ns)));
    Ok(gates)
}

pub fn qpe(u: &PhaseUnitary, system_state: &StateVector, n_ancilla: usize) -> Result<QpeRun> {
    let ns = u.n_system_qubits();
    if system_state.n_qubits() != ns {
        return Err(Error::DimensionMismatch { expected: ns, found: system_state.n_qubits() });
    }
    let mut joint = StateVector::zero(n_ancilla).kron(system_state);
    joint.apply_gates(&qpe_circuit(u, n_ancilla)?)?;
    let histogram = (0..1usize << n_ancilla)
        .map(|k| joint.low_block(ns, k).iter().map(|a| a.norm_sqr()).sum())
        .collect();
    Ok(QpeRun { result: QPEResult { n_ancilla, histogram }, joint, n_system: ns })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpeRound {
    pub round: usize,
    pub digit: u8,
    /// Probability of reading 0 on this round's ancilla.
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpeResult {
    /// Rounds in execution order; round `j` reads digit `k_j`.
    pub rounds: Vec<IpeRound>,
}

impl IpeResult {
    /// The integer `k = sum_j k_j 2^j`.
    pub fn value(&self) -> usize {
        self.rounds.iter().map(|r| (r.digit as usize) << r.round).sum()
    }

    pub fn estimate(&self) -> f64 {
        self.value() as f64 / (1usize << self.rounds.len()) as f64
    }

    /// Digits `k_{n-1} ... k_0`, most significant first.
    pub fn bit_string(&self) -> String {
        self.rounds.iter().rev().map(|r| if r.digit == 1 { '1' } else { '0' }).collect()
    }
}

/// Read the phase digits one at a time with a single recycled ancilla.
///
/// Round `j` applies controlled `U^(2^(n-j-1))`, then removes the phase of the
/// digits already read before the final Hadamard.
pub fn ipe<R: Rng + ?Sized>(
    u: &PhaseUnitary,
    eigenstate: &StateVector,
    n_digits: usize,
    rng: &mut R,
    check_eigenstate: bool,
) -> Result<IpeResult> {
    let ns = u.n_system_qubits();
    if eigenstate.n_qubits() != ns {
        return Err(Error::DimensionMismatch { expected: ns, found: eigenstate.n_qubits() });
    }
    if n_digits == 0 {
        return Err(Error::InvalidParameter("iterative phase estimation needs at least one digit".into()));
    }
    if check_eigenstate {
        let residual = u.eigenstate_residual(eigenstate)?;
        if residual > EIGENSTATE_TOL {
            return Err(Error::NotEigenstate { residual });
        }
    }
    let targets: Vec<usize> = (0..ns).collect();
    let powers: Vec<CMatrix> = {
        let mut p = vec![u.matrix().clone()];
        for _ in 1..n_digits {
            let last = p.last().expect("non-empty");
            p.push(last * last);
        }
        p
    };
    let mut system = eigenstate.clone();
    let mut rounds: Vec<IpeRound> = Vec::with_capacity(n_digits);
    for j in 0..n_digits {
        let correction: f64 =
            rounds.iter().map(|r| r.digit as f64 * 0.5f64.powi((j - r.round + 1) as i32)).sum::<f64>();
        let mut joint = StateVector::zero(1).kron(&system);
        joint.apply_gate(&Gate::h(ns))?;
        joint.apply_gate(&Gate::unitary(targets.clone(), powers[n_digits - j - 1].clone())?.controlled(&[ns])?)?;
        joint.apply_gate(&Gate::phase(ns, -2.0 * PI * correction))?;
        joint.apply_gate(&Gate::h(ns))?;
        let (record, collapsed) = joint.measure_qubit(ns, rng)?;
        let p0 = joint.qubit_probabilities(ns)?.0;
        system = StateVector::normalized(collapsed.low_block(ns, record.outcome as usize))?;
        rounds.push(IpeRound { round: j, digit: record.outcome, p0 });
    }
    Ok(IpeResult { rounds })
}

/// Outcome counts over `k` for `runs` independent seeded executions.
pub fn ipe_histogram(u: &PhaseUnitary, eigenstate: &StateVector, n_digits: usize, runs: usize, seed: u64) -> Result<Vec<u64>> {
    let values = (0..runs as u64)
        .into_par_iter()
        .map(|r| ipe(u, eigenstate, n_digits, &mut rng::stream(seed, r), false).map(|res| res.value()))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; 1 << n_digits];
    for v in values {
        counts[v] += 1;
    }
    Ok(counts)
}

/// Cached spectral data for repeated `exp(-i H t)` in rodeo cycles.
#[derive(Debug, Clone)]
pub struct RodeoEngine {
    spectrum: Spectrum,
    values: Vec<f64>,
    vectors: CMatrix,
    n_qubits: usize,
}

impl RodeoEngine {
    pub fn new(h: &PauliSum) -> Result<Self> {
        let (values, vectors) = linalg::hermitian_eigh(&h.to_dense()?);
        Ok(Self { spectrum: h.exact_spectrum()?, values, vectors, n_qubits: h.n_qubits() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn propagator(&self, t: f64) -> CMatrix {
        linalg::propagator_from_eigh(&self.values, &self.vectors, t)
    }

    /// Ancilla circuit before measurement; the ancilla is the top qubit.
    fn cycle_state(&self, energy: f64, t: f64, state: &StateVector) -> Result<StateVector> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: state.n_qubits() });
        }
        let n = self.n_qubits;
        let mut joint = StateVector::zero(1).kron(state);
        joint.apply_gate(&Gate::h(n))?;
        joint.apply_gate(&Gate::unitary((0..n).collect(), self.propagator(t))?.controlled(&[n])?)?;
        joint.apply_gate(&Gate::phase(n, energy * t))?;
        joint.apply_gate(&Gate::h(n))?;
        Ok(joint)
    }

    /// Exact success probability and the renormalized success branch, if alive.
    pub fn success_branch(&self, energy: f64, t: f64, state: &StateVector) -> Result<(f64, Option<StateVector>)> {
        let joint = self.cycle_state(energy, t, state)?;
        let p0 = joint.qubit_probabilities(self.n_qubits)?.0;
        if p0 < DEAD_BRANCH {
            return Ok((p0, None));
        }
        let (_, projected) = joint.project(self.n_qubits, 0)?;
        Ok((p0, Some(StateVector::normalized(projected.low_block(self.n_qubits, 0))?)))
    }
}

/// One measured cycle. Returns the success flag, the renormalized system
/// state on the observed branch and the exact success probability.
pub fn rodeo_cycle<R: Rng + ?Sized>(
    engine: &RodeoEngine,
    energy: f64,
    t: f64,
    state: &StateVector,
    rng: &mut R,
) -> Result<(bool, StateVector, f64)> {
    let n = engine.n_qubits();
    let joint = engine.cycle_state(energy, t, state)?;
    let p0 = joint.qubit_probabilities(n)?.0;
    let (record, collapsed) = joint.measure_qubit(n, rng)?;
    let post = StateVector::normalized(collapsed.low_block(n, record.outcome as usize))?;
    Ok((record.outcome == 0, post, p0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RodeoMode {
    /// Measure the ancilla with the RNG every cycle.
    #[default]
    Sampled,
    /// Follow the success branch and weight the trial by its exact probability.
    ExactBorn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeSchedule {
    /// Every cycle draws `t_k ~ N(0, sigma^2)`.
    #[default]
    Constant,
    /// Cycle `k` (from 1) draws with standard deviation `sigma / 2^(k-1)`.
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodeoConfig {
    pub energy: f64,
    pub sigma: f64,
    pub n_cycles: usize,
    pub n_trials: usize,
    pub seed: u64,
    /// Offset of the first per-trial RNG stream.
    pub stream: u64,
    pub mode: RodeoMode,
    pub schedule: TimeSchedule,
}

impl RodeoConfig {
    pub fn new(energy: f64, sigma: f64, n_cycles: usize, n_trials: usize, seed: u64) -> Result<Self> {
        let c = Self {
            energy,
            sigma,
            n_cycles,
            n_trials,
            seed,
            stream: 0,
            mode: RodeoMode::default(),
            schedule: TimeSchedule::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_mode(mut self, mode: RodeoMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_schedule(mut self, schedule: TimeSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_energy(mut self, energy: f64) -> Self {
        self.energy = energy;
        self
    }

    pub fn with_cycles(mut self, n_cycles: usize) -> Self {
        self.n_cycles = n_cycles;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.energy.is_finite() {
            return Err(Error::InvalidParameter(format!("target energy must be finite, got {}", self.energy)));
        }
        if self.n_cycles == 0 {
            return Err(Error::InvalidParameter("rodeo needs at least one cycle".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidParameter("rodeo needs at least one trial".into()));
        }
        Ok(())
    }

    fn cycle_sigma(&self, k: usize) -> f64 {
        match self.schedule {
            TimeSchedule::Constant => self.sigma,
            TimeSchedule::Decreasing => self.sigma / 2f64.powi(k as i32),
        }
    }

    /// Cycle times of trial `trial`, drawn from its own stream.
    pub fn draw_times(&self, trial: u64) -> (Vec<f64>, StreamRng) {
        let mut r = rng::stream(self.seed, self.stream + trial);
        let times = (0..self.n_cycles)
            .map(|k| Normal::new(0.0, self.cycle_sigma(k)).expect("sigma validated").sample(&mut r))
            .collect();
        (times, r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub times: Vec<f64>,
    /// 0 or 1 when sampled; the exact all-success probability otherwise.
    pub success: f64,
    /// Weight of the target eigenspace in the surviving state, if any.
    pub target_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RodeoReport {
    pub mean_success: f64,
    pub standard_error: f64,
    /// Eigenvalue of the exact spectrum nearest the target energy.
    pub target_energy: f64,
    /// Target-eigenspace weight of the post-selected ensemble.
    pub ensemble_fidelity: Option<f64>,
    pub trials: Vec<TrialRecord>,
}

/// Eigenvalues within this distance of the nearest one form the target eigenspace.
const EIGENSPACE_TOL: f64 = 1e-8;

fn run_trial(engine: &RodeoEngine, config: &RodeoConfig, initial: &StateVector, trial: u64, target: f64) -> Result<TrialRecord> {
    let (times, mut r) = config.draw_times(trial);
    let mut state = initial.clone();
    let mut success = 1.0;
    let mut alive = true;
    for &t in &times {
        match config.mode {
            RodeoMode::Sampled => {
                let (ok, post, _) = rodeo_cycle(engine, config.energy, t, &state, &mut r)?;
                if !ok {
                    alive = false;
                    success = 0.0;
                    break;
                }
                state = post;
            }
            RodeoMode::ExactBorn => {
                let (p0, post) = engine.success_branch(config.energy, t, &state)?;
                success *= p0;
                match post {
                    Some(s) => state = s,
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
        }
    }
    let target_weight =
        if alive { Some(engine.spectrum().eigenspace_weight(&state, target, EIGENSPACE_TOL)?) } else { None };
    Ok(TrialRecord { times, success, target_weight })
}

/// Run `n_trials` independent rodeo trials at one target energy.
pub fn rodeo_run(engine: &RodeoEngine, config: &RodeoConfig, initial: &StateVector) -> Result<RodeoReport> {
    config.validate()?;
    if initial.n_qubits() != engine.n_qubits() {
        return Err(Error::DimensionMismatch { expected: engine.n_qubits(), found: initial.n_qubits() });
    }
    let spectrum = engine.spectrum();
    let target = spectrum.eigenvalues[spectrum.nearest(config.energy)];
    let trials = (0..config.n_trials as u64)
        .into_par_iter()
        .map(|k| run_trial(engine, config, initial, k, target))
        .collect::<Result<Vec<_>>>()?;
    let successes: Vec<f64> = trials.iter().map(|t| t.success).collect();
    let (mean_success, standard_error) = stats::mean_and_stderr(&successes);
    let (mut wsum, mut fsum) = (0.0, 0.0);
    for t in &trials {
        if let Some(w) = t.target_weight {
            wsum += t.success;
            fsum += t.success * w;
        }
    }
    let ensemble_fidelity = if wsum > 0.0 { Some(fsum / wsum) } else { None };
    Ok(RodeoReport { mean_success, standard_error, target_energy: target, ensemble_fidelity, trials })
}

/// `P_n(E)` for an eigenstate at detuning `delta = E_j - E`:
/// `[(1 + exp(-delta^2 sigma^2 / 2)) / 2]^n`.
pub fn rodeo_success_probability(delta: f64, sigma: f64, n_cycles: usize) -> f64 {
    (0.5 * (1.0 + (-0.5 * delta * delta * sigma * sigma).exp())).powi(n_cycles as i32)
}

/// Weighted `P_n(E)` for an initial state with eigenspace weights.
pub fn rodeo_expected_success(spectrum: &Spectrum, initial: &StateVector, energy: f64, sigma: f64, n_cycles: usize) -> Result<f64> {
    let mut total = 0.0;
    for (e, v) in spectrum.eigenvalues.iter().zip(&spectrum.eigenvectors) {
        total += v.inner_product(initial)?.norm_sqr() * rodeo_success_probability(e - energy, sigma, n_cycles);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub energy: f64,
    pub p_hat: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Peak center, refined by a parabola through the three top points.
    pub energy: f64,
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence, when both crossings lie on the grid.
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub n_cycles: usize,
    pub grid: Vec<ScanPoint>,
    pub peaks: Vec<Peak>,
}

/// Run the rodeo at every grid energy with common trial times.
pub fn rodeo_scan(engine: &RodeoEngine, initial: &StateVector, e_grid: &[f64], config: &RodeoConfig) -> Result<ScanResult> {
    if e_grid.is_empty() {
        return Err(Error::InvalidParameter("energy grid is empty".into()));
    }
    if e_grid.iter().any(|e| !e.is_finite()) || e_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("energy grid must be finite and strictly ascending".into()));
    }
    let grid = e_grid
        .iter()
        .map(|&e| {
            let r = rodeo_run(engine, &config.with_energy(e), initial)?;
            Ok(ScanPoint { energy: e, p_hat: r.mean_success, stderr: r.standard_error })
        })
        .collect::<Result<Vec<_>>>()?;
    let peaks = detect_peaks(&grid, config.n_cycles);
    Ok(ScanResult { n_cycles: config.n_cycles, grid, peaks })
}

/// Smallest prominence accepted when the pooled standard error vanishes.
const MIN_PROMINENCE: f64 = 1e-9;

/// Local maxima whose topographic prominence and height above the `1/2^n`
/// background both reach three pooled standard errors.
pub fn detect_peaks(grid: &[ScanPoint], n_cycles: usize) -> Vec<Peak> {
    let n = grid.len();
    if n == 0 {
        return Vec::new();
    }
    let p: Vec<f64> = grid.iter().map(|g| g.p_hat).collect();
    let background = 0.5f64.powi(n_cycles as i32);
    let pooled = (grid.iter().map(|g| g.stderr * g.stderr).sum::<f64>() / n as f64).sqrt();
    let threshold = (3.0 * pooled).max(MIN_PROMINENCE);

    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        // Treat a run of equal values as one candidate.
        let mut j = i;
        while j + 1 < n && p[j + 1] == p[i] {
            j += 1;
        }
        let left_lower = i == 0 || p[i - 1] < p[i];
        let right_lower = j + 1 == n || p[j + 1] < p[i];
        if left_lower && right_lower && !(i == 0 && j + 1 == n) {
            let top = p[i];
            let base_left = base_min(&p, i, true);
            let base_right = base_min(&p, j, false);
            let prominence = top - base_left.max(base_right);
            if prominence >= threshold && top - background >= threshold {
                let c = (i + j) / 2;
                let level = top - 0.5 * prominence;
                let width = match (crossing(grid, i, level, true), crossing(grid, j, level, false)) {
                    (Some(l), Some(r)) => Some(r - l),
                    _ => None,
                };
                peaks.push(Peak { energy: refine_center(grid, c), height: top, prominence, width });
            }
        }
        i = j + 1;
    }
    peaks
}

/// Lowest value between `from` and the nearest strictly higher point (or the edge).
fn base_min(p: &[f64], from: usize, leftward: bool) -> f64 {
    let top = p[from];
    let mut lowest = top;
    let mut k = from;
    loop {
        if leftward {
            if k == 0 {
                break;
            }
            k -= 1;
        } else {
            k += 1;
            if k >= p.len() {
                break;
            }
        }
        if p[k] > top {
            break;
        }
        lowest = lowest.min(p[k]);
    }
    lowest
}

/// Interpolated energy where the curve first drops below `level` walking away from `from`.
fn crossing(grid: &[ScanPoint], from: usize, level: f64, leftward: bool) -> Option<f64> {
    let mut k = from;
    loop {
        let next = if leftward { k.checked_sub(1)? } else { Some(k + 1).filter(|&x| x < grid.len())? };
        let (a, b) = (grid[k], grid[next]);
        if b.p_hat > a.p_hat && b.p_hat > level {
            return None;
        }
        if b.p_hat <= level {
            let f = (a.p_hat - level) / (a.p_hat - b.p_hat);
            return Some(a.energy + f * (b.energy - a.energy));
        }
        k = next;
    }
}

fn refine_center(grid: &[ScanPoint], c: usize) -> f64 {
    if c == 0 || c + 1 >= grid.len() {
        return grid[c].energy;
    }
    let (l, m, r) = (grid[c - 1], grid[c], grid[c + 1]);
    let h = m.energy - l.energy;
    let uniform = ((r.energy - m.energy) - h).abs() <= 1e-9 * h.abs().max(1.0);
    let curvature = l.p_hat - 2.0 * m.p_hat + r.p_hat;
    if !uniform || curvature >= 0.0 {
        return m.energy;
    }
    let offset = 0.5 * (l.p_hat - r.p_hat) / curvature;
    m.energy + offset.clamp(-0.5, 0.5) * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::loglog_slope;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dft(n: usize) -> CMatrix {
        let dim = 1usize << n;
        CMatrix::from_fn(dim, dim, |k, m| {
            Complex64::from_polar(1.0 / (dim as f64).sqrt(), 2.0 * PI * (k * m) as f64 / dim as f64)
        })
    }

    #[test]
    fn one_qubit_qft_is_hadamard() {
        let gates = qft_circuit(1).unwrap();
        assert_eq!(gates, vec![Gate::h(0)]);
        assert!(qft_circuit(0).is_err());
    }

    #[test]
    fn qft_matches_dft_matrix() {
        for n in 1..=5 {
            let m = circuit_matrix(&qft_circuit(n).unwrap(), n).unwrap();
            assert!(linalg::max_abs_diff(&m, &dft(n)) < 1e-10, "n = {n}");
            let inv = circuit_matrix(&inverse_qft_circuit(n).unwrap(), n).unwrap();
            assert!(linalg::max_abs_diff(&inv, &dft(n).adjoint()) < 1e-10);
            assert!(linalg::unitarity_deviation(&m) < 1e-10);
        }
    }

    #[test]
    fn qft_of_zero_is_uniform() {
        let mut s = StateVector::zero(4);
        s.apply_gates(&qft_circuit(4).unwrap()).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a - c(0.25, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn dyadic_eigenphase_gives_point_mass() {
        let u = PhaseUnitary::diagonal(&[3.0 / 8.0, 0.0]).unwrap();
        let run = qpe(&u, &StateVector::basis(1, 0).unwrap(), 3).unwrap();
        assert!((run.result.probability(3) - 1.0).abs() < 1e-10);
        assert!((run.result.total() - 1.0).abs() < 1e-10);
        for n in 1..=6 {
            for k in 0..1usize << n {
                let theta = k as f64 / (1usize << n) as f64;
                let u = PhaseUnitary::diagonal(&[0.1, theta]).unwrap();
                let run = qpe(&u, &StateVector::basis(1, 1).unwrap(), n).unwrap();
                assert!((run.result.probability(k) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn qpe_histogram_matches_closed_form() {
        let theta: f64 = 0.2;
        let n = 4;
        let u = PhaseUnitary::diagonal(&[theta, 0.0]).unwrap();
        let run = qpe(&u, &StateVector::basis(1, 0).unwrap(), n).unwrap();
        let big_n = (1usize << n) as f64;
        for k in 0..1usize << n {
            let amp: Complex64 = (0..1usize << n)
                .map(|m| Complex64::from_polar(1.0 / big_n, -2.0 * PI * (k as f64 / big_n - theta) * m as f64))
                .sum();
            assert!((run.result.probability(k) - amp.norm_sqr()).abs() < 1e-12);
        }
        assert_eq!(run.result.argmax(), 3);
    }

    #[test]
    fn superposition_collapses_with_born_weights() {
        let u = PhaseUnitary::diagonal(&[0.125, 0.625]).unwrap();
        let (c0, c1) = (0.6f64, 0.8f64);
        let psi = StateVector::from_amplitudes(vec![c(c0, 0.0), c(0.0, c1)]).unwrap();
        let run = qpe(&u, &psi, 4).unwrap();
        assert!((run.result.probability(2) - c0 * c0).abs() < 1e-10);
        assert!((run.result.probability(10) - c1 * c1).abs() < 1e-10);
        let s2 = run.collapsed_system(2).unwrap();
        assert!((s2.fidelity(&StateVector::basis(1, 0).unwrap()).unwrap() - 1.0).abs() < 1e-10);
        let s10 = run.collapsed_system(10).unwrap();
        assert!((s10.fidelity(&StateVector::basis(1, 1).unwrap()).unwrap() - 1.0).abs() < 1e-10);
        let mut r = rng::stream(1, 0);
        let (k, s) = run.sample(&mut r).unwrap();
        assert!(k == 2 || k == 10);
        assert!(s.norm() > 0.999);
    }

    #[test]
    fn qpe_spread_shrinks_with_register() {
        // The Fejer-kernel tail makes the RMS spread fall like 2^(-n/2). With
        // theta = 1/3 the fractional offset of theta 2^n alternates between
        // 1/3 and 2/3, so the leakage is the same at every n.
        let theta = 1.0 / 3.0;
        let u = PhaseUnitary::diagonal(&[theta, 0.0]).unwrap();
        let ns: Vec<f64> = (3..=7).map(|n| n as f64).collect();
        let spreads: Vec<f64> = (3..=7)
            .map(|n| qpe(&u, &StateVector::basis(1, 0).unwrap(), n).unwrap().result.phase_spread(theta))
            .collect();
        assert!(spreads.windows(2).all(|w| w[1] < w[0]), "{spreads:?}");
        let xs: Vec<f64> = ns.iter().map(|n| 2f64.powf(*n)).collect();
        let slope = loglog_slope(&xs, &spreads);
        assert!(slope < -0.4 && slope > -0.6, "slope {slope}");
    }

    #[test]
    fn hamiltonian_phases_follow_energy_convention() {
        let h = PauliSum::from_labels(1, &[(0.7, "Z")]).unwrap();
        let dt = 0.9;
        let u = PhaseUnitary::from_hamiltonian(h.clone(), dt).unwrap();
        let phases = u.eigenphases().unwrap().unwrap();
        assert!((phases[0] - phase_of_energy(-0.7, dt)).abs() < 1e-12);
        assert!((energy_of_phase(phases[0], dt) + 0.7).abs() < 1e-12);
        assert!((energy_of_phase(phases[1], dt) - 0.7).abs() < 1e-12);
        assert!(u.eigenstate_residual(&StateVector::basis(1, 1).unwrap()).unwrap() < 1e-12);
        assert!(u.eigenstate_residual(&StateVector::uniform(1)).unwrap() > 0.1);
    }

    #[test]
    fn non_unitary_source_is_rejected() {
        let m = CMatrix::from_diagonal(&linalg::CVector::from_vec(vec![c(1.0, 0.0), c(0.5, 0.0)]));
        assert!(matches!(PhaseUnitary::from_matrix(m), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn ipe_reads_dyadic_digits_deterministically() {
        let u = PhaseUnitary::diagonal(&[5.0 / 16.0, 0.0]).unwrap();
        let psi = StateVector::basis(1, 0).unwrap();
        for seed in 0..10 {
            let res = ipe(&u, &psi, 4, &mut rng::stream(seed, 0), true).unwrap();
            assert_eq!(res.bit_string(), "0101");
            assert_eq!(res.value(), 5);
            assert!(res.rounds.iter().all(|r| r.p0 < 1e-12 || r.p0 > 1.0 - 1e-12));
        }
        let zero = PhaseUnitary::diagonal(&[0.0, 0.5]).unwrap();
        let res = ipe(&zero, &psi, 5, &mut rng::stream(0, 0), true).unwrap();
        assert_eq!(res.value(), 0);
    }

    #[test]
    fn ipe_rejects_superpositions_when_checking() {
        let u = PhaseUnitary::diagonal(&[0.25, 0.5]).unwrap();
        let r = ipe(&u, &StateVector::uniform(1), 3, &mut rng::stream(0, 0), true);
        assert!(matches!(r, Err(Error::NotEigenstate { .. })));
    }

    #[test]
    fn ipe_mode_matches_qpe_argmax() {
        let theta = 0.3;
        let u = PhaseUnitary::diagonal(&[theta, 0.0]).unwrap();
        let psi = StateVector::basis(1, 0).unwrap();
        let counts = ipe_histogram(&u, &psi, 4, 2000, 9).unwrap();
        let modal = counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0;
        assert_eq!(modal, 5);
        assert_eq!(modal, qpe(&u, &psi, 4).unwrap().result.argmax());
        assert_eq!(counts.iter().sum::<u64>(), 2000);
    }

    fn single_edge() -> PauliSum {
        PauliSum::from_labels(2, &[(0.5, "ZZ"), (-0.5, "II")]).unwrap()
    }

    #[test]
    fn cycle_on_eigenstate_succeeds_at_resonance() {
        let engine = RodeoEngine::new(&single_edge()).unwrap();
        let psi = StateVector::basis(2, 0b01).unwrap();
        let mut r = rng::stream(0, 0);
        for t in [0.3, -1.7, 5.0] {
            let (ok, post, p0) = rodeo_cycle(&engine, -1.0, t, &psi, &mut r).unwrap();
            assert!(ok && (p0 - 1.0).abs() < 1e-12);
            assert!((post.fidelity(&psi).unwrap() - 1.0).abs() < 1e-12);
            let (p, _) = engine.success_branch(-0.4, t, &psi).unwrap();
            assert!((p - ((-1.0f64 + 0.4) * t / 2.0).cos().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn success_branch_scales_components_by_cosines() {
        let engine = RodeoEngine::new(&single_edge()).unwrap();
        let psi = StateVector::uniform(2);
        let (e, t) = (-0.3, 1.3);
        let (p0, post) = engine.success_branch(e, t, &psi).unwrap();
        let post = post.unwrap();
        // Energies: |00>,|11> -> 0 and |01>,|10> -> -1.
        let energies = [0.0, -1.0, -1.0, 0.0];
        // Each component picks up exp(-i d t / 2) cos(d t / 2) with d = E_j - E.
        let raw: Vec<Complex64> = energies
            .iter()
            .map(|&ej: &f64| Complex64::from_polar(0.5 * ((ej - e) * t / 2.0).cos(), -(ej - e) * t / 2.0))
            .collect();
        let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
        assert!((p0 - norm).abs() < 1e-12);
        let want = StateVector::normalized(raw).unwrap();
        assert!((post.fidelity(&want).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dead_branch_ends_exact_trial() {
        let engine = RodeoEngine::new(&PauliSum::from_labels(1, &[(1.0, "Z")]).unwrap()).unwrap();
        let psi = StateVector::basis(1, 0).unwrap();
        // Detuning 2 with t = pi/2 gives cos^2(pi/2) = 0.
        let (p, post) = engine.success_branch(-1.0, PI / 2.0, &psi).unwrap();
        assert!(p < 1e-14 && post.is_none());
    }

    #[test]
    fn resonant_run_always_succeeds() {
        let engine = RodeoEngine::new(&single_edge()).unwrap();
        let psi = StateVector::basis(2, 0b10).unwrap();
        let cfg = RodeoConfig::new(-1.0, 2.0, 4, 200, 3).unwrap();
        let rep = rodeo_run(&engine, &cfg, &psi).unwrap();
        assert_eq!(rep.mean_success, 1.0);
        assert_eq!(rep.standard_error, 0.0);
        assert!((rep.ensemble_fidelity.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_mode_matches_per_trial_product() {
        let engine = RodeoEngine::new(&single_edge()).unwrap();
        let psi = StateVector::basis(2, 0).unwrap();
        let cfg = RodeoConfig::new(-0.5, 1.5, 3, 50, 8).unwrap().with_mode(RodeoMode::ExactBorn);
        let rep = rodeo_run(&engine, &cfg, &psi).unwrap();
        for t in &rep.trials {
            let want: f64 = t.times.iter().map(|&tk| ((0.0f64 + 0.5) * tk / 2.0).cos().powi(2)).product();
            assert!((t.success - want).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_mean_matches_formula() {
        let engine = RodeoEngine::new(&PauliSum::from_labels(1, &[(1.0, "Z")]).unwrap()).unwrap();
        let psi = StateVector::basis(1, 0).unwrap();
        let sigma = 1.0;
        let cfg = RodeoConfig::new(0.0, sigma, 3, 4000, 21).unwrap();
        let rep = rodeo_run(&engine, &cfg, &psi).unwrap();
        let want = rodeo_success_probability(1.0, sigma, 3);
        assert!((rep.mean_success - want).abs() <= 3.0 * rep.standard_error, "{} vs {want}", rep.mean_success);
    }

    #[test]
    fn runs_are_reproducible_and_order_independent() {
        let engine = RodeoEngine::new(&single_edge()).unwrap();
        let psi = StateVector::uniform(2);
        let cfg = RodeoConfig::new(-0.9, 1.0, 3, 64, 5).unwrap();
        let a = rodeo_run(&engine, &cfg, &psi).unwrap();
        let b = rodeo_run(&engine, &cfg, &psi).unwrap();
        assert_eq!(a, b);
        // Trial 10 of a run equals trial 0 of a run whose streams start at 10.
        let shifted = rodeo_run(&engine, &RodeoConfig { n_trials: 1, ..cfg }.with_stream(10), &psi).unwrap();
        assert_eq!(shifted.trials[0], a.trials[10]);
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(RodeoConfig::new(0.0, 0.0, 1, 1, 0).is_err());
        assert!(RodeoConfig::new(0.0, 1.0, 0, 1, 0).is_err());
        assert!(RodeoConfig::new(0.0, 1.0, 1, 0, 0).is_err());
    }

    #[test]
    fn decreasing_schedule_shrinks_times() {
        let cfg = RodeoConfig::new(0.0, 4.0, 6, 1, 0).unwrap().with_schedule(TimeSchedule::Decreasing);
        let draws: Vec<Vec<f64>> = (0..2000).map(|k| cfg.draw_times(k).0).collect();
        for k in 0..6 {
            let var = draws.iter().map(|d| d[k] * d[k]).sum::<f64>() / draws.len() as f64;
            let want = (4.0 / 2f64.powi(k as i32)).powi(2);
            assert!((var / want - 1.0).abs() < 0.15, "cycle {k}: {var} vs {want}");
        }
    }

    #[test]
    fn scan_finds_both_single_edge_levels() {
        let engine = RodeoEngine::new(&single_edge()).unwrap();
        let psi = StateVector::uniform(2);
        let grid: Vec<f64> = (0..61).map(|k| -2.0 + k as f64 * 0.05).collect();
        let cfg = RodeoConfig::new(0.0, 3.0, 4, 300, 2).unwrap().with_mode(RodeoMode::ExactBorn);
        let scan = rodeo_scan(&engine, &psi, &grid, &cfg).unwrap();
        assert_eq!(scan.peaks.len(), 2, "{:?}", scan.peaks);
        assert!((scan.peaks[0].energy + 1.0).abs() <= 0.05);
        assert!(scan.peaks[1].energy.abs() <= 0.05);
        for pk in &scan.peaks {
            assert!((pk.height - 0.5).abs() < 0.05);
        }
        assert!(scan.grid.iter().all(|g| (0.0..=1.0).contains(&g.p_hat) && g.stderr >= 0.0));
    }

    #[test]
    fn far_detuning_reaches_background() {
        let engine = RodeoEngine::new(&PauliSum::from_labels(1, &[(1.0, "Z")]).unwrap()).unwrap();
        let psi = StateVector::basis(1, 0).unwrap();
        let cfg = RodeoConfig::new(-1.0 + 20.0, 2.0, 3, 3000, 4).unwrap();
        let rep = rodeo_run(&engine, &cfg, &psi).unwrap();
        assert!((rep.mean_success - 0.125).abs() <= 3.0 * rep.standard_error);
    }

    #[test]
    fn peak_width_halves_when_sigma_doubles() {
        let engine = RodeoEngine::new(&PauliSum::from_labels(1, &[(1.0, "Z")]).unwrap()).unwrap();
        let psi = StateVector::basis(1, 1).unwrap();
        let grid: Vec<f64> = (0..401).map(|k| -3.0 + k as f64 * 0.01).collect();
        let width = |sigma: f64| {
            let cfg = RodeoConfig::new(0.0, sigma, 3, 400, 6).unwrap().with_mode(RodeoMode::ExactBorn);
            let scan = rodeo_scan(&engine, &psi, &grid, &cfg).unwrap();
            assert_eq!(scan.peaks.len(), 1);
            scan.peaks[0].width.unwrap()
        };
        let ratio = width(2.0) / width(4.0);
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn detector_ignores_flat_background() {
        let grid: Vec<ScanPoint> =
            (0..10).map(|k| ScanPoint { energy: k as f64, p_hat: 0.125, stderr: 0.01 }).collect();
        assert!(detect_peaks(&grid, 3).is_empty());
    }

    #[test]
    fn expected_success_weights_components() {
        let h = single_edge();
        let spectrum = h.exact_spectrum().unwrap();
        let psi = StateVector::uniform(2);
        let p = rodeo_expected_success(&spectrum, &psi, -1.0, 2.0, 3).unwrap();
        let want = 0.5 + 0.5 * rodeo_success_probability(1.0, 2.0, 3);
        assert!((p - want).abs() < 1e-12);
    }
}
