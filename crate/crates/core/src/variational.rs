//! Variational circuits built from involutory Pauli generators, exact
//! parameter-shift gradients, gradient descent, QAOA and continuous MaxCut.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::{Graph, Pauli, PauliString, PauliSum};
use crate::statevector::{Gate, StateVector};

/// Smallest `|sin alpha|` accepted by the parameter-shift rule.
pub const MIN_SHIFT_SINE: f64 = 1e-6;

/// One ansatz layer: `U(theta) = exp(-i theta P / 2)` followed by fixed gates.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub generator: PauliString,
    pub fixed: Vec<Gate>,
}

impl Layer {
    pub fn new(generator: PauliString, fixed: Vec<Gate>) -> Self {
        Self { generator, fixed }
    }

    pub fn rotation_only(generator: PauliString) -> Self {
        Self { generator, fixed: Vec::new() }
    }
}

/// `|theta> = V_L U_L(theta_L) ... V_1 U_1(theta_1) |psi_I>`
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    initial: StateVector,
    layers: Vec<Layer>,
}

impl Ansatz {
    pub fn new(initial: StateVector, layers: Vec<Layer>) -> Result<Self> {
        let n = initial.n_qubits();
        for layer in &layers {
            if layer.generator.n_qubits() != n {
                return Err(Error::DimensionMismatch { expected: n, found: layer.generator.n_qubits() });
            }
            for gate in &layer.fixed {
                if let Some(&q) = gate.targets().iter().chain(gate.controls()).find(|&&q| q >= n) {
                    return Err(Error::QubitOutOfRange { index: q, n_qubits: n });
                }
            }
        }
        Ok(Self { initial, layers })
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.initial.n_qubits()
    }
}

pub fn ansatz_state(ansatz: &Ansatz, theta: &[f64]) -> Result<StateVector> {
    if theta.len() != ansatz.n_parameters() {
        return Err(Error::DimensionMismatch { expected: ansatz.n_parameters(), found: theta.len() });
    }
    let mut state = ansatz.initial.clone();
    for (layer, &t) in ansatz.layers.iter().zip(theta) {
        state.apply_gate(&Gate::rotation(layer.generator, t))?;
        state.apply_gates(&layer.fixed)?;
    }
    Ok(state)
}

/// `C(theta) = <theta| h |theta>`
pub fn cost(ansatz: &Ansatz, theta: &[f64], h: &PauliSum) -> Result<f64> {
    if h.n_qubits() != ansatz.n_qubits() {
        return Err(Error::DimensionMismatch { expected: ansatz.n_qubits(), found: h.n_qubits() });
    }
    ansatz_state(ansatz, theta)?.expectation(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub components: Vec<f64>,
}

impl GradientVector {
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// `dC/dtheta_j = [C(theta + alpha e_j) - C(theta - alpha e_j)] / (2 sin alpha)`,
/// exact for every admissible `alpha` because each generator squares to one.
pub fn parameter_shift_gradient(ansatz: &Ansatz, theta: &[f64], h: &PauliSum, alpha: f64) -> Result<GradientVector> {
    let sin = alpha.sin();
    if !(sin.abs() > MIN_SHIFT_SINE) {
        return Err(Error::InvalidParameter(format!("shift alpha = {alpha} has |sin alpha| <= {MIN_SHIFT_SINE}")));
    }
    if theta.len() != ansatz.n_parameters() {
        return Err(Error::DimensionMismatch { expected: ansatz.n_parameters(), found: theta.len() });
    }
    let components = (0..theta.len())
        .into_par_iter()
        .map(|j| {
            let mut shifted = theta.to_vec();
            shifted[j] = theta[j] + alpha;
            let plus = cost(ansatz, &shifted, h)?;
            shifted[j] = theta[j] - alpha;
            let minus = cost(ansatz, &shifted, h)?;
            Ok((plus - minus) / (2.0 * sin))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientVector { components })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    pub step_size: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub alpha: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self { step_size: 0.1, max_iterations: 1000, tolerance: 1e-6, alpha: FRAC_PI_2 }
    }
}

impl DescentConfig {
    fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be >= 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentResult {
    /// Best parameters seen during the run.
    pub theta: Vec<f64>,
    pub energy: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

/// Fixed-step descent over an arbitrary objective with a gradient oracle.
fn descend<F, G>(theta0: &[f64], config: &DescentConfig, mut value: F, mut gradient: G) -> Result<DescentResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    config.validate()?;
    let mut theta = theta0.to_vec();
    let mut best = (f64::INFINITY, theta.clone());
    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 0..=config.max_iterations {
        let energy = value(&theta)?;
        if !energy.is_finite() {
            return Err(Error::NonFiniteCost { iteration });
        }
        if energy < best.0 {
            best = (energy, theta.clone());
        }
        let grad = gradient(&theta)?;
        let gradient_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        trace.push(TraceEntry { iteration, energy, gradient_norm });
        if gradient_norm < config.tolerance {
            converged = true;
            break;
        }
        if iteration == config.max_iterations {
            break;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= config.step_size * g;
        }
    }
    Ok(DescentResult { theta: best.1, energy: best.0, trace, converged })
}

/// Gradient descent on `C(theta)` with parameter-shift gradients.
pub fn minimize(ansatz: &Ansatz, h: &PauliSum, theta0: &[f64], config: &DescentConfig) -> Result<DescentResult> {
    descend(
        theta0,
        config,
        |t| cost(ansatz, t, h),
        |t| Ok(parameter_shift_gradient(ansatz, t, h, config.alpha)?.components),
    )
}

/// Alternating-operator parameters with an explicit step `ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct QAOASchedule {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub ds: f64,
}

impl QAOASchedule {
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>, ds: f64) -> Result<Self> {
        if betas.len() != gammas.len() {
            return Err(Error::DimensionMismatch { expected: betas.len(), found: gammas.len() });
        }
        if betas.is_empty() {
            return Err(Error::InvalidParameter("QAOA needs at least one layer".into()));
        }
        Ok(Self { betas, gammas, ds })
    }

    pub fn n_layers(&self) -> usize {
        self.betas.len()
    }

    /// Parameters flattened as `[beta_0, .., beta_N, gamma_0, .., gamma_N]`.
    pub fn to_vector(&self) -> Vec<f64> {
        self.betas.iter().chain(&self.gammas).copied().collect()
    }

    fn from_vector(v: &[f64], ds: f64) -> Self {
        let n = v.len() / 2;
        Self { betas: v[..n].to_vec(), gammas: v[n..].to_vec(), ds }
    }
}

/// `beta_j = 1 - j ds`, `gamma_j = j ds`, `ds = 1/(N+1)` for `j = 0..=N`.
pub fn qaoa_schedule(n_layers: usize) -> Result<QAOASchedule> {
    if n_layers == 0 {
        return Err(Error::InvalidParameter("QAOA needs at least one layer".into()));
    }
    let ds = 1.0 / n_layers as f64;
    let gammas: Vec<f64> = (0..n_layers).map(|j| j as f64 * ds).collect();
    let betas = gammas.iter().map(|g| 1.0 - g).collect();
    QAOASchedule::new(betas, gammas, ds)
}

/// Cached eigensystems of the two alternating Hamiltonians.
struct AlternatingPair {
    h0: (Vec<f64>, CMatrix),
    h1: (Vec<f64>, CMatrix),
}

impl AlternatingPair {
    fn new(h0: &PauliSum, h1: &PauliSum) -> Result<Self> {
        if h0.n_qubits() != h1.n_qubits() {
            return Err(Error::DimensionMismatch { expected: h0.n_qubits(), found: h1.n_qubits() });
        }
        Ok(Self { h0: linalg::hermitian_eigh(&h0.to_dense()?), h1: linalg::hermitian_eigh(&h1.to_dense()?) })
    }

    fn state(&self, schedule: &QAOASchedule, initial: &StateVector) -> Result<StateVector> {
        let mut state = initial.clone();
        for (&b, &g) in schedule.betas.iter().zip(&schedule.gammas) {
            state.apply_matrix(&linalg::propagator_from_eigh(&self.h0.0, &self.h0.1, b * schedule.ds))?;
            state.apply_matrix(&linalg::propagator_from_eigh(&self.h1.0, &self.h1.1, g * schedule.ds))?;
        }
        Ok(state)
    }
}

/// `prod_j exp(-i gamma_j H1 ds) exp(-i beta_j H0 ds) |initial>`, later `j` leftmost.
pub fn qaoa_state(h0: &PauliSum, h1: &PauliSum, schedule: &QAOASchedule, initial: &StateVector) -> Result<StateVector> {
    if initial.n_qubits() != h0.n_qubits() {
        return Err(Error::DimensionMismatch { expected: h0.n_qubits(), found: initial.n_qubits() });
    }
    AlternatingPair::new(h0, h1)?.state(schedule, initial)
}

/// `<psi| H1 |psi>` for the QAOA state.
pub fn qaoa_energy(h0: &PauliSum, h1: &PauliSum, schedule: &QAOASchedule, initial: &StateVector) -> Result<f64> {
    qaoa_state(h0, h1, schedule, initial)?.expectation(h1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaoaResult {
    pub schedule: QAOASchedule,
    pub energy: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

/// Central-difference step for QAOA parameter gradients.
const QAOA_FD_STEP: f64 = 1e-6;

/// Treat the betas and gammas as free parameters and descend on `<H1>`.
/// The Hamiltonians are sums of non-commuting strings, so the gradient is
/// taken by central differences; the best-seen schedule is returned.
pub fn optimize_qaoa(
    h0: &PauliSum,
    h1: &PauliSum,
    start: &QAOASchedule,
    initial: &StateVector,
    config: &DescentConfig,
) -> Result<QaoaResult> {
    if initial.n_qubits() != h0.n_qubits() {
        return Err(Error::DimensionMismatch { expected: h0.n_qubits(), found: initial.n_qubits() });
    }
    let pair = AlternatingPair::new(h0, h1)?;
    let ds = start.ds;
    let energy = |v: &[f64]| pair.state(&QAOASchedule::from_vector(v, ds), initial)?.expectation(h1);
    let result = descend(&start.to_vector(), config, energy, |v| {
        (0..v.len())
            .into_par_iter()
            .map(|k| {
                let mut p = v.to_vec();
                p[k] = v[k] + QAOA_FD_STEP;
                let up = energy(&p)?;
                p[k] = v[k] - QAOA_FD_STEP;
                let down = energy(&p)?;
                Ok((up - down) / (2.0 * QAOA_FD_STEP))
            })
            .collect()
    })?;
    Ok(QaoaResult {
        schedule: QAOASchedule::from_vector(&result.theta, ds),
        energy: result.energy,
        trace: result.trace,
        converged: result.converged,
    })
}

fn check_angles(graph: &Graph, phi: &[f64]) -> Result<()> {
    if phi.len() != graph.vertex_count() {
        return Err(Error::DimensionMismatch { expected: graph.vertex_count(), found: phi.len() });
    }
    if let Some(bad) = phi.iter().find(|p| !(0.0..2.0 * PI).contains(*p)) {
        return Err(Error::InvalidParameter(format!("angle {bad} outside [0, 2 pi)")));
    }
    Ok(())
}

/// `1/4 sum_{i,j} A_ij (cos phi_i cos phi_j - 1)`
pub fn continuous_maxcut_cost(graph: &Graph, phi: &[f64]) -> Result<f64> {
    check_angles(graph, phi)?;
    let cos: Vec<f64> = phi.iter().map(|p| p.cos()).collect();
    let d = graph.vertex_count();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            if graph.adjacency(i, j) == 1 {
                total += cos[i] * cos[j] - 1.0;
            }
        }
    }
    Ok(0.25 * total)
}

/// `prod_k exp(-i Y_k phi_k / 2) |0...0>`, whose `<Z_k>` is `cos phi_k`.
pub fn maxcut_product_state(graph: &Graph, phi: &[f64]) -> Result<StateVector> {
    check_angles(graph, phi)?;
    let d = graph.vertex_count();
    let mut state = StateVector::zero(d);
    for (k, &p) in phi.iter().enumerate() {
        state.apply_gate(&Gate::rotation(PauliString::single(d, k, Pauli::Y)?, p))?;
    }
    Ok(state)
}

/// Minimum of the continuous cost over a uniform grid of `points` angles
/// per vertex, `phi_k = 2 pi m / points`.
pub fn continuous_maxcut_grid_minimum(graph: &Graph, points: usize) -> Result<(f64, Vec<f64>)> {
    let d = graph.vertex_count();
    if points == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
    }
    let total = (points as u128).checked_pow(d as u32).filter(|&t| t <= 1 << 32).ok_or_else(|| {
        Error::InvalidParameter(format!("grid of {points}^{d} points is too large"))
    })? as u64;
    let angle = |m: u64| 2.0 * PI * m as f64 / points as f64;
    let mut best = (f64::INFINITY, vec![0.0; d]);
    let mut phi = vec![0.0; d];
    for mut index in 0..total {
        for p in phi.iter_mut() {
            *p = angle(index % points as u64);
            index /= points as u64;
        }
        let c = continuous_maxcut_cost(graph, &phi)?;
        if c < best.0 {
            best = (c, phi.clone());
        }
    }
    Ok(best)
}
