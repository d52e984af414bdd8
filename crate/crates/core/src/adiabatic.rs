//! Adiabatic state preparation along `H(s) = g(s) H1 + (1 - g(s)) H0`.
//!
//! The time-ordered evolution is discretized with midpoint sampling,
//! `U(1) = prod_j exp(-i H(s_j + ds/2) T ds)` with later factors on the left.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::PauliSum;
use crate::statevector::StateVector;
use crate::trotter::{self, Centered, ProductFormula, SplitHamiltonian};

/// Default number of grid points for gap profiles.
pub const DEFAULT_GAP_GRID: usize = 101;

/// Eigenvalues closer than this (relative to the spectral scale) are degenerate.
const DEGENERACY_TOL: f64 = 1e-8;

/// Sector labels closer than this belong to the same symmetry sector.
const SECTOR_TOL: f64 = 1e-8;

/// Overlap-squared margin below which the tracked successor is ambiguous.
const TRACKING_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ramp {
    /// `g(s) = s`
    Linear,
    /// `g(s) = 3 s^2 - 2 s^3`, flat at both ends.
    Smoothstep,
}

impl Ramp {
    pub fn value(self, s: f64) -> f64 {
        match self {
            Ramp::Linear => s,
            Ramp::Smoothstep => s * s * (3.0 - 2.0 * s),
        }
    }

    pub fn derivative(self, s: f64) -> f64 {
        match self {
            Ramp::Linear => 1.0,
            Ramp::Smoothstep => 6.0 * s * (1.0 - s),
        }
    }

    pub fn second_derivative(self, s: f64) -> f64 {
        match self {
            Ramp::Linear => 0.0,
            Ramp::Smoothstep => 6.0 - 12.0 * s,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ramp::Linear => "linear",
            Ramp::Smoothstep => "smoothstep",
        }
    }
}

impl std::str::FromStr for Ramp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Ramp::Linear),
            "smoothstep" => Ok(Ramp::Smoothstep),
            other => Err(Error::InvalidParameter(format!("unknown ramp '{other}' (expected linear or smoothstep)"))),
        }
    }
}

/// How each short-time factor `exp(-i H(s) T ds)` is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMethod {
    #[default]
    DenseExponential,
    /// Symmetric split into `(1-g) H0` and `g H1`.
    SecondOrderTrotter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    h0: PauliSum,
    h1: PauliSum,
    ramp: Ramp,
    total_time: f64,
    n_steps: usize,
    method: StepMethod,
}

impl Schedule {
    pub fn new(h0: PauliSum, h1: PauliSum, ramp: Ramp, total_time: f64, n_steps: usize) -> Result<Self> {
        if h0.n_qubits() != h1.n_qubits() {
            return Err(Error::DimensionMismatch { expected: h0.n_qubits(), found: h1.n_qubits() });
        }
        if !total_time.is_finite() || total_time < 0.0 {
            return Err(Error::InvalidParameter(format!("total time must be finite and >= 0, got {total_time}")));
        }
        Ok(Self { h0, h1, ramp, total_time, n_steps, method: StepMethod::default() })
    }

    pub fn with_method(mut self, method: StepMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_total_time(mut self, total_time: f64) -> Self {
        self.total_time = total_time;
        self
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    pub fn h0(&self) -> &PauliSum {
        &self.h0
    }

    pub fn h1(&self) -> &PauliSum {
        &self.h1
    }

    pub fn ramp(&self) -> Ramp {
        self.ramp
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_qubits(&self) -> usize {
        self.h0.n_qubits()
    }

    /// `g(s) H1 + (1 - g(s)) H0`.
    pub fn interpolate(&self, s: f64) -> Result<PauliSum> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("path parameter s = {s} outside [0, 1]")));
        }
        let g = self.ramp.value(s);
        self.h1.linear_combination(g, &self.h0, 1.0 - g)
    }

    /// `H1 - H0`, the direction of `d H / d s`.
    pub fn difference(&self) -> PauliSum {
        &self.h1 - &self.h0
    }

    fn step_operator(&self, s: f64, dt: f64) -> Result<CMatrix> {
        match self.method {
            StepMethod::DenseExponential => Ok(linalg::expm_hermitian(&self.interpolate(s)?.to_dense()?, dt)),
            StepMethod::SecondOrderTrotter => {
                let g = self.ramp.value(s);
                let split = SplitHamiltonian::new(self.h0.scale(1.0 - g), self.h1.scale(g))?;
                trotter::step_unitary(&split, dt, ProductFormula::Second(Centered::A))
            }
        }
    }

    /// Midpoints of the step grid and the physical time per step.
    fn step_grid(&self) -> Result<(Vec<f64>, f64)> {
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("adiabatic evolution needs at least one step".into()));
        }
        let ds = 1.0 / self.n_steps as f64;
        let mids = (0..self.n_steps).map(|j| (j as f64 + 0.5) * ds).collect();
        Ok((mids, self.total_time * ds))
    }
}

/// `|psi_U(1)> = U(1) |initial>`.
pub fn adiabatic_evolve(schedule: &Schedule, initial: &StateVector) -> Result<StateVector> {
    if initial.n_qubits() != schedule.n_qubits() {
        return Err(Error::DimensionMismatch { expected: schedule.n_qubits(), found: initial.n_qubits() });
    }
    let (mids, dt) = schedule.step_grid()?;
    let mut state = initial.clone();
    for s in mids {
        state.apply_matrix(&schedule.step_operator(s, dt)?)?;
    }
    Ok(state)
}

/// The accumulated evolution operator `U(1)`.
pub fn evolution_operator(schedule: &Schedule) -> Result<CMatrix> {
    linalg::check_dense_limit(schedule.n_qubits())?;
    let (mids, dt) = schedule.step_grid()?;
    let mut u = linalg::identity(1usize << schedule.n_qubits());
    for s in mids {
        u = schedule.step_operator(s, dt)? * u;
    }
    Ok(u)
}

/// `H'(1) = U(1)^dagger H1 U(1)`.
pub fn translate_hamiltonian(schedule: &Schedule) -> Result<CMatrix> {
    let u = evolution_operator(schedule)?;
    Ok(u.adjoint() * schedule.h1.to_dense()? * u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub s: f64,
    /// Distance to the nearest competing level; infinite when there is none.
    pub gap: f64,
    pub tracked_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub samples: Vec<GapSample>,
}

impl GapProfile {
    pub fn min_gap(&self) -> GapSample {
        *self.samples.iter().min_by(|a, b| a.gap.total_cmp(&b.gap)).expect("profile has samples")
    }
}

/// Eigenpairs at one grid point with symmetry-sector labels attached.
struct LabelledSpectrum {
    energies: Vec<f64>,
    vectors: CMatrix,
    labels: Vec<Vec<f64>>,
    cluster: Vec<usize>,
}

fn same_sector(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= SECTOR_TOL)
}

fn labelled_spectrum(h: &CMatrix, symmetries: &[CMatrix]) -> LabelledSpectrum {
    let (energies, mut vectors) = linalg::hermitian_eigh(h);
    let dim = energies.len();
    let scale = energies.iter().fold(1.0_f64, |m, e| m.max(e.abs()));

    let mut cluster = vec![0usize; dim];
    for k in 1..dim {
        cluster[k] = if energies[k] - energies[k - 1] <= DEGENERACY_TOL * scale { cluster[k - 1] } else { cluster[k - 1] + 1 };
    }

    // Inside each degenerate block, rotate to simultaneous eigenvectors of the
    // declared symmetries using a generic combination of them.
    if !symmetries.is_empty() {
        let weights: Vec<f64> = (0..symmetries.len()).map(|k| 1.0 + (k as f64 + 2.0).sqrt() * 0.37).collect();
        let combo = symmetries
            .iter()
            .zip(&weights)
            .fold(CMatrix::zeros(dim, dim), |acc, (o, &w)| acc + o.map(|z| z * w));
        let mut start = 0;
        while start < dim {
            let mut end = start + 1;
            while end < dim && cluster[end] == cluster[start] {
                end += 1;
            }
            if end - start > 1 {
                let block = vectors.columns(start, end - start).into_owned();
                let reduced = block.adjoint() * &combo * &block;
                let (_, w) = linalg::hermitian_eigh(&reduced);
                let rotated = block * w;
                for (k, col) in (start..end).enumerate() {
                    vectors.set_column(col, &rotated.column(k));
                }
            }
            start = end;
        }
    }

    let labels = (0..dim)
        .map(|k| {
            let v = vectors.column(k);
            symmetries.iter().map(|o| (v.adjoint() * o * v)[(0, 0)].re).collect()
        })
        .collect();
    LabelledSpectrum { energies, vectors, labels, cluster }
}

/// Follow one instantaneous eigenstate across `[0, 1]` and record its gap.
///
/// Successors are chosen by maximal overlap with the previous tracked vector.
/// Competitors are restricted to the symmetry sector of the tracked state when
/// conserved observables are declared.
pub fn gap_profile(
    schedule: &Schedule,
    tracked_index: usize,
    grid_points: usize,
    symmetries: &[PauliSum],
) -> Result<GapProfile> {
    linalg::check_dense_limit(schedule.n_qubits())?;
    if grid_points < 2 {
        return Err(Error::InvalidParameter(format!("gap grid needs at least 2 points, got {grid_points}")));
    }
    let dim = 1usize << schedule.n_qubits();
    if tracked_index >= dim {
        return Err(Error::InvalidParameter(format!("tracked index {tracked_index} out of range for dimension {dim}")));
    }
    let sym_dense = symmetries
        .iter()
        .map(|o| {
            if o.n_qubits() != schedule.n_qubits() {
                return Err(Error::DimensionMismatch { expected: schedule.n_qubits(), found: o.n_qubits() });
            }
            o.to_dense()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut samples = Vec::with_capacity(grid_points);
    let mut previous: Option<(Vec<Complex64>, Vec<f64>)> = None;
    for k in 0..grid_points {
        let s = k as f64 / (grid_points - 1) as f64;
        let spec = labelled_spectrum(&schedule.interpolate(s)?.to_dense()?, &sym_dense);

        let chosen = match &previous {
            None => tracked_index,
            Some((prev_vec, prev_label)) => {
                let mut ranked: Vec<(usize, f64)> = (0..dim)
                    .filter(|&j| same_sector(&spec.labels[j], prev_label))
                    .map(|j| {
                        let ov: Complex64 = spec.vectors.column(j).iter().zip(prev_vec).map(|(a, b)| a.conj() * b).sum();
                        (j, ov.norm_sqr())
                    })
                    .collect();
                ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
                match ranked.as_slice() {
                    [] => {
                        return Err(Error::TrackingAmbiguity { s, reason: "tracked symmetry sector disappeared".into() })
                    }
                    [(best, p1), (_, p2), ..] if p1 - p2 < TRACKING_MARGIN => {
                        return Err(Error::TrackingAmbiguity {
                            s,
                            reason: format!("successor overlaps {p1:.4} and {p2:.4} are indistinguishable (level {best})"),
                        })
                    }
                    [(best, _), ..] => *best,
                }
            }
        };

        let label = spec.labels[chosen].clone();
        let partners = (0..dim).filter(|&j| j != chosen && same_sector(&spec.labels[j], &label));
        let mut gap = f64::INFINITY;
        for j in partners {
            if spec.cluster[j] == spec.cluster[chosen] {
                return Err(Error::TrackingAmbiguity {
                    s,
                    reason: format!("tracked level {chosen} is degenerate with level {j} in the same sector"),
                });
            }
            gap = gap.min((spec.energies[j] - spec.energies[chosen]).abs());
        }
        samples.push(GapSample { s, gap, tracked_energy: spec.energies[chosen] });
        previous = Some((spec.vectors.column(chosen).iter().copied().collect(), label));
    }
    Ok(GapProfile { samples })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub delta: f64,
    pub integral_value: f64,
    pub boundary_term: f64,
    pub required_time: f64,
}

/// Integrand `||d2H|| / gap^2 + 7 ||dH||^2 / gap^3` at one point.
pub fn bound_integrand(ramp: Ramp, difference_norm: f64, s: f64, gap: f64) -> f64 {
    if gap.is_infinite() {
        return 0.0;
    }
    let d1 = ramp.derivative(s).abs() * difference_norm;
    let d2 = ramp.second_derivative(s).abs() * difference_norm;
    d2 / (gap * gap) + 7.0 * d1 * d1 / (gap * gap * gap)
}

/// Sufficient total time for fidelity `>= 1 - delta`, trapezoid-integrated on
/// the gap grid. Only flat-ended ramps are accepted, where the boundary term
/// vanishes.
pub fn jansen_bound(schedule: &Schedule, gap: &GapProfile, delta: f64) -> Result<BoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if schedule.ramp() != Ramp::Smoothstep {
        return Err(Error::InvalidParameter(format!(
            "the boundary term is not modelled for the {} ramp; use smoothstep, whose end derivatives vanish",
            schedule.ramp().name()
        )));
    }
    if gap.samples.len() < 2 {
        return Err(Error::InvalidParameter("gap profile needs at least two samples".into()));
    }
    if let Some(bad) = gap.samples.iter().find(|g| !(g.gap > 0.0)) {
        return Err(Error::InvalidParameter(format!("gap vanishes at s = {}", bad.s)));
    }
    let norm = schedule.difference().operator_norm()?;
    let values: Vec<(f64, f64)> =
        gap.samples.iter().map(|g| (g.s, bound_integrand(schedule.ramp(), norm, g.s, g.gap))).collect();
    let integral_value: f64 = values.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    let boundary_term = 0.0;
    Ok(BoundReport { delta, integral_value, boundary_term, required_time: (integral_value + boundary_term) / delta })
}

/// Sorted eigenvalues of a dense Hermitian matrix.
pub fn dense_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    linalg::hermitian_eigh(m).0
}
