//! Product-formula approximations of `exp(-i H dt)` for `H = H_A + H_B`.
//!
//! Exponentials of single-string parts use the closed-form rotation
//! `cos(c t) I - i sin(c t) P`; anything else is exponentiated densely.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::PauliSum;
use crate::statevector::{Gate, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitHamiltonian {
    part_a: PauliSum,
    part_b: PauliSum,
}

impl SplitHamiltonian {
    pub fn new(part_a: PauliSum, part_b: PauliSum) -> Result<Self> {
        if part_a.n_qubits() != part_b.n_qubits() {
            return Err(Error::DimensionMismatch { expected: part_a.n_qubits(), found: part_b.n_qubits() });
        }
        Ok(Self { part_a, part_b })
    }

    pub fn part_a(&self) -> &PauliSum {
        &self.part_a
    }

    pub fn part_b(&self) -> &PauliSum {
        &self.part_b
    }

    pub fn n_qubits(&self) -> usize {
        self.part_a.n_qubits()
    }

    /// `H_A + H_B`.
    pub fn combined(&self) -> PauliSum {
        &self.part_a + &self.part_b
    }
}

/// Operator ordering of a first-order step. `AB` is `e^{-iA dt} e^{-iB dt}`,
/// so `B` acts on the state first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstOrdering {
    AB,
    BA,
}

/// Which part sits in the middle of a symmetric second-order step.
/// `A` gives `e^{-iB dt/2} e^{-iA dt} e^{-iB dt/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centered {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductFormula {
    First(FirstOrdering),
    Second(Centered),
}

impl ProductFormula {
    pub fn from_order(order: u8) -> Result<Self> {
        match order {
            1 => Ok(ProductFormula::First(FirstOrdering::AB)),
            2 => Ok(ProductFormula::Second(Centered::A)),
            other => Err(Error::InvalidParameter(format!("product formula order must be 1 or 2, got {other}"))),
        }
    }

    pub fn order(&self) -> u8 {
        match self {
            ProductFormula::First(_) => 1,
            ProductFormula::Second(_) => 2,
        }
    }
}

/// `exp(-i t H)` for one Hermitian part, in whichever form is cheapest.
#[derive(Debug, Clone)]
pub enum Exponential {
    Identity,
    Rotation(Gate),
    Dense(CMatrix),
}

impl Exponential {
    pub fn new(h: &PauliSum, t: f64) -> Result<Self> {
        match h.terms() {
            [] => Ok(Exponential::Identity),
            [(c, p)] => Ok(Exponential::Rotation(Gate::rotation(*p, 2.0 * c * t))),
            _ => Ok(Exponential::Dense(linalg::expm_hermitian(&h.to_dense()?, t))),
        }
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            Exponential::Identity => Ok(()),
            Exponential::Rotation(g) => state.apply_gate(g),
            Exponential::Dense(m) => state.apply_matrix(m),
        }
    }

    pub fn to_dense(&self, n_qubits: usize) -> Result<CMatrix> {
        linalg::check_dense_limit(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(match self {
            Exponential::Identity => linalg::identity(dim),
            Exponential::Dense(m) => m.clone(),
            Exponential::Rotation(_) => {
                let mut out = CMatrix::zeros(dim, dim);
                for col in 0..dim {
                    let mut e = StateVector::basis(n_qubits, col)?;
                    self.apply(&mut e)?;
                    out.set_column(col, &linalg::CVector::from_vec(e.into_amplitudes()));
                }
                out
            }
        })
    }
}

/// Factors of one step, listed in the order they act on the state.
pub fn step_factors(split: &SplitHamiltonian, dt: f64, formula: ProductFormula) -> Result<Vec<Exponential>> {
    let (a, b) = (&split.part_a, &split.part_b);
    Ok(match formula {
        ProductFormula::First(FirstOrdering::AB) => vec![Exponential::new(b, dt)?, Exponential::new(a, dt)?],
        ProductFormula::First(FirstOrdering::BA) => vec![Exponential::new(a, dt)?, Exponential::new(b, dt)?],
        ProductFormula::Second(Centered::A) => {
            let half = Exponential::new(b, dt / 2.0)?;
            vec![half.clone(), Exponential::new(a, dt)?, half]
        }
        ProductFormula::Second(Centered::B) => {
            let half = Exponential::new(a, dt / 2.0)?;
            vec![half.clone(), Exponential::new(b, dt)?, half]
        }
    })
}

fn check_state(split: &SplitHamiltonian, state: &StateVector) -> Result<()> {
    if state.n_qubits() != split.n_qubits() {
        return Err(Error::DimensionMismatch { expected: split.n_qubits(), found: state.n_qubits() });
    }
    Ok(())
}

pub fn trotter_step(
    split: &SplitHamiltonian,
    dt: f64,
    formula: ProductFormula,
    state: &StateVector,
) -> Result<StateVector> {
    if !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step must be finite, got {dt}")));
    }
    check_state(split, state)?;
    let mut out = state.clone();
    for f in step_factors(split, dt, formula)? {
        f.apply(&mut out)?;
    }
    Ok(out)
}

/// `n_steps` repetitions of [`trotter_step`] with `dt = total_time / n_steps`.
pub fn evolve(
    split: &SplitHamiltonian,
    total_time: f64,
    n_steps: usize,
    formula: ProductFormula,
    state: &StateVector,
) -> Result<StateVector> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("evolution needs at least one step".into()));
    }
    if !total_time.is_finite() {
        return Err(Error::InvalidParameter(format!("total time must be finite, got {total_time}")));
    }
    check_state(split, state)?;
    let factors = step_factors(split, total_time / n_steps as f64, formula)?;
    let mut out = state.clone();
    for _ in 0..n_steps {
        for f in &factors {
            f.apply(&mut out)?;
        }
    }
    Ok(out)
}

/// Dense unitary of a single step.
pub fn step_unitary(split: &SplitHamiltonian, dt: f64, formula: ProductFormula) -> Result<CMatrix> {
    let n = split.n_qubits();
    let mut u = linalg::identity(1usize << n);
    for f in step_factors(split, dt, formula)? {
        u = f.to_dense(n)? * u;
    }
    Ok(u)
}

/// Dense unitary of [`evolve`].
pub fn evolution_unitary(
    split: &SplitHamiltonian,
    total_time: f64,
    n_steps: usize,
    formula: ProductFormula,
) -> Result<CMatrix> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("evolution needs at least one step".into()));
    }
    let step = step_unitary(split, total_time / n_steps as f64, formula)?;
    let mut u = linalg::identity(step.nrows());
    for _ in 0..n_steps {
        u = &step * u;
    }
    Ok(u)
}

/// `exp(-i t H)` densely.
pub fn exact_unitary(h: &PauliSum, t: f64) -> Result<CMatrix> {
    Ok(linalg::expm_hermitian(&h.to_dense()?, t))
}

/// `A + B + [A,B]/2 + [A,[A,B]]/12 - [B,[A,B]]/12`.
pub fn bch_truncated(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    let ab = linalg::commutator(a, b);
    let third = linalg::commutator(a, &ab) - linalg::commutator(b, &ab);
    Ok(a + b + ab.map(|z| z * 0.5) + third.map(|z| z / Complex64::new(12.0, 0.0)))
}
