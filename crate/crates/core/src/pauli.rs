//! Pauli strings, real-weighted Pauli sums, graphs and the exact spectral oracle.
//!
//! Qubit `q` is bit `q` of an amplitude index (little-endian). The textual form
//! of a string is written with the highest qubit leftmost, so `"XZ"` on two
//! qubits is `X` on qubit 1 and `Z` on qubit 0.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::statevector::StateVector;

/// Coefficients with magnitude below this are dropped by canonicalization.
pub const COEFF_EPS: f64 = 1e-14;

/// Largest imaginary residue accepted when a Hermitian sum is required.
pub const HERMITIAN_TOL: f64 = 1e-12;

const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidPauli(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    /// Single-qubit product `self * other = phase * result`.
    fn product(self, other: Pauli) -> (Complex64, Pauli) {
        use Pauli::*;
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        match (self, other) {
            (I, p) | (p, I) => (one, p),
            (X, X) | (Y, Y) | (Z, Z) => (one, I),
            (X, Y) => (i, Z),
            (Y, X) => (-i, Z),
            (Y, Z) => (i, X),
            (Z, Y) => (-i, X),
            (Z, X) => (i, Y),
            (X, Z) => (-i, Y),
        }
    }
}

/// A tensor product of single-qubit Paulis stored as X and Z bit masks
/// (`Y` sets both).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        Self { n_qubits, x_mask: 0, z_mask: 0 }
    }

    /// Parse a letter string, highest qubit leftmost.
    pub fn from_letters(letters: &str) -> Result<Self> {
        let chars: Vec<char> = letters.chars().collect();
        let n = chars.len();
        if n > MAX_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "Pauli string of length {n} exceeds {MAX_QUBITS} qubits"
            )));
        }
        let mut out = Self::identity(n);
        for (pos, c) in chars.into_iter().enumerate() {
            out.set(n - 1 - pos, Pauli::from_char(c)?);
        }
        Ok(out)
    }

    /// Build from `(qubit, letter)` pairs; unspecified qubits are identity.
    pub fn from_ops(n_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut out = Self::identity(n_qubits);
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            out.set(q, p);
        }
        Ok(out)
    }

    pub fn single(n_qubits: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        Self::from_ops(n_qubits, &[(qubit, pauli)])
    }

    fn set(&mut self, q: usize, p: Pauli) {
        let bit = 1u64 << q;
        let (x, z) = p.bits();
        self.x_mask = if x { self.x_mask | bit } else { self.x_mask & !bit };
        self.z_mask = if z { self.z_mask | bit } else { self.z_mask & !bit };
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn letter(&self, q: usize) -> Pauli {
        let bit = 1u64 << q;
        Pauli::from_bits(self.x_mask & bit != 0, self.z_mask & bit != 0)
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn weight(&self) -> usize {
        (self.x_mask | self.z_mask).count_ones() as usize
    }

    pub fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    /// `P |index> = phase * |index ^ x_mask>`.
    #[inline]
    pub fn apply_to_basis(&self, index: usize) -> (Complex64, usize) {
        let i = index as u64;
        let sign = if (i & self.z_mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        let phase = match self.y_count() % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        };
        (phase, (i ^ self.x_mask) as usize)
    }

    /// Operator product `self * other`, returned as `(phase, string)`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Complex64, PauliString)> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let mut phase = Complex64::new(1.0, 0.0);
        let mut out = Self::identity(self.n_qubits);
        for q in 0..self.n_qubits {
            let (ph, p) = self.letter(q).product(other.letter(q));
            phase *= ph;
            out.set(q, p);
        }
        Ok((phase, out))
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        anti.is_multiple_of(2)
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        linalg::check_dense_limit(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let (phase, row) = self.apply_to_basis(col);
            m[(row, col)] = phase;
        }
        Ok(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.n_qubits).rev() {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

/// Real-weighted sum of Pauli strings, kept in canonical form: strings sorted,
/// no duplicates, no (near-)zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        Self::from_terms(n_qubits, [(coeff, PauliString::identity(n_qubits))])
            .expect("identity string matches its own width")
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        let mut raw = Vec::new();
        for (c, s) in terms {
            if s.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch { expected: n_qubits, found: s.n_qubits() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite coefficient {c} on {s}")));
            }
            raw.push((c, s));
        }
        Ok(Self { n_qubits, terms: raw }.canonicalize())
    }

    /// Single-term sum `coeff * string`.
    pub fn term(coeff: f64, string: PauliString) -> Self {
        Self::from_terms(string.n_qubits(), [(coeff, string)]).expect("width is consistent")
    }

    /// Parse `(coeff, letters)` pairs.
    pub fn from_labels(n_qubits: usize, labels: &[(f64, &str)]) -> Result<Self> {
        let mut terms = Vec::with_capacity(labels.len());
        for &(c, l) in labels {
            terms.push((c, PauliString::from_letters(l)?));
        }
        Self::from_terms(n_qubits, terms)
    }

    /// Merge duplicate strings, drop zeros and sort. Idempotent.
    pub fn canonicalize(self) -> Self {
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, s) in self.terms {
            *merged.entry(s).or_insert(0.0) += c;
        }
        let terms = merged.into_iter().filter(|(_, c)| c.abs() > COEFF_EPS).map(|(s, c)| (c, s)).collect();
        Self { n_qubits: self.n_qubits, terms }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|&(c, s)| (c * factor, s)).collect(),
        }
        .canonicalize()
    }

    pub fn checked_add(&self, other: &PauliSum) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let terms = self.terms.iter().chain(other.terms.iter()).copied().collect();
        Ok(Self { n_qubits: self.n_qubits, terms }.canonicalize())
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: f64, other: &PauliSum, b: f64) -> Result<Self> {
        self.scale(a).checked_add(&other.scale(b))
    }

    /// Sum of absolute coefficients, an upper bound on the operator norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// `true` when every pair of terms commutes.
    pub fn is_commuting(&self) -> bool {
        self.terms
            .iter()
            .enumerate()
            .all(|(i, (_, a))| self.terms[i + 1..].iter().all(|(_, b)| a.commutes_with(b)))
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        linalg::check_dense_limit(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for (c, s) in &self.terms {
            for col in 0..dim {
                let (phase, row) = s.apply_to_basis(col);
                m[(row, col)] += phase * *c;
            }
        }
        Ok(m)
    }

    /// `H |psi>` without building the dense matrix.
    pub fn apply(&self, amplitudes: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n_qubits;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: amplitudes.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (c, s) in &self.terms {
            for (col, &a) in amplitudes.iter().enumerate() {
                let (phase, row) = s.apply_to_basis(col);
                out[row] += phase * a * *c;
            }
        }
        Ok(out)
    }

    pub fn exact_spectrum(&self) -> Result<Spectrum> {
        Spectrum::of(self)
    }

    /// Spectral norm, `max |E|`.
    pub fn operator_norm(&self) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let spec = self.exact_spectrum()?;
        let lo = spec.eigenvalues.first().copied().unwrap_or(0.0).abs();
        let hi = spec.eigenvalues.last().copied().unwrap_or(0.0).abs();
        Ok(lo.max(hi))
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, s)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{s}")?;
        }
        Ok(())
    }
}

impl Add for &PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        self.checked_add(rhs).expect("qubit counts must match")
    }
}

impl Sub for &PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: &PauliSum) -> PauliSum {
        self.checked_add(&rhs.scale(-1.0)).expect("qubit counts must match")
    }
}

impl Neg for &PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: f64) -> PauliSum {
        self.scale(rhs)
    }
}

/// Pauli sum with complex coefficients, produced by fermionic encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPauliSum {
    n_qubits: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl ComplexPauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, terms: vec![(Complex64::new(1.0, 0.0), PauliString::identity(n_qubits))] }
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, PauliString)>,
    {
        let mut raw = Vec::new();
        for (c, s) in terms {
            if s.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch { expected: n_qubits, found: s.n_qubits() });
            }
            raw.push((c, s));
        }
        Ok(Self { n_qubits, terms: raw }.canonicalize())
    }

    pub fn canonicalize(self) -> Self {
        let mut merged: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (c, s) in self.terms {
            *merged.entry(s).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let terms = merged.into_iter().filter(|(_, c)| c.norm() > COEFF_EPS).map(|(s, c)| (c, s)).collect();
        Self { n_qubits: self.n_qubits, terms }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|&(c, s)| (c * factor, s)).collect(),
        }
        .canonicalize()
    }

    pub fn add(&self, other: &ComplexPauliSum) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let terms = self.terms.iter().chain(other.terms.iter()).copied().collect();
        Ok(Self { n_qubits: self.n_qubits, terms }.canonicalize())
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &ComplexPauliSum) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ca, sa) in &self.terms {
            for (cb, sb) in &other.terms {
                let (phase, s) = sa.multiply(sb)?;
                terms.push((ca * cb * phase, s));
            }
        }
        Ok(Self { n_qubits: self.n_qubits, terms }.canonicalize())
    }

    /// Hermitian conjugate; Pauli strings are self-adjoint.
    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|&(c, s)| (c.conj(), s)).collect(),
        }
    }

    /// Largest imaginary part among the coefficients.
    pub fn imaginary_residue(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.im.abs()).fold(0.0, f64::max)
    }

    /// Real form, rejecting residual imaginary parts above [`HERMITIAN_TOL`].
    pub fn to_hermitian(&self) -> Result<PauliSum> {
        let residue = self.imaginary_residue();
        if residue > HERMITIAN_TOL {
            return Err(Error::NonHermitian { residue });
        }
        PauliSum::from_terms(self.n_qubits, self.terms.iter().map(|&(c, s)| (c.re, s)))
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        linalg::check_dense_limit(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for (c, s) in &self.terms {
            for col in 0..dim {
                let (phase, row) = s.apply_to_basis(col);
                m[(row, col)] += phase * c;
            }
        }
        Ok(m)
    }
}

/// Unweighted simple graph given by a symmetric 0/1 adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    d: usize,
    adjacency: Vec<Vec<u8>>,
}

impl Graph {
    pub fn new(adjacency: Vec<Vec<u8>>) -> Result<Self> {
        let d = adjacency.len();
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidGraph(format!("row {i} has length {} (expected {d})", row.len())));
            }
            for (j, &a) in row.iter().enumerate() {
                if a > 1 {
                    return Err(Error::InvalidGraph(format!("entry ({i},{j}) = {a} is not 0 or 1")));
                }
                if i == j && a != 0 {
                    return Err(Error::InvalidGraph(format!("self loop at vertex {i}")));
                }
                if adjacency[j][i] != a {
                    return Err(Error::InvalidGraph(format!("adjacency is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { d, adjacency })
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![vec![0u8; d]; d];
        for &(i, j) in edges {
            if i >= d || j >= d {
                return Err(Error::InvalidGraph(format!("edge ({i},{j}) references a vertex >= {d}")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self loop at vertex {i}")));
            }
            adjacency[i][j] = 1;
            adjacency[j][i] = 1;
        }
        Ok(Self { d, adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.d
    }

    pub fn adjacency(&self, i: usize, j: usize) -> u8 {
        self.adjacency[i][j]
    }

    /// Edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.d {
            for j in i + 1..self.d {
                if self.adjacency[i][j] == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.d == 0 {
            return true;
        }
        let mut seen = vec![false; self.d];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..self.d {
                if self.adjacency[v][w] == 1 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Edges crossing between `subset` (bit mask) and its complement.
    pub fn cut_value(&self, subset: u64) -> usize {
        self.edges()
            .into_iter()
            .filter(|&(i, j)| ((subset >> i) & 1) != ((subset >> j) & 1))
            .count()
    }
}

/// `(1/4) sum_{i,j} A_ij (Z_i Z_j - I)`; its ground energy is minus the MaxCut value.
pub fn build_ising(graph: &Graph) -> PauliSum {
    let n = graph.vertex_count();
    let mut terms = Vec::new();
    for (i, j) in graph.edges() {
        // The ordered double sum visits each edge twice.
        let zz = PauliString::from_ops(n, &[(i, Pauli::Z), (j, Pauli::Z)]).expect("edge within graph");
        terms.push((0.5, zz));
        terms.push((-0.5, PauliString::identity(n)));
    }
    PauliSum::from_terms(n, terms).expect("terms built with the graph width")
}

/// Full eigendecomposition of a Hermitian Pauli sum.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
}

impl Spectrum {
    pub fn of(h: &PauliSum) -> Result<Self> {
        let dense = h.to_dense()?;
        Ok(Self::from_dense(h.n_qubits(), &dense))
    }

    pub(crate) fn from_dense(n_qubits: usize, dense: &CMatrix) -> Self {
        let (eigenvalues, vectors) = linalg::hermitian_eigh(dense);
        let eigenvectors = (0..vectors.ncols())
            .map(|k| StateVector::from_raw(n_qubits, vectors.column(k).iter().copied().collect()))
            .collect();
        Self { eigenvalues, eigenvectors }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_state(&self) -> &StateVector {
        &self.eigenvectors[0]
    }

    /// Indices of eigenvalues within `tol` of `energy`.
    pub fn eigenspace(&self, energy: f64, tol: f64) -> Vec<usize> {
        (0..self.len()).filter(|&k| (self.eigenvalues[k] - energy).abs() <= tol).collect()
    }

    /// Index of the eigenvalue nearest `energy`.
    pub fn nearest(&self, energy: f64) -> usize {
        (0..self.len())
            .min_by(|&a, &b| {
                (self.eigenvalues[a] - energy).abs().total_cmp(&(self.eigenvalues[b] - energy).abs())
            })
            .expect("spectrum is non-empty")
    }

    /// Weight `||P psi||^2` of `state` in the eigenspace of `energy`.
    pub fn eigenspace_weight(&self, state: &StateVector, energy: f64, tol: f64) -> Result<f64> {
        let mut weight = 0.0;
        for k in self.eigenspace(energy, tol) {
            weight += self.eigenvectors[k].inner_product(state)?.norm_sqr();
        }
        Ok(weight)
    }
}

/// Exhaustive MaxCut value over all `2^d` vertex subsets.
pub fn max_cut_bruteforce(graph: &Graph) -> Result<usize> {
    let d = graph.vertex_count();
    if d > 24 {
        return Err(Error::InvalidParameter(format!("exhaustive MaxCut limited to 24 vertices, got {d}")));
    }
    Ok((0..(1u64 << d)).map(|s| graph.cut_value(s)).max().unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn letters_are_highest_qubit_first() {
        let p = PauliString::from_letters("XZ").unwrap();
        assert_eq!(p.letter(1), Pauli::X);
        assert_eq!(p.letter(0), Pauli::Z);
        assert_eq!(p.to_string(), "XZ");
    }

    #[test]
    fn unknown_letter_is_rejected() {
        assert_eq!(PauliString::from_letters("XQ"), Err(Error::InvalidPauli('Q')));
    }

    #[test]
    fn x_on_qubit_zero_block_structure() {
        // Hand-expanded I (x) X: flips the low bit.
        let m = PauliSum::from_labels(2, &[(1.0, "IX")]).unwrap().to_dense().unwrap();
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let expected = CMatrix::from_row_slice(
            4,
            4,
            &[zero, one, zero, zero, one, zero, zero, zero, zero, zero, zero, one, zero, zero, one, zero],
        );
        assert_eq!(m, expected);
    }

    #[test]
    fn y_matrix_matches_definition() {
        let m = PauliString::from_letters("Y").unwrap().to_dense().unwrap();
        assert_eq!(m[(0, 1)], c(0.0, -1.0));
        assert_eq!(m[(1, 0)], c(0.0, 1.0));
    }

    #[test]
    fn identity_term_is_scaled_identity() {
        let h = PauliSum::identity(2, 1.5);
        assert_eq!(h.to_dense().unwrap(), linalg::identity(4).map(|z| z * 1.5));
    }

    #[test]
    fn product_table_matches_dense_products() {
        let letters = ["I", "X", "Y", "Z"];
        for a in letters {
            for b in letters {
                let pa = PauliString::from_letters(a).unwrap();
                let pb = PauliString::from_letters(b).unwrap();
                let (phase, p) = pa.multiply(&pb).unwrap();
                let lhs = pa.to_dense().unwrap() * pb.to_dense().unwrap();
                let rhs = p.to_dense().unwrap().map(|z| z * phase);
                assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-15, "{a}{b}");
            }
        }
    }

    #[test]
    fn spectra_of_small_operators() {
        let z = PauliSum::from_labels(1, &[(1.0, "Z")]).unwrap();
        assert_eq!(z.exact_spectrum().unwrap().eigenvalues, vec![-1.0, 1.0]);
        let zz = PauliSum::from_labels(2, &[(1.0, "ZZ")]).unwrap();
        let ev = zz.exact_spectrum().unwrap().eigenvalues;
        for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn one_qubit_closed_form_spectrum() {
        let (a, b) = (0.3, -1.2);
        let h = PauliSum::from_labels(1, &[(a, "X"), (b, "Z")]).unwrap();
        let ev = h.exact_spectrum().unwrap().eigenvalues;
        let r = (a * a + b * b).sqrt();
        assert!((ev[0] + r).abs() < 1e-12 && (ev[1] - r).abs() < 1e-12);
    }

    #[test]
    fn operator_norms() {
        let z = PauliSum::from_labels(1, &[(1.0, "Z")]).unwrap();
        assert!((z.operator_norm().unwrap() - 1.0).abs() < 1e-12);
        let p = PauliSum::from_labels(3, &[(-2.5, "XYZ")]).unwrap();
        assert!((p.operator_norm().unwrap() - 2.5).abs() < 1e-12);
        let xz = PauliSum::from_labels(1, &[(1.0, "X"), (1.0, "Z")]).unwrap();
        assert!((xz.operator_norm().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_edge_ising_brute_force() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let h = build_ising(&g);
        // Brute force over the four basis states: energy = (z0 z1 - 1)/2.
        for b in 0..4usize {
            let z0 = if b & 1 == 0 { 1.0 } else { -1.0 };
            let z1 = if b & 2 == 0 { 1.0 } else { -1.0 };
            let e = 0.5 * (z0 * z1 - 1.0);
            let m = h.to_dense().unwrap();
            assert!((m[(b, b)].re - e).abs() < 1e-15);
        }
        let ev = h.exact_spectrum().unwrap().eigenvalues;
        for (got, want) in ev.iter().zip([-1.0, -1.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_graph_is_zero_operator() {
        assert!(build_ising(&Graph::from_edges(3, &[]).unwrap()).is_zero());
    }

    #[test]
    fn triangle_ground_energy_is_minus_two() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        // Brute force over the eight spin configurations.
        let mut best = f64::INFINITY;
        for b in 0..8u64 {
            let spin = |q: usize| if (b >> q) & 1 == 0 { 1.0 } else { -1.0 };
            let e: f64 = g.edges().iter().map(|&(i, j)| 0.5 * (spin(i) * spin(j) - 1.0)).sum();
            best = best.min(e);
        }
        assert_eq!(best, -2.0);
        let ev = build_ising(&g).exact_spectrum().unwrap();
        assert!((ev.ground_energy() - best).abs() < 1e-12);
    }

    #[test]
    fn graph_validation() {
        assert!(matches!(Graph::new(vec![vec![0, 1], vec![0, 0]]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::new(vec![vec![0, 2], vec![2, 0]]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::new(vec![vec![1, 0], vec![0, 0]]), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn complex_sum_rejects_imaginary_residue() {
        let s = PauliString::from_letters("X").unwrap();
        let h = ComplexPauliSum::from_terms(1, [(c(1.0, 1e-9), s)]).unwrap();
        assert!(matches!(h.to_hermitian(), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn size_limit_is_enforced() {
        let h = PauliSum::identity(40, 1.0);
        assert!(matches!(h.to_dense(), Err(Error::SizeLimit { .. })));
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec(0u8..4, n).prop_map(move |letters| {
            let ops: Vec<(usize, Pauli)> = letters
                .iter()
                .enumerate()
                .map(|(q, &l)| (q, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][l as usize]))
                .collect();
            PauliString::from_ops(n, &ops).unwrap()
        })
    }

    fn arb_sum(n: usize) -> impl Strategy<Value = PauliSum> {
        proptest::collection::vec((-2.0f64..2.0, arb_string(n)), 0..8)
            .prop_map(move |terms| PauliSum::from_terms(n, terms).unwrap())
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(h in arb_sum(3)) {
            prop_assert_eq!(h.clone().canonicalize(), h);
        }

        #[test]
        fn dense_form_is_hermitian(h in arb_sum(3)) {
            let m = h.to_dense().unwrap();
            prop_assert_eq!(m.adjoint(), m);
        }

        #[test]
        fn pauli_strings_square_to_identity(n in 1usize..=6, seed in any::<u64>()) {
            let ops: Vec<(usize, Pauli)> = (0..n)
                .map(|q| (q, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][((seed >> (2 * q)) & 3) as usize]))
                .collect();
            let p = PauliString::from_ops(n, &ops).unwrap().to_dense().unwrap();
            let sq = &p * &p;
            prop_assert!(linalg::max_abs_diff(&sq, &linalg::identity(1 << n)) < 1e-12);
        }

        #[test]
        fn ising_ground_energy_is_minus_maxcut(d in 2usize..=6, bits in any::<u32>()) {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..d {
                for j in i + 1..d {
                    if (bits >> k) & 1 == 1 {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            let g = Graph::from_edges(d, &edges).unwrap();
            let h = build_ising(&g);
            let ground = if h.is_zero() { 0.0 } else { h.exact_spectrum().unwrap().ground_energy() };
            prop_assert!((ground + max_cut_bruteforce(&g).unwrap() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn ising_ground_energy_matches_maxcut_at_sixteen_vertices() {
        // Diagonal operator: compare the minimum diagonal entry without a dense solve.
        let d = 16;
        let edges: Vec<(usize, usize)> = (0..d).flat_map(|i| [(i, (i + 1) % d), (i, (i + 5) % d)]).collect();
        let g = Graph::from_edges(d, &edges).unwrap();
        let h = build_ising(&g);
        let min_diag = (0..1usize << d)
            .map(|b| h.terms().iter().map(|(cf, s)| (cf * s.apply_to_basis(b).0).re).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!((min_diag + max_cut_bruteforce(&g).unwrap() as f64).abs() < 1e-9);
    }

    #[test]
    fn random_three_qubit_spectrum_residuals() {
        let h = PauliSum::from_labels(3, &[(0.7, "XZY"), (-0.3, "ZZI"), (1.1, "IXX"), (0.25, "YIZ")]).unwrap();
        let spec = h.exact_spectrum().unwrap();
        for (e, v) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
            let hv = h.apply(v.amplitudes()).unwrap();
            let res: f64 = hv.iter().zip(v.amplitudes()).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-8);
        }
        for i in 0..spec.len() {
            for j in 0..spec.len() {
                let ip = spec.eigenvectors[i].inner_product(&spec.eigenvectors[j]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(want, 0.0)).norm() < 1e-8);
            }
        }
    }
}
