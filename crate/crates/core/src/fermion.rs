//! Fermionic ladder operators, the Jordan-Wigner encoding, Thouless
//! determinant preparation and unitary coupled-cluster generators.
//!
//! Modes are numbered from 0 and mode `p` lives on qubit `p`; `|1>` means the
//! mode is occupied. The creation operator is
//! `a+_p = sigma-_p Z_{p-1} ... Z_0` with `sigma- = (X - iY)/2 = |1><0|`.
//!
//! [`fock_state`] returns the plain basis state for an occupation set. It
//! equals `a+_{s1} a+_{s2} ... a+_{sk} |vac>` with `s1 < s2 < ... < sk`, i.e.
//! the lowest mode written leftmost. The reference determinant
//! `a+_{N-1} ... a+_0 |vac>` therefore carries the sign `(-1)^{N(N-1)/2}`
//! relative to the basis state (see [`reference_determinant`]).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::{ComplexPauliSum, Pauli, PauliString, PauliSum};
use crate::statevector::StateVector;

const COEFF_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ladder {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LadderOp {
    pub mode: usize,
    pub kind: Ladder,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        Self { mode, kind: Ladder::Create }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode, kind: Ladder::Annihilate }
    }

    pub fn adjoint(self) -> Self {
        let kind = match self.kind {
            Ladder::Create => Ladder::Annihilate,
            Ladder::Annihilate => Ladder::Create,
        };
        Self { mode: self.mode, kind }
    }

    /// Sort key of the normal order: creators before annihilators, each
    /// group by descending mode.
    fn rank(self) -> (u8, std::cmp::Reverse<usize>) {
        (matches!(self.kind, Ladder::Annihilate) as u8, std::cmp::Reverse(self.mode))
    }
}

impl PartialOrd for LadderOp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LadderOp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Ladder::Create => write!(f, "a+{}", self.mode),
            Ladder::Annihilate => write!(f, "a{}", self.mode),
        }
    }
}

/// Polynomial in ladder operators, kept in normal order.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionOperator {
    n_modes: usize,
    terms: BTreeMap<Vec<LadderOp>, Complex64>,
}

impl FermionOperator {
    pub fn zero(n_modes: usize) -> Self {
        Self { n_modes, terms: BTreeMap::new() }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self::zero(n_modes).with_term(Complex64::new(1.0, 0.0), Vec::new())
    }

    /// A single product `coeff * ops[0] ops[1] ...`, brought to normal order.
    pub fn term(n_modes: usize, coeff: Complex64, ops: &[LadderOp]) -> Result<Self> {
        if let Some(op) = ops.iter().find(|op| op.mode >= n_modes) {
            return Err(Error::InvalidParameter(format!("mode {} out of range for {n_modes} modes", op.mode)));
        }
        let mut out = Self::zero(n_modes);
        out.accumulate_normal_ordered(coeff, ops.to_vec());
        Ok(out)
    }

    pub fn creation(n_modes: usize, mode: usize) -> Result<Self> {
        Self::term(n_modes, Complex64::new(1.0, 0.0), &[LadderOp::create(mode)])
    }

    pub fn annihilation(n_modes: usize, mode: usize) -> Result<Self> {
        Self::term(n_modes, Complex64::new(1.0, 0.0), &[LadderOp::annihilate(mode)])
    }

    /// `a+_p a_p`
    pub fn number(n_modes: usize, mode: usize) -> Result<Self> {
        Self::term(n_modes, Complex64::new(1.0, 0.0), &[LadderOp::create(mode), LadderOp::annihilate(mode)])
    }

    fn with_term(mut self, coeff: Complex64, ops: Vec<LadderOp>) -> Self {
        *self.terms.entry(ops).or_insert(Complex64::new(0.0, 0.0)) += coeff;
        self.prune();
        self
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > COEFF_EPS);
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[LadderOp], Complex64)> {
        self.terms.iter().map(|(ops, &c)| (ops.as_slice(), c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, ops: &[LadderOp]) -> Complex64 {
        self.terms.get(ops).copied().unwrap_or_default()
    }

    /// Reorder `coeff * ops` with the canonical anticommutation relations and
    /// add every resulting normal-ordered monomial.
    fn accumulate_normal_ordered(&mut self, coeff: Complex64, ops: Vec<LadderOp>) {
        let mut pending = vec![(coeff, ops)];
        while let Some((c, mut ops)) = pending.pop() {
            let mut sign = 1.0;
            let mut vanished = false;
            // Bubble sort; each transposition of distinct ladder operators
            // costs a sign, and a_p a+_p leaves a contraction term behind.
            'sort: loop {
                let mut swapped = false;
                for k in 0..ops.len().saturating_sub(1) {
                    let (l, r) = (ops[k], ops[k + 1]);
                    if l == r {
                        vanished = true;
                        break 'sort;
                    }
                    if l <= r {
                        continue;
                    }
                    if l.mode == r.mode {
                        // a_p a+_p = 1 - a+_p a_p
                        let mut contracted = ops.clone();
                        contracted.drain(k..k + 2);
                        pending.push((c * sign, contracted));
                    }
                    ops.swap(k, k + 1);
                    sign = -sign;
                    swapped = true;
                }
                if !swapped {
                    break;
                }
            }
            if !vanished {
                *self.terms.entry(ops).or_insert(Complex64::new(0.0, 0.0)) += c * sign;
            }
        }
        self.prune();
    }

    fn check_modes(&self, other: &FermionOperator) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::DimensionMismatch { expected: self.n_modes, found: other.n_modes });
        }
        Ok(())
    }

    pub fn add(&self, other: &FermionOperator) -> Result<Self> {
        self.check_modes(other)?;
        let mut out = self.clone();
        for (ops, &c) in &other.terms {
            *out.terms.entry(ops.clone()).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &FermionOperator) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = Self { n_modes: self.n_modes, terms: self.terms.iter().map(|(o, &c)| (o.clone(), c * factor)).collect() };
        out.prune();
        out
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &FermionOperator) -> Result<Self> {
        self.check_modes(other)?;
        let mut out = Self::zero(self.n_modes);
        for (la, &ca) in &self.terms {
            for (lb, &cb) in &other.terms {
                let ops = la.iter().chain(lb).copied().collect();
                out.accumulate_normal_ordered(ca * cb, ops);
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.n_modes);
        for (ops, &c) in &self.terms {
            let rev: Vec<LadderOp> = ops.iter().rev().map(|op| op.adjoint()).collect();
            out.accumulate_normal_ordered(c.conj(), rev);
        }
        out
    }

    /// `{self, other} = self other + other self`
    pub fn anticommutator(&self, other: &FermionOperator) -> Result<Self> {
        self.mul(other)?.add(&other.mul(self)?)
    }
}

impl fmt::Display for FermionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (ops, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for op in ops {
                write!(f, " {op}")?;
            }
        }
        Ok(())
    }
}

fn single_ladder_image(n_modes: usize, op: LadderOp) -> Result<ComplexPauliSum> {
    let mut z_ops: Vec<(usize, Pauli)> = (0..op.mode).map(|q| (q, Pauli::Z)).collect();
    z_ops.push((op.mode, Pauli::X));
    let with_x = PauliString::from_ops(n_modes, &z_ops)?;
    z_ops.last_mut().expect("non-empty").1 = Pauli::Y;
    let with_y = PauliString::from_ops(n_modes, &z_ops)?;
    // sigma- = (X - iY)/2 creates, sigma+ = (X + iY)/2 annihilates.
    let y_coeff = match op.kind {
        Ladder::Create => Complex64::new(0.0, -0.5),
        Ladder::Annihilate => Complex64::new(0.0, 0.5),
    };
    ComplexPauliSum::from_terms(n_modes, [(Complex64::new(0.5, 0.0), with_x), (y_coeff, with_y)])
}

/// Qubit image of a fermionic operator.
pub fn jordan_wigner(op: &FermionOperator) -> Result<ComplexPauliSum> {
    let n = op.n_modes();
    let images: Vec<ComplexPauliSum> = (0..n)
        .flat_map(|m| [LadderOp::create(m), LadderOp::annihilate(m)])
        .map(|l| single_ladder_image(n, l))
        .collect::<Result<_>>()?;
    let image_of = |l: &LadderOp| &images[2 * l.mode + matches!(l.kind, Ladder::Annihilate) as usize];

    let mut out = ComplexPauliSum::zero(n);
    for (ops, c) in op.terms() {
        let mut product = ComplexPauliSum::identity(n).scale(c);
        for l in ops {
            product = product.mul(image_of(l))?;
        }
        out = out.add(&product)?;
    }
    Ok(out)
}

/// Total particle number `sum_p a+_p a_p = sum_p (I - Z_p)/2` as a qubit operator.
pub fn number_operator(n_modes: usize) -> Result<PauliSum> {
    let mut terms = vec![(0.5 * n_modes as f64, PauliString::identity(n_modes))];
    for p in 0..n_modes {
        terms.push((-0.5, PauliString::single(n_modes, p, Pauli::Z)?));
    }
    PauliSum::from_terms(n_modes, terms)
}

/// Basis state with `|1>` on each listed mode.
pub fn fock_state(n_modes: usize, occupied: &[usize]) -> Result<StateVector> {
    let mut index = 0usize;
    for &m in occupied {
        if m >= n_modes {
            return Err(Error::QubitOutOfRange { index: m, n_qubits: n_modes });
        }
        if index & (1 << m) != 0 {
            return Err(Error::DuplicateQubit(m));
        }
        index |= 1 << m;
    }
    StateVector::basis(n_modes, index)
}

/// `a+_{N-1} ... a+_1 a+_0 |vac>`, the reference of the Thouless relation.
pub fn reference_determinant(n_modes: usize, n_occupied: usize) -> Result<StateVector> {
    if n_occupied > n_modes {
        return Err(Error::InvalidParameter(format!("{n_occupied} particles do not fit in {n_modes} modes")));
    }
    let occupied: Vec<usize> = (0..n_occupied).collect();
    let basis = fock_state(n_modes, &occupied)?;
    let sign = if (n_occupied * n_occupied.saturating_sub(1) / 2) % 2 == 1 { -1.0 } else { 1.0 };
    let amps = basis.amplitudes().iter().map(|a| a * sign).collect();
    StateVector::from_amplitudes(amps)
}

/// Unnormalized amplitude vector on the Fock space of `n_modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    n_modes: usize,
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn vacuum(n_modes: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_modes];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { n_modes, amplitudes }
    }

    pub fn from_state(state: &StateVector) -> Self {
        Self { n_modes: state.n_qubits(), amplitudes: state.amplitudes().to_vec() }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &FockVector) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// The normalized state, or an error for the zero vector.
    pub fn to_state(&self) -> Result<StateVector> {
        StateVector::normalized(self.amplitudes.clone())
    }

    /// Apply `a+_p` (or `a_p`) in place using the Jordan-Wigner sign rule.
    pub fn apply_ladder(&mut self, op: LadderOp) -> Result<()> {
        if op.mode >= self.n_modes {
            return Err(Error::QubitOutOfRange { index: op.mode, n_qubits: self.n_modes });
        }
        let bit = 1usize << op.mode;
        let below = bit - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (b, &amp) in self.amplitudes.iter().enumerate() {
            let occupied = b & bit != 0;
            let acts = match op.kind {
                Ladder::Create => !occupied,
                Ladder::Annihilate => occupied,
            };
            if acts && amp != Complex64::new(0.0, 0.0) {
                let sign = if (b & below).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                out[b ^ bit] += amp * sign;
            }
        }
        self.amplitudes = out;
        Ok(())
    }

    /// Apply `c+ = sum_j coeffs[j] a+_j`.
    pub fn apply_orbital_creation(&mut self, coeffs: &[Complex64]) -> Result<()> {
        if coeffs.len() != self.n_modes {
            return Err(Error::DimensionMismatch { expected: self.n_modes, found: coeffs.len() });
        }
        let mut total = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (j, &c) in coeffs.iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut branch = self.clone();
            branch.apply_ladder(LadderOp::create(j))?;
            for (t, a) in total.iter_mut().zip(&branch.amplitudes) {
                *t += c * a;
            }
        }
        self.amplitudes = total;
        Ok(())
    }
}

/// `c+_{k-1} ... c+_1 c+_0 |vac>` for orbitals `c+_r = sum_j orbitals[r][j] a+_j`.
pub fn slater_determinant(n_modes: usize, orbitals: &[Vec<Complex64>]) -> Result<FockVector> {
    let mut v = FockVector::vacuum(n_modes);
    for orb in orbitals {
        v.apply_orbital_creation(orb)?;
    }
    Ok(v)
}

/// Coefficients `u_{q,p}` of the Thouless relation; row `r` is mode `N + r`,
/// column `p` is occupied mode `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalRotation {
    n_modes: usize,
    n_occupied: usize,
    u: CMatrix,
}

impl OrbitalRotation {
    pub fn new(n_modes: usize, n_occupied: usize, u: CMatrix) -> Result<Self> {
        if n_occupied == 0 || n_occupied > n_modes {
            return Err(Error::InvalidParameter(format!("need 1 <= N <= n_modes, got N = {n_occupied}, n_modes = {n_modes}")));
        }
        let want = (n_modes - n_occupied, n_occupied);
        if u.shape() != want {
            return Err(Error::InvalidParameter(format!("u has shape {:?}, expected {:?}", u.shape(), want)));
        }
        Ok(Self { n_modes, n_occupied, u })
    }

    pub fn zero(n_modes: usize, n_occupied: usize) -> Result<Self> {
        Self::new(n_modes, n_occupied, CMatrix::zeros(n_modes.saturating_sub(n_occupied), n_occupied))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_occupied(&self) -> usize {
        self.n_occupied
    }

    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    /// `u_{q,p}` for virtual mode `q` and occupied mode `p`.
    pub fn coefficient(&self, q: usize, p: usize) -> Complex64 {
        self.u[(q - self.n_occupied, p)]
    }

    /// `sum_{p < N <= q} u_{q,p} a+_q a_p`
    pub fn generator(&self) -> Result<FermionOperator> {
        let mut out = FermionOperator::zero(self.n_modes);
        for p in 0..self.n_occupied {
            for q in self.n_occupied..self.n_modes {
                let c = self.coefficient(q, p);
                if c.norm() > COEFF_EPS {
                    out = out.add(&FermionOperator::term(self.n_modes, c, &[LadderOp::create(q), LadderOp::annihilate(p)])?)?;
                }
            }
        }
        Ok(out)
    }

    /// Orbital `b+_p = a+_p + sum_q u_{q,p} a+_q` as a coefficient vector.
    pub fn orbital(&self, p: usize) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.n_modes];
        c[p] = Complex64::new(1.0, 0.0);
        for q in self.n_occupied..self.n_modes {
            c[q] = self.coefficient(q, p);
        }
        c
    }
}

/// Exponential route: `exp(sum u_{q,p} a+_q a_p)` applied to the reference
/// determinant, with the exponential taken of the dense qubit image.
pub fn thouless_prepare(rot: &OrbitalRotation) -> Result<FockVector> {
    linalg::check_dense_limit(rot.n_modes())?;
    let k = jordan_wigner(&rot.generator()?)?.to_dense()?;
    let reference = reference_determinant(rot.n_modes(), rot.n_occupied())?;
    let amplitudes = linalg::mat_vec(&k.exp(), reference.amplitudes());
    Ok(FockVector { n_modes: rot.n_modes(), amplitudes })
}

/// Product route: `b+_{N-1} ... b+_0 |vac>` built by direct ladder action.
pub fn thouless_product(rot: &OrbitalRotation) -> Result<FockVector> {
    let orbitals: Vec<_> = (0..rot.n_occupied()).map(|p| rot.orbital(p)).collect();
    slater_determinant(rot.n_modes(), &orbitals)
}

/// Coupled-cluster amplitudes over a fixed occupied/virtual partition.
#[derive(Debug, Clone, PartialEq)]
pub struct UCCParameters {
    n_modes: usize,
    occupied: Vec<usize>,
    truncation: u8,
    singles: BTreeMap<(usize, usize), f64>,
    doubles: BTreeMap<(usize, usize, usize, usize), f64>,
}

impl UCCParameters {
    pub fn new(n_modes: usize, occupied: &[usize], truncation: u8) -> Result<Self> {
        if !(1..=2).contains(&truncation) {
            return Err(Error::InvalidParameter(format!("truncation level must be 1 or 2, got {truncation}")));
        }
        let mut occ = occupied.to_vec();
        occ.sort_unstable();
        for w in occ.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateQubit(w[0]));
            }
        }
        if let Some(&m) = occ.iter().find(|&&m| m >= n_modes) {
            return Err(Error::QubitOutOfRange { index: m, n_qubits: n_modes });
        }
        Ok(Self { n_modes, occupied: occ, truncation, singles: BTreeMap::new(), doubles: BTreeMap::new() })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    pub fn truncation(&self) -> u8 {
        self.truncation
    }

    pub fn is_occupied(&self, mode: usize) -> bool {
        self.occupied.binary_search(&mode).is_ok()
    }

    fn check_occupied(&self, i: usize) -> Result<()> {
        if i >= self.n_modes || !self.is_occupied(i) {
            return Err(Error::InvalidParameter(format!("mode {i} is not an occupied mode")));
        }
        Ok(())
    }

    fn check_virtual(&self, a: usize) -> Result<()> {
        if a >= self.n_modes || self.is_occupied(a) {
            return Err(Error::InvalidParameter(format!("mode {a} is not a virtual mode")));
        }
        Ok(())
    }

    /// Set `theta^i_a`.
    pub fn set_single(&mut self, i: usize, a: usize, theta: f64) -> Result<()> {
        self.check_occupied(i)?;
        self.check_virtual(a)?;
        self.singles.insert((i, a), theta);
        Ok(())
    }

    /// Set `theta^{i,j}_{a,b}`. Indices may come in either order; the stored
    /// amplitude uses `i < j`, `a < b` with the antisymmetric sign.
    pub fn set_double(&mut self, i: usize, j: usize, a: usize, b: usize, theta: f64) -> Result<()> {
        if self.truncation < 2 {
            return Err(Error::InvalidParameter("doubles need truncation level 2".into()));
        }
        for m in [i, j] {
            self.check_occupied(m)?;
        }
        for m in [a, b] {
            self.check_virtual(m)?;
        }
        if i == j || a == b {
            return Err(Error::InvalidParameter(format!("repeated index in double ({i},{j})->({a},{b})")));
        }
        let mut sign = 1.0;
        let (i, j) = if i < j { (i, j) } else { sign = -sign; (j, i) };
        let (a, b) = if a < b { (a, b) } else { sign = -sign; (b, a) };
        self.doubles.insert((i, j, a, b), sign * theta);
        Ok(())
    }

    pub fn singles(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.singles.iter().map(|(&k, &v)| (k, v))
    }

    pub fn doubles(&self) -> impl Iterator<Item = ((usize, usize, usize, usize), f64)> + '_ {
        self.doubles.iter().map(|(&k, &v)| (k, v))
    }

    /// Every admissible single and double in a fixed order, for dense
    /// parameter vectors.
    pub fn excitation_list(&self) -> Vec<Excitation> {
        let virt: Vec<usize> = (0..self.n_modes).filter(|m| !self.is_occupied(*m)).collect();
        let mut out = Vec::new();
        for &i in &self.occupied {
            for &a in &virt {
                out.push(Excitation::Single { i, a });
            }
        }
        if self.truncation >= 2 {
            for (x, &i) in self.occupied.iter().enumerate() {
                for &j in &self.occupied[x + 1..] {
                    for (y, &a) in virt.iter().enumerate() {
                        for &b in &virt[y + 1..] {
                            out.push(Excitation::Double { i, j, a, b });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn set(&mut self, excitation: Excitation, theta: f64) -> Result<()> {
        match excitation {
            Excitation::Single { i, a } => self.set_single(i, a, theta),
            Excitation::Double { i, j, a, b } => self.set_double(i, j, a, b, theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Excitation {
    Single { i: usize, a: usize },
    Double { i: usize, j: usize, a: usize, b: usize },
}

/// `T - T+` with `T1 = sum theta^i_a a+_a a_i` and
/// `T2 = 1/4 sum_{i<j, a<b} theta^{ij}_{ab} a+_a a+_b a_j a_i`.
pub fn ucc_generator(params: &UCCParameters) -> Result<FermionOperator> {
    let n = params.n_modes();
    let mut t = FermionOperator::zero(n);
    for ((i, a), theta) in params.singles() {
        let c = Complex64::new(theta, 0.0);
        t = t.add(&FermionOperator::term(n, c, &[LadderOp::create(a), LadderOp::annihilate(i)])?)?;
    }
    if params.truncation() >= 2 {
        for ((i, j, a, b), theta) in params.doubles() {
            let c = Complex64::new(0.25 * theta, 0.0);
            let ops = [LadderOp::create(a), LadderOp::create(b), LadderOp::annihilate(j), LadderOp::annihilate(i)];
            t = t.add(&FermionOperator::term(n, c, &ops)?)?;
        }
    }
    t.sub(&t.adjoint())
}

/// `exp(T - T+) |reference>` by exact dense exponentiation.
pub fn ucc_apply(params: &UCCParameters, reference: &StateVector) -> Result<StateVector> {
    if reference.n_qubits() != params.n_modes() {
        return Err(Error::DimensionMismatch { expected: params.n_modes(), found: reference.n_qubits() });
    }
    linalg::check_dense_limit(params.n_modes())?;
    // exp(G) = exp(-i K) with the Hermitian K = iG.
    let g = jordan_wigner(&ucc_generator(params)?)?;
    let k = g.scale(Complex64::new(0.0, 1.0)).to_hermitian()?;
    let u = linalg::expm_hermitian(&k.to_dense()?, 1.0);
    let mut out = reference.clone();
    out.apply_matrix(&u)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense(op: &FermionOperator) -> CMatrix {
        jordan_wigner(op).unwrap().to_dense().unwrap()
    }

    #[test]
    fn single_mode_creation_is_lowering_pauli_combination() {
        let img = jordan_wigner(&FermionOperator::creation(1, 0).unwrap()).unwrap();
        let want = ComplexPauliSum::from_terms(
            1,
            [(c(0.5, 0.0), PauliString::from_letters("X").unwrap()), (c(0.0, -0.5), PauliString::from_letters("Y").unwrap())],
        )
        .unwrap();
        assert_eq!(img, want);
        let m = img.to_dense().unwrap();
        // |1><0|: row 1, column 0.
        assert!((m[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(m[(0, 0)].norm() + m[(0, 1)].norm() + m[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn number_operator_image() {
        for n in 1..4 {
            for j in 0..n {
                let img = jordan_wigner(&FermionOperator::number(n, j).unwrap()).unwrap();
                let want = PauliSum::from_terms(
                    n,
                    [(0.5, PauliString::identity(n)), (-0.5, PauliString::single(n, j, Pauli::Z).unwrap())],
                )
                .unwrap();
                assert_eq!(img.to_hermitian().unwrap(), want);
                // Oracle: |1><0| times |0><1| on the target qubit.
                let lower = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]);
                let n1 = &lower * lower.adjoint();
                let mut full = CMatrix::from_element(1, 1, c(1.0, 0.0));
                for q in (0..n).rev() {
                    let f = if q == j { n1.clone() } else { linalg::identity(2) };
                    full = full.kronecker(&f);
                }
                assert!(linalg::max_abs_diff(&img.to_dense().unwrap(), &full) < 1e-14);
            }
        }
    }

    #[test]
    fn canonical_anticommutation_exhaustive() {
        for n in 1..=6 {
            let dim = 1 << n;
            let cr: Vec<CMatrix> = (0..n).map(|j| dense(&FermionOperator::creation(n, j).unwrap())).collect();
            let an: Vec<CMatrix> = (0..n).map(|j| dense(&FermionOperator::annihilation(n, j).unwrap())).collect();
            for j in 0..n {
                for k in 0..n {
                    let ac = &an[j] * &cr[k] + &cr[k] * &an[j];
                    let want = if j == k { linalg::identity(dim) } else { CMatrix::zeros(dim, dim) };
                    assert!(linalg::max_abs_diff(&ac, &want) < 1e-12);
                    let aa = &an[j] * &an[k] + &an[k] * &an[j];
                    assert!(aa.iter().all(|z| z.norm() < 1e-12));
                    let cc = &cr[j] * &cr[k] + &cr[k] * &cr[j];
                    assert!(cc.iter().all(|z| z.norm() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn symbolic_algebra_matches_anticommutation() {
        let n = 3;
        for j in 0..n {
            for k in 0..n {
                let a = FermionOperator::annihilation(n, j).unwrap();
                let ad = FermionOperator::creation(n, k).unwrap();
                let ac = a.anticommutator(&ad).unwrap();
                if j == k {
                    assert_eq!(ac, FermionOperator::identity(n));
                } else {
                    assert!(ac.is_empty());
                }
            }
        }
        let twice = FermionOperator::term(n, c(1.0, 0.0), &[LadderOp::create(1), LadderOp::create(1)]).unwrap();
        assert!(twice.is_empty());
    }

    #[test]
    fn normal_order_sign_bookkeeping() {
        // a_0 a+_1 = -a+_1 a_0
        let op = FermionOperator::term(2, c(1.0, 0.0), &[LadderOp::annihilate(0), LadderOp::create(1)]).unwrap();
        assert_eq!(op.len(), 1);
        assert_eq!(op.coefficient(&[LadderOp::create(1), LadderOp::annihilate(0)]), c(-1.0, 0.0));
        // a+_0 a+_1 = -a+_1 a+_0
        let op = FermionOperator::term(2, c(2.0, 0.0), &[LadderOp::create(0), LadderOp::create(1)]).unwrap();
        assert_eq!(op.coefficient(&[LadderOp::create(1), LadderOp::create(0)]), c(-2.0, 0.0));
    }

    #[test]
    fn out_of_range_mode_is_rejected() {
        assert!(FermionOperator::creation(2, 2).is_err());
        assert!(fock_state(2, &[3]).is_err());
        assert!(matches!(fock_state(3, &[1, 1]), Err(Error::DuplicateQubit(1))));
    }

    #[test]
    fn fock_state_examples() {
        assert_eq!(fock_state(3, &[]).unwrap(), StateVector::zero(3));
        assert_eq!(fock_state(4, &[1, 2]).unwrap(), StateVector::basis(4, 0b0110).unwrap());
    }

    #[test]
    fn fock_state_matches_ladder_products() {
        let n = 4;
        let vac = StateVector::zero(n);
        let apply = |modes: &[usize]| {
            // Rightmost operator acts first.
            let mut v: Vec<Complex64> = vac.amplitudes().to_vec();
            for &m in modes.iter().rev() {
                v = linalg::mat_vec(&dense(&FermionOperator::creation(n, m).unwrap()), &v);
            }
            v
        };
        let fock = fock_state(n, &[1, 2]).unwrap();
        // a+_1 a+_2 |vac> is the basis state itself ...
        for (a, b) in apply(&[1, 2]).iter().zip(fock.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        // ... and a+_2 a+_1 |vac> carries a minus sign.
        for (a, b) in apply(&[2, 1]).iter().zip(fock.amplitudes()) {
            assert!((a + b).norm() < 1e-14);
        }
        let reference = reference_determinant(n, 3).unwrap();
        for (a, b) in apply(&[2, 1, 0]).iter().zip(reference.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn sparse_ladder_action_matches_dense_images() {
        let n = 4;
        let mut r = rng::stream(7, 0);
        let amps: Vec<Complex64> = (0..1 << n).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
        for m in 0..n {
            for op in [LadderOp::create(m), LadderOp::annihilate(m)] {
                let mut v = FockVector { n_modes: n, amplitudes: amps.clone() };
                v.apply_ladder(op).unwrap();
                let f = FermionOperator::term(n, c(1.0, 0.0), &[op]).unwrap();
                let want = linalg::mat_vec(&dense(&f), &amps);
                assert!(v.amplitudes().iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-14));
            }
        }
    }

    fn random_rotation(n_modes: usize, n_occ: usize, seed: u64, id: u64) -> OrbitalRotation {
        let mut r = rng::stream(seed, id);
        let u = CMatrix::from_fn(n_modes - n_occ, n_occ, |_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
        OrbitalRotation::new(n_modes, n_occ, u).unwrap()
    }

    #[test]
    fn thouless_zero_rotation_is_reference() {
        let rot = OrbitalRotation::zero(4, 2).unwrap();
        let reference = FockVector::from_state(&reference_determinant(4, 2).unwrap());
        assert!(thouless_prepare(&rot).unwrap().max_abs_diff(&reference) < 1e-15);
        assert!(thouless_product(&rot).unwrap().max_abs_diff(&reference) < 1e-15);
    }

    #[test]
    fn thouless_routes_agree_on_random_rotations() {
        for (n, occ) in [(4, 2), (6, 3)] {
            for id in 0..20 {
                let rot = random_rotation(n, occ, 11, id);
                let a = thouless_prepare(&rot).unwrap();
                let b = thouless_product(&rot).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-10, "({n},{occ}) draw {id}: {}", a.max_abs_diff(&b));
                assert!((a.norm() - b.norm()).abs() < 1e-10);
                assert!(a.norm() > 1.0);
            }
        }
    }

    #[test]
    fn thouless_product_agrees_with_dense_ladder_products() {
        let rot = random_rotation(4, 2, 3, 0);
        let n = 4;
        let mut v = StateVector::zero(n).amplitudes().to_vec();
        for p in 0..2 {
            let mut b = FermionOperator::creation(n, p).unwrap();
            for q in 2..n {
                b = b.add(&FermionOperator::term(n, rot.coefficient(q, p), &[LadderOp::create(q)]).unwrap()).unwrap();
            }
            v = linalg::mat_vec(&dense(&b), &v);
        }
        let got = thouless_product(&rot).unwrap();
        assert!(got.amplitudes().iter().zip(&v).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn swapping_orbitals_flips_sign() {
        let rot = random_rotation(5, 3, 4, 0);
        let mut orbitals: Vec<_> = (0..3).map(|p| rot.orbital(p)).collect();
        let a = slater_determinant(5, &orbitals).unwrap();
        orbitals.swap(0, 2);
        let b = slater_determinant(5, &orbitals).unwrap();
        assert!(a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x + y).norm() < 1e-14));
        assert!(a.norm() > 0.5);
    }

    #[test]
    fn rotation_shape_is_validated() {
        assert!(OrbitalRotation::new(4, 2, CMatrix::zeros(2, 3)).is_err());
        assert!(OrbitalRotation::new(4, 0, CMatrix::zeros(4, 0)).is_err());
    }

    #[test]
    fn ucc_zero_amplitudes_give_zero_generator() {
        let p = UCCParameters::new(4, &[0, 1], 2).unwrap();
        assert!(ucc_generator(&p).unwrap().is_empty());
        let reference = fock_state(4, &[0, 1]).unwrap();
        let out = ucc_apply(&p, &reference).unwrap();
        assert!((out.fidelity(&reference).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ucc_single_instance() {
        let mut p = UCCParameters::new(4, &[0, 1], 2).unwrap();
        p.set_single(1, 3, 0.5).unwrap();
        let g = ucc_generator(&p).unwrap();
        let want = FermionOperator::term(4, c(0.5, 0.0), &[LadderOp::create(3), LadderOp::annihilate(1)])
            .unwrap()
            .add(&FermionOperator::term(4, c(-0.5, 0.0), &[LadderOp::create(1), LadderOp::annihilate(3)]).unwrap())
            .unwrap();
        assert_eq!(g, want);
    }

    #[test]
    fn ucc_partition_is_validated() {
        let mut p = UCCParameters::new(4, &[0, 1], 2).unwrap();
        assert!(p.set_single(2, 3, 0.1).is_err());
        assert!(p.set_single(0, 1, 0.1).is_err());
        assert!(p.set_double(0, 0, 2, 3, 0.1).is_err());
        assert!(p.set_double(0, 1, 1, 3, 0.1).is_err());
        let mut p1 = UCCParameters::new(4, &[0, 1], 1).unwrap();
        assert!(p1.set_double(0, 1, 2, 3, 0.1).is_err());
        assert!(UCCParameters::new(4, &[0], 3).is_err());
    }

    #[test]
    fn double_amplitudes_are_antisymmetric() {
        let mut p = UCCParameters::new(4, &[0, 1], 2).unwrap();
        p.set_double(1, 0, 2, 3, 0.7).unwrap();
        assert_eq!(p.doubles().collect::<Vec<_>>(), vec![((0, 1, 2, 3), -0.7)]);
        p.set_double(1, 0, 3, 2, 0.7).unwrap();
        assert_eq!(p.doubles().collect::<Vec<_>>(), vec![((0, 1, 2, 3), 0.7)]);
    }

    fn random_params(seed: u64) -> UCCParameters {
        let mut p = UCCParameters::new(6, &[0, 1, 2], 2).unwrap();
        let mut r = rng::stream(seed, 0);
        for ex in p.excitation_list() {
            p.set(ex, r.random_range(-1.0..1.0)).unwrap();
        }
        p
    }

    #[test]
    fn ucc_generator_is_anti_hermitian() {
        for seed in 0..3 {
            let g = dense(&ucc_generator(&random_params(seed)).unwrap());
            assert!(linalg::max_abs_diff(&g, &(-g.adjoint())) < 1e-12);
        }
    }

    #[test]
    fn ucc_preserves_norm_and_particle_number() {
        let reference = fock_state(6, &[0, 1, 2]).unwrap();
        let number = number_operator(6).unwrap();
        for seed in 0..5 {
            let out = ucc_apply(&random_params(seed), &reference).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-12);
            assert!((out.expectation(&number).unwrap() - 3.0).abs() < 1e-10);
            assert!(out.fidelity(&reference).unwrap() < 1.0 - 1e-3);
        }
    }

    #[test]
    fn disjoint_singles_rotate_independently() {
        let mut p = UCCParameters::new(4, &[0, 1], 1).unwrap();
        p.set_single(0, 2, 0.3).unwrap();
        p.set_single(1, 3, -0.2).unwrap();
        let reference = fock_state(4, &[0, 1]).unwrap();
        let out = ucc_apply(&p, &reference).unwrap();
        // Single-mode rotations act independently: amplitude cos * cos on the reference.
        let overlap = out.inner_product(&reference).unwrap().norm();
        assert!((overlap - 0.3f64.cos() * 0.2f64.cos()).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn adjoint_is_involutive_and_matches_dense(
            ops in proptest::collection::vec((0usize..3, any::<bool>()), 0..5),
            re in -1.0f64..1.0, im in -1.0f64..1.0,
        ) {
            let ladder: Vec<LadderOp> = ops
                .iter()
                .map(|&(m, cr)| if cr { LadderOp::create(m) } else { LadderOp::annihilate(m) })
                .collect();
            let op = FermionOperator::term(3, c(re, im), &ladder).unwrap();
            prop_assert_eq!(op.adjoint().adjoint(), op.clone());
            let d = dense(&op);
            prop_assert!(linalg::max_abs_diff(&dense(&op.adjoint()), &d.adjoint()) < 1e-12);
        }

        #[test]
        fn normal_ordering_preserves_dense_image(
            ops in proptest::collection::vec((0usize..3, any::<bool>()), 0..6),
        ) {
            // Oracle: multiply the single-operator images in the given order.
            let n = 3;
            let mut product = linalg::identity(1 << n);
            for &(m, cr) in &ops {
                let f = if cr { FermionOperator::creation(n, m) } else { FermionOperator::annihilation(n, m) }.unwrap();
                product *= dense(&f);
            }
            let ladder: Vec<LadderOp> = ops
                .iter()
                .map(|&(m, cr)| if cr { LadderOp::create(m) } else { LadderOp::annihilate(m) })
                .collect();
            let op = FermionOperator::term(n, c(1.0, 0.0), &ladder).unwrap();
            prop_assert!(linalg::max_abs_diff(&dense(&op), &product) < 1e-12);
        }
    }
}
