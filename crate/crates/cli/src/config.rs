//! JSON input documents.
//!
//! One document carries everything a command needs. The Hamiltonian fields
//! (`n_qubits`, `terms`) and the graph fields (`vertices`, `edges`) sit at the
//! top level, so a bare Hamiltonian file or a bare graph file is already a
//! valid document. Optional sections add the initial state, a driver
//! Hamiltonian, symmetry observables, a phase unitary and an ansatz.
//!
//! Pauli strings are uppercase letters with the highest qubit leftmost:
//! `"XZ"` acts with Z on qubit 0 and X on qubit 1, where qubit `q` is bit `q`
//! of the amplitude index.

use std::fmt;

use eigenkit::statevector::{Gate, StateVector};
use eigenkit::variational::{Ansatz, DescentConfig, Layer};
use eigenkit::{build_ising, Graph, PauliString, PauliSum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::Value;

/// A validation failure, with the JSON path of the offending value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "field `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Parsed<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coeff: f64,
    pauli: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHamiltonian {
    n_qubits: usize,
    terms: Vec<RawTerm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    gate: String,
    targets: Vec<usize>,
    #[serde(default)]
    controls: Vec<usize>,
    #[serde(default)]
    angle: Option<f64>,
    #[serde(default)]
    pauli: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    generator: String,
    #[serde(default)]
    fixed: Vec<RawGate>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnsatz {
    #[serde(default)]
    initial: Option<Value>,
    layers: Vec<RawLayer>,
    theta0: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnitary {
    #[serde(default)]
    phases: Option<Vec<f64>>,
    #[serde(default)]
    dt: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    #[serde(default)]
    step_size: Option<f64>,
    #[serde(default)]
    max_iterations: Option<usize>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default)]
    alpha: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default)]
    n_qubits: Option<usize>,
    #[serde(default)]
    terms: Option<Vec<RawTerm>>,
    #[serde(default)]
    vertices: Option<usize>,
    #[serde(default)]
    edges: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    initial: Option<Value>,
    #[serde(default)]
    driver: Option<RawHamiltonian>,
    #[serde(default)]
    symmetries: Vec<RawHamiltonian>,
    #[serde(default)]
    unitary: Option<RawUnitary>,
    #[serde(default)]
    ansatz: Option<RawAnsatz>,
    #[serde(default)]
    optimizer: Option<RawOptimizer>,
    #[serde(default)]
    split: Option<Vec<usize>>,
}

/// How the initial state is described in a document.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Zero,
    Uniform,
    Basis(usize),
    Amplitudes(Vec<Complex64>),
    /// The `k`-th eigenvector of the document Hamiltonian, ascending energy.
    Eigenstate(usize),
}

/// Where a phase unitary comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitarySpec {
    /// `diag(e^{2 pi i theta_j})`.
    Phases(Vec<f64>),
    /// `e^{-i H dt}` of the document Hamiltonian.
    Hamiltonian { dt: f64 },
}

#[derive(Debug, Clone)]
pub struct AnsatzSpec {
    pub initial: Option<StateSpec>,
    pub layers: Vec<Layer>,
    pub theta0: Vec<f64>,
}

/// Fully validated document.
#[derive(Debug, Clone, Default)]
pub struct Document {
    pub hamiltonian: Option<PauliSum>,
    pub graph: Option<Graph>,
    pub initial: Option<StateSpec>,
    pub driver: Option<PauliSum>,
    pub symmetries: Vec<PauliSum>,
    pub unitary: Option<UnitarySpec>,
    pub ansatz: Option<AnsatzSpec>,
    pub optimizer: DescentConfig,
    /// `(H_A, H_B)` when the document names the terms of `H_A` in `split`.
    pub split: Option<(PauliSum, PauliSum)>,
}

/// Parse and validate a document. JSON syntax errors carry line and column.
pub fn parse_config(text: &str) -> Parsed<Document> {
    let raw: RawDocument = serde_json::from_str(text)
        .map_err(|e| ConfigError::new("", format!("line {} column {}: {e}", e.line(), e.column())))?;

    let graph = match (raw.vertices, raw.edges) {
        (Some(v), Some(edges)) => Some(parse_graph(v, &edges)?),
        (Some(_), None) => return Err(ConfigError::new("edges", "required when `vertices` is given")),
        (None, Some(_)) => return Err(ConfigError::new("vertices", "required when `edges` is given")),
        (None, None) => None,
    };

    let split = match (&raw.split, &raw.terms, raw.n_qubits) {
        (None, _, _) => None,
        (Some(part_a), Some(terms), Some(n)) => Some(parse_split(n, terms, part_a)?),
        (Some(_), _, _) => return Err(ConfigError::new("split", "needs explicit `n_qubits` and `terms`")),
    };

    let hamiltonian = match (raw.n_qubits, raw.terms) {
        (Some(n), Some(terms)) => Some(parse_hamiltonian(n, &terms, "")?),
        (Some(_), None) => return Err(ConfigError::new("terms", "required when `n_qubits` is given")),
        (None, Some(_)) => return Err(ConfigError::new("n_qubits", "required when `terms` is given")),
        (None, None) => graph.as_ref().map(build_ising),
    };
    if let (Some(h), Some(g)) = (&hamiltonian, &graph) {
        if h.n_qubits() != g.vertex_count() {
            return Err(ConfigError::new(
                "vertices",
                format!("graph has {} vertices but the Hamiltonian acts on {} qubits", g.vertex_count(), h.n_qubits()),
            ));
        }
    }

    let driver = raw
        .driver
        .map(|d| parse_hamiltonian(d.n_qubits, &d.terms, "driver."))
        .transpose()?;
    let symmetries = raw
        .symmetries
        .iter()
        .enumerate()
        .map(|(i, s)| parse_hamiltonian(s.n_qubits, &s.terms, &format!("symmetries[{i}].")))
        .collect::<Parsed<Vec<_>>>()?;

    let initial = raw.initial.as_ref().map(|v| parse_state_spec(v, "initial")).transpose()?;

    let unitary = match raw.unitary {
        None => None,
        Some(RawUnitary { phases: Some(p), dt: None }) => {
            for (i, theta) in p.iter().enumerate() {
                if !theta.is_finite() {
                    return Err(ConfigError::new(format!("unitary.phases[{i}]"), "must be finite"));
                }
            }
            Some(UnitarySpec::Phases(p))
        }
        Some(RawUnitary { phases: None, dt: Some(dt) }) => {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(ConfigError::new("unitary.dt", format!("must be positive and finite, got {dt}")));
            }
            if hamiltonian.is_none() {
                return Err(ConfigError::new("unitary.dt", "needs a Hamiltonian in the document"));
            }
            Some(UnitarySpec::Hamiltonian { dt })
        }
        Some(_) => return Err(ConfigError::new("unitary", "give exactly one of `phases` or `dt`")),
    };

    let ansatz = raw.ansatz.map(parse_ansatz).transpose()?;
    let optimizer = parse_optimizer(raw.optimizer)?;

    Ok(Document { hamiltonian, graph, initial, driver, symmetries, unitary, ansatz, optimizer, split })
}

/// `part_a` lists the indices of the terms that form `H_A`; the rest form `H_B`.
fn parse_split(n_qubits: usize, terms: &[RawTerm], part_a: &[usize]) -> Parsed<(PauliSum, PauliSum)> {
    let mut in_a = vec![false; terms.len()];
    for (i, &t) in part_a.iter().enumerate() {
        if t >= terms.len() {
            return Err(ConfigError::new(format!("split[{i}]"), format!("term {t} does not exist ({} terms)", terms.len())));
        }
        if std::mem::replace(&mut in_a[t], true) {
            return Err(ConfigError::new(format!("split[{i}]"), format!("term {t} listed twice")));
        }
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        if in_a[i] { a.push(t) } else { b.push(t) }
    }
    let build = |part: Vec<&RawTerm>| -> Parsed<PauliSum> {
        let owned: Vec<RawTerm> = part.into_iter().map(|t| RawTerm { coeff: t.coeff, pauli: t.pauli.clone() }).collect();
        parse_hamiltonian(n_qubits, &owned, "")
    };
    Ok((build(a)?, build(b)?))
}

fn parse_graph(vertices: usize, edges: &[[usize; 2]]) -> Parsed<Graph> {
    let mut adjacency = vec![vec![0u8; vertices]; vertices];
    for (i, &[a, b]) in edges.iter().enumerate() {
        if a >= vertices || b >= vertices {
            return Err(ConfigError::new(format!("edges[{i}]"), format!("vertex out of range for {vertices} vertices")));
        }
        if a == b {
            return Err(ConfigError::new(format!("edges[{i}]"), "self-loops are not allowed"));
        }
        if adjacency[a][b] == 1 {
            return Err(ConfigError::new(format!("edges[{i}]"), format!("duplicate edge ({a}, {b})")));
        }
        adjacency[a][b] = 1;
        adjacency[b][a] = 1;
    }
    Graph::new(adjacency).map_err(|e| ConfigError::new("edges", e.to_string()))
}

fn parse_pauli(letters: &str, n_qubits: usize, field: &str) -> Parsed<PauliString> {
    if letters.chars().count() != n_qubits {
        return Err(ConfigError::new(
            field,
            format!("Pauli string \"{letters}\" has {} letters, expected {n_qubits}", letters.chars().count()),
        ));
    }
    PauliString::from_letters(letters).map_err(|e| ConfigError::new(field, format!("\"{letters}\": {e}")))
}

fn parse_hamiltonian(n_qubits: usize, terms: &[RawTerm], prefix: &str) -> Parsed<PauliSum> {
    if n_qubits == 0 {
        return Err(ConfigError::new(format!("{prefix}n_qubits"), "must be at least 1"));
    }
    let mut out = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        let field = format!("{prefix}terms[{i}]");
        if !t.coeff.is_finite() {
            return Err(ConfigError::new(format!("{field}.coeff"), "must be finite"));
        }
        out.push((t.coeff, parse_pauli(&t.pauli, n_qubits, &format!("{field}.pauli"))?));
    }
    PauliSum::from_terms(n_qubits, out).map_err(|e| ConfigError::new(format!("{prefix}terms"), e.to_string()))
}

/// `"zero"`, `"uniform"`, `{"basis": k}`, `{"eigenstate": k}` or
/// `{"amplitudes": [[re, im], ...]}`.
fn parse_state_spec(v: &Value, field: &str) -> Parsed<StateSpec> {
    match v {
        Value::String(s) if s == "zero" => Ok(StateSpec::Zero),
        Value::String(s) if s == "uniform" => Ok(StateSpec::Uniform),
        Value::Object(map) if map.len() == 1 => {
            let (key, val) = map.iter().next().expect("one entry");
            let index = || {
                val.as_u64()
                    .map(|k| k as usize)
                    .ok_or_else(|| ConfigError::new(format!("{field}.{key}"), "must be a non-negative integer"))
            };
            match key.as_str() {
                "basis" => Ok(StateSpec::Basis(index()?)),
                "eigenstate" => Ok(StateSpec::Eigenstate(index()?)),
                "amplitudes" => {
                    let list = val
                        .as_array()
                        .ok_or_else(|| ConfigError::new(format!("{field}.amplitudes"), "must be an array"))?;
                    let amps = list
                        .iter()
                        .enumerate()
                        .map(|(i, a)| parse_complex(a, &format!("{field}.amplitudes[{i}]")))
                        .collect::<Parsed<Vec<_>>>()?;
                    Ok(StateSpec::Amplitudes(amps))
                }
                other => Err(ConfigError::new(field, format!("unknown state kind `{other}`"))),
            }
        }
        _ => Err(ConfigError::new(
            field,
            "expected \"zero\", \"uniform\", {\"basis\": k}, {\"eigenstate\": k} or {\"amplitudes\": [...]}",
        )),
    }
}

/// A real number or a `[re, im]` pair.
fn parse_complex(v: &Value, field: &str) -> Parsed<Complex64> {
    let bad = || ConfigError::new(field, "expected a number or a [re, im] pair");
    let z = match v {
        Value::Number(n) => Complex64::new(n.as_f64().ok_or_else(bad)?, 0.0),
        Value::Array(pair) if pair.len() == 2 => {
            Complex64::new(pair[0].as_f64().ok_or_else(bad)?, pair[1].as_f64().ok_or_else(bad)?)
        }
        _ => return Err(bad()),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(ConfigError::new(field, "must be finite"));
    }
    Ok(z)
}

fn parse_gate(g: &RawGate, n_qubits: usize, field: &str) -> Parsed<Gate> {
    let wrap = |e: eigenkit::Error| ConfigError::new(field, e.to_string());
    let single = || -> Parsed<usize> {
        match g.targets.as_slice() {
            [q] => Ok(*q),
            _ => Err(ConfigError::new(format!("{field}.targets"), format!("`{}` takes exactly one target", g.gate))),
        }
    };
    let base = match g.gate.as_str() {
        "H" => Gate::h(single()?),
        "X" => Gate::x(single()?),
        "Y" => Gate::y(single()?),
        "Z" => Gate::z(single()?),
        "PHASE" => {
            let angle = g.angle.ok_or_else(|| ConfigError::new(format!("{field}.angle"), "required for PHASE"))?;
            Gate::phase(single()?, angle)
        }
        "SWAP" => match g.targets.as_slice() {
            [a, b] => Gate::swap(*a, *b).map_err(wrap)?,
            _ => return Err(ConfigError::new(format!("{field}.targets"), "SWAP takes exactly two targets")),
        },
        "ROT" => {
            let angle = g.angle.ok_or_else(|| ConfigError::new(format!("{field}.angle"), "required for ROT"))?;
            let letters = g.pauli.as_deref().ok_or_else(|| ConfigError::new(format!("{field}.pauli"), "required for ROT"))?;
            let p = parse_pauli(letters, g.targets.len(), &format!("{field}.pauli"))?;
            Gate::rotation_on(g.targets.clone(), p, angle).map_err(wrap)?
        }
        other => return Err(ConfigError::new(format!("{field}.gate"), format!("unknown gate `{other}`"))),
    };
    if let Some(q) = g.targets.iter().chain(&g.controls).find(|&&q| q >= n_qubits) {
        return Err(ConfigError::new(field, format!("qubit {q} out of range for {n_qubits} qubits")));
    }
    if g.controls.is_empty() {
        Ok(base)
    } else {
        base.controlled(&g.controls).map_err(wrap)
    }
}

fn parse_ansatz(raw: RawAnsatz) -> Parsed<AnsatzSpec> {
    if raw.layers.is_empty() {
        return Err(ConfigError::new("ansatz.layers", "needs at least one layer"));
    }
    let n_qubits = raw.layers[0].generator.chars().count();
    let mut layers = Vec::with_capacity(raw.layers.len());
    for (i, l) in raw.layers.iter().enumerate() {
        let field = format!("ansatz.layers[{i}]");
        let generator = parse_pauli(&l.generator, n_qubits, &format!("{field}.generator"))?;
        let fixed = l
            .fixed
            .iter()
            .enumerate()
            .map(|(j, g)| parse_gate(g, n_qubits, &format!("{field}.fixed[{j}]")))
            .collect::<Parsed<Vec<_>>>()?;
        layers.push(Layer::new(generator, fixed));
    }
    if raw.theta0.len() != layers.len() {
        return Err(ConfigError::new(
            "ansatz.theta0",
            format!("has {} entries for {} layers", raw.theta0.len(), layers.len()),
        ));
    }
    if let Some(i) = raw.theta0.iter().position(|t| !t.is_finite()) {
        return Err(ConfigError::new(format!("ansatz.theta0[{i}]"), "must be finite"));
    }
    let initial = raw.initial.as_ref().map(|v| parse_state_spec(v, "ansatz.initial")).transpose()?;
    Ok(AnsatzSpec { initial, layers, theta0: raw.theta0 })
}

fn parse_optimizer(raw: Option<RawOptimizer>) -> Parsed<DescentConfig> {
    let mut cfg = DescentConfig::default();
    let Some(raw) = raw else { return Ok(cfg) };
    if let Some(v) = raw.step_size {
        if !(v.is_finite() && v > 0.0) {
            return Err(ConfigError::new("optimizer.step_size", format!("must be positive, got {v}")));
        }
        cfg.step_size = v;
    }
    if let Some(v) = raw.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(v) = raw.tolerance {
        if !(v.is_finite() && v >= 0.0) {
            return Err(ConfigError::new("optimizer.tolerance", format!("must be non-negative, got {v}")));
        }
        cfg.tolerance = v;
    }
    if let Some(v) = raw.alpha {
        if !(v.is_finite() && v.sin().abs() > eigenkit::variational::MIN_SHIFT_SINE) {
            return Err(ConfigError::new("optimizer.alpha", format!("sin(alpha) must be nonzero, got alpha = {v}")));
        }
        cfg.alpha = v;
    }
    Ok(cfg)
}

impl Document {
    pub fn require_hamiltonian(&self) -> Parsed<&PauliSum> {
        self.hamiltonian
            .as_ref()
            .ok_or_else(|| ConfigError::new("terms", "this command needs a Hamiltonian (`n_qubits`/`terms` or a graph)"))
    }

    pub fn require_split(&self) -> Parsed<&(PauliSum, PauliSum)> {
        self.split.as_ref().ok_or_else(|| {
            ConfigError::new("split", "this command needs `split`: the indices of the terms that form H_A")
        })
    }

    pub fn require_graph(&self) -> Parsed<&Graph> {
        self.graph.as_ref().ok_or_else(|| ConfigError::new("edges", "this command needs a graph (`vertices`/`edges`)"))
    }

    /// The declared driver, or the transverse field `-sum_q X_q`.
    pub fn driver_or_default(&self, n_qubits: usize) -> Parsed<PauliSum> {
        if let Some(d) = &self.driver {
            if d.n_qubits() != n_qubits {
                return Err(ConfigError::new(
                    "driver.n_qubits",
                    format!("driver acts on {} qubits, problem on {n_qubits}", d.n_qubits()),
                ));
            }
            return Ok(d.clone());
        }
        let terms = (0..n_qubits)
            .map(|q| PauliString::single(n_qubits, q, eigenkit::Pauli::X).map(|p| (-1.0, p)))
            .collect::<eigenkit::Result<Vec<_>>>()
            .map_err(|e| ConfigError::new("driver", e.to_string()))?;
        PauliSum::from_terms(n_qubits, terms).map_err(|e| ConfigError::new("driver", e.to_string()))
    }

    /// Build a concrete state. `eigen_source` is diagonalized for `Eigenstate`.
    pub fn build_state(
        spec: &StateSpec,
        n_qubits: usize,
        eigen_source: Option<&PauliSum>,
        field: &str,
    ) -> Parsed<StateVector> {
        let wrap = |e: eigenkit::Error| ConfigError::new(field, e.to_string());
        match spec {
            StateSpec::Zero => Ok(StateVector::zero(n_qubits)),
            StateSpec::Uniform => Ok(StateVector::uniform(n_qubits)),
            StateSpec::Basis(k) => StateVector::basis(n_qubits, *k).map_err(wrap),
            StateSpec::Amplitudes(a) => {
                if a.len() != 1usize << n_qubits {
                    return Err(ConfigError::new(
                        field,
                        format!("{} amplitudes given, a {n_qubits}-qubit state needs {}", a.len(), 1usize << n_qubits),
                    ));
                }
                StateVector::normalized(a.clone()).map_err(wrap)
            }
            StateSpec::Eigenstate(k) => {
                let h = eigen_source.ok_or_else(|| ConfigError::new(field, "eigenstate needs a Hamiltonian"))?;
                let spectrum = h.exact_spectrum().map_err(wrap)?;
                spectrum.eigenvectors.get(*k).cloned().ok_or_else(|| {
                    ConfigError::new(field, format!("eigenstate index {k} out of range for {} levels", spectrum.len()))
                })
            }
        }
    }

    pub fn build_ansatz(&self) -> Parsed<(Ansatz, Vec<f64>)> {
        let spec = self.ansatz.as_ref().ok_or_else(|| ConfigError::new("ansatz", "this command needs an ansatz"))?;
        let n = spec.layers[0].generator.n_qubits();
        let initial = match &spec.initial {
            Some(s) => Self::build_state(s, n, self.hamiltonian.as_ref(), "ansatz.initial")?,
            None => StateVector::zero(n),
        };
        let ansatz = Ansatz::new(initial, spec.layers.clone()).map_err(|e| ConfigError::new("ansatz", e.to_string()))?;
        Ok((ansatz, spec.theta0.clone()))
    }
}
