//! Result files and their readers.
//!
//! Floats are always written as `{:.16e}` (17 significant digits), so every
//! value survives a write/read cycle bit for bit. Files are written to a
//! temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};

/// The fixed float format used in every output file.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `bytes` to `path` atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// One CSV cell.
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u8> for Cell {
    fn from(v: u8) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
        }
    }
}

/// Render a table with the given header.
pub fn csv_bytes(header: &[&str], rows: &[Vec<Cell>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            bail!("row has {} cells, header has {}", row.len(), header.len());
        }
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// Read a table, insisting on the exact header.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        bail!("{}: expected columns {:?}, found {:?}", path.display(), header, found);
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("{}: data row {}", path.display(), i + 1)))
        .collect()
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &json_bytes(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn number<S: Serializer>(x: f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(serde::ser::Error::custom(format!("non-finite value {x} in output")));
    }
    let n: serde_json::Number = fmt_float(x).parse().map_err(serde::ser::Error::custom)?;
    n.serialize(s)
}

fn float<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    number(*x, s)
}

fn float_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => number(*v, s),
        None => s.serialize_none(),
    }
}

fn float_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        if !x.is_finite() {
            return Err(serde::ser::Error::custom(format!("non-finite value {x} in output")));
        }
        let n: serde_json::Number = fmt_float(x).parse().map_err(serde::ser::Error::custom)?;
        seq.serialize_element(&n)?;
    }
    seq.end()
}

pub const SPECTRUM_COLUMNS: [&str; 2] = ["index", "energy"];
pub const EVOLVE_COLUMNS: [&str; 4] = ["step", "time", "energy", "fidelity"];
pub const ADIABATIC_COLUMNS: [&str; 3] = ["T", "fidelity", "infidelity"];
pub const TRACE_COLUMNS: [&str; 3] = ["iteration", "energy", "gradient_norm"];
pub const QPE_COLUMNS: [&str; 2] = ["k", "probability"];
pub const IPE_COLUMNS: [&str; 3] = ["round", "digit", "p0"];
pub const SCAN_COLUMNS: [&str; 3] = ["E", "p_hat", "stderr"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EvolveRow {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AdiabaticRow {
    #[serde(rename = "T")]
    pub total_time: f64,
    pub fidelity: f64,
    pub infidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct QpeRow {
    pub k: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct IpeRow {
    pub round: usize,
    pub digit: u8,
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "E")]
    pub energy: f64,
    pub p_hat: f64,
    pub stderr: f64,
}

pub fn read_spectrum(path: &Path) -> Result<Vec<SpectrumRow>> {
    read_csv(path, &SPECTRUM_COLUMNS)
}

pub fn read_evolve(path: &Path) -> Result<Vec<EvolveRow>> {
    read_csv(path, &EVOLVE_COLUMNS)
}

pub fn read_adiabatic(path: &Path) -> Result<Vec<AdiabaticRow>> {
    read_csv(path, &ADIABATIC_COLUMNS)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    read_csv(path, &TRACE_COLUMNS)
}

pub fn read_qpe(path: &Path) -> Result<Vec<QpeRow>> {
    read_csv(path, &QPE_COLUMNS)
}

pub fn read_ipe(path: &Path) -> Result<Vec<IpeRow>> {
    read_csv(path, &IPE_COLUMNS)
}

pub fn read_scan(path: &Path) -> Result<Vec<ScanRow>> {
    read_csv(path, &SCAN_COLUMNS)
}

/// Adiabatic run at the time required by the gap bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    #[serde(serialize_with = "float")]
    pub delta: f64,
    #[serde(serialize_with = "float")]
    pub integral_value: f64,
    #[serde(serialize_with = "float")]
    pub boundary_term: f64,
    #[serde(serialize_with = "float")]
    pub required_time: f64,
    #[serde(serialize_with = "float")]
    pub min_gap: f64,
    #[serde(serialize_with = "float")]
    pub min_gap_s: f64,
    pub n_steps: usize,
    #[serde(serialize_with = "float")]
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeSummary {
    #[serde(serialize_with = "float")]
    pub energy: f64,
    #[serde(serialize_with = "float_vec")]
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaSummary {
    pub n_layers: usize,
    #[serde(serialize_with = "float")]
    pub prescription_energy: f64,
    #[serde(serialize_with = "float")]
    pub energy: f64,
    #[serde(serialize_with = "float")]
    pub ground_energy: f64,
    #[serde(serialize_with = "float_vec")]
    pub betas: Vec<f64>,
    #[serde(serialize_with = "float_vec")]
    pub gammas: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpeSummary {
    pub n_ancilla: usize,
    pub argmax: usize,
    #[serde(serialize_with = "float")]
    pub phase_estimate: f64,
    #[serde(serialize_with = "float_opt")]
    pub energy_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpeSummary {
    pub bit_string: String,
    pub value: usize,
    #[serde(serialize_with = "float")]
    pub phase_estimate: f64,
    #[serde(serialize_with = "float_opt")]
    pub energy_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RodeoSummary {
    #[serde(serialize_with = "float")]
    pub energy: f64,
    #[serde(serialize_with = "float")]
    pub sigma: f64,
    pub n_cycles: usize,
    pub n_trials: usize,
    pub mode: String,
    pub schedule: String,
    #[serde(serialize_with = "float")]
    pub mean_success: f64,
    #[serde(serialize_with = "float")]
    pub standard_error: f64,
    #[serde(serialize_with = "float")]
    pub target_energy: f64,
    #[serde(serialize_with = "float_opt")]
    pub ensemble_fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    #[serde(serialize_with = "float")]
    pub energy: f64,
    #[serde(serialize_with = "float")]
    pub height: f64,
    #[serde(serialize_with = "float")]
    pub prominence: f64,
    #[serde(serialize_with = "float_opt")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub n_cycles: usize,
    pub peaks: Vec<PeakRecord>,
}
