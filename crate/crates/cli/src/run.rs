//! Command-line surface and the runners behind each subcommand.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use eigenkit::adiabatic::{self, Ramp, Schedule, DEFAULT_GAP_GRID};
use eigenkit::phase::{self, PhaseUnitary, RodeoConfig, RodeoEngine, RodeoMode, TimeSchedule};
use eigenkit::trotter::{self, ProductFormula, SplitHamiltonian};
use eigenkit::variational;
use eigenkit::{linalg, rng, Spectrum, StateVector};

use crate::config::{parse_config, Document, StateSpec, UnitarySpec};
use crate::output::{self, Cell};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20240601;

/// QPE rows whose probability is at or below this are not written.
pub const QPE_ROW_FLOOR: f64 = 1e-15;

/// Energies closer than this count as one level when measuring fidelity.
const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "eigenkit", version, about = "Statevector simulation of eigenvalue-preparation algorithms")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON input document.
    #[arg(long)]
    pub input: PathBuf,
    /// Main result file (CSV or JSON depending on the command).
    #[arg(long)]
    pub output: PathBuf,
    /// Seed for every random stream.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Optional JSON file with the scalar results of the run.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RampArg {
    Linear,
    Smoothstep,
}

impl From<RampArg> for Ramp {
    fn from(r: RampArg) -> Self {
        match r {
            RampArg::Linear => Ramp::Linear,
            RampArg::Smoothstep => Ramp::Smoothstep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sampled,
    ExactBorn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Constant,
    Decreasing,
}

#[derive(Debug, Clone, Args)]
pub struct RodeoArgs {
    /// Width of the normal distribution the cycle times are drawn from.
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 3)]
    pub cycles: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Sampled)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Constant)]
    pub schedule: ScheduleArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact eigenvalues of the Hamiltonian.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Product-formula evolution, compared step by step with exact evolution.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        total_time: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
    },
    /// Adiabatic sweep from the driver to the Hamiltonian.
    Adiabatic {
        #[command(flatten)]
        common: Common,
        /// Sweep durations; one CSV row each.
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        total_time: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = RampArg::Smoothstep)]
        ramp: RampArg,
        /// Compute the gap-bound time for this error and run at it (JSON output).
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
    },
    /// Gradient descent with parameter-shift gradients.
    Vqe {
        #[command(flatten)]
        common: Common,
    },
    /// QAOA started from the discretized adiabatic schedule, then optimized.
    Qaoa {
        #[command(flatten)]
        common: Common,
        /// Number of alternating layers.
        #[arg(long)]
        steps: usize,
    },
    /// Phase estimation with an ancilla register and inverse QFT.
    Qpe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ancilla: usize,
    },
    /// Iterative phase estimation with one reused ancilla.
    Ipe {
        #[command(flatten)]
        common: Common,
        /// Number of binary digits to read.
        #[arg(long)]
        ancilla: usize,
    },
    /// Rodeo trials at one target energy.
    Rodeo {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        energy: f64,
        #[command(flatten)]
        rodeo: RodeoArgs,
    },
    /// Rodeo success probability over an energy grid, with peak detection.
    RodeoScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        e_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        e_max: f64,
        #[arg(long)]
        e_points: usize,
        #[command(flatten)]
        rodeo: RodeoArgs,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Spectrum { common }
            | Command::Evolve { common, .. }
            | Command::Adiabatic { common, .. }
            | Command::Vqe { common }
            | Command::Qaoa { common, .. }
            | Command::Qpe { common, .. }
            | Command::Ipe { common, .. }
            | Command::Rodeo { common, .. }
            | Command::RodeoScan { common, .. } => common,
        }
    }
}

/// What a successful run leaves behind besides its files.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub warnings: Vec<String>,
}

/// Execute one command. Errors name the module they came from.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let common = config.command.common();
    let text = std::fs::read_to_string(&common.input)
        .with_context(|| format!("cannot read input {}", common.input.display()))?;
    let doc = parse_config(&text).with_context(|| format!("input {}", common.input.display()))?;
    let mut outcome = RunOutcome::default();
    match &config.command {
        Command::Spectrum { common } => run_spectrum(&doc, common).context("spectrum")?,
        Command::Evolve { common, total_time, steps, order } => {
            run_evolve(&doc, common, *total_time, *steps, *order).context("trotter")?
        }
        Command::Adiabatic { common, total_time, steps, ramp, delta } => {
            run_adiabatic(&doc, common, total_time, *steps, (*ramp).into(), *delta).context("adiabatic")?
        }
        Command::Vqe { common } => run_vqe(&doc, common).context("variational")?,
        Command::Qaoa { common, steps } => run_qaoa(&doc, common, *steps).context("variational")?,
        Command::Qpe { common, ancilla } => run_qpe(&doc, common, *ancilla, &mut outcome).context("phase")?,
        Command::Ipe { common, ancilla } => run_ipe(&doc, common, *ancilla, &mut outcome).context("phase")?,
        Command::Rodeo { common, energy, rodeo } => run_rodeo(&doc, common, *energy, rodeo).context("rodeo")?,
        Command::RodeoScan { common, e_min, e_max, e_points, rodeo } => {
            run_rodeo_scan(&doc, common, *e_min, *e_max, *e_points, rodeo).context("rodeo")?
        }
    }
    Ok(outcome)
}

fn write_summary<T: serde::Serialize>(common: &Common, summary: &T) -> Result<()> {
    match &common.summary {
        Some(path) => output::write_json(path, summary),
        None => Ok(()),
    }
}

fn initial_state(doc: &Document, n_qubits: usize, default: StateSpec) -> Result<StateVector> {
    let spec = doc.initial.clone().unwrap_or(default);
    Ok(Document::build_state(&spec, n_qubits, doc.hamiltonian.as_ref(), "initial")?)
}

/// Weight of `state` outside the lowest eigenspace, summed level by level so
/// small infidelities keep their relative precision.
fn ground_fidelity(spectrum: &Spectrum, state: &StateVector) -> Result<(f64, f64)> {
    let e0 = spectrum.ground_energy();
    let mut inside = 0.0;
    let mut outside = 0.0;
    for (e, v) in spectrum.eigenvalues.iter().zip(&spectrum.eigenvectors) {
        let w = v.inner_product(state)?.norm_sqr();
        if (e - e0).abs() <= DEGENERACY_TOL {
            inside += w;
        } else {
            outside += w;
        }
    }
    Ok((inside, outside))
}

fn run_spectrum(doc: &Document, common: &Common) -> Result<()> {
    let spectrum = doc.require_hamiltonian()?.exact_spectrum()?;
    let rows: Vec<Vec<Cell>> =
        spectrum.eigenvalues.iter().enumerate().map(|(i, &e)| vec![i.into(), e.into()]).collect();
    output::write_csv(&common.output, &output::SPECTRUM_COLUMNS, &rows)
}

fn run_evolve(doc: &Document, common: &Common, total_time: f64, steps: usize, order: u8) -> Result<()> {
    if steps == 0 {
        bail!("--steps must be at least 1");
    }
    if !total_time.is_finite() {
        bail!("--total-time must be finite, got {total_time}");
    }
    let h = doc.require_hamiltonian()?;
    let (part_a, part_b) = doc.require_split()?;
    let split = SplitHamiltonian::new(part_a.clone(), part_b.clone())?;
    let formula = ProductFormula::from_order(order)?;
    let psi0 = initial_state(doc, h.n_qubits(), StateSpec::Zero)?;
    let (values, vectors) = linalg::hermitian_eigh(&h.to_dense()?);
    let dt = total_time / steps as f64;
    let mut psi = psi0.clone();
    let mut rows = vec![vec![0usize.into(), 0.0.into(), psi.expectation(h)?.into(), 1.0.into()]];
    for k in 1..=steps {
        psi = trotter::trotter_step(&split, dt, formula, &psi)?;
        let t = k as f64 * dt;
        let mut exact = psi0.clone();
        exact.apply_matrix(&linalg::propagator_from_eigh(&values, &vectors, t))?;
        rows.push(vec![k.into(), t.into(), psi.expectation(h)?.into(), psi.fidelity(&exact)?.into()]);
    }
    output::write_csv(&common.output, &output::EVOLVE_COLUMNS, &rows)
}

fn run_adiabatic(
    doc: &Document,
    common: &Common,
    total_times: &[f64],
    steps: usize,
    ramp: Ramp,
    delta: Option<f64>,
) -> Result<()> {
    let h1 = doc.require_hamiltonian()?.clone();
    let n = h1.n_qubits();
    let h0 = doc.driver_or_default(n)?;
    let initial = match &doc.initial {
        Some(spec) => Document::build_state(spec, n, Some(&h0), "initial")?,
        None => h0.exact_spectrum()?.ground_state().clone(),
    };
    let target = h1.exact_spectrum()?;

    if let Some(delta) = delta {
        if !total_times.is_empty() {
            bail!("--delta chooses the sweep time itself; do not combine it with --total-time");
        }
        // The bound only needs the schedule shape; T is a placeholder here.
        let shape = Schedule::new(h0, h1, ramp, 1.0, steps)?;
        let profile = adiabatic::gap_profile(&shape, 0, DEFAULT_GAP_GRID, &doc.symmetries)?;
        let bound = adiabatic::jansen_bound(&shape, &profile, delta)?;
        let schedule = shape.with_total_time(bound.required_time);
        let (fidelity, _) = ground_fidelity(&target, &adiabatic::adiabatic_evolve(&schedule, &initial)?)?;
        let min = profile.min_gap();
        let summary = output::BoundSummary {
            delta,
            integral_value: bound.integral_value,
            boundary_term: bound.boundary_term,
            required_time: bound.required_time,
            min_gap: min.gap,
            min_gap_s: min.s,
            n_steps: steps,
            fidelity,
        };
        output::write_json(&common.output, &summary)?;
        return write_summary(common, &summary);
    }

    if total_times.is_empty() {
        bail!("give --total-time (one or more values) or --delta");
    }
    let mut rows = Vec::with_capacity(total_times.len());
    for &t in total_times {
        let schedule = Schedule::new(h0.clone(), h1.clone(), ramp, t, steps)?;
        let (fidelity, infidelity) = ground_fidelity(&target, &adiabatic::adiabatic_evolve(&schedule, &initial)?)?;
        rows.push(vec![t.into(), fidelity.into(), infidelity.into()]);
    }
    output::write_csv(&common.output, &output::ADIABATIC_COLUMNS, &rows)
}

fn trace_rows(trace: &[variational::TraceEntry]) -> Vec<Vec<Cell>> {
    trace.iter().map(|t| vec![t.iteration.into(), t.energy.into(), t.gradient_norm.into()]).collect()
}

fn run_vqe(doc: &Document, common: &Common) -> Result<()> {
    let h = doc.require_hamiltonian()?;
    let (ansatz, theta0) = doc.build_ansatz()?;
    let result = variational::minimize(&ansatz, h, &theta0, &doc.optimizer)?;
    output::write_csv(&common.output, &output::TRACE_COLUMNS, &trace_rows(&result.trace))?;
    write_summary(
        common,
        &output::VqeSummary {
            energy: result.energy,
            theta: result.theta,
            iterations: result.trace.len(),
            converged: result.converged,
        },
    )
}

fn run_qaoa(doc: &Document, common: &Common, n_layers: usize) -> Result<()> {
    let h1 = doc.require_hamiltonian()?;
    let n = h1.n_qubits();
    let h0 = doc.driver_or_default(n)?;
    let initial = match &doc.initial {
        Some(spec) => Document::build_state(spec, n, Some(&h0), "initial")?,
        None => h0.exact_spectrum()?.ground_state().clone(),
    };
    let start = variational::qaoa_schedule(n_layers)?;
    let prescription_energy = variational::qaoa_energy(&h0, h1, &start, &initial)?;
    let result = variational::optimize_qaoa(&h0, h1, &start, &initial, &doc.optimizer)?;
    output::write_csv(&common.output, &output::TRACE_COLUMNS, &trace_rows(&result.trace))?;
    write_summary(
        common,
        &output::QaoaSummary {
            n_layers,
            prescription_energy,
            energy: result.energy,
            ground_energy: h1.exact_spectrum()?.ground_energy(),
            betas: result.schedule.betas,
            gammas: result.schedule.gammas,
            converged: result.converged,
        },
    )
}

/// The phase unitary and, for Hamiltonian sources, the time step.
fn phase_unitary(doc: &Document, outcome: &mut RunOutcome) -> Result<(PhaseUnitary, Option<f64>)> {
    match &doc.unitary {
        None => bail!("this command needs a `unitary` section"),
        Some(UnitarySpec::Phases(p)) => Ok((PhaseUnitary::diagonal(p)?, None)),
        Some(UnitarySpec::Hamiltonian { dt }) => {
            let h = doc.require_hamiltonian()?;
            let norm = h.operator_norm()?;
            if norm * dt >= 2.0 * PI {
                outcome.warnings.push(format!(
                    "||H|| dt = {:.6} >= 2 pi: eigenphases wrap around and energies alias",
                    norm * dt
                ));
            }
            Ok((PhaseUnitary::from_hamiltonian(h.clone(), *dt)?, Some(*dt)))
        }
    }
}

fn phase_system_state(doc: &Document, u: &PhaseUnitary) -> Result<StateVector> {
    let spec = doc
        .initial
        .as_ref()
        .context("phase estimation needs an `initial` state")?;
    Ok(Document::build_state(spec, u.n_system_qubits(), doc.hamiltonian.as_ref(), "initial")?)
}

fn run_qpe(doc: &Document, common: &Common, n_ancilla: usize, outcome: &mut RunOutcome) -> Result<()> {
    let (u, dt) = phase_unitary(doc, outcome)?;
    let state = phase_system_state(doc, &u)?;
    let result = phase::qpe(&u, &state, n_ancilla)?.result;
    let rows: Vec<Vec<Cell>> = result
        .histogram
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > QPE_ROW_FLOOR)
        .map(|(k, &p)| vec![k.into(), p.into()])
        .collect();
    output::write_csv(&common.output, &output::QPE_COLUMNS, &rows)?;
    write_summary(
        common,
        &output::QpeSummary {
            n_ancilla,
            argmax: result.argmax(),
            phase_estimate: result.estimate(),
            energy_estimate: dt.map(|dt| phase::energy_of_phase(result.estimate(), dt)),
        },
    )
}

fn run_ipe(doc: &Document, common: &Common, n_digits: usize, outcome: &mut RunOutcome) -> Result<()> {
    let (u, dt) = phase_unitary(doc, outcome)?;
    let state = phase_system_state(doc, &u)?;
    let mut stream = rng::stream(common.seed, 0);
    let result = phase::ipe(&u, &state, n_digits, &mut stream, true)?;
    let rows: Vec<Vec<Cell>> =
        result.rounds.iter().map(|r| vec![r.round.into(), r.digit.into(), r.p0.into()]).collect();
    output::write_csv(&common.output, &output::IPE_COLUMNS, &rows)?;
    write_summary(
        common,
        &output::IpeSummary {
            bit_string: result.bit_string(),
            value: result.value(),
            phase_estimate: result.estimate(),
            energy_estimate: dt.map(|dt| phase::energy_of_phase(result.estimate(), dt)),
        },
    )
}

fn rodeo_config(energy: f64, args: &RodeoArgs, seed: u64) -> Result<RodeoConfig> {
    let mode = match args.mode {
        ModeArg::Sampled => RodeoMode::Sampled,
        ModeArg::ExactBorn => RodeoMode::ExactBorn,
    };
    let schedule = match args.schedule {
        ScheduleArg::Constant => TimeSchedule::Constant,
        ScheduleArg::Decreasing => TimeSchedule::Decreasing,
    };
    let cfg = RodeoConfig::new(energy, args.sigma, args.cycles, args.trials, seed)?
        .with_mode(mode)
        .with_schedule(schedule);
    cfg.validate()?;
    Ok(cfg)
}

fn run_rodeo(doc: &Document, common: &Common, energy: f64, args: &RodeoArgs) -> Result<()> {
    let h = doc.require_hamiltonian()?;
    let engine = RodeoEngine::new(h)?;
    let initial = initial_state(doc, h.n_qubits(), StateSpec::Uniform)?;
    let cfg = rodeo_config(energy, args, common.seed)?;
    let report = phase::rodeo_run(&engine, &cfg, &initial)?;
    let summary = output::RodeoSummary {
        energy,
        sigma: args.sigma,
        n_cycles: args.cycles,
        n_trials: args.trials,
        mode: args.mode.to_possible_value().expect("named").get_name().to_owned(),
        schedule: args.schedule.to_possible_value().expect("named").get_name().to_owned(),
        mean_success: report.mean_success,
        standard_error: report.standard_error,
        target_energy: report.target_energy,
        ensemble_fidelity: report.ensemble_fidelity,
    };
    output::write_json(&common.output, &summary)?;
    write_summary(common, &summary)
}

/// `points` equally spaced energies from `e_min` to `e_max` inclusive.
pub fn energy_grid(e_min: f64, e_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(e_min.is_finite() && e_max.is_finite()) {
        bail!("energy range must be finite");
    }
    match points {
        0 => bail!("--e-points must be at least 1"),
        1 if e_min == e_max => Ok(vec![e_min]),
        1 => bail!("a single grid point needs --e-min equal to --e-max"),
        _ if e_min >= e_max => bail!("--e-min ({e_min}) must be below --e-max ({e_max})"),
        _ => {
            let step = (e_max - e_min) / (points - 1) as f64;
            Ok((0..points).map(|i| if i + 1 == points { e_max } else { e_min + i as f64 * step }).collect())
        }
    }
}

fn run_rodeo_scan(
    doc: &Document,
    common: &Common,
    e_min: f64,
    e_max: f64,
    e_points: usize,
    args: &RodeoArgs,
) -> Result<()> {
    let h = doc.require_hamiltonian()?;
    let engine = RodeoEngine::new(h)?;
    let initial = initial_state(doc, h.n_qubits(), StateSpec::Uniform)?;
    let grid = energy_grid(e_min, e_max, e_points)?;
    let cfg = rodeo_config(grid[0], args, common.seed)?;
    let scan = phase::rodeo_scan(&engine, &initial, &grid, &cfg)?;
    let rows: Vec<Vec<Cell>> =
        scan.grid.iter().map(|p| vec![p.energy.into(), p.p_hat.into(), p.stderr.into()]).collect();
    output::write_csv(&common.output, &output::SCAN_COLUMNS, &rows)?;
    write_summary(common, &scan_summary(scan.n_cycles, &scan.peaks))
}

pub fn scan_summary(n_cycles: usize, peaks: &[phase::Peak]) -> output::ScanSummary {
    output::ScanSummary {
        n_cycles,
        peaks: peaks
            .iter()
            .map(|p| output::PeakRecord { energy: p.energy, height: p.height, prominence: p.prominence, width: p.width })
            .collect(),
    }
}

/// Re-run peak detection on a scan file written by `rodeo-scan`.
pub fn peaks_from_scan_file(path: &Path, n_cycles: usize) -> Result<Vec<phase::Peak>> {
    let grid: Vec<phase::ScanPoint> = output::read_scan(path)?
        .into_iter()
        .map(|r| phase::ScanPoint { energy: r.energy, p_hat: r.p_hat, stderr: r.stderr })
        .collect();
    Ok(phase::detect_peaks(&grid, n_cycles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use eigenkit::PauliSum;

    #[test]
    fn clap_definition_is_consistent() {
        RunConfig::command().debug_assert();
    }

    #[test]
    fn seed_defaults_to_the_documented_constant() {
        let cfg = RunConfig::try_parse_from(["eigenkit", "spectrum", "--input", "a", "--output", "b"]).unwrap();
        assert_eq!(cfg.command.common().seed, DEFAULT_SEED);
    }

    #[test]
    fn order_outside_one_and_two_is_rejected() {
        let args = ["eigenkit", "evolve", "--input", "a", "--output", "b", "--total-time", "1", "--steps", "4"];
        for (order, ok) in [("1", true), ("2", true), ("3", false), ("0", false)] {
            let mut v = args.to_vec();
            v.extend(["--order", order]);
            assert_eq!(RunConfig::try_parse_from(v).is_ok(), ok, "order {order}");
        }
    }

    #[test]
    fn negative_energies_parse() {
        let cfg = RunConfig::try_parse_from([
            "eigenkit", "rodeo-scan", "--input", "a", "--output", "b", "--e-min", "-2", "--e-max", "-0.5", "--e-points",
            "4",
        ])
        .unwrap();
        match cfg.command {
            Command::RodeoScan { e_min, e_max, .. } => assert_eq!((e_min, e_max), (-2.0, -0.5)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn energy_grid_endpoints_and_errors() {
        let g = energy_grid(-1.0, 1.0, 5).unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(energy_grid(0.3, 0.3, 1).unwrap(), vec![0.3]);
        assert!(energy_grid(1.0, -1.0, 5).is_err());
        assert!(energy_grid(0.0, 1.0, 0).is_err());
        assert!(energy_grid(0.0, 1.0, 1).is_err());
        assert!(energy_grid(0.0, f64::INFINITY, 3).is_err());
    }

    #[test]
    fn ground_fidelity_sums_degenerate_levels() {
        let h = PauliSum::from_labels(2, &[(-0.5, "II"), (0.5, "ZZ")]).unwrap();
        let spec = h.exact_spectrum().unwrap();
        let (inside, outside) = ground_fidelity(&spec, &StateVector::uniform(2)).unwrap();
        assert!((inside - 0.5).abs() < 1e-12 && (outside - 0.5).abs() < 1e-12);
    }
}
