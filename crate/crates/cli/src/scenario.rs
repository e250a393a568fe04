use std::path::{Path, PathBuf};

use lsinv::detect::{
    analyze_translation, default_floor, infer_period, segment_constancy, SymmetryReport, LENGTH_FLAG_FACTOR,
    MEDIAN_FLOOR_FACTOR, RELATIVE_FLOOR,
};
use lsinv::domain::{Grid, LatticeSpec, SymmetryTransform, TransformKind, WaveState};
use lsinv::floquet::{lowest_mode, MODE_RESIDUAL_TOLERANCE, PERIODICITY_TOLERANCE, UNITARITY_TOLERANCE};
use lsinv::hamiltonian::{stationary_states, PlaneWaveBasis, EIGEN_RESIDUAL_TOLERANCE};
use lsinv::invariants::{
    averaged_current, averaged_probability_current, complementary_current, convergence_measure,
    grid_two_point_current, instantaneous_currents, shift_scan, two_point_current, CurrentProfile,
};
use lsinv::transfer::{delta_defect_analytic, CONDITION_TOLERANCE};
use lsinv::{Complex64, Error};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Scenario, ScenarioConfig};
use crate::output::{Table, Writer, PRECISION};
use crate::CliError;

pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Set when the outputs were written but the run should still fail,
    /// e.g. a shift scan without a significant minimum.
    pub failure: Option<CliError>,
}

#[derive(Serialize)]
struct Tolerances {
    eigen_residual: f64,
    unitarity: f64,
    mode_residual: f64,
    periodicity: f64,
    floor_relative: f64,
    floor_median_factor: f64,
    length_flag_factor: f64,
    transfer_conditions: f64,
    output_digits: usize,
}

const TOLERANCES: Tolerances = Tolerances {
    eigen_residual: EIGEN_RESIDUAL_TOLERANCE,
    unitarity: UNITARITY_TOLERANCE,
    mode_residual: MODE_RESIDUAL_TOLERANCE,
    periodicity: PERIODICITY_TOLERANCE,
    floor_relative: RELATIVE_FLOOR,
    floor_median_factor: MEDIAN_FLOOR_FACTOR,
    length_flag_factor: LENGTH_FLAG_FACTOR,
    transfer_conditions: CONDITION_TOLERANCE,
    output_digits: PRECISION,
};

#[derive(Serialize)]
struct Report<'a> {
    scenario: Scenario,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    /// Complete config; feeding it back to `lsinv run` repeats the run.
    config: &'a ScenarioConfig,
    knobs: Value,
    tolerances: Tolerances,
    results: Value,
}

pub fn run_scenario(config: &ScenarioConfig, dir: &Path) -> Result<Outcome, CliError> {
    let mut writer = Writer::create(dir, config.output.wants("tsv"), config.output.wants("json"))?;
    let run = match config.scenario {
        Scenario::StaticDefect => static_defect(config, &mut writer)?,
        Scenario::ShiftScan => shift_scan_run(config, &mut writer)?,
        Scenario::Driven => driven(config, &mut writer)?,
        Scenario::Convergence => convergence(config, &mut writer)?,
        Scenario::DeltaOracle => delta_oracle(config, &mut writer)?,
    };
    let message = run.failure.as_ref().map(ToString::to_string);
    writer.report(&Report {
        scenario: config.scenario,
        status: if run.failure.is_some() { "no-symmetry-found" } else { "ok" },
        message,
        config,
        knobs: run.knobs,
        tolerances: TOLERANCES,
        results: run.results,
    })?;
    Ok(Outcome { files: writer.files, failure: run.failure })
}

struct Run {
    knobs: Value,
    results: Value,
    failure: Option<CliError>,
}

impl Run {
    fn ok(knobs: Value, results: Value) -> Self {
        Self { knobs, results, failure: None }
    }
}

/// Settings the physics leaves open, echoed with every lattice run.
fn lattice_knobs(lattice: &LatticeSpec, basis: &PlaneWaveBasis, grid: &Grid, floor: Option<f64>) -> Value {
    json!({
        "units": "hbar = m = 1",
        "supercell": lattice.supercell(),
        "barrier_width": lattice.width(),
        "barrier_support": lattice.support(),
        "tail_threshold": lattice.tail_threshold(),
        "amplitude": lattice.amplitude(),
        "omega": lattice.driving().map(|d| d.omega),
        "k_max": basis.k_max(),
        "basis_size": basis.size(),
        "grid_points": grid.len(),
        "grid_spacing": grid.spacing(),
        "floor": floor,
        "floor_rule": if floor.is_some() { "fixed" } else { "max(floor_relative * max|Q|, floor_median_factor * median|Q'|)" },
    })
}

fn ground_state(lattice: &LatticeSpec, basis: &PlaneWaveBasis, grid: &Grid) -> Result<WaveState, CliError> {
    stationary_states(lattice, basis, grid, 1)?
        .pop()
        .ok_or_else(|| CliError::Config("basis is empty".into()))
}

/// `+L/2` for translations so deviations sit on the defects; none otherwise.
fn alignment_offset(transform: SymmetryTransform) -> f64 {
    match transform.kind {
        TransformKind::Translation => 0.5 * transform.parameter,
        TransformKind::Inversion => 0.0,
    }
}

fn profile_table(profile: &CurrentProfile, offset: f64) -> Table {
    let mut t = Table::new(&["x", "re_q", "im_q", "abs2_q"]);
    for (i, q) in profile.values.iter().enumerate() {
        t.row(&[profile.x(i) + offset, q.re, q.im, q.norm_sqr()]);
    }
    t
}

fn state_table(state: &WaveState, lattice: &LatticeSpec) -> Table {
    let mut t = Table::new(&["x", "potential", "re_psi", "im_psi", "abs2_psi"]);
    for (i, x) in state.grid.points().enumerate() {
        let psi = state.psi[i];
        t.row(&[x, lattice.potential_value(x, 0.0), psi.re, psi.im, psi.norm_sqr()]);
    }
    t
}

/// `ε` over the whole profile; `None` when `Q` vanishes identically.
fn epsilon(profile: &CurrentProfile) -> Result<Option<f64>, CliError> {
    match convergence_measure(profile, (profile.grid.x_min(), profile.grid.x_max())) {
        Ok(e) => Ok(Some(e)),
        Err(Error::DegenerateProfile(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn analyze(
    profile: &CurrentProfile,
    floor: Option<f64>,
    lattice: &LatticeSpec,
) -> Result<SymmetryReport, CliError> {
    Ok(match profile.transform.kind {
        TransformKind::Translation => analyze_translation(profile, floor, lattice.support(), lattice.amplitude())?,
        TransformKind::Inversion => segment_constancy(profile, floor.unwrap_or_else(|| default_floor(profile)))?,
    })
}

fn static_defect(config: &ScenarioConfig, writer: &mut Writer) -> Result<Run, CliError> {
    let lattice = config.lattice()?;
    let basis = config.basis(lattice.supercell())?;
    let grid = config.grid(lattice.supercell())?;
    let transform = config.transform();
    let state = ground_state(&lattice, &basis, &grid)?;
    let q = two_point_current(&state, transform);
    let qc = complementary_current(&state, transform);
    let report = analyze(&q, config.detection.floor, &lattice)?;
    let offset = alignment_offset(transform);

    writer.table("profile.tsv", &profile_table(&q, offset))?;
    writer.table("complementary.tsv", &profile_table(&qc, offset))?;
    writer.table("state.tsv", &state_table(&state, &lattice))?;

    let mut knobs = lattice_knobs(&lattice, &basis, &grid, config.detection.floor);
    knobs["alignment_offset"] = json!(offset);
    Ok(Run::ok(
        knobs,
        json!({
            "energy": state.energy,
            "transform": transform,
            "epsilon": epsilon(&q)?,
            "report": report,
        }),
    ))
}

fn shift_scan_run(config: &ScenarioConfig, writer: &mut Writer) -> Result<Run, CliError> {
    let lattice = config.lattice()?;
    let basis = config.basis(lattice.supercell())?;
    let grid = config.grid(lattice.supercell())?;
    let state = ground_state(&lattice, &basis, &grid)?;
    let shifts = config.transform.scan.as_ref().expect("validated").values()?;
    let trim = config.transform.trim.map_or((grid.x_min(), grid.x_max()), |[a, b]| (a, b));

    let scan = shift_scan(&state, &shifts);
    let mut table = Table::new(&["shift", "x", "log10_abs2_q"]);
    for (row, (shift, values)) in scan.parameters.iter().zip(scan.log10_magnitude_squared()).enumerate() {
        for (i, v) in values.iter().enumerate() {
            table.row(&[*shift, scan.rows[row].x(i), *v]);
        }
    }
    writer.table("scan.tsv", &table)?;

    let inference = infer_period(&scan, trim)?;
    let mut scores = Table::new(&["shift", "epsilon"]);
    for &(shift, e) in &inference.scores {
        scores.row(&[shift, e]);
    }
    writer.table("scores.tsv", &scores)?;

    let mut knobs = lattice_knobs(&lattice, &basis, &grid, config.detection.floor);
    knobs["trim"] = json!([trim.0, trim.1]);
    let mut results = json!({ "energy": state.energy, "inference": inference });
    let failure = match inference.period() {
        Ok(period) => {
            let transform = SymmetryTransform::translation(period);
            let q = two_point_current(&state, transform);
            let offset = alignment_offset(transform);
            let mut report = analyze(&q, config.detection.floor, &lattice)?;
            report.inferred_period = Some(period);
            writer.table("profile.tsv", &profile_table(&q, offset))?;
            knobs["alignment_offset"] = json!(offset);
            results["inferred_period"] = json!(period);
            results["epsilon"] = json!(epsilon(&q)?);
            results["report"] = json!(report);
            None
        }
        Err(e) => {
            results["inferred_period"] = Value::Null;
            Some(CliError::Compute(e))
        }
    };
    Ok(Run { knobs, results, failure })
}

fn driven(config: &ScenarioConfig, writer: &mut Writer) -> Result<Run, CliError> {
    let lattice = config.lattice()?;
    let basis = config.basis(lattice.supercell())?;
    let grid = config.grid(lattice.supercell())?;
    let settings = config.floquet_settings();
    let transform = config.transform();
    let mode = lowest_mode(&lattice, &basis, &grid, &settings)?;
    let averaged = averaged_current(&mode, transform)?;
    let report = analyze(&averaged, config.detection.floor, &lattice)?;
    let offset = alignment_offset(transform);
    writer.table("profile.tsv", &profile_table(&averaged, offset))?;

    let j = averaged_probability_current(&mode)?;
    let mut table = Table::new(&["x", "re_j", "im_j"]);
    for (i, v) in j.values.iter().enumerate() {
        table.row(&[j.x(i), v.re, v.im]);
    }
    writer.table("probability_current.tsv", &table)?;
    let j_mean = j.values.iter().sum::<Complex64>() / j.len() as f64;
    let j_spread = j.values.iter().map(|v| (v - j_mean).norm()).fold(0.0, f64::max);

    let stride = config.floquet.time_stride;
    let instant = instantaneous_currents(&mode, transform);
    let mut currents = Table::new(&["t", "x", "re_q", "im_q", "abs2_q"]);
    let mut density = Table::new(&["t", "x", "abs2_psi"]);
    for (j, sample) in mode.samples.iter().enumerate().step_by(stride) {
        let q = &instant[j];
        for (i, v) in q.values.iter().enumerate() {
            currents.row(&[sample.t, q.x(i) + offset, v.re, v.im, v.norm_sqr()]);
        }
        for (i, x) in grid.points().enumerate() {
            density.row(&[sample.t, x, sample.state.psi[i].norm_sqr()]);
        }
    }
    writer.table("instantaneous.tsv", &currents)?;
    writer.table("density.tsv", &density)?;

    let mut knobs = lattice_knobs(&lattice, &basis, &grid, config.detection.floor);
    knobs["alignment_offset"] = json!(offset);
    knobs["floquet"] = json!(settings);
    Ok(Run::ok(
        knobs,
        json!({
            "quasienergy": mode.quasienergy,
            "mean_energy": mode.mean_energy,
            "period": mode.period(),
            "transform": transform,
            "epsilon": epsilon(&averaged)?,
            "probability_current": { "mean": j_mean, "max_deviation": j_spread },
            "report": report,
        }),
    ))
}

fn convergence(config: &ScenarioConfig, writer: &mut Writer) -> Result<Run, CliError> {
    let lattice = config.lattice()?;
    let transform = config.transform();
    let c = &config.convergence;
    let domain = (c.domain[0], c.domain[1]);
    let mut table = Table::new(&["k_max", "dx", "epsilon"]);
    let mut sweeps = Vec::new();
    for &dx in &c.spacings {
        let grid = Grid::supercell(lattice.supercell(), dx)?;
        let mut values = Vec::new();
        for &k_max in &c.k_max {
            let basis = PlaneWaveBasis::new(k_max, lattice.supercell())?;
            let state = ground_state(&lattice, &basis, &grid)?;
            let e = convergence_measure(&grid_two_point_current(&state, transform)?, domain)?;
            table.row(&[k_max as f64, grid.spacing(), e]);
            values.push(e);
        }
        let monotone = values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
        sweeps.push(json!({
            "dx": grid.spacing(),
            "epsilon": values,
            "non_increasing": monotone,
            "plateau": values.last(),
        }));
    }
    writer.table("convergence.tsv", &table)?;
    Ok(Run::ok(
        json!({
            "units": "hbar = m = 1",
            "supercell": lattice.supercell(),
            "barrier_width": lattice.width(),
            "barrier_support": lattice.support(),
            "tail_threshold": lattice.tail_threshold(),
            "domain": c.domain,
            "derivative": "grid differences of the sampled wavefunction",
        }),
        json!({ "transform": transform, "sweeps": sweeps }),
    ))
}

fn delta_oracle(config: &ScenarioConfig, writer: &mut Writer) -> Result<Run, CliError> {
    let d = &config.delta_oracle;
    let mut table = Table::new(&["k", "abs2_qc_over_ql", "abs2_qr_over_ql", "discrepancy"]);
    let mut best: Option<(f64, f64)> = None;
    for k in d.k.values()? {
        let p = delta_defect_analytic(d.strength, k, d.length, Complex64::new(1.0, 0.0))?;
        let discrepancy = p.discrepancy(k);
        table.row(&[k, (p.center / p.left).norm_sqr(), (p.right / p.left).norm_sqr(), discrepancy]);
        if best.is_none_or(|(_, m)| discrepancy < m) {
            best = Some((k, discrepancy));
        }
    }
    writer.table("sweep.tsv", &table)?;
    let (k_min, min) = best.expect("validated non-empty range");
    Ok(Run::ok(
        json!({
            "units": "hbar = m = 1",
            "incoming_amplitude": 1.0,
            "delta_jump": "psi'(0+) - psi'(0-) = 2 strength psi(0)",
            "discrepancy_scale": "k |F0|^2",
        }),
        json!({
            "min_discrepancy": min,
            "k_at_min": k_min,
            "globally_constant": min <= CONDITION_TOLERANCE,
        }),
    ))
}
