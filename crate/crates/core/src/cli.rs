//! Command-line front end. Every subcommand writes CSV artifacts and a JSON
//! run manifest recording the invocation and the SHA-256 of each output, so
//! `replay` can rerun it and compare outputs bitwise.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::astro::{standard_earth_constants, PhysicalConstants, StateVec6, TimeGrid, Vec3};
use crate::attitude::{make_attitude_system, nutation_angle, AttitudeDynamics, AttitudeState};
use crate::comms::{link_samples_to_csv, total_data};
use crate::error::Error;
use crate::gravity::{
    hex, make_absolute_system, make_relative_system, precompute_reference, sun_synchronous_default,
};
use crate::illumination::{
    fit_surrogate, generate_offset_grid, generate_training_grid, samples_to_csv, surrogate_rmse,
    TriangleMesh,
};
use crate::mission::{assemble, load_mission, mean_motion, CubesatSpec, MissionSpec, OrbitModel};
use crate::ode::{rk4_propagate, Trajectory};
use crate::trajopt::{
    convergence_csv, metrics_csv, solve, thrust_csv, SolverOptions, TrajOptProblem,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;
/// `replay` found outputs that differ from the manifest.
pub const EXIT_REPLAY_MISMATCH: u8 = 1;

pub const CACHE_ENV: &str = "TALOSKIT_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "taloskit",
    version,
    about = "Spacecraft discipline analyses and formation trajectory optimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Propagate each spacecraft of a mission file without thrust.
    Propagate(PropagateArgs),
    /// Integrate gravity-gradient attitude dynamics.
    Attitude(AttitudeArgs),
    /// Ray-trace solar-array illumination and fit its surrogate.
    Illuminate(IlluminateArgs),
    /// Downlink rates and cumulative data over ground-station passes.
    Comm(CommArgs),
    /// Minimum-propellant formation trajectory optimization.
    Optimize(OptimizeArgs),
    /// Rerun a recorded invocation and compare its outputs bitwise.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub duration_orbits: f64,
    /// Largest step, s; the step is shrunk to divide the span evenly.
    #[arg(long, default_value_t = 10.0)]
    pub dt: f64,
    /// Offsets from the reference orbit (default when the config is relative).
    #[arg(long, conflicts_with = "absolute")]
    pub relative: bool,
    /// Absolute ECI states.
    #[arg(long)]
    pub absolute: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttitudeArgs {
    /// Principal moments `I1,I2,I3`, kg·m².
    #[arg(long, value_delimiter = ',', required = true)]
    pub inertia: Vec<f64>,
    /// Orbit rate, rad/s (default: the toolkit's 600 km reference orbit).
    #[arg(long)]
    pub orbit_rate: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub duration_orbits: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Initial inertial body rate `wx,wy,wz`, rad/s (default: locked to the
    /// orbit frame).
    #[arg(long, value_delimiter = ',')]
    pub initial_rate: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IlluminateArgs {
    /// ASCII STL mesh.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Sidecar listing the solar-array triangle indices.
    #[arg(long)]
    pub panels: PathBuf,
    /// Training grid `AZxEL`.
    #[arg(long, default_value = "24x13")]
    pub train_grid: String,
    /// Held-out cell-centred grid `AZxEL`.
    #[arg(long, default_value = "23x11")]
    pub test_grid: String,
    /// Surrogate knot intervals `AZxEL`.
    #[arg(long, default_value = "16x8")]
    pub knots: String,
    /// Energy penalty weight of the surrogate fit.
    #[arg(long, default_value_t = 1e-2)]
    pub smoothing: f64,
    #[arg(long, default_value_t = 256)]
    pub samples_per_triangle: usize,
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Debug, Args)]
pub struct CommArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub duration_orbits: f64,
    #[arg(long, default_value_t = 10.0)]
    pub dt: f64,
    /// Spacecraft name in a virtual-telescope config (default: the first
    /// with ground stations).
    #[arg(long)]
    pub spacecraft: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub opt_tol: f64,
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Toolkit(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Toolkit(e) => match e {
                Error::Divergence { .. }
                | Error::GuardRadius { .. }
                | Error::ZeroSeparation { .. }
                | Error::OutsideReference { .. } => EXIT_DIVERGED,
                _ => EXIT_USAGE,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Toolkit(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Toolkit(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// Audit record written next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub subcommand: String,
    /// Arguments after the program name.
    pub args: Vec<String>,
    pub working_dir: PathBuf,
    pub config: Option<ConfigRecord>,
    pub constants: PhysicalConstants,
    pub grid: Option<TimeGrid>,
    pub outputs: Vec<OutputRecord>,
    pub exit_code: u8,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Output files written by one run, with their hashes.
#[derive(Default)]
struct Outputs {
    records: Vec<OutputRecord>,
}

impl Outputs {
    fn write(&mut self, path: PathBuf, contents: &str) -> CliResult<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.records.push(OutputRecord {
            sha256: sha256_hex(contents.as_bytes()),
            path,
        });
        Ok(())
    }
}

/// What a subcommand produced, before the manifest is written.
struct RunOutcome {
    config: Option<PathBuf>,
    grid: Option<TimeGrid>,
    outputs: Outputs,
    manifest_path: PathBuf,
    exit_code: u8,
}

fn cache_dir() -> Option<PathBuf> {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return Some(PathBuf::from(dir));
    }
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME") {
        return Some(PathBuf::from(dir).join("taloskit"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("taloskit"))
}

fn check_positive(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be finite and > 0, got {v}")))
    }
}

fn parse_pair(name: &str, text: &str) -> CliResult<(usize, usize)> {
    let parsed = text
        .split_once(['x', 'X'])
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    parsed.ok_or_else(|| usage(format!("--{name} expects AZxEL, got `{text}`")))
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x,y,z,vx,vy,vz\n");
    for (k, t) in traj.grid().times().enumerate() {
        out.push_str(&t.to_string());
        for v in traj.state(k) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn spacecraft_of(spec: &MissionSpec) -> Vec<&CubesatSpec> {
    match spec {
        MissionSpec::Cubesat(c) => vec![c],
        MissionSpec::VirtualTelescope(v) => vec![&v.optics_cubesat, &v.detector_cubesat],
    }
}

/// Reference orbit initial state: the telescope's own, or the toolkit
/// default for a single spacecraft.
fn reference_state(spec: &MissionSpec, constants: &PhysicalConstants) -> StateVec6 {
    match spec {
        MissionSpec::VirtualTelescope(v) => {
            StateVec6::from_column_slice(&v.reference_orbit_initial_state)
        }
        MissionSpec::Cubesat(_) => sun_synchronous_default(constants),
    }
}

fn absolute_state(sat: &CubesatSpec, reference: &StateVec6) -> StateVec6 {
    match sat.orbit_model {
        OrbitModel::Absolute => sat.initial_state(),
        OrbitModel::Relative => reference + sat.initial_state(),
    }
}

fn orbit_grid(
    constants: &PhysicalConstants,
    state: &StateVec6,
    duration_orbits: f64,
    dt: f64,
) -> CliResult<TimeGrid> {
    check_positive("duration-orbits", duration_orbits)?;
    check_positive("dt", dt)?;
    let period = TAU / mean_motion(constants, state)?;
    Ok(TimeGrid::spanning(0.0, duration_orbits * period, dt)?)
}

fn cmd_propagate(a: &PropagateArgs) -> CliResult<RunOutcome> {
    check_positive("dt", a.dt)?;
    let constants = standard_earth_constants();
    let spec = load_mission(&a.config)?;
    let sats = spacecraft_of(&spec);
    let relative = match (a.relative, a.absolute) {
        (true, _) => true,
        (_, true) => false,
        _ => sats[0].orbit_model == OrbitModel::Relative,
    };
    let ref0 = reference_state(&spec, &constants);
    let grid = orbit_grid(&constants, &ref0, a.duration_orbits, a.dt)?;
    let mut outputs = Outputs::default();
    if relative {
        let reference = precompute_reference(&constants, &ref0, &grid, cache_dir().as_deref())?;
        let mut text = String::from("t,x,y,z,vx,vy,vz\n");
        for (k, t) in grid.times().enumerate() {
            text.push_str(&t.to_string());
            for v in reference.state(k).iter() {
                let _ = write!(text, ",{v}");
            }
            text.push('\n');
        }
        outputs.write(a.out.join("reference.csv"), &text)?;
        for sat in &sats {
            let sys =
                make_relative_system(&reference, constants, sat.dry_mass, sat.specific_impulse)?;
            let u0 = absolute_state(sat, &ref0) - ref0;
            let traj = rk4_propagate(&sys, u0.as_slice(), &vec![0.0; 3 * grid.n], &grid)?;
            outputs.write(
                a.out.join(format!("{}.csv", sat.name)),
                &trajectory_csv(&traj),
            )?;
        }
    } else {
        for sat in &sats {
            let sys = make_absolute_system(constants, sat.dry_mass, sat.specific_impulse)?;
            let x0 = absolute_state(sat, &ref0);
            let traj = rk4_propagate(&sys, x0.as_slice(), &vec![0.0; 3 * grid.n], &grid)?;
            outputs.write(
                a.out.join(format!("{}.csv", sat.name)),
                &trajectory_csv(&traj),
            )?;
        }
    }
    Ok(RunOutcome {
        config: Some(a.config.clone()),
        grid: Some(grid),
        outputs,
        manifest_path: a.out.join("manifest.json"),
        exit_code: EXIT_OK,
    })
}

fn sidecar_manifest(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn cmd_attitude(a: &AttitudeArgs) -> CliResult<RunOutcome> {
    let constants = standard_earth_constants();
    let orbit_rate = match a.orbit_rate {
        Some(r) => r,
        None => mean_motion(&constants, &sun_synchronous_default(&constants))?,
    };
    check_positive("orbit-rate", orbit_rate)?;
    check_positive("duration-orbits", a.duration_orbits)?;
    check_positive("dt", a.dt)?;
    let &[i1, i2, i3] = a.inertia.as_slice() else {
        return Err(usage("--inertia expects I1,I2,I3"));
    };
    let dynamics = AttitudeDynamics::new([i1, i2, i3], orbit_rate)?;
    let mut state = AttitudeState::orbit_locked(orbit_rate);
    if let Some(w) = &a.initial_rate {
        let &[wx, wy, wz] = w.as_slice() else {
            return Err(usage("--initial-rate expects wx,wy,wz"));
        };
        state.omega = Vec3::new(wx, wy, wz);
    }
    let grid = TimeGrid::spanning(0.0, a.duration_orbits * TAU / orbit_rate, a.dt)?;
    let traj = rk4_propagate(
        &make_attitude_system(dynamics),
        &state.to_array(),
        &[],
        &grid,
    )?;
    let mut text = String::from("t,wx,wy,wz,nutation_deg,orthonormality_drift\n");
    for (k, t) in grid.times().enumerate() {
        let s = AttitudeState::from_slice(traj.state(k));
        let _ = writeln!(
            text,
            "{t},{},{},{},{},{}",
            s.omega.x,
            s.omega.y,
            s.omega.z,
            nutation_angle(&s).to_degrees(),
            s.orthonormality_drift()
        );
    }
    let mut outputs = Outputs::default();
    outputs.write(a.out.clone(), &text)?;
    Ok(RunOutcome {
        config: None,
        grid: Some(grid),
        outputs,
        manifest_path: sidecar_manifest(&a.out),
        exit_code: EXIT_OK,
    })
}

fn cmd_illuminate(a: &IlluminateArgs) -> CliResult<RunOutcome> {
    let (train_az, train_el) = parse_pair("train-grid", &a.train_grid)?;
    let (test_az, test_el) = parse_pair("test-grid", &a.test_grid)?;
    let (knots_az, knots_el) = parse_pair("knots", &a.knots)?;
    for path in [&a.mesh, &a.panels] {
        if !path.is_file() {
            return Err(usage(format!("{}: file not found", path.display())));
        }
    }
    let mesh = TriangleMesh::load(&a.mesh, &a.panels)?;
    let train = generate_training_grid(&mesh, train_az, train_el, a.samples_per_triangle)?;
    let test = generate_offset_grid(&mesh, test_az, test_el, a.samples_per_triangle)?;
    let surrogate = fit_surrogate(&train, knots_az, knots_el, a.smoothing)?;
    let rmse = surrogate_rmse(&surrogate, &test)?;
    let p = &a.out_prefix;
    let mut outputs = Outputs::default();
    outputs.write(
        PathBuf::from(format!("{p}train.csv")),
        &samples_to_csv(&train),
    )?;
    outputs.write(
        PathBuf::from(format!("{p}test.csv")),
        &samples_to_csv(&test),
    )?;
    let coefficients = serde_json::to_string_pretty(&surrogate).expect("surrogate serializes");
    outputs.write(PathBuf::from(format!("{p}surrogate.json")), &coefficients)?;
    let summary = format!("test_rmse={rmse}\n");
    outputs.write(PathBuf::from(format!("{p}summary.txt")), &summary)?;
    print!("{summary}");
    Ok(RunOutcome {
        config: None,
        grid: None,
        outputs,
        manifest_path: PathBuf::from(format!("{p}manifest.json")),
        exit_code: EXIT_OK,
    })
}

fn cmd_comm(a: &CommArgs) -> CliResult<RunOutcome> {
    let constants = standard_earth_constants();
    let spec = load_mission(&a.config)?;
    let sats = spacecraft_of(&spec);
    let sat = match &a.spacecraft {
        Some(name) => *sats.iter().find(|s| &s.name == name).ok_or_else(|| {
            usage(format!(
                "no spacecraft named `{name}` in {}",
                a.config.display()
            ))
        })?,
        None => sats
            .iter()
            .find(|s| !s.groundstations.is_empty())
            .copied()
            .unwrap_or(sats[0]),
    };
    if sat.groundstations.is_empty() {
        return Err(usage(format!(
            "{}: spacecraft `{}` has an empty groundstations map, so the communication discipline is not modeled",
            a.config.display(),
            sat.name
        )));
    }
    let ref0 = reference_state(&spec, &constants);
    let x0 = absolute_state(sat, &ref0);
    let grid = orbit_grid(&constants, &x0, a.duration_orbits, a.dt)?;
    let sys = make_absolute_system(constants, sat.dry_mass, sat.specific_impulse)?;
    let traj = rk4_propagate(&sys, x0.as_slice(), &vec![0.0; 3 * grid.n], &grid)?;
    let positions: Vec<Vec3> = (0..=grid.n)
        .map(|k| Vec3::from_column_slice(&traj.state(k)[..3]))
        .collect();
    let stations: Vec<_> = sat.groundstations.values().cloned().collect();
    let samples = total_data(&positions, &stations, &sat.link, &constants, &grid)?;
    let mut outputs = Outputs::default();
    outputs.write(a.out.clone(), &link_samples_to_csv(&stations, &samples))?;
    Ok(RunOutcome {
        config: Some(a.config.clone()),
        grid: Some(grid),
        outputs,
        manifest_path: sidecar_manifest(&a.out),
        exit_code: EXIT_OK,
    })
}

fn cmd_optimize(a: &OptimizeArgs) -> CliResult<RunOutcome> {
    if a.max_outer == 0 {
        return Err(usage("--max-outer must be >= 1"));
    }
    check_positive("feas-tol", a.feas_tol)?;
    check_positive("opt-tol", a.opt_tol)?;
    let constants = standard_earth_constants();
    let MissionSpec::VirtualTelescope(spec) = load_mission(&a.config)? else {
        return Err(usage(format!(
            "{}: optimize needs a virtual_telescope mission",
            a.config.display()
        )));
    };
    let grid = spec.grid()?;
    let model = assemble(&spec, &constants, &grid, cache_dir().as_deref())?;
    let problem = TrajOptProblem::new(&model)?;
    let options = SolverOptions {
        max_outer: a.max_outer,
        feas_tol: a.feas_tol,
        opt_tol: a.opt_tol,
        ..Default::default()
    };
    let solution = solve(&problem, &options, None)?;
    let p = &a.out_prefix;
    let mut outputs = Outputs::default();
    outputs.write(
        PathBuf::from(format!("{p}thrust.csv")),
        &thrust_csv(&grid, &solution.thrusts),
    )?;
    let metrics = problem.metrics(&solution.trajectories)?;
    outputs.write(
        PathBuf::from(format!("{p}metrics.csv")),
        &metrics_csv(&metrics),
    )?;
    outputs.write(
        PathBuf::from(format!("{p}convergence.csv")),
        &convergence_csv(&solution.report),
    )?;
    let last = solution.report.last();
    println!(
        "{}: objective {} kg, feasibility {}, optimality {}, {} iterations",
        solution.report.termination.describe(),
        solution.evaluation.objective,
        solution.evaluation.max_violation(),
        last.optimality,
        solution.report.history.len()
    );
    Ok(RunOutcome {
        config: Some(a.config.clone()),
        grid: Some(grid),
        outputs,
        manifest_path: PathBuf::from(format!("{p}manifest.json")),
        exit_code: if solution.report.converged() {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        },
    })
}

fn write_manifest(
    subcommand: &str,
    args: &[String],
    outcome: RunOutcome,
    started: Instant,
) -> CliResult<u8> {
    let config = match &outcome.config {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            Some(ConfigRecord {
                path: fs::canonicalize(path).map_err(|e| Error::io(path, e))?,
                sha256: sha256_hex(&bytes),
            })
        }
        None => None,
    };
    let working_dir = std::env::current_dir().map_err(|e| Error::io(".", e))?;
    let manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        args: args.to_vec(),
        working_dir,
        config,
        constants: standard_earth_constants(),
        grid: outcome.grid,
        outputs: outcome.outputs.records,
        exit_code: outcome.exit_code,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let path = &outcome.manifest_path;
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(outcome.exit_code)
}

fn cmd_replay(a: &ReplayArgs) -> CliResult<u8> {
    let text = fs::read_to_string(&a.manifest).map_err(|e| Error::io(&a.manifest, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::spec(a.manifest.display().to_string(), e.to_string()))?;
    let exe = std::env::current_exe().map_err(|e| Error::io("current executable", e))?;
    let status = Command::new(exe)
        .args(&manifest.args)
        .current_dir(&manifest.working_dir)
        .status()
        .map_err(|e| Error::io(&manifest.working_dir, e))?;
    let mut identical = status.code() == Some(i32::from(manifest.exit_code));
    if !identical {
        println!(
            "exit code {:?}, recorded {}",
            status.code(),
            manifest.exit_code
        );
    }
    for out in &manifest.outputs {
        let path = manifest.working_dir.join(&out.path);
        let actual = fs::read(&path).map(|b| sha256_hex(&b));
        let same = actual.as_ref().is_ok_and(|h| *h == out.sha256);
        identical &= same;
        println!(
            "{} {}",
            if same { "identical" } else { "DIFFERS" },
            out.path.display()
        );
    }
    Ok(if identical {
        EXIT_OK
    } else {
        EXIT_REPLAY_MISMATCH
    })
}

/// Runs one invocation; `args` excludes the program name.
pub fn run(args: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(
        std::iter::once("taloskit".to_string()).chain(args.iter().cloned()),
    ) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let result = match &cli.command {
        Commands::Replay(a) => cmd_replay(a),
        Commands::Propagate(a) => {
            cmd_propagate(a).and_then(|o| write_manifest("propagate", args, o, started))
        }
        Commands::Attitude(a) => {
            cmd_attitude(a).and_then(|o| write_manifest("attitude", args, o, started))
        }
        Commands::Illuminate(a) => {
            cmd_illuminate(a).and_then(|o| write_manifest("illuminate", args, o, started))
        }
        Commands::Comm(a) => cmd_comm(a).and_then(|o| write_manifest("comm", args, o, started)),
        Commands::Optimize(a) => {
            cmd_optimize(a).and_then(|o| write_manifest("optimize", args, o, started))
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
