//! End-to-end runs: plan, compare against the wrench-blind plan, simulate.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::{RunConfig, SimulationConfig, WrenchSource};
use crate::admittance_sim::{
    planar_task_reference, simulate, verify_force_bounds, ForceCheck, SimOptions,
};
use crate::dp_planner::{
    envelope_table, plan_table, planned_torques, to_joint_trajectory, ColumnTable, JointTrajectory,
    NominalWrench, PhaseGrid, PhasePlaneTrajectory,
};
use crate::error::{Error, Result};
use crate::io::{fmt_num, Table};
use crate::limits::{limits_table, PathSpeedLimit, SpeedCeiling, Unbounded};
use crate::parametrized_dynamics::{project_dynamics, ProjectedDynamics};
use crate::wrench_constraints::{
    contact_wrench_bounds, modified_torque_limits, ForceBound, GammaMode, ModifiedTorqueLimits,
    WrenchProfile,
};

/// Envelope tolerance for counting torque-limit violations [N m].
pub const ENVELOPE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Plan,
    PlanCompare,
    PlanSimulate,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// `(n_lambda, n_speed)` replacing the configured grid.
    pub grid: Option<(usize, usize)>,
    /// Plan as if no wrench were exerted.
    pub no_wrench: bool,
    /// Recorded in the report; the pipeline itself is deterministic.
    pub seed: Option<u64>,
}

/// One planned trajectory with everything needed to judge it.
#[derive(Clone, Debug)]
pub struct PlanResult {
    pub ppt: PhasePlaneTrajectory,
    pub trajectory: JointTrajectory,
    /// Planned node torques against the limits the plan used.
    pub node_violations: usize,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub blind: PlanResult,
    /// Wrench-blind planned node torques outside the modified limits.
    pub blind_node_violations: usize,
    /// Same check on the uniformly resampled wrench-blind trajectory.
    pub blind_sample_violations: usize,
    pub blind_worst_excess: f64,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub grid: PhaseGrid,
    pub aware: PlanResult,
    pub comparison: Option<Comparison>,
    pub force_check: Option<ForceCheck>,
    /// Contents of `report.txt`.
    pub report: String,
}

impl RunSummary {
    /// Process exit status for a completed run.
    pub fn exit_code(&self) -> i32 {
        match &self.force_check {
            Some(check) if !check.passed() => 4,
            _ => 0,
        }
    }
}

/// Exit status for a failed run.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::NoFeasiblePath { .. } | Error::InfeasibleLimits { .. } => 3,
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::DimensionMismatch { .. }
        | Error::TooFewSamples { .. }
        | Error::NonIncreasingGrid { .. }
        | Error::Unreachable { .. }
        | Error::SampledModel(_)
        | Error::SampleStepTooLarge { .. }
        | Error::ZeroTangent { .. } => 2,
        _ => 1,
    }
}

/// Problem data shared by the wrench-aware and wrench-blind plans.
struct Problem<'a> {
    config: &'a RunConfig,
    projected: ProjectedDynamics,
    grid: PhaseGrid,
}

impl Problem<'_> {
    fn ceiling(&self) -> Box<dyn SpeedCeiling + '_> {
        match &self.config.velocity {
            Some(bounds) => Box::new(PathSpeedLimit {
                path: &self.config.path,
                bounds,
            }),
            None => Box::new(Unbounded),
        }
    }

    fn plan(&self, profile: &WrenchProfile, limits: &ModifiedTorqueLimits) -> Result<PlanResult> {
        let ceiling = self.ceiling();
        let table = ColumnTable::build(&self.projected, limits, ceiling.as_ref(), self.grid)?;
        let ppt = plan_table(&table)?;
        let trajectory = to_joint_trajectory(
            &ppt,
            &self.config.path,
            &self.projected,
            profile,
            limits,
            self.config.sample_dt,
            NominalWrench::Midpoint,
        )?;
        let node_violations = planned_torques(&ppt, &self.projected, limits)
            .violations(ENVELOPE_TOL)
            .len();
        Ok(PlanResult {
            ppt,
            trajectory,
            node_violations,
        })
    }
}

fn wrench_profile(
    config: &RunConfig,
    projected: &ProjectedDynamics,
    no_wrench: bool,
) -> Result<(WrenchProfile, GammaMode)> {
    if no_wrench {
        return Ok((
            WrenchProfile::zero(projected.lambda()),
            GammaMode::default(),
        ));
    }
    match &config.wrench {
        WrenchSource::None => Ok((
            WrenchProfile::zero(projected.lambda()),
            GammaMode::default(),
        )),
        WrenchSource::Contact(spec, mode) => {
            Ok((contact_wrench_bounds(spec, &config.path, projected)?, *mode))
        }
        WrenchSource::Table(profile, mode) => Ok((profile.clone(), *mode)),
    }
}

fn write_table(dir: &Path, name: &str, table: &Table) -> Result<()> {
    let file = File::create(dir.join(name))?;
    table.write(BufWriter::new(file))
}

/// Per-column pseudo-velocity of both plans.
fn compare_table(aware: &PhasePlaneTrajectory, blind: &PhasePlaneTrajectory) -> Table {
    let mut table = Table::new(vec![
        "lambda".into(),
        "speed_with".into(),
        "speed_without".into(),
        "difference".into(),
    ]);
    for (a, b) in aware.nodes.iter().zip(&blind.nodes) {
        table.push(vec![a.lambda, a.speed, b.speed, a.speed - b.speed]);
    }
    table
}

/// Tightest constant bounds of a possibly tabulated normal-force range.
fn force_range(lower: &ForceBound, upper: &ForceBound) -> (f64, f64) {
    let lo = match lower {
        ForceBound::Constant(v) => *v,
        ForceBound::Table { values, .. } => {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
    };
    let hi = match upper {
        ForceBound::Constant(v) => *v,
        ForceBound::Table { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
    };
    (lo, hi)
}

fn run_simulation(
    config: &RunConfig,
    sim: &SimulationConfig,
    trajectory: &JointTrajectory,
    out_dir: &Path,
) -> Result<ForceCheck> {
    let WrenchSource::Contact(spec, _) = &config.wrench else {
        return Err(Error::config(
            "simulation",
            "requires a `contact` wrench section",
        ));
    };
    let axis = sim.environment.normal_axis;
    let reference = planar_task_reference(trajectory, &config.model, axis, sim.reference_depth)?;
    let options = SimOptions {
        dt: sim.dt,
        divergence_guard: sim.divergence_guard,
        settle: sim.settle,
        ..SimOptions::default()
    };
    let trace = simulate(&reference, &sim.params, &sim.environment, &options)?;
    write_table(out_dir, "sim_trace.csv", &trace.to_table(axis))?;
    let (lo, hi) = force_range(&spec.normal_lower, &spec.normal_upper);
    Ok(verify_force_bounds(&trace, axis, lo, hi, sim.transient))
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Plan => "plan",
        Mode::PlanCompare => "plan-compare",
        Mode::PlanSimulate => "plan-simulate",
    }
}

/// Runs the pipeline and writes every artifact into the output directory.
pub fn run(config: &RunConfig, mode: Mode, options: &RunOptions) -> Result<RunSummary> {
    let out_dir = options
        .out_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out_dir)?;

    let (n_lambda, n_speed) = options
        .grid
        .unwrap_or((config.grid.n_lambda, config.grid.n_speed));
    let projected = project_dynamics(&config.model, &config.path)?;
    let grid = PhaseGrid::new(
        n_lambda,
        n_speed,
        config.path.length(),
        config.grid.speed_max,
    )?;
    let problem = Problem {
        config,
        projected,
        grid,
    };

    let (profile, gamma_mode) = wrench_profile(config, &problem.projected, options.no_wrench)?;
    let limits = modified_torque_limits(
        &config.torque_lower,
        &config.torque_upper,
        &profile,
        &problem.projected,
        gamma_mode,
    )?;
    let aware = problem.plan(&profile, &limits)?;
    write_table(&out_dir, "ppt.csv", &aware.ppt.to_table())?;
    write_table(&out_dir, "joint_traj.csv", &aware.trajectory.to_table())?;
    write_table(&out_dir, "envelopes.csv", &envelope_table(&limits))?;
    write_table(
        &out_dir,
        "limits.csv",
        &limits_table(&problem.projected, &limits, problem.ceiling().as_ref()),
    )?;

    let comparison = if mode == Mode::PlanCompare {
        let zero = WrenchProfile::zero(problem.projected.lambda());
        let raw = ModifiedTorqueLimits::raw(
            &config.torque_lower,
            &config.torque_upper,
            problem.projected.lambda(),
        )?;
        let blind = problem.plan(&zero, &raw)?;
        let nodes = planned_torques(&blind.ppt, &problem.projected, &limits);
        // Resample the blind plan against the modified envelope.
        let resampled = to_joint_trajectory(
            &blind.ppt,
            &config.path,
            &problem.projected,
            &zero,
            &limits,
            config.sample_dt,
            NominalWrench::Midpoint,
        )?;
        write_table(&out_dir, "ppt_blind.csv", &blind.ppt.to_table())?;
        write_table(
            &out_dir,
            "joint_traj_blind.csv",
            &blind.trajectory.to_table(),
        )?;
        write_table(
            &out_dir,
            "ppt_compare.csv",
            &compare_table(&aware.ppt, &blind.ppt),
        )?;
        Some(Comparison {
            blind_node_violations: nodes.violations(ENVELOPE_TOL).len(),
            blind_sample_violations: resampled.envelope_violations(ENVELOPE_TOL).len(),
            blind_worst_excess: nodes.max_excess().max(resampled.max_envelope_excess()),
            blind,
        })
    } else {
        None
    };

    let force_check = if mode == Mode::PlanSimulate {
        let sim = config.simulation.as_ref().ok_or_else(|| {
            Error::config("simulation", "plan-simulate needs a [simulation] section")
        })?;
        Some(run_simulation(config, sim, &aware.trajectory, &out_dir)?)
    } else {
        None
    };

    let report = render_report(
        mode,
        options,
        &grid,
        &aware,
        comparison.as_ref(),
        force_check.as_ref(),
    );
    fs::write(out_dir.join("report.txt"), &report)?;
    Ok(RunSummary {
        out_dir,
        grid,
        aware,
        comparison,
        force_check,
        report,
    })
}

fn render_report(
    mode: Mode,
    options: &RunOptions,
    grid: &PhaseGrid,
    aware: &PlanResult,
    comparison: Option<&Comparison>,
    force: Option<&ForceCheck>,
) -> String {
    let mut r = String::new();
    let _ = writeln!(r, "mode: {}", mode_name(mode));
    let _ = writeln!(
        r,
        "grid: {} x {} (speed_max {})",
        grid.n_lambda(),
        grid.n_speed(),
        fmt_num(grid.speed_max())
    );
    let _ = writeln!(
        r,
        "wrench: {}",
        if options.no_wrench {
            "ignored"
        } else {
            "as configured"
        }
    );
    match options.seed {
        Some(seed) => {
            let _ = writeln!(r, "seed: {seed}");
        }
        None => {
            let _ = writeln!(r, "seed: none");
        }
    }
    let _ = writeln!(r, "t_f: {}", fmt_num(aware.ppt.total_time()));
    let _ = writeln!(
        r,
        "planned node violations of the limits in use: {}",
        aware.node_violations
    );
    match comparison {
        Some(c) => {
            let t_with = aware.ppt.total_time();
            let t_without = c.blind.ppt.total_time();
            let diffs: Vec<f64> = aware
                .ppt
                .nodes
                .iter()
                .zip(&c.blind.ppt.nodes)
                .map(|(a, b)| a.speed - b.speed)
                .collect();
            let max_abs = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let _ = writeln!(r, "t_f with wrench: {}", fmt_num(t_with));
            let _ = writeln!(r, "t_f without wrench: {}", fmt_num(t_without));
            let _ = writeln!(r, "t_f difference: {}", fmt_num(t_with - t_without));
            let _ = writeln!(r, "max per-column speed difference: {}", fmt_num(max_abs));
            let _ = writeln!(
                r,
                "columns slower with wrench: {}",
                diffs.iter().filter(|d| **d < 0.0).count()
            );
            let _ = writeln!(
                r,
                "columns faster with wrench: {}",
                diffs.iter().filter(|d| **d > 0.0).count()
            );
            let _ = writeln!(
                r,
                "wrench-blind modified-limit violations (planned nodes): {}",
                c.blind_node_violations
            );
            let _ = writeln!(
                r,
                "wrench-blind modified-limit violations (resampled): {}",
                c.blind_sample_violations
            );
            let _ = writeln!(
                r,
                "wrench-blind worst excess: {}",
                fmt_num(c.blind_worst_excess)
            );
        }
        None => {
            let _ = writeln!(
                r,
                "wrench-blind modified-limit violations (planned nodes): 0"
            );
        }
    }
    if let Some(f) = force {
        let _ = writeln!(r, "force samples checked: {}", f.checked);
        let _ = writeln!(r, "normal force min: {}", fmt_num(f.min));
        let _ = writeln!(r, "normal force max: {}", fmt_num(f.max));
        let _ = writeln!(r, "force-bound violations: {}", f.violations.len());
        let _ = writeln!(
            r,
            "force verdict: {}",
            if f.passed() {
                "within bounds"
            } else {
                "VIOLATED"
            }
        );
    }
    r
}
