//! TOML run configuration.
//!
//! Relative file names are resolved against the directory holding the
//! config file. Every validation failure names the offending field.

use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::{DVector, Vector2, Vector3};
use serde::Deserialize;

use crate::admittance_sim::{AdmittanceParams, EnvironmentModel};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::limits::JointVelocityBounds;
use crate::path::{planar_ik, DiffScheme, ElbowBranch, PathSpec, TaskPath};
use crate::robot_model::{load_model, ModelSpec, RobotModel};
use crate::wrench_constraints::{ContactSpec, ForceBound, GammaMode, TangentSource, WrenchProfile};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: ModelSpec,
    path: PathSection,
    limits: LimitsSection,
    wrench: Option<WrenchSection>,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    output: OutputSection,
    simulation: Option<SimulationSection>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PathSection {
    /// CSV `lambda, q_1..q_n`.
    Joint {
        file: PathBuf,
        #[serde(default)]
        scheme: DiffScheme,
    },
    /// CSV `lambda, x, y`, converted with planar inverse kinematics.
    Task {
        file: PathBuf,
        #[serde(default)]
        branch: ElbowBranch,
        #[serde(default)]
        scheme: DiffScheme,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsSection {
    torque_lower: Vec<f64>,
    torque_upper: Vec<f64>,
    velocity_lower: Option<Vec<f64>>,
    velocity_upper: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ForceBoundSection {
    Constant(f64),
    /// CSV `lambda, value`.
    Table {
        file: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TangentName {
    Motion,
    AgainstMotion,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TangentSection {
    Named(TangentName),
    /// CSV `lambda, t_1, t_2` on the two contact-plane axes.
    Table {
        file: PathBuf,
    },
}

impl Default for TangentSection {
    fn default() -> Self {
        TangentSection::Named(TangentName::Motion)
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum WrenchSection {
    Contact {
        normal_axis: usize,
        normal_lower: ForceBoundSection,
        normal_upper: ForceBoundSection,
        #[serde(default)]
        friction: f64,
        #[serde(default)]
        tangent: TangentSection,
        #[serde(default)]
        gamma_mode: GammaMode,
    },
    /// CSV with 13 columns: `lambda`, six lower and six upper components.
    Table {
        file: PathBuf,
        #[serde(default)]
        gamma_mode: GammaMode,
    },
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GridSection {
    n_lambda: usize,
    n_speed: usize,
    speed_max: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_lambda: 500,
            n_speed: 5000,
            speed_max: 1.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OutputSection {
    sample_dt: f64,
    dir: Option<PathBuf>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            sample_dt: 0.01,
            dir: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationSection {
    mass: [f64; 3],
    damping: [f64; 3],
    stiffness: [f64; 3],
    desired_force: f64,
    #[serde(default = "default_contact_stiffness")]
    contact_stiffness: f64,
    #[serde(default)]
    rest_position: f64,
    desired_depth: f64,
    #[serde(default = "default_sim_dt")]
    dt: f64,
    #[serde(default = "default_transient")]
    transient: f64,
    #[serde(default = "default_guard")]
    divergence_guard: f64,
    #[serde(default)]
    settle: f64,
}

fn default_contact_stiffness() -> f64 {
    1e4
}

fn default_sim_dt() -> f64 {
    0.002
}

fn default_transient() -> f64 {
    0.5
}

fn default_guard() -> f64 {
    1.0
}

/// Interaction wrench description after loading.
#[derive(Clone, Debug, PartialEq)]
pub enum WrenchSource {
    None,
    Contact(ContactSpec, GammaMode),
    Table(WrenchProfile, GammaMode),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub n_lambda: usize,
    pub n_speed: usize,
    pub speed_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub params: AdmittanceParams,
    pub environment: EnvironmentModel,
    /// Normal coordinate of the reference, `rest + desired_depth`.
    pub reference_depth: f64,
    pub dt: f64,
    pub transient: f64,
    pub divergence_guard: f64,
    pub settle: f64,
}

/// A validated run description.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: RobotModel,
    pub path: PathSpec,
    pub torque_lower: DVector<f64>,
    pub torque_upper: DVector<f64>,
    pub velocity: Option<JointVelocityBounds>,
    pub wrench: WrenchSource,
    pub grid: GridConfig,
    pub sample_dt: f64,
    pub simulation: Option<SimulationConfig>,
    pub output_dir: Option<PathBuf>,
}

fn open(base: &Path, file: &Path, field: &str) -> Result<File> {
    let full = base.join(file);
    File::open(&full)
        .map_err(|e| Error::config(field, format!("cannot open {}: {e}", full.display())))
}

fn with_field<T>(field: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(field, other.to_string()),
    })
}

fn force_bound(section: &ForceBoundSection, base: &Path, field: &str) -> Result<ForceBound> {
    match section {
        ForceBoundSection::Constant(v) => Ok(ForceBound::Constant(*v)),
        ForceBoundSection::Table { file } => {
            let table = with_field(field, Table::read(open(base, file, field)?))?;
            if table.headers.len() != 2 || table.rows.is_empty() {
                return Err(Error::config(field, "expected columns `lambda, value`"));
            }
            let lambda: Vec<f64> = table.column(0).collect();
            with_field(field, crate::io::check_grid(&lambda))?;
            Ok(ForceBound::Table {
                lambda,
                values: table.column(1).collect(),
            })
        }
    }
}

fn tangent(section: &TangentSection, base: &Path) -> Result<TangentSource> {
    match section {
        TangentSection::Named(TangentName::Motion) => Ok(TangentSource::Motion),
        TangentSection::Named(TangentName::AgainstMotion) => Ok(TangentSource::AgainstMotion),
        TangentSection::Table { file } => {
            let field = "wrench.tangent.file";
            let table = with_field(field, Table::read(open(base, file, field)?))?;
            if table.headers.len() != 3 || table.rows.is_empty() {
                return Err(Error::config(field, "expected columns `lambda, t_1, t_2`"));
            }
            let lambda: Vec<f64> = table.column(0).collect();
            with_field(field, crate::io::check_grid(&lambda))?;
            Ok(TangentSource::Explicit {
                lambda,
                directions: table
                    .rows
                    .iter()
                    .map(|r| Vector2::new(r[1], r[2]))
                    .collect(),
            })
        }
    }
}

fn check_len(field: &str, values: &[f64], dof: usize) -> Result<()> {
    if values.len() != dof {
        return Err(Error::config(
            field,
            format!(
                "expected {dof} entries (one per joint), found {}",
                values.len()
            ),
        ));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "config".into());
            Error::config(field, e.message())
        })?;
        let model = with_field("model", load_model(&file.model, base))?;
        let dof = model.dof();

        let path = match &file.path {
            PathSection::Joint { file, scheme } => with_field(
                "path.file",
                PathSpec::read_csv(open(base, file, "path.file")?, *scheme),
            )?,
            PathSection::Task {
                file,
                branch,
                scheme,
            } => {
                let task = with_field(
                    "path.file",
                    TaskPath::read_csv(open(base, file, "path.file")?),
                )?;
                let q = with_field("path", planar_ik(&task, &model, *branch))?;
                with_field("path", PathSpec::build(&task.lambda, &q, *scheme))?
            }
        };
        if path.dof() != dof {
            return Err(Error::config(
                "path.file",
                format!("path has {} joints, model has {dof}", path.dof()),
            ));
        }

        let lim = &file.limits;
        check_len("limits.torque_lower", &lim.torque_lower, dof)?;
        check_len("limits.torque_upper", &lim.torque_upper, dof)?;
        for j in 0..dof {
            if !(lim.torque_lower[j] < lim.torque_upper[j]) {
                return Err(Error::config(
                    "limits.torque_lower",
                    format!("joint {} lower limit must be below the upper limit", j + 1),
                ));
            }
        }
        let velocity = match (&lim.velocity_lower, &lim.velocity_upper) {
            (None, None) => None,
            (Some(lo), Some(hi)) => {
                check_len("limits.velocity_lower", lo, dof)?;
                check_len("limits.velocity_upper", hi, dof)?;
                Some(with_field(
                    "limits.velocity_lower",
                    JointVelocityBounds::new(
                        DVector::from_vec(lo.clone()),
                        DVector::from_vec(hi.clone()),
                    ),
                )?)
            }
            _ => {
                return Err(Error::config(
                    "limits.velocity_lower",
                    "velocity_lower and velocity_upper must be given together",
                ))
            }
        };

        let wrench = match &file.wrench {
            None => WrenchSource::None,
            Some(WrenchSection::Contact {
                normal_axis,
                normal_lower,
                normal_upper,
                friction,
                tangent: t,
                gamma_mode,
            }) => {
                if *normal_axis > 2 {
                    return Err(Error::config("wrench.normal_axis", "must be 0, 1 or 2"));
                }
                if !(friction.is_finite() && *friction >= 0.0) {
                    return Err(Error::config("wrench.friction", "must be non-negative"));
                }
                let spec = ContactSpec {
                    normal_axis: *normal_axis,
                    normal_lower: force_bound(normal_lower, base, "wrench.normal_lower")?,
                    normal_upper: force_bound(normal_upper, base, "wrench.normal_upper")?,
                    friction: *friction,
                    tangent: tangent(t, base)?,
                };
                WrenchSource::Contact(spec, *gamma_mode)
            }
            Some(WrenchSection::Table { file, gamma_mode }) => {
                let profile = with_field(
                    "wrench.file",
                    WrenchProfile::read_csv(open(base, file, "wrench.file")?),
                )?;
                WrenchSource::Table(profile, *gamma_mode)
            }
        };

        let g = &file.grid;
        if g.n_lambda < 1 {
            return Err(Error::config("grid.n_lambda", "must be positive"));
        }
        if g.n_speed < 2 {
            return Err(Error::config("grid.n_speed", "must be at least 2"));
        }
        if !(g.speed_max.is_finite() && g.speed_max > 0.0) {
            return Err(Error::config("grid.speed_max", "must be positive"));
        }
        let grid = GridConfig {
            n_lambda: g.n_lambda,
            n_speed: g.n_speed,
            speed_max: g.speed_max,
        };

        if !(file.output.sample_dt.is_finite() && file.output.sample_dt > 0.0) {
            return Err(Error::config("output.sample_dt", "must be positive"));
        }

        let simulation = match &file.simulation {
            None => None,
            Some(s) => {
                let normal_axis =
                    match &wrench {
                        WrenchSource::Contact(spec, _) => spec.normal_axis,
                        _ => return Err(Error::config(
                            "simulation",
                            "requires a `contact` wrench section for the normal axis and friction",
                        )),
                    };
                let friction = match &wrench {
                    WrenchSource::Contact(spec, _) => spec.friction,
                    _ => 0.0,
                };
                let mut desired = Vector3::zeros();
                desired[normal_axis] = s.desired_force;
                let params = with_field(
                    "simulation",
                    AdmittanceParams::new(
                        s.mass.into(),
                        s.damping.into(),
                        s.stiffness.into(),
                        desired,
                    ),
                )?;
                let environment = with_field(
                    "simulation.contact_stiffness",
                    EnvironmentModel::new(
                        normal_axis,
                        s.rest_position,
                        s.contact_stiffness,
                        friction,
                    ),
                )?;
                for (field, v) in [
                    ("simulation.dt", s.dt),
                    ("simulation.divergence_guard", s.divergence_guard),
                ] {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::config(field, "must be positive"));
                    }
                }
                if !(s.transient >= 0.0 && s.settle >= 0.0) {
                    return Err(Error::config(
                        "simulation.transient",
                        "must be non-negative",
                    ));
                }
                Some(SimulationConfig {
                    params,
                    environment,
                    reference_depth: s.rest_position + s.desired_depth,
                    dt: s.dt,
                    transient: s.transient,
                    divergence_guard: s.divergence_guard,
                    settle: s.settle,
                })
            }
        };

        Ok(Self {
            model,
            path,
            torque_lower: DVector::from_vec(lim.torque_lower.clone()),
            torque_upper: DVector::from_vec(lim.torque_upper.clone()),
            velocity,
            wrench,
            grid,
            sample_dt: file.output.sample_dt,
            simulation,
            output_dir: file.output.dir.map(|d| base.join(d)),
        })
    }
}
