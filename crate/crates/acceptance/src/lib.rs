//! Fixtures shared by the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use wrench_totp::cli::RunConfig;
use wrench_totp::dp_planner::PhasePlaneTrajectory;
use wrench_totp::path::{DiffScheme, PathSpec};
use wrench_totp::robot_model::{Gravity, Planar2R, RobotModel};
use wrench_totp::Result;

/// Directory of the 2R writing demo.
pub fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/demo")
}

pub fn demo_config_text() -> String {
    std::fs::read_to_string(demo_dir().join("writing_2r.toml")).expect("demo config is readable")
}

/// Loads the demo config after replacing `from` with `to` in its text.
pub fn demo_config_with(from: &str, to: &str) -> Result<RunConfig> {
    let text = demo_config_text();
    assert!(text.contains(from), "demo config has no `{from}`");
    RunConfig::from_toml_str(&text.replace(from, to), &demo_dir())
}

pub fn demo_config() -> Result<RunConfig> {
    RunConfig::load(&demo_dir().join("writing_2r.toml"))
}

/// 2R arm with in-plane gravity and viscous friction.
pub fn sine_arm() -> RobotModel {
    RobotModel::Planar2R(
        Planar2R::new(
            [0.5, 0.4],
            [4.0, 2.5],
            [0.25, 0.2],
            [0.09, 0.035],
            [0.4, 0.2],
            9.81,
            Gravity::InPlane,
        )
        .expect("valid arm"),
    )
}

/// `q_j(l) = sin(l)` on `n` uniform samples over `[0, pi]`.
pub fn sine_path(n: usize) -> PathSpec {
    let lambda: Vec<f64> = (0..n)
        .map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64)
        .collect();
    let samples: Vec<DVector<f64>> = lambda
        .iter()
        .map(|&l| DVector::from_element(2, l.sin()))
        .collect();
    PathSpec::build(&lambda, &samples, DiffScheme::CubicSpline).expect("valid path")
}

/// Rest at both ends and strictly increasing lambda.
pub fn check_boundary(ppt: &PhasePlaneTrajectory) -> std::result::Result<(), String> {
    let first = ppt.nodes.first().ok_or("empty trajectory")?;
    let last = ppt.nodes.last().ok_or("empty trajectory")?;
    if first.speed != 0.0 || last.speed != 0.0 {
        return Err(format!("end speeds {} and {}", first.speed, last.speed));
    }
    if let Some(w) = ppt.nodes.windows(2).find(|w| !(w[1].lambda > w[0].lambda)) {
        return Err(format!("lambda not increasing at {}", w[0].lambda));
    }
    if ppt.len() > 2 {
        if let Some(n) = ppt.nodes[1..ppt.len() - 1]
            .iter()
            .find(|n| !(n.speed > 0.0))
        {
            return Err(format!("interior stop at lambda {}", n.lambda));
        }
    }
    Ok(())
}
