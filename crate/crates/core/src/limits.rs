//! Phase-plane bounds: the admissible pseudo-acceleration interval
//! `L(l, ld) <= ldd <= U(l, ld)` and the pseudo-velocity ceiling implied by
//! the joint velocity limits.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::io::Table;
use crate::parametrized_dynamics::ProjectedDynamics;
use crate::path::PathSpec;
use crate::wrench_constraints::ModifiedTorqueLimits;

/// `|a_j|` below this is a zero-inertia point for joint `j`.
pub const ZERO_INERTIA_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccelBounds {
    pub lower: f64,
    pub upper: f64,
    /// Joint attaining `lower`, if any joint bounds it.
    pub lower_joint: Option<usize>,
    pub upper_joint: Option<usize>,
    /// Zero-inertia joint whose velocity-dependent torque alone leaves its
    /// limits. The state is infeasible regardless of `ldd`.
    pub blocked_joint: Option<usize>,
}

impl AccelBounds {
    pub fn is_feasible(&self) -> bool {
        self.blocked_joint.is_none() && self.lower <= self.upper
    }

    /// Closed-interval membership.
    pub fn admits(&self, accel: f64) -> bool {
        self.is_feasible() && self.lower <= accel && accel <= self.upper
    }
}

/// Acceleration bounds at one state from the projected coefficients and the
/// (modified) torque limits at that lambda. Slices are indexed by joint.
#[allow(clippy::too_many_arguments)]
pub fn accel_bounds(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    g: &[f64],
    tau_lo: &[f64],
    tau_hi: &[f64],
    speed: f64,
) -> AccelBounds {
    let mut out = AccelBounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        lower_joint: None,
        upper_joint: None,
        blocked_joint: None,
    };
    for j in 0..a.len() {
        let rest = b[j] * speed * speed + c[j] * speed + g[j];
        if a[j].abs() < ZERO_INERTIA_TOL {
            if (rest < tau_lo[j] || rest > tau_hi[j]) && out.blocked_joint.is_none() {
                out.blocked_joint = Some(j);
            }
            continue;
        }
        let (lo_j, hi_j) = if a[j] > 0.0 {
            ((tau_lo[j] - rest) / a[j], (tau_hi[j] - rest) / a[j])
        } else {
            ((tau_hi[j] - rest) / a[j], (tau_lo[j] - rest) / a[j])
        };
        if lo_j > out.lower {
            out.lower = lo_j;
            out.lower_joint = Some(j);
        }
        if hi_j < out.upper {
            out.upper = hi_j;
            out.upper_joint = Some(j);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityLimit {
    /// `f64::INFINITY` when no joint moves along the path at this lambda.
    pub max: f64,
    pub joint: Option<usize>,
}

impl VelocityLimit {
    pub fn is_unbounded(&self) -> bool {
        self.max == f64::INFINITY
    }
}

/// Largest `ld` keeping every `qd_j = q'_j ld` inside `[qd_lo_j, qd_hi_j]`.
/// Joints with `q'_j = 0` impose nothing.
pub fn velocity_limit(dq: &[f64], qd_lo: &[f64], qd_hi: &[f64]) -> VelocityLimit {
    let mut out = VelocityLimit {
        max: f64::INFINITY,
        joint: None,
    };
    for j in 0..dq.len() {
        let bound = if dq[j] > 0.0 {
            qd_hi[j] / dq[j]
        } else if dq[j] < 0.0 {
            qd_lo[j] / dq[j]
        } else {
            continue;
        };
        if bound < out.max {
            out.max = bound;
            out.joint = Some(j);
        }
    }
    out
}

/// Joint velocity limits with `lower < 0 < upper` per joint.
#[derive(Clone, Debug, PartialEq)]
pub struct JointVelocityBounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl JointVelocityBounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                what: "velocity limits",
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for j in 0..lower.len() {
            if !(lower[j] < 0.0 && 0.0 < upper[j]) {
                return Err(Error::invalid(
                    format!("velocity limits of joint {}", j + 1),
                    format!("need lower < 0 < upper, got [{}, {}]", lower[j], upper[j]),
                ));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn symmetric(limits: &[f64]) -> Result<Self> {
        let upper = DVector::from_column_slice(limits);
        Self::new(-&upper, upper)
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }
}

/// Pseudo-velocity ceiling as a function of lambda.
pub trait SpeedCeiling {
    fn max_speed(&self, lambda: f64) -> f64;
}

/// No velocity limit at all.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unbounded;

impl SpeedCeiling for Unbounded {
    fn max_speed(&self, _lambda: f64) -> f64 {
        f64::INFINITY
    }
}

/// Ceiling from joint velocity limits along a path, evaluated with the exact
/// `q'(lambda)` of the path.
#[derive(Clone, Copy, Debug)]
pub struct PathSpeedLimit<'a> {
    pub path: &'a PathSpec,
    pub bounds: &'a JointVelocityBounds,
}

impl PathSpeedLimit<'_> {
    pub fn at(&self, lambda: f64) -> VelocityLimit {
        let lambda = lambda.clamp(0.0, self.path.length());
        let dq = self.path.eval(lambda).expect("clamped into range").dq;
        velocity_limit(
            dq.as_slice(),
            self.bounds.lower.as_slice(),
            self.bounds.upper.as_slice(),
        )
    }
}

impl SpeedCeiling for PathSpeedLimit<'_> {
    fn max_speed(&self, lambda: f64) -> f64 {
        self.at(lambda).max
    }
}

/// Diagnostic table `(lambda, ld_max, L, U)` with the acceleration bounds
/// taken at rest, one row per node of `projected`.
pub fn limits_table(
    projected: &ProjectedDynamics,
    limits: &ModifiedTorqueLimits,
    ceiling: &dyn SpeedCeiling,
) -> Table {
    let mut table = Table::new(vec![
        "lambda".into(),
        "speed_max".into(),
        "accel_lower_at_rest".into(),
        "accel_upper_at_rest".into(),
    ]);
    for &lambda in projected.lambda() {
        let k = projected.interpolate(lambda);
        let env = limits.interpolate(lambda);
        let bounds = accel_bounds(
            k.a.as_slice(),
            k.b.as_slice(),
            k.c.as_slice(),
            k.g.as_slice(),
            env.lower.as_slice(),
            env.upper.as_slice(),
            0.0,
        );
        table.push(vec![
            lambda,
            ceiling.max_speed(lambda),
            bounds.lower,
            bounds.upper,
        ]);
    }
    table
}
