//! Bounds on the wrench exerted at the end-effector and the joint torque
//! limits they leave for motion.
//!
//! For joint `j` the wrench torque `gamma_j = J_j^T h_e` is bracketed by
//! `J_j^T h_lo` and `J_j^T h_hi`. The torque available for motion is then
//!
//! ```text
//! tau_lo_j - min(gamma_lo_j, gamma_hi_j) <= a_j ldd + b_j ld^2 + c_j ld + g_j
//!                                        <= tau_hi_j - max(gamma_lo_j, gamma_hi_j)
//! ```

use std::io::Read;

use nalgebra::{DVector, Vector2, Vector6};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::{check_grid, locate, Table};
use crate::parametrized_dynamics::ProjectedDynamics;
use crate::path::PathSpec;

/// Per-lambda pair of wrench bound vectors `(f_x, f_y, f_z, m_x, m_y, m_z)`.
///
/// Profiles built by [`contact_wrench_bounds`] pair their tangential entries
/// as `mu * f_N * t_i`, so where `t_i < 0` the "lower" entry exceeds the
/// "upper" one. The torque limit computation is insensitive to that order.
#[derive(Clone, Debug, PartialEq)]
pub struct WrenchProfile {
    lambda: Vec<f64>,
    lower: Vec<Vector6<f64>>,
    upper: Vec<Vector6<f64>>,
}

impl WrenchProfile {
    /// Validated profile: `lower <= upper` componentwise at every node.
    pub fn new(
        lambda: Vec<f64>,
        lower: Vec<Vector6<f64>>,
        upper: Vec<Vector6<f64>>,
    ) -> Result<Self> {
        let profile = Self::unordered(lambda, lower, upper)?;
        for (i, (lo, hi)) in profile.lower.iter().zip(&profile.upper).enumerate() {
            if let Some(k) = (0..6).find(|&k| lo[k] > hi[k]) {
                return Err(Error::invalid(
                    format!("wrench bound at lambda = {}", profile.lambda[i]),
                    format!("component {} has lower {} > upper {}", k + 1, lo[k], hi[k]),
                ));
            }
        }
        Ok(profile)
    }

    fn unordered(
        lambda: Vec<f64>,
        lower: Vec<Vector6<f64>>,
        upper: Vec<Vector6<f64>>,
    ) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::TooFewSamples {
                found: 0,
                required: 1,
            });
        }
        check_grid(&lambda)?;
        for (what, v) in [("wrench lower", &lower), ("wrench upper", &upper)] {
            if v.len() != lambda.len() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: lambda.len(),
                    found: v.len(),
                });
            }
            if v.iter().any(|w| w.iter().any(|x| !x.is_finite())) {
                return Err(Error::invalid(what, "non-finite entry"));
            }
        }
        Ok(Self {
            lambda,
            lower,
            upper,
        })
    }

    pub fn zero(lambda: &[f64]) -> Self {
        Self {
            lambda: lambda.to_vec(),
            lower: vec![Vector6::zeros(); lambda.len()],
            upper: vec![Vector6::zeros(); lambda.len()],
        }
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lower(&self) -> &[Vector6<f64>] {
        &self.lower
    }

    pub fn upper(&self) -> &[Vector6<f64>] {
        &self.upper
    }

    pub fn is_zero(&self) -> bool {
        self.lower
            .iter()
            .chain(&self.upper)
            .all(|w| w.iter().all(|&x| x == 0.0))
    }

    /// Linearly interpolated bound pair at `lambda` (clamped to the grid).
    pub fn interpolate(&self, lambda: f64) -> (Vector6<f64>, Vector6<f64>) {
        let (i, s) = locate(&self.lambda, lambda);
        if s == 0.0 {
            return (self.lower[i], self.upper[i]);
        }
        (
            self.lower[i] * (1.0 - s) + self.lower[i + 1] * s,
            self.upper[i] * (1.0 - s) + self.upper[i + 1] * s,
        )
    }

    /// Midpoint of the bounds; the nominal wrench used for torque reports.
    pub fn midpoint(&self, lambda: f64) -> Vector6<f64> {
        let (lo, hi) = self.interpolate(lambda);
        (lo + hi) * 0.5
    }

    /// CSV with columns `lambda, lo_1..lo_6, hi_1..hi_6`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let table = Table::read(reader)?;
        if table.headers.len() != 13 {
            return Err(Error::invalid(
                "wrench table",
                format!(
                    "{} columns; expected lambda plus 12 bounds",
                    table.headers.len()
                ),
            ));
        }
        let lambda = table.column(0).collect();
        let lower = table
            .rows
            .iter()
            .map(|r| Vector6::from_column_slice(&r[1..7]))
            .collect();
        let upper = table
            .rows
            .iter()
            .map(|r| Vector6::from_column_slice(&r[7..13]))
            .collect();
        Self::new(lambda, lower, upper)
    }
}

/// A normal-force bound, constant or tabulated over lambda.
#[derive(Clone, Debug, PartialEq)]
pub enum ForceBound {
    Constant(f64),
    Table { lambda: Vec<f64>, values: Vec<f64> },
}

impl ForceBound {
    pub fn at(&self, lambda: f64) -> f64 {
        match self {
            ForceBound::Constant(v) => *v,
            ForceBound::Table {
                lambda: grid,
                values,
            } => {
                let (i, s) = locate(grid, lambda);
                if s == 0.0 {
                    values[i]
                } else {
                    values[i] * (1.0 - s) + values[i + 1] * s
                }
            }
        }
    }
}

/// Where the tangent direction `t` in the contact plane comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum TangentSource {
    /// Direction of end-effector motion, `J_v(q) q'`, projected on the
    /// contact plane.
    Motion,
    /// Opposite of the motion direction.
    AgainstMotion,
    /// Explicit unit vectors on a lambda grid.
    Explicit {
        lambda: Vec<f64>,
        directions: Vec<Vector2<f64>>,
    },
}

/// Contact along a single base axis with Coulomb-like tangential bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactSpec {
    /// Base axis of the contact normal: 0, 1 or 2.
    pub normal_axis: usize,
    pub normal_lower: ForceBound,
    pub normal_upper: ForceBound,
    pub friction: f64,
    pub tangent: TangentSource,
}

impl ContactSpec {
    /// Base axes spanning the contact plane, in increasing order.
    pub fn tangent_axes(&self) -> [usize; 2] {
        match self.normal_axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.normal_axis > 2 {
            return Err(Error::invalid("normal_axis", "must be 0, 1 or 2"));
        }
        if !(self.friction.is_finite() && self.friction >= 0.0) {
            return Err(Error::invalid("friction", "must be non-negative"));
        }
        Ok(())
    }
}

/// Wrench bounds for a single-axis contact, evaluated on the grid of
/// `projected`:
///
/// ```text
/// h_lo = (f_N_lo, mu f_N_lo t_1, mu f_N_lo t_2, 0, 0, 0)   (normal-axis first)
/// h_hi = (f_N_hi, mu f_N_hi t_1, mu f_N_hi t_2, 0, 0, 0)
/// ```
///
/// with entries placed on the normal and tangent axes of `spec.normal_axis`.
pub fn contact_wrench_bounds(
    spec: &ContactSpec,
    path: &PathSpec,
    projected: &ProjectedDynamics,
) -> Result<WrenchProfile> {
    spec.validate()?;
    let [t1_axis, t2_axis] = spec.tangent_axes();
    let mut lower = Vec::with_capacity(projected.len());
    let mut upper = Vec::with_capacity(projected.len());
    for (i, &lambda) in projected.lambda().iter().enumerate() {
        let f_lo = spec.normal_lower.at(lambda);
        let f_hi = spec.normal_upper.at(lambda);
        if !(0.0 <= f_lo && f_lo <= f_hi) {
            return Err(Error::invalid(
                format!("normal force bounds at lambda = {lambda}"),
                format!("need 0 <= lower <= upper, got [{f_lo}, {f_hi}]"),
            ));
        }
        let needs_tangent = spec.friction * f_lo.abs().max(f_hi.abs()) != 0.0;
        let t = if needs_tangent {
            tangent_at(spec, path, projected, i, lambda, [t1_axis, t2_axis])?
        } else {
            Vector2::zeros()
        };
        let mut lo = Vector6::zeros();
        let mut hi = Vector6::zeros();
        lo[spec.normal_axis] = f_lo;
        hi[spec.normal_axis] = f_hi;
        lo[t1_axis] = spec.friction * f_lo * t[0];
        lo[t2_axis] = spec.friction * f_lo * t[1];
        hi[t1_axis] = spec.friction * f_hi * t[0];
        hi[t2_axis] = spec.friction * f_hi * t[1];
        lower.push(lo);
        upper.push(hi);
    }
    WrenchProfile::unordered(projected.lambda().to_vec(), lower, upper)
}

fn tangent_at(
    spec: &ContactSpec,
    path: &PathSpec,
    projected: &ProjectedDynamics,
    node: usize,
    lambda: f64,
    axes: [usize; 2],
) -> Result<Vector2<f64>> {
    let raw = match &spec.tangent {
        TangentSource::Explicit {
            lambda: grid,
            directions,
        } => {
            let (i, s) = locate(grid, lambda);
            if s == 0.0 {
                directions[i]
            } else {
                directions[i] * (1.0 - s) + directions[i + 1] * s
            }
        }
        TangentSource::Motion | TangentSource::AgainstMotion => {
            let dq = path.eval(lambda.min(path.length()))?.dq;
            let v = projected.jacobian(node).fixed_rows::<3>(0) * dq;
            let t = Vector2::new(v[axes[0]], v[axes[1]]);
            if spec.tangent == TangentSource::AgainstMotion {
                -t
            } else {
                t
            }
        }
    };
    let norm = raw.norm();
    if !(norm > 1e-12) {
        return Err(Error::ZeroTangent { lambda });
    }
    Ok(raw / norm)
}

/// How the wrench torque range of a joint is derived from the bound pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    /// `(J_j^T h_lo, J_j^T h_hi)`: exact for wrenches on the segment joining
    /// the two bound vectors.
    #[default]
    Segment,
    /// Extremes over the whole box `h_lo <= h <= h_hi`, summing the
    /// per-component extremes.
    BoxCorner,
}

/// Torque range `(gamma_lo, gamma_hi)` needed at one joint to exert wrenches
/// within the bounds. In [`GammaMode::Segment`] the pair keeps the order of
/// its definition and `gamma_lo` may exceed `gamma_hi`.
pub fn gamma_bounds(
    column: &Vector6<f64>,
    lower: &Vector6<f64>,
    upper: &Vector6<f64>,
    mode: GammaMode,
) -> (f64, f64) {
    match mode {
        GammaMode::Segment => (column.dot(lower), column.dot(upper)),
        GammaMode::BoxCorner => (0..6).fold((0.0, 0.0), |(lo, hi), k| {
            let x = column[k] * lower[k];
            let y = column[k] * upper[k];
            (lo + x.min(y), hi + x.max(y))
        }),
    }
}

/// Effective per-joint torque limits along the path.
#[derive(Clone, Debug, PartialEq)]
pub struct ModifiedTorqueLimits {
    lambda: Vec<f64>,
    lower: Vec<DVector<f64>>,
    upper: Vec<DVector<f64>>,
    gamma_lower: Vec<DVector<f64>>,
    gamma_upper: Vec<DVector<f64>>,
}

/// `(lower, upper)` torque limits at one value of lambda.
#[derive(Clone, Debug, PartialEq)]
pub struct TorqueEnvelope {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

fn check_raw_limits(tau_lo: &DVector<f64>, tau_hi: &DVector<f64>) -> Result<()> {
    if tau_lo.len() != tau_hi.len() {
        return Err(Error::DimensionMismatch {
            what: "torque limits",
            expected: tau_lo.len(),
            found: tau_hi.len(),
        });
    }
    for j in 0..tau_lo.len() {
        if !(tau_lo[j] < tau_hi[j]) {
            return Err(Error::invalid(
                format!("torque limits of joint {}", j + 1),
                format!("need lower < upper, got [{}, {}]", tau_lo[j], tau_hi[j]),
            ));
        }
    }
    Ok(())
}

impl ModifiedTorqueLimits {
    /// Actuator limits unchanged along the whole grid; no wrench.
    pub fn raw(tau_lo: &DVector<f64>, tau_hi: &DVector<f64>, lambda: &[f64]) -> Result<Self> {
        check_raw_limits(tau_lo, tau_hi)?;
        let n = tau_lo.len();
        Ok(Self {
            lambda: lambda.to_vec(),
            lower: vec![tau_lo.clone(); lambda.len()],
            upper: vec![tau_hi.clone(); lambda.len()],
            gamma_lower: vec![DVector::zeros(n); lambda.len()],
            gamma_upper: vec![DVector::zeros(n); lambda.len()],
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lower(&self) -> &[DVector<f64>] {
        &self.lower
    }

    pub fn upper(&self) -> &[DVector<f64>] {
        &self.upper
    }

    /// Raw wrench torques, in definition order.
    pub fn gamma_lower(&self) -> &[DVector<f64>] {
        &self.gamma_lower
    }

    pub fn gamma_upper(&self) -> &[DVector<f64>] {
        &self.gamma_upper
    }

    pub fn dof(&self) -> usize {
        self.lower[0].len()
    }

    /// Linear interpolation between nodes (clamped to the grid).
    pub fn interpolate(&self, lambda: f64) -> TorqueEnvelope {
        let (i, s) = locate(&self.lambda, lambda);
        if s == 0.0 {
            return TorqueEnvelope {
                lower: self.lower[i].clone(),
                upper: self.upper[i].clone(),
            };
        }
        TorqueEnvelope {
            lower: &self.lower[i] * (1.0 - s) + &self.lower[i + 1] * s,
            upper: &self.upper[i] * (1.0 - s) + &self.upper[i + 1] * s,
        }
    }
}

/// Shifts the actuator limits by the extreme wrench torques at every node of
/// `projected`. Nodes where the shifted interval is empty are reported, never
/// clipped.
pub fn modified_torque_limits(
    tau_lo: &DVector<f64>,
    tau_hi: &DVector<f64>,
    profile: &WrenchProfile,
    projected: &ProjectedDynamics,
    mode: GammaMode,
) -> Result<ModifiedTorqueLimits> {
    check_raw_limits(tau_lo, tau_hi)?;
    let n = projected.dof();
    if tau_lo.len() != n {
        return Err(Error::DimensionMismatch {
            what: "torque limits vs model",
            expected: n,
            found: tau_lo.len(),
        });
    }
    let len = projected.len();
    let mut out = ModifiedTorqueLimits {
        lambda: projected.lambda().to_vec(),
        lower: Vec::with_capacity(len),
        upper: Vec::with_capacity(len),
        gamma_lower: Vec::with_capacity(len),
        gamma_upper: Vec::with_capacity(len),
    };
    let mut violations: Vec<(f64, usize, f64, f64)> = Vec::new();
    for (i, &lambda) in projected.lambda().iter().enumerate() {
        let (h_lo, h_hi) = profile.interpolate(lambda);
        let jac = projected.jacobian(i);
        let mut lo = DVector::zeros(n);
        let mut hi = DVector::zeros(n);
        let mut g_lo = DVector::zeros(n);
        let mut g_hi = DVector::zeros(n);
        for j in 0..n {
            let column: Vector6<f64> = jac.column(j).into();
            let (gl, gh) = gamma_bounds(&column, &h_lo, &h_hi, mode);
            g_lo[j] = gl;
            g_hi[j] = gh;
            lo[j] = tau_lo[j] - gl.min(gh);
            hi[j] = tau_hi[j] - gl.max(gh);
            if lo[j] > hi[j] {
                violations.push((lambda, j, lo[j], hi[j]));
            }
        }
        out.lower.push(lo);
        out.upper.push(hi);
        out.gamma_lower.push(g_lo);
        out.gamma_upper.push(g_hi);
    }
    if let Some(&(lambda, joint, lower, upper)) = violations.first() {
        return Err(Error::InfeasibleLimits {
            lambda,
            joint,
            lower,
            upper,
            count: violations.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parametrized_dynamics::project_dynamics;
    use crate::path::DiffScheme;
    use crate::robot_model::{Gravity, Planar2R, RobotModel};
    use nalgebra::Matrix6xX;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_setup() -> (PathSpec, ProjectedDynamics) {
        let model = RobotModel::Planar2R(
            Planar2R::uniform([0.5, 0.5], [1.0, 1.0], [0.0; 2], Gravity::OutOfPlane).unwrap(),
        );
        let lambda: Vec<f64> = (0..6).map(|i| i as f64 * 0.2).collect();
        let samples: Vec<_> = lambda
            .iter()
            .map(|&l| DVector::from_column_slice(&[0.3 + 0.5 * l, 1.2 - 0.4 * l]))
            .collect();
        let path = PathSpec::build(&lambda, &samples, DiffScheme::CubicSpline).unwrap();
        let projected = project_dynamics(&model, &path).unwrap();
        (path, projected)
    }

    fn contact(lo: f64, hi: f64, mu: f64, t: Vector2<f64>) -> ContactSpec {
        ContactSpec {
            normal_axis: 0,
            normal_lower: ForceBound::Constant(lo),
            normal_upper: ForceBound::Constant(hi),
            friction: mu,
            tangent: TangentSource::Explicit {
                lambda: vec![0.0],
                directions: vec![t],
            },
        }
    }

    #[test]
    fn frictionless_contact_is_normal_only() {
        let (path, projected) = line_setup();
        let mut spec = contact(1.0, 80.0, 0.0, Vector2::zeros());
        spec.tangent = TangentSource::Motion;
        let p = contact_wrench_bounds(&spec, &path, &projected).unwrap();
        for (lo, hi) in p.lower().iter().zip(p.upper()) {
            assert_eq!(*lo, Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
            assert_eq!(*hi, Vector6::new(80.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn tangential_bound_products() {
        let (path, projected) = line_setup();
        let p = contact_wrench_bounds(
            &contact(1.0, 80.0, 0.519, Vector2::new(1.0, 0.0)),
            &path,
            &projected,
        )
        .unwrap();
        assert!((p.upper()[0][1] - 41.52).abs() < 1e-12);
        assert_eq!(p.upper()[0][2], 0.0);
        let p = contact_wrench_bounds(
            &contact(1.0, 80.0, 0.519, Vector2::new(0.0, 1.0)),
            &path,
            &projected,
        )
        .unwrap();
        assert!((p.lower()[0][2] - 0.519).abs() < 1e-15);
    }

    #[test]
    fn motion_tangent_follows_end_effector_velocity() {
        let (path, projected) = line_setup();
        let spec = ContactSpec {
            normal_axis: 2,
            normal_lower: ForceBound::Constant(1.0),
            normal_upper: ForceBound::Constant(10.0),
            friction: 0.5,
            tangent: TangentSource::Motion,
        };
        let p = contact_wrench_bounds(&spec, &path, &projected).unwrap();
        for i in 0..path.len() {
            let v = projected.jacobian(i).fixed_rows::<3>(0) * &path.dq()[i];
            let t = Vector2::new(v[0], v[1]).normalize();
            let hi = p.upper()[i];
            assert!((hi[0] - 5.0 * t[0]).abs() < 1e-12 && (hi[1] - 5.0 * t[1]).abs() < 1e-12);
            assert_eq!(hi[2], 10.0);
        }
    }

    #[test]
    fn zero_tangent_is_an_error() {
        let (path, projected) = line_setup();
        let spec = contact(1.0, 80.0, 0.5, Vector2::zeros());
        assert!(matches!(
            contact_wrench_bounds(&spec, &path, &projected),
            Err(Error::ZeroTangent { .. })
        ));
    }

    #[test]
    fn gamma_examples() {
        let zero = Vector6::zeros();
        let col = Vector6::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(
            gamma_bounds(&col, &zero, &zero, GammaMode::Segment),
            (0.0, 0.0)
        );
        let lo = Vector6::new(1.0, 2.0, 0.0, 0.0, 0.0, 0.0);
        let hi = Vector6::new(80.0, 41.52, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(
            gamma_bounds(&col, &lo, &hi, GammaMode::Segment),
            (2.0, 41.52)
        );
        let neg = Vector6::new(0.0, -1.0, 0.0, 0.0, 0.0, 0.0);
        let (gl, gh) = gamma_bounds(&neg, &lo, &hi, GammaMode::Segment);
        assert!(gl > gh);
        assert_eq!((gl, gh), (-2.0, -41.52));
    }

    #[test]
    fn box_corner_contains_segment() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let col = Vector6::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let lo = Vector6::from_fn(|_, _| rng.gen_range(-5.0..0.0));
            let hi = lo + Vector6::from_fn(|_, _| rng.gen_range(0.0..5.0));
            let (sl, sh) = gamma_bounds(&col, &lo, &hi, GammaMode::Segment);
            let (bl, bh) = gamma_bounds(&col, &lo, &hi, GammaMode::BoxCorner);
            assert!(bl <= sl.min(sh) + 1e-12 && bh >= sl.max(sh) - 1e-12);
            // Box corners are realizable.
            for _ in 0..20 {
                let h = Vector6::from_fn(|k, _| rng.gen_range(lo[k]..=hi[k]));
                let g = col.dot(&h);
                assert!(bl - 1e-12 <= g && g <= bh + 1e-12);
            }
        }
    }

    #[test]
    fn segment_pairing_brackets_segment_wrenches() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let col = Vector6::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let lo = Vector6::from_fn(|_, _| rng.gen_range(-50.0..50.0));
            let hi = lo + Vector6::from_fn(|_, _| rng.gen_range(0.0..50.0));
            let (gl, gh) = gamma_bounds(&col, &lo, &hi, GammaMode::Segment);
            let s: f64 = rng.gen_range(0.0..=1.0);
            let h = lo * (1.0 - s) + hi * s;
            let g = col.dot(&h);
            assert!(gl.min(gh) - 1e-9 <= g && g <= gl.max(gh) + 1e-9);
        }
    }

    fn single_joint(col: [f64; 6], lambda: &[f64]) -> ProjectedDynamics {
        ProjectedDynamics::constant(lambda, &[1.0], &[0.0], &[0.0], &[0.0])
            .with_jacobian(vec![Matrix6xX::from_column_slice(&col); lambda.len()])
            .unwrap()
    }

    #[test]
    fn modified_limits_example() {
        let lambda = [0.0, 1.0];
        // gamma range [-5, 10] from a unit column and force bounds on x.
        let projected = single_joint([1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &lambda);
        let lo = Vector6::new(-5.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let hi = Vector6::new(10.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let profile = WrenchProfile::new(lambda.to_vec(), vec![lo; 2], vec![hi; 2]).unwrap();
        let limits = modified_torque_limits(
            &DVector::from_element(1, -80.0),
            &DVector::from_element(1, 80.0),
            &profile,
            &projected,
            GammaMode::Segment,
        )
        .unwrap();
        assert_eq!(limits.upper()[0][0], 70.0);
        assert_eq!(limits.lower()[0][0], -75.0);
    }

    #[test]
    fn zero_profile_reduces_to_raw_limits() {
        let (_, projected) = line_setup();
        let lo = DVector::from_column_slice(&[-30.0, -10.0]);
        let hi = DVector::from_column_slice(&[25.0, 12.0]);
        let modified = modified_torque_limits(
            &lo,
            &hi,
            &WrenchProfile::zero(projected.lambda()),
            &projected,
            GammaMode::Segment,
        )
        .unwrap();
        let raw = ModifiedTorqueLimits::raw(&lo, &hi, projected.lambda()).unwrap();
        assert_eq!(modified.lower(), raw.lower());
        assert_eq!(modified.upper(), raw.upper());
    }

    #[test]
    fn infeasible_node_is_reported() {
        let lambda = [0.0, 0.5, 1.0];
        let projected = single_joint([1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &lambda);
        // gamma in [-80, 90] against tau in [-80, 80]: the shifted interval
        // is [0, -10].
        let mut lo = vec![Vector6::zeros(); 3];
        let mut hi = vec![Vector6::zeros(); 3];
        lo[1][0] = -80.0;
        hi[1][0] = 90.0;
        let profile = WrenchProfile::new(lambda.to_vec(), lo, hi).unwrap();
        let err = modified_torque_limits(
            &DVector::from_element(1, -80.0),
            &DVector::from_element(1, 80.0),
            &profile,
            &projected,
            GammaMode::Segment,
        )
        .unwrap_err();
        match err {
            Error::InfeasibleLimits {
                lambda,
                joint,
                count,
                ..
            } => {
                assert_eq!((lambda, joint, count), (0.5, 0, 1));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn widening_the_wrench_interval_never_widens_torque_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lambda = [0.0, 1.0];
        for _ in 0..300 {
            let col: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let projected = single_joint(col, &lambda);
            let lo = Vector6::from_fn(|_, _| rng.gen_range(-5.0..0.0));
            let hi = lo + Vector6::from_fn(|_, _| rng.gen_range(0.0..5.0));
            let grow_lo = lo - Vector6::from_fn(|_, _| rng.gen_range(0.0..2.0));
            let grow_hi = hi + Vector6::from_fn(|_, _| rng.gen_range(0.0..2.0));
            for mode in [GammaMode::Segment, GammaMode::BoxCorner] {
                let eval = |l: Vector6<f64>, h: Vector6<f64>| {
                    let p = WrenchProfile::new(lambda.to_vec(), vec![l; 2], vec![h; 2]).unwrap();
                    modified_torque_limits(
                        &DVector::from_element(1, -100.0),
                        &DVector::from_element(1, 100.0),
                        &p,
                        &projected,
                        mode,
                    )
                    .unwrap()
                };
                let narrow = eval(lo, hi);
                let wide = eval(grow_lo, grow_hi);
                if mode == GammaMode::BoxCorner {
                    assert!(wide.upper()[0][0] <= narrow.upper()[0][0] + 1e-12);
                    assert!(wide.lower()[0][0] >= narrow.lower()[0][0] - 1e-12);
                }
                // Effective limits are monotone in the resolved gamma extremes.
                let (gl, gh) = (narrow.gamma_lower()[0][0], narrow.gamma_upper()[0][0]);
                assert_eq!(narrow.upper()[0][0], 100.0 - gl.max(gh));
                assert_eq!(narrow.lower()[0][0], -100.0 - gl.min(gh));
            }
        }
    }

    #[test]
    fn raw_limits_must_be_ordered() {
        assert!(ModifiedTorqueLimits::raw(
            &DVector::from_element(1, 1.0),
            &DVector::from_element(1, 1.0),
            &[0.0, 1.0]
        )
        .is_err());
    }

    #[test]
    fn profile_rejects_crossed_bounds() {
        let lo = Vector6::new(2.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(WrenchProfile::new(vec![0.0], vec![lo], vec![Vector6::zeros()]).is_err());
    }
}
