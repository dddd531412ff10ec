//! Manipulator models and the joint-space equation of motion
//!
//! ```text
//! tau = B(q) qdd + qd^T C(q) qd + F qd + g(q) + J(q)^T h_e
//! ```
//!
//! Two kinds of model exist: an analytic planar two-link arm, which can be
//! evaluated at any configuration, and a sampled model that only carries the
//! path-projected coefficient tables of some external robot.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Matrix2, Matrix6xX, Vector2, Vector3, Vector6};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::parametrized_dynamics::ProjectedDynamics;

/// Force and moment exerted by the end-effector on the environment, in the
/// base frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_force(force: Vector3<f64>) -> Self {
        Self {
            force,
            moment: Vector3::zeros(),
        }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            force: v.fixed_rows::<3>(0).into(),
            moment: v.fixed_rows::<3>(3).into(),
        }
    }

    /// Stacked `(f, m)`.
    pub fn to_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.force);
        v.fixed_rows_mut::<3>(3).copy_from(&self.moment);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.force
            .iter()
            .chain(self.moment.iter())
            .all(|x| x.is_finite())
    }
}

/// Direction of gravity relative to the plane of motion of the 2R arm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gravity {
    /// Gravity acts along `-y` of the base frame, inside the plane of motion.
    InPlane,
    /// Gravity is normal to the plane of motion and produces no joint torque.
    OutOfPlane,
}

/// Planar arm with two revolute joints whose axes are parallel to the base
/// `z` axis. The arm moves in the base `x`-`y` plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Planar2R {
    pub link_lengths: [f64; 2],
    pub masses: [f64; 2],
    /// Distance of each link's centre of mass from its proximal joint.
    pub com_offsets: [f64; 2],
    /// Link inertias about the centre of mass.
    pub inertias: [f64; 2],
    /// Viscous friction coefficients.
    pub friction: [f64; 2],
    pub gravity_accel: f64,
    pub gravity: Gravity,
}

impl Planar2R {
    pub fn new(
        link_lengths: [f64; 2],
        masses: [f64; 2],
        com_offsets: [f64; 2],
        inertias: [f64; 2],
        friction: [f64; 2],
        gravity_accel: f64,
        gravity: Gravity,
    ) -> Result<Self> {
        let model = Self {
            link_lengths,
            masses,
            com_offsets,
            inertias,
            friction,
            gravity_accel,
            gravity,
        };
        model.validate()?;
        Ok(model)
    }

    /// Uniform slender links with the centre of mass at mid-link.
    pub fn uniform(
        link_lengths: [f64; 2],
        masses: [f64; 2],
        friction: [f64; 2],
        gravity: Gravity,
    ) -> Result<Self> {
        let com = [link_lengths[0] / 2.0, link_lengths[1] / 2.0];
        let inertia = [
            masses[0] * link_lengths[0].powi(2) / 12.0,
            masses[1] * link_lengths[1].powi(2) / 12.0,
        ];
        Self::new(link_lengths, masses, com, inertia, friction, 9.81, gravity)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("link_lengths", &self.link_lengths),
            ("masses", &self.masses),
            ("com_offsets", &self.com_offsets),
            ("inertias", &self.inertias),
        ];
        for (name, values) in positive {
            for (i, v) in values.iter().enumerate() {
                if !(v.is_finite() && *v > 0.0) {
                    return Err(Error::invalid(
                        format!("{name}[{i}]"),
                        format!("must be strictly positive, got {v}"),
                    ));
                }
            }
        }
        for (i, v) in self.friction.iter().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::invalid(
                    format!("friction[{i}]"),
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        if !(self.gravity_accel.is_finite() && self.gravity_accel >= 0.0) {
            return Err(Error::invalid("gravity", "must be non-negative"));
        }
        Ok(())
    }

    pub fn inertia_matrix(&self, q: &Vector2<f64>) -> Matrix2<f64> {
        let [l1, _] = self.link_lengths;
        let [m1, m2] = self.masses;
        let [r1, r2] = self.com_offsets;
        let [i1, i2] = self.inertias;
        let c2 = q[1].cos();
        let b11 = i1 + m1 * r1 * r1 + i2 + m2 * (l1 * l1 + r2 * r2 + 2.0 * l1 * r2 * c2);
        let b12 = i2 + m2 * (r2 * r2 + l1 * r2 * c2);
        let b22 = i2 + m2 * r2 * r2;
        Matrix2::new(b11, b12, b12, b22)
    }

    /// `dB/dq_k` for k = 0, 1.
    fn inertia_partials(&self, q: &Vector2<f64>) -> [Matrix2<f64>; 2] {
        let h = self.masses[1] * self.link_lengths[0] * self.com_offsets[1] * q[1].sin();
        [Matrix2::zeros(), Matrix2::new(-2.0 * h, -h, -h, 0.0)]
    }

    /// Christoffel symbols of the first kind, `c[i][j][k]`.
    pub fn christoffel(&self, q: &Vector2<f64>) -> [[[f64; 2]; 2]; 2] {
        let db = self.inertia_partials(q);
        let mut c = [[[0.0; 2]; 2]; 2];
        for (i, ci) in c.iter_mut().enumerate() {
            for (j, cij) in ci.iter_mut().enumerate() {
                for (k, cijk) in cij.iter_mut().enumerate() {
                    *cijk = 0.5 * (db[k][(i, j)] + db[j][(i, k)] - db[i][(j, k)]);
                }
            }
        }
        c
    }

    /// `C(q, qd)` with `C_ij = sum_k c_ijk qd_k`, so that `dB/dt - 2C` is
    /// skew-symmetric.
    pub fn coriolis_matrix(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> Matrix2<f64> {
        let c = self.christoffel(q);
        Matrix2::from_fn(|i, j| c[i][j][0] * qd[0] + c[i][j][1] * qd[1])
    }

    pub fn coriolis_vector(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> Vector2<f64> {
        self.coriolis_matrix(q, qd) * qd
    }

    pub fn gravity_vector(&self, q: &Vector2<f64>) -> Vector2<f64> {
        match self.gravity {
            Gravity::OutOfPlane => Vector2::zeros(),
            Gravity::InPlane => {
                let [l1, _] = self.link_lengths;
                let [m1, m2] = self.masses;
                let [r1, r2] = self.com_offsets;
                let g0 = self.gravity_accel;
                let c1 = q[0].cos();
                let c12 = (q[0] + q[1]).cos();
                Vector2::new(
                    g0 * (m1 * r1 * c1 + m2 * (l1 * c1 + r2 * c12)),
                    g0 * m2 * r2 * c12,
                )
            }
        }
    }

    pub fn friction_matrix(&self) -> Matrix2<f64> {
        Matrix2::from_diagonal(&Vector2::from(self.friction))
    }

    /// End-effector position in the plane of motion.
    pub fn forward_kinematics(&self, q: &Vector2<f64>) -> Vector2<f64> {
        let [l1, l2] = self.link_lengths;
        let q12 = q[0] + q[1];
        Vector2::new(
            l1 * q[0].cos() + l2 * q12.cos(),
            l1 * q[0].sin() + l2 * q12.sin(),
        )
    }

    /// Geometric Jacobian; rows are `(v_x, v_y, v_z, w_x, w_y, w_z)`.
    pub fn jacobian(&self, q: &Vector2<f64>) -> Matrix6xX<f64> {
        let [l1, l2] = self.link_lengths;
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let mut j = Matrix6xX::zeros(2);
        j[(0, 0)] = -l1 * s1 - l2 * s12;
        j[(1, 0)] = l1 * c1 + l2 * c12;
        j[(5, 0)] = 1.0;
        j[(0, 1)] = -l2 * s12;
        j[(1, 1)] = l2 * c12;
        j[(5, 1)] = 1.0;
        j
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths[0] + self.link_lengths[1]
    }
}

#[derive(Clone, Debug)]
pub enum RobotModel {
    Planar2R(Planar2R),
    /// Projected coefficient tables of an externally modelled robot.
    Sampled(ProjectedDynamics),
}

fn as_vector2(v: &DVector<f64>, what: &'static str) -> Result<Vector2<f64>> {
    if v.len() != 2 {
        return Err(Error::DimensionMismatch {
            what,
            expected: 2,
            found: v.len(),
        });
    }
    Ok(Vector2::new(v[0], v[1]))
}

impl RobotModel {
    pub fn dof(&self) -> usize {
        match self {
            RobotModel::Planar2R(_) => 2,
            RobotModel::Sampled(table) => table.dof(),
        }
    }

    pub fn analytic(&self, op: &'static str) -> Result<&Planar2R> {
        match self {
            RobotModel::Planar2R(arm) => Ok(arm),
            RobotModel::Sampled(_) => Err(Error::SampledModel(op)),
        }
    }

    /// Joint torques required to follow `(q, qd, qdd)` while exerting `wrench`.
    pub fn eval_dynamics(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        qdd: &DVector<f64>,
        wrench: &Wrench,
    ) -> Result<DVector<f64>> {
        let arm = self.analytic("eval_dynamics")?;
        let q = as_vector2(q, "q")?;
        let qd = as_vector2(qd, "qd")?;
        let qdd = as_vector2(qdd, "qdd")?;
        let tau = arm.inertia_matrix(&q) * qdd
            + arm.coriolis_vector(&q, &qd)
            + arm.friction_matrix() * qd
            + arm.gravity_vector(&q)
            + arm.jacobian(&q).transpose() * wrench.to_vector();
        Ok(DVector::from_column_slice(tau.as_slice()))
    }

    pub fn eval_jacobian(&self, q: &DVector<f64>) -> Result<Matrix6xX<f64>> {
        let arm = self.analytic("eval_jacobian")?;
        Ok(arm.jacobian(&as_vector2(q, "q")?))
    }

    pub fn inertia_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let arm = self.analytic("inertia_matrix")?;
        let b = arm.inertia_matrix(&as_vector2(q, "q")?);
        Ok(DMatrix::from_column_slice(2, 2, b.as_slice()))
    }

    /// `qd^T C(q) qd`.
    pub fn coriolis_vector(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
        let arm = self.analytic("coriolis_vector")?;
        let v = arm.coriolis_vector(&as_vector2(q, "q")?, &as_vector2(qd, "qd")?);
        Ok(DVector::from_column_slice(v.as_slice()))
    }

    pub fn gravity_vector(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let arm = self.analytic("gravity_vector")?;
        let v = arm.gravity_vector(&as_vector2(q, "q")?);
        Ok(DVector::from_column_slice(v.as_slice()))
    }

    pub fn friction_matrix(&self) -> Result<DMatrix<f64>> {
        let arm = self.analytic("friction_matrix")?;
        Ok(DMatrix::from_diagonal(&DVector::from_column_slice(
            &arm.friction,
        )))
    }
}

/// Model description as it appears in a run config.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "planar_2r")]
    Planar2R {
        link_lengths: [f64; 2],
        masses: [f64; 2],
        com_offsets: [f64; 2],
        inertias: [f64; 2],
        #[serde(default)]
        friction: [f64; 2],
        #[serde(default = "default_gravity_accel")]
        gravity_accel: f64,
        #[serde(default = "default_gravity")]
        gravity: Gravity,
    },
    /// CSV table with columns `lambda, a_1..a_n, b_1..b_n, c_1..c_n,
    /// g_1..g_n, J_11..J_6n` (Jacobian row-major).
    Sampled { table: PathBuf },
}

fn default_gravity_accel() -> f64 {
    9.81
}

fn default_gravity() -> Gravity {
    Gravity::OutOfPlane
}

impl ModelSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("model", e.message()))
    }
}

/// Builds a validated model. Relative table paths are resolved against
/// `base_dir`.
pub fn load_model(spec: &ModelSpec, base_dir: &Path) -> Result<RobotModel> {
    match spec {
        ModelSpec::Planar2R {
            link_lengths,
            masses,
            com_offsets,
            inertias,
            friction,
            gravity_accel,
            gravity,
        } => Ok(RobotModel::Planar2R(Planar2R::new(
            *link_lengths,
            *masses,
            *com_offsets,
            *inertias,
            *friction,
            *gravity_accel,
            *gravity,
        )?)),
        ModelSpec::Sampled { table } => {
            let path = base_dir.join(table);
            let file = std::fs::File::open(&path)
                .map_err(|e| Error::config("model.table", format!("{}: {e}", path.display())))?;
            Ok(RobotModel::Sampled(ProjectedDynamics::read_csv(file)?))
        }
    }
}
