//! Dynamics projected onto the path coordinate:
//!
//! ```text
//! a(l) ldd + b(l) ld^2 + c(l) ld + g(l) = tau - J(l)^T h_e
//! ```
//!
//! with `a = B q'`, `b = B q'' + q'^T C q'`, `c = F q'`, `g = g(q)` and
//! `J = J(q)`, all sampled at the nodes of a lambda grid.

use std::io::{Read, Write};

use nalgebra::{DVector, Matrix6xX, Vector2};

use crate::error::{Error, Result};
use crate::io::{check_grid, locate, Table};
use crate::path::{PathPoint, PathSpec};
use crate::robot_model::RobotModel;

/// Coefficients at a single value of lambda.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsCoefficients {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub g: DVector<f64>,
    pub jacobian: Matrix6xX<f64>,
}

impl DynamicsCoefficients {
    /// Torque spent on motion, `a ldd + b ld^2 + c ld + g`.
    pub fn motion_torque(&self, speed: f64, accel: f64) -> DVector<f64> {
        &self.a * accel + &self.b * (speed * speed) + &self.c * speed + &self.g
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedDynamics {
    lambda: Vec<f64>,
    a: Vec<DVector<f64>>,
    b: Vec<DVector<f64>>,
    c: Vec<DVector<f64>>,
    g: Vec<DVector<f64>>,
    jacobian: Vec<Matrix6xX<f64>>,
}

impl ProjectedDynamics {
    pub fn from_tables(
        lambda: Vec<f64>,
        a: Vec<DVector<f64>>,
        b: Vec<DVector<f64>>,
        c: Vec<DVector<f64>>,
        g: Vec<DVector<f64>>,
        jacobian: Vec<Matrix6xX<f64>>,
    ) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::TooFewSamples {
                found: 0,
                required: 1,
            });
        }
        check_grid(&lambda)?;
        let n = a[0].len();
        if n == 0 {
            return Err(Error::invalid("projected dynamics", "zero joints"));
        }
        for (what, table) in [("a", &a), ("b", &b), ("c", &c), ("g", &g)] {
            if table.len() != lambda.len() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: lambda.len(),
                    found: table.len(),
                });
            }
            if let Some(bad) = table.iter().find(|v| v.len() != n) {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: bad.len(),
                });
            }
        }
        if jacobian.len() != lambda.len() {
            return Err(Error::DimensionMismatch {
                what: "J",
                expected: lambda.len(),
                found: jacobian.len(),
            });
        }
        if let Some(bad) = jacobian.iter().find(|j| j.ncols() != n) {
            return Err(Error::DimensionMismatch {
                what: "J",
                expected: n,
                found: bad.ncols(),
            });
        }
        Ok(Self {
            lambda,
            a,
            b,
            c,
            g,
            jacobian,
        })
    }

    /// Same coefficients at every node and a zero Jacobian.
    pub fn constant(lambda: &[f64], a: &[f64], b: &[f64], c: &[f64], g: &[f64]) -> Self {
        let n = a.len();
        let rep = |v: &[f64]| vec![DVector::from_column_slice(v); lambda.len()];
        Self::from_tables(
            lambda.to_vec(),
            rep(a),
            rep(b),
            rep(c),
            rep(g),
            vec![Matrix6xX::zeros(n); lambda.len()],
        )
        .expect("constant tables are consistent")
    }

    /// Replaces the Jacobian at every node.
    pub fn with_jacobian(mut self, jacobian: Vec<Matrix6xX<f64>>) -> Result<Self> {
        if jacobian.len() != self.lambda.len() {
            return Err(Error::DimensionMismatch {
                what: "J",
                expected: self.lambda.len(),
                found: jacobian.len(),
            });
        }
        self.jacobian = jacobian;
        Ok(self)
    }

    pub fn dof(&self) -> usize {
        self.a[0].len()
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn length(&self) -> f64 {
        *self.lambda.last().unwrap()
    }

    pub fn node(&self, i: usize) -> DynamicsCoefficients {
        DynamicsCoefficients {
            a: self.a[i].clone(),
            b: self.b[i].clone(),
            c: self.c[i].clone(),
            g: self.g[i].clone(),
            jacobian: self.jacobian[i].clone(),
        }
    }

    pub fn jacobian(&self, i: usize) -> &Matrix6xX<f64> {
        &self.jacobian[i]
    }

    /// Linear interpolation between nodes; `lambda` is clamped to the grid.
    pub fn interpolate(&self, lambda: f64) -> DynamicsCoefficients {
        let (i, s) = locate(&self.lambda, lambda);
        if s == 0.0 {
            return self.node(i);
        }
        let mix = |v: &[DVector<f64>]| &v[i] * (1.0 - s) + &v[i + 1] * s;
        DynamicsCoefficients {
            a: mix(&self.a),
            b: mix(&self.b),
            c: mix(&self.c),
            g: mix(&self.g),
            jacobian: &self.jacobian[i] * (1.0 - s) + &self.jacobian[i + 1] * s,
        }
    }

    fn headers(n: usize) -> Vec<String> {
        let mut h = vec!["lambda".to_string()];
        for name in ["a", "b", "c", "g"] {
            h.extend((1..=n).map(|j| format!("{name}_{j}")));
        }
        for r in 1..=6 {
            h.extend((1..=n).map(|j| format!("J_{r}{j}")));
        }
        h
    }

    /// Sampled-model table: `lambda, a_1..a_n, b_1..b_n, c_1..c_n, g_1..g_n,
    /// J_11..J_6n`, Jacobian entries row-major.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.dof();
        let mut table = Table::new(Self::headers(n));
        for i in 0..self.len() {
            let mut row = Vec::with_capacity(1 + 10 * n);
            row.push(self.lambda[i]);
            for v in [&self.a[i], &self.b[i], &self.c[i], &self.g[i]] {
                row.extend(v.iter());
            }
            let j = &self.jacobian[i];
            for r in 0..6 {
                row.extend((0..n).map(|col| j[(r, col)]));
            }
            table.push(row);
        }
        table.write(writer)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let table = Table::read(reader)?;
        let cols = table.headers.len();
        if cols < 11 || (cols - 1) % 10 != 0 {
            return Err(Error::invalid(
                "dynamics table",
                format!("{cols} columns; expected 1 + 10 n"),
            ));
        }
        let n = (cols - 1) / 10;
        let expected = Self::headers(n);
        if let Some((got, want)) = table
            .headers
            .iter()
            .zip(&expected)
            .find(|(got, want)| !got.eq_ignore_ascii_case(want))
        {
            return Err(Error::invalid(
                "dynamics table",
                format!("header `{got}` where `{want}` was expected"),
            ));
        }
        let lambda = table.column(0).collect();
        let block =
            |row: &[f64], k: usize| DVector::from_column_slice(&row[1 + k * n..1 + (k + 1) * n]);
        let a = table.rows.iter().map(|r| block(r, 0)).collect();
        let b = table.rows.iter().map(|r| block(r, 1)).collect();
        let c = table.rows.iter().map(|r| block(r, 2)).collect();
        let g = table.rows.iter().map(|r| block(r, 3)).collect();
        let jacobian = table
            .rows
            .iter()
            .map(|r| Matrix6xX::from_row_slice(&r[1 + 4 * n..]))
            .collect();
        Self::from_tables(lambda, a, b, c, g, jacobian)
    }
}

/// Projected coefficients of an analytic model at one path point.
pub fn project_point(model: &RobotModel, point: &PathPoint) -> Result<DynamicsCoefficients> {
    let arm = model.analytic("pointwise projection")?;
    if point.q.len() != 2 {
        return Err(Error::DimensionMismatch {
            what: "path joints vs model",
            expected: 2,
            found: point.q.len(),
        });
    }
    let q = Vector2::new(point.q[0], point.q[1]);
    let dq = Vector2::new(point.dq[0], point.dq[1]);
    let ddq = Vector2::new(point.ddq[0], point.ddq[1]);
    let inertia = arm.inertia_matrix(&q);
    let to_dv = |v: Vector2<f64>| DVector::from_column_slice(v.as_slice());
    Ok(DynamicsCoefficients {
        a: to_dv(inertia * dq),
        b: to_dv(inertia * ddq + arm.coriolis_vector(&q, &dq)),
        c: to_dv(arm.friction_matrix() * dq),
        g: to_dv(arm.gravity_vector(&q)),
        jacobian: arm.jacobian(&q),
    })
}

/// Evaluates the projected coefficients at every node of `path`. A sampled
/// model already carries its tables, which are returned unchanged.
pub fn project_dynamics(model: &RobotModel, path: &PathSpec) -> Result<ProjectedDynamics> {
    if let RobotModel::Sampled(table) = model {
        return Ok(table.clone());
    }
    let n = path.len();
    let (mut a, mut b, mut c, mut g, mut jac) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n {
        let k = project_point(model, &path.node(i))?;
        a.push(k.a);
        b.push(k.b);
        c.push(k.c);
        g.push(k.g);
        jac.push(k.jacobian);
    }
    ProjectedDynamics::from_tables(path.lambda().to_vec(), a, b, c, g, jac)
}
