//! Geometric joint paths `q(lambda)` and their first and second derivatives
//! with respect to the path coordinate.

use std::io::Read;

use nalgebra::{DVector, Vector2};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::{check_grid, locate, Table};
use crate::robot_model::{Planar2R, RobotModel};

/// How `q'` and `q''` are obtained from the samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    /// Natural cubic spline per joint; evaluation between nodes follows the
    /// spline.
    #[default]
    CubicSpline,
    /// Three-point differences (one-sided second order at the ends);
    /// evaluation between nodes is linear.
    CentralDifference,
}

/// Path sample at one value of lambda.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPoint {
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
    pub ddq: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct PathSpec {
    lambda: Vec<f64>,
    q: Vec<DVector<f64>>,
    dq: Vec<DVector<f64>>,
    ddq: Vec<DVector<f64>>,
    scheme: DiffScheme,
}

pub const MIN_PATH_SAMPLES: usize = 4;

impl PathSpec {
    /// Differentiates joint samples taken on `lambda`.
    pub fn build(lambda: &[f64], samples: &[DVector<f64>], scheme: DiffScheme) -> Result<Self> {
        if lambda.len() != samples.len() {
            return Err(Error::DimensionMismatch {
                what: "path samples",
                expected: lambda.len(),
                found: samples.len(),
            });
        }
        if lambda.len() < MIN_PATH_SAMPLES {
            return Err(Error::TooFewSamples {
                found: lambda.len(),
                required: MIN_PATH_SAMPLES,
            });
        }
        check_grid(lambda)?;
        let dof = samples[0].len();
        if dof == 0 {
            return Err(Error::invalid("path", "joint vectors are empty"));
        }
        if let Some(bad) = samples.iter().find(|s| s.len() != dof) {
            return Err(Error::DimensionMismatch {
                what: "path sample",
                expected: dof,
                found: bad.len(),
            });
        }
        let n = lambda.len();
        let mut dq = vec![DVector::zeros(dof); n];
        let mut ddq = vec![DVector::zeros(dof); n];
        for j in 0..dof {
            let y: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            let (d1, d2) = match scheme {
                DiffScheme::CubicSpline => spline_derivatives(lambda, &y),
                DiffScheme::CentralDifference => difference_derivatives(lambda, &y),
            };
            for i in 0..n {
                dq[i][j] = d1[i];
                ddq[i][j] = d2[i];
            }
        }
        Ok(Self {
            lambda: lambda.to_vec(),
            q: samples.to_vec(),
            dq,
            ddq,
            scheme,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Total path length.
    pub fn length(&self) -> f64 {
        *self.lambda.last().unwrap()
    }

    pub fn dof(&self) -> usize {
        self.q[0].len()
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn node(&self, i: usize) -> PathPoint {
        PathPoint {
            q: self.q[i].clone(),
            dq: self.dq[i].clone(),
            ddq: self.ddq[i].clone(),
        }
    }

    pub fn q(&self) -> &[DVector<f64>] {
        &self.q
    }

    pub fn dq(&self) -> &[DVector<f64>] {
        &self.dq
    }

    pub fn ddq(&self) -> &[DVector<f64>] {
        &self.ddq
    }

    /// Interpolated `(q, q', q'')` at `lambda`. Grid nodes return the stored
    /// samples exactly.
    pub fn eval(&self, lambda: f64) -> Result<PathPoint> {
        let end = self.length();
        if !(0.0..=end).contains(&lambda) {
            return Err(Error::OutOfRange {
                lambda,
                min: 0.0,
                max: end,
            });
        }
        let (i, s) = locate(&self.lambda, lambda);
        if s == 0.0 {
            return Ok(self.node(i));
        }
        Ok(match self.scheme {
            DiffScheme::CentralDifference => PathPoint {
                q: lerp(&self.q[i], &self.q[i + 1], s),
                dq: lerp(&self.dq[i], &self.dq[i + 1], s),
                ddq: lerp(&self.ddq[i], &self.ddq[i + 1], s),
            },
            DiffScheme::CubicSpline => {
                let h = self.lambda[i + 1] - self.lambda[i];
                let b = s;
                let a = 1.0 - s;
                let (y0, y1) = (&self.q[i], &self.q[i + 1]);
                let (m0, m1) = (&self.ddq[i], &self.ddq[i + 1]);
                let q =
                    y0 * a + y1 * b + (m0 * (a * a * a - a) + m1 * (b * b * b - b)) * (h * h / 6.0);
                let dq = (y1 - y0) / h - m0 * ((3.0 * a * a - 1.0) * h / 6.0)
                    + m1 * ((3.0 * b * b - 1.0) * h / 6.0);
                let ddq = m0 * a + m1 * b;
                PathPoint { q, dq, ddq }
            }
        })
    }

    /// Reads a joint path CSV with columns `lambda, q_1..q_n`.
    pub fn read_csv<R: Read>(reader: R, scheme: DiffScheme) -> Result<Self> {
        let table = Table::read(reader)?;
        if table.headers.len() < 2 {
            return Err(Error::invalid(
                "path file",
                "expected columns lambda, q_1..q_n",
            ));
        }
        let lambda: Vec<f64> = table.column(0).collect();
        let samples: Vec<DVector<f64>> = table
            .rows
            .iter()
            .map(|r| DVector::from_column_slice(&r[1..]))
            .collect();
        Self::build(&lambda, &samples, scheme)
    }
}

fn lerp(a: &DVector<f64>, b: &DVector<f64>, s: f64) -> DVector<f64> {
    a * (1.0 - s) + b * s
}

/// Natural cubic spline: returns `(y', y'')` at the nodes.
fn spline_derivatives(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    // Tridiagonal system for interior second derivatives; M_0 = M_{n-1} = 0.
    let m_int = n - 2;
    let mut diag = vec![0.0; m_int];
    let mut upper = vec![0.0; m_int];
    let mut lower = vec![0.0; m_int];
    let mut rhs = vec![0.0; m_int];
    for k in 0..m_int {
        let i = k + 1;
        lower[k] = h[i - 1];
        diag[k] = 2.0 * (h[i - 1] + h[i]);
        upper[k] = h[i];
        rhs[k] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    // Thomas algorithm.
    for k in 1..m_int {
        let w = lower[k] / diag[k - 1];
        diag[k] -= w * upper[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    let mut m = vec![0.0; n];
    for k in (0..m_int).rev() {
        let next = if k + 1 < m_int { m[k + 2] } else { 0.0 };
        m[k + 1] = (rhs[k] - upper[k] * next) / diag[k];
    }
    let mut d1 = vec![0.0; n];
    for i in 0..n - 1 {
        d1[i] = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    }
    let last = n - 2;
    d1[n - 1] = (y[n - 1] - y[last]) / h[last] + h[last] * (m[last] + 2.0 * m[n - 1]) / 6.0;
    (d1, m)
}

/// First and second derivative at `x` of the interpolating polynomial
/// through `(xs, ys)`.
fn lagrange_derivatives(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64) {
    let k = xs.len();
    let (mut d1, mut d2) = (0.0, 0.0);
    for j in 0..k {
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for a in (0..k).filter(|&a| a != j) {
            let mut p1 = 1.0 / (xs[j] - xs[a]);
            for m in (0..k).filter(|&m| m != j && m != a) {
                p1 *= (x - xs[m]) / (xs[j] - xs[m]);
            }
            l1 += p1;
            for b in (0..k).filter(|&b| b != j && b != a) {
                let mut p2 = 1.0 / ((xs[j] - xs[a]) * (xs[j] - xs[b]));
                for m in (0..k).filter(|&m| m != j && m != a && m != b) {
                    p2 *= (x - xs[m]) / (xs[j] - xs[m]);
                }
                l2 += p2;
            }
        }
        d1 += ys[j] * l1;
        d2 += ys[j] * l2;
    }
    (d1, d2)
}

fn difference_derivatives(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = lagrange_derivatives(&x[i - 1..=i + 1], &y[i - 1..=i + 1], x[i]);
        d1[i] = a;
        d2[i] = b;
    }
    d1[0] = lagrange_derivatives(&x[..3], &y[..3], x[0]).0;
    d2[0] = lagrange_derivatives(&x[..4], &y[..4], x[0]).1;
    d1[n - 1] = lagrange_derivatives(&x[n - 3..], &y[n - 3..], x[n - 1]).0;
    d2[n - 1] = lagrange_derivatives(&x[n - 4..], &y[n - 4..], x[n - 1]).1;
    (d1, d2)
}

/// Planar end-effector path `x(lambda)`, base `x`-`y` plane coordinates.
#[derive(Clone, Debug)]
pub struct TaskPath {
    pub lambda: Vec<f64>,
    pub points: Vec<Vector2<f64>>,
}

impl TaskPath {
    pub fn new(lambda: Vec<f64>, points: Vec<Vector2<f64>>) -> Result<Self> {
        if lambda.len() != points.len() {
            return Err(Error::DimensionMismatch {
                what: "task path",
                expected: lambda.len(),
                found: points.len(),
            });
        }
        check_grid(&lambda)?;
        Ok(Self { lambda, points })
    }

    /// Reads a task path CSV with columns `lambda, x, y`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let table = Table::read(reader)?;
        if table.headers.len() != 3 {
            return Err(Error::invalid(
                "task path file",
                "expected columns lambda, x, y",
            ));
        }
        let lambda = table.column(0).collect();
        let points = table
            .rows
            .iter()
            .map(|r| Vector2::new(r[1], r[2]))
            .collect();
        Self::new(lambda, points)
    }
}

/// Elbow configuration of the planar 2R inverse kinematics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowBranch {
    /// `q2 >= 0`.
    #[default]
    Up,
    /// `q2 <= 0`.
    Down,
}

/// Poses closer than this to the workspace boundary are projected onto it.
const BOUNDARY_TOL: f64 = 1e-12;

/// Inverse kinematics of a 2R arm along a task path on a single elbow branch.
/// `q1` is unwrapped so consecutive samples never jump by `2 pi`.
pub fn planar_ik(
    task: &TaskPath,
    model: &RobotModel,
    branch: ElbowBranch,
) -> Result<Vec<DVector<f64>>> {
    let arm = model.analytic("planar_ik")?;
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(task.points.len());
    for (index, p) in task.points.iter().enumerate() {
        let (q1, q2) = ik_point(arm, p, branch).ok_or(Error::Unreachable {
            index,
            distance: p.norm(),
        })?;
        let q1 = match out.last() {
            Some(prev) => unwrap_angle(prev[0], q1),
            None => q1,
        };
        out.push(DVector::from_column_slice(&[q1, q2]));
    }
    Ok(out)
}

fn ik_point(arm: &Planar2R, p: &Vector2<f64>, branch: ElbowBranch) -> Option<(f64, f64)> {
    let [l1, l2] = arm.link_lengths;
    let c2 = (p.norm_squared() - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !(c2.abs() <= 1.0 + BOUNDARY_TOL) {
        return None;
    }
    let c2 = c2.clamp(-1.0, 1.0);
    let s2 = match branch {
        ElbowBranch::Up => (1.0 - c2 * c2).sqrt(),
        ElbowBranch::Down => -(1.0 - c2 * c2).sqrt(),
    };
    let q2 = s2.atan2(c2);
    let q1 = p[1].atan2(p[0]) - (l2 * s2).atan2(l1 + l2 * c2);
    Some((q1, q2))
}

fn unwrap_angle(prev: f64, next: f64) -> f64 {
    use std::f64::consts::TAU;
    next - ((next - prev) / TAU).round() * TAU
}
