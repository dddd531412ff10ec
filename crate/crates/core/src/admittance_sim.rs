//! Translational admittance control against a unilateral spring environment,
//! with the inner position loop idealized (`x_m = x_c`).
//!
//! Per axis the compliant displacement `z` obeys
//! `M z'' + K_D z' + K_P z = h_e - h_d` and the commanded position is
//! `x_c = x_d - z`. `h_e` is the force the end effector exerts on the
//! environment, measured one control period late.

use nalgebra::{Vector3, Vector6};

use crate::dp_planner::JointTrajectory;
use crate::error::{Error, Result};
use crate::io::Table;
use crate::robot_model::{RobotModel, Wrench};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmittanceParams {
    mass: Vector3<f64>,
    damping: Vector3<f64>,
    stiffness: Vector3<f64>,
    desired: Vector3<f64>,
}

impl AdmittanceParams {
    pub fn new(
        mass: Vector3<f64>,
        damping: Vector3<f64>,
        stiffness: Vector3<f64>,
        desired: Vector3<f64>,
    ) -> Result<Self> {
        for (name, v) in [
            ("mass", mass),
            ("damping", damping),
            ("stiffness", stiffness),
        ] {
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::invalid(name, "diagonal entries must be positive"));
            }
        }
        if desired.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("desired_force", "must be finite"));
        }
        Ok(Self {
            mass,
            damping,
            stiffness,
            desired,
        })
    }

    /// Stiff in-plane axes and a soft normal axis pressing with `force`
    /// along `normal_axis`.
    pub fn writing_tuning(normal_axis: usize, force: f64) -> Self {
        let mut mass = Vector3::repeat(0.1);
        let mut damping = Vector3::repeat(300.0);
        let mut stiffness = Vector3::repeat(5500.0);
        let mut desired = Vector3::zeros();
        mass[normal_axis] = 0.02;
        damping[normal_axis] = 1200.0;
        stiffness[normal_axis] = 625.0;
        desired[normal_axis] = force;
        Self {
            mass,
            damping,
            stiffness,
            desired,
        }
    }

    pub fn mass(&self) -> &Vector3<f64> {
        &self.mass
    }

    pub fn damping(&self) -> &Vector3<f64> {
        &self.damping
    }

    pub fn stiffness(&self) -> &Vector3<f64> {
        &self.stiffness
    }

    pub fn desired(&self) -> &Vector3<f64> {
        &self.desired
    }
}

/// Flat compliant surface. The end effector penetrates it by moving along
/// `+normal_axis` past `rest`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvironmentModel {
    pub normal_axis: usize,
    pub rest: f64,
    pub stiffness: f64,
    pub friction: f64,
}

impl EnvironmentModel {
    pub fn new(normal_axis: usize, rest: f64, stiffness: f64, friction: f64) -> Result<Self> {
        if normal_axis > 2 {
            return Err(Error::invalid("normal_axis", "must be 0, 1 or 2"));
        }
        if !(stiffness.is_finite() && stiffness > 0.0) {
            return Err(Error::invalid("contact_stiffness", "must be positive"));
        }
        if !(friction.is_finite() && friction >= 0.0) {
            return Err(Error::invalid("friction", "must be non-negative"));
        }
        Ok(Self {
            normal_axis,
            rest,
            stiffness,
            friction,
        })
    }

    pub fn penetration(&self, position: &Vector3<f64>) -> f64 {
        (position[self.normal_axis] - self.rest).max(0.0)
    }
}

/// Force the end effector at `position`, moving with `velocity`, exerts on
/// the environment. The normal part is the spring force; the tangential part
/// is the sliding friction the robot has to supply, so it points along the
/// tangential velocity (its reaction on the end effector opposes motion).
pub fn contact_force(
    env: &EnvironmentModel,
    position: &Vector3<f64>,
    velocity: &Vector3<f64>,
) -> Wrench {
    let normal = env.stiffness * env.penetration(position);
    let mut force = Vector3::zeros();
    if normal == 0.0 {
        return Wrench::from_force(force);
    }
    force[env.normal_axis] = normal;
    let mut tangent = *velocity;
    tangent[env.normal_axis] = 0.0;
    let speed = tangent.norm();
    if speed > 1e-12 && env.friction > 0.0 {
        force += tangent * (env.friction * normal / speed);
    }
    Wrench::from_force(force)
}

/// Desired end-effector position and velocity over time, linearly
/// interpolated between samples and held after the last one.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskReference {
    time: Vec<f64>,
    position: Vec<Vector3<f64>>,
    velocity: Vec<Vector3<f64>>,
}

impl TaskReference {
    pub fn new(
        time: Vec<f64>,
        position: Vec<Vector3<f64>>,
        velocity: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        if time.is_empty() || position.len() != time.len() || velocity.len() != time.len() {
            return Err(Error::invalid(
                "task reference",
                "needs equally long, non-empty series",
            ));
        }
        if time.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "task reference",
                "time must be strictly increasing",
            ));
        }
        Ok(Self {
            time,
            position,
            velocity,
        })
    }

    /// Fixed target for `duration` seconds.
    pub fn constant(position: Vector3<f64>, duration: f64) -> Self {
        Self {
            time: vec![0.0, duration.max(f64::MIN_POSITIVE)],
            position: vec![position; 2],
            velocity: vec![Vector3::zeros(); 2],
        }
    }

    pub fn duration(&self) -> f64 {
        *self.time.last().expect("non-empty")
    }

    pub fn at(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let last = self.time.len() - 1;
        if t <= self.time[0] {
            return (self.position[0], self.velocity[0]);
        }
        if t >= self.time[last] {
            return (self.position[last], Vector3::zeros());
        }
        let i = self.time.partition_point(|&x| x <= t) - 1;
        let s = (t - self.time[i]) / (self.time[i + 1] - self.time[i]);
        (
            self.position[i].lerp(&self.position[i + 1], s),
            self.velocity[i].lerp(&self.velocity[i + 1], s),
        )
    }
}

/// Reference for a planar arm writing on a surface: the arm's plane spans the
/// two axes other than `normal_axis`, and the normal coordinate is fixed at
/// `depth_position`.
pub fn planar_task_reference(
    traj: &JointTrajectory,
    model: &RobotModel,
    normal_axis: usize,
    depth_position: f64,
) -> Result<TaskReference> {
    let arm = model.analytic("task-space reference")?;
    let plane: [usize; 2] = match normal_axis {
        0 => [1, 2],
        1 => [0, 2],
        2 => [0, 1],
        _ => return Err(Error::invalid("normal_axis", "must be 0, 1 or 2")),
    };
    let mut position = Vec::with_capacity(traj.len());
    let mut velocity = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let q = nalgebra::Vector2::new(traj.q[k][0], traj.q[k][1]);
        let qd = nalgebra::Vector2::new(traj.qd[k][0], traj.qd[k][1]);
        let xy = arm.forward_kinematics(&q);
        let v6: Vector6<f64> =
            arm.jacobian(&q) * nalgebra::DVector::from_column_slice(qd.as_slice());
        let mut p = Vector3::zeros();
        let mut v = Vector3::zeros();
        p[plane[0]] = xy[0];
        p[plane[1]] = xy[1];
        p[normal_axis] = depth_position;
        v[plane[0]] = v6[0];
        v[plane[1]] = v6[1];
        position.push(p);
        velocity.push(v);
    }
    let mut time = traj.time.clone();
    if time.len() == 1 {
        time.push(f64::MIN_POSITIVE);
        position.push(position[0]);
        velocity.push(velocity[0]);
    }
    TaskReference::new(time, position, velocity)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    /// Control period.
    pub dt: f64,
    /// `|z|` beyond this aborts the run.
    pub divergence_guard: f64,
    pub initial_offset: Vector3<f64>,
    /// Extra time simulated after the reference ends, holding its last value.
    pub settle: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 0.002,
            divergence_guard: 1.0,
            initial_offset: Vector3::zeros(),
            settle: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub time: Vec<f64>,
    pub desired: Vec<Vector3<f64>>,
    pub commanded: Vec<Vector3<f64>>,
    /// Equal to `commanded` under ideal tracking.
    pub measured: Vec<Vector3<f64>>,
    pub offset: Vec<Vector3<f64>>,
    pub contact: Vec<Vector3<f64>>,
    pub error: Vec<Vector3<f64>>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn normal_force(&self, normal_axis: usize) -> impl Iterator<Item = f64> + '_ {
        self.contact.iter().map(move |f| f[normal_axis])
    }

    /// `t, x_d_i, x_c_i, z_i, h_normal, h_tangential, h_err_i` with `i` over
    /// the three axes.
    pub fn to_table(&self, normal_axis: usize) -> Table {
        let mut headers = vec!["t".to_string()];
        for prefix in ["x_d", "x_c", "z"] {
            headers.extend((1..=3).map(|i| format!("{prefix}_{i}")));
        }
        headers.push("h_normal".into());
        headers.push("h_tangential".into());
        headers.extend((1..=3).map(|i| format!("h_err_{i}")));
        let mut table = Table::new(headers);
        for k in 0..self.len() {
            let mut row = vec![self.time[k]];
            row.extend(self.desired[k].iter());
            row.extend(self.commanded[k].iter());
            row.extend(self.offset[k].iter());
            let mut tangential = self.contact[k];
            tangential[normal_axis] = 0.0;
            row.push(self.contact[k][normal_axis]);
            row.push(tangential.norm());
            row.extend(self.error[k].iter());
            table.push(row);
        }
        table
    }
}

/// Runs the admittance loop along `reference`. Damping and stiffness are
/// integrated implicitly (velocity first, then position), which stays stable
/// for the stiff, lightly massive normal axis at millisecond periods; the
/// measured force enters explicitly with a one-period delay.
pub fn simulate(
    reference: &TaskReference,
    params: &AdmittanceParams,
    env: &EnvironmentModel,
    options: &SimOptions,
) -> Result<SimTrace> {
    let dt = options.dt;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if !(options.divergence_guard > 0.0) {
        return Err(Error::invalid("divergence_guard", "must be positive"));
    }
    let horizon = reference.duration() + options.settle.max(0.0);
    let steps = (horizon / dt).ceil() as usize;
    let mut trace = SimTrace::default();
    let mut z = options.initial_offset;
    let mut zd = Vector3::zeros();
    let denom = params.mass + params.damping * dt + params.stiffness * (dt * dt);

    let record =
        |trace: &mut SimTrace, t: f64, z: &Vector3<f64>, zd: &Vector3<f64>| -> Vector3<f64> {
            let (x_d, v_d) = reference.at(t);
            let x_c = x_d - z;
            let v_c = v_d - zd;
            let h_e = contact_force(env, &x_c, &v_c).force;
            let err = params.desired - h_e;
            trace.time.push(t);
            trace.desired.push(x_d);
            trace.commanded.push(x_c);
            trace.measured.push(x_c);
            trace.offset.push(*z);
            trace.contact.push(h_e);
            trace.error.push(err);
            err
        };

    let mut err = record(&mut trace, 0.0, &z, &zd);
    for k in 1..=steps {
        let t = k as f64 * dt;
        for i in 0..3 {
            zd[i] =
                (params.mass[i] * zd[i] - dt * (err[i] + params.stiffness[i] * z[i])) / denom[i];
            z[i] += dt * zd[i];
        }
        let norm = z.norm();
        if !norm.is_finite() || norm > options.divergence_guard {
            return Err(Error::Diverged { time: t, norm });
        }
        err = record(&mut trace, t, &z, &zd);
    }
    Ok(trace)
}

/// Equilibrium `(z, h_e)` along the normal axis for a fixed reference
/// `x_d`: `K_P z = h_e - h_d` with `h_e = k_e (x_d - z - x_e)` while in
/// contact.
pub fn steady_state_normal(
    stiffness: f64,
    desired: f64,
    env: &EnvironmentModel,
    x_d: f64,
) -> (f64, f64) {
    let z = (env.stiffness * (x_d - env.rest) - desired) / (stiffness + env.stiffness);
    let h = env.stiffness * (x_d - z - env.rest);
    if h > 0.0 {
        (z, h)
    } else {
        (-desired / stiffness, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForceCheck {
    /// `(sample, time, normal force)` outside the bounds.
    pub violations: Vec<(usize, f64, f64)>,
    pub checked: usize,
    pub min: f64,
    pub max: f64,
}

impl ForceCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flags samples after `transient` seconds whose normal force leaves
/// `[lower, upper]`.
pub fn verify_force_bounds(
    trace: &SimTrace,
    normal_axis: usize,
    lower: f64,
    upper: f64,
    transient: f64,
) -> ForceCheck {
    let mut check = ForceCheck {
        violations: Vec::new(),
        checked: 0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    for (k, f) in trace.normal_force(normal_axis).enumerate() {
        let t = trace.time[k];
        if t < transient {
            continue;
        }
        check.checked += 1;
        check.min = check.min.min(f);
        check.max = check.max.max(f);
        if f < lower || f > upper {
            check.violations.push((k, t, f));
        }
    }
    check
}
