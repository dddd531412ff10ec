//! Turning a phase-plane trajectory back into joint space.

use nalgebra::DVector;

use super::PhasePlaneTrajectory;
use crate::error::{Error, Result};
use crate::io::Table;
use crate::parametrized_dynamics::ProjectedDynamics;
use crate::path::PathSpec;
use crate::wrench_constraints::{ModifiedTorqueLimits, WrenchProfile};

/// Which wrench inside the profile bounds is used to compute the commanded
/// torque.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum NominalWrench {
    #[default]
    Midpoint,
    /// `lower + s (upper - lower)` componentwise, `s` in `[0, 1]`.
    Blend(f64),
}

impl NominalWrench {
    fn weight(self) -> f64 {
        match self {
            Self::Midpoint => 0.5,
            Self::Blend(s) => s,
        }
    }
}

/// Uniformly time-sampled joint trajectory with the torque envelope that was
/// in force at every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTrajectory {
    pub time: Vec<f64>,
    pub lambda: Vec<f64>,
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub qd: Vec<DVector<f64>>,
    pub qdd: Vec<DVector<f64>>,
    /// Commanded torque including the nominal wrench term.
    pub tau: Vec<DVector<f64>>,
    /// Torque spent on motion alone, the quantity bounded by the envelope.
    pub tau_motion: Vec<DVector<f64>>,
    pub env_lower: Vec<DVector<f64>>,
    pub env_upper: Vec<DVector<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeViolation {
    pub sample: usize,
    pub joint: usize,
    /// Distance outside the envelope, always positive.
    pub excess: f64,
}

fn violations(
    torque: &[DVector<f64>],
    lower: &[DVector<f64>],
    upper: &[DVector<f64>],
    tol: f64,
) -> Vec<EnvelopeViolation> {
    let mut out = Vec::new();
    for (k, tau) in torque.iter().enumerate() {
        for j in 0..tau.len() {
            let excess = (lower[k][j] - tau[j]).max(tau[j] - upper[k][j]);
            if excess > tol {
                out.push(EnvelopeViolation {
                    sample: k,
                    joint: j,
                    excess,
                });
            }
        }
    }
    out
}

fn max_excess(torque: &[DVector<f64>], lower: &[DVector<f64>], upper: &[DVector<f64>]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (k, tau) in torque.iter().enumerate() {
        for j in 0..tau.len() {
            worst = worst.max(lower[k][j] - tau[j]).max(tau[j] - upper[k][j]);
        }
    }
    worst
}

fn joint_headers(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |j| format!("{prefix}_{j}"))
}

impl JointTrajectory {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.q.first().map_or(0, |q| q.len())
    }

    pub fn envelope_violations(&self, tol: f64) -> Vec<EnvelopeViolation> {
        violations(&self.tau_motion, &self.env_lower, &self.env_upper, tol)
    }

    /// Largest signed distance of the motion torque outside its envelope;
    /// negative when every sample is strictly inside.
    pub fn max_envelope_excess(&self) -> f64 {
        max_excess(&self.tau_motion, &self.env_lower, &self.env_upper)
    }

    /// `t, lambda, q_j, qd_j, qdd_j, tau_j, tau_motion_j`.
    pub fn to_table(&self) -> Table {
        let n = self.dof();
        let mut headers = vec!["t".to_string(), "lambda".to_string()];
        for prefix in ["q", "qd", "qdd", "tau", "tau_motion"] {
            headers.extend(joint_headers(prefix, n));
        }
        let mut table = Table::new(headers);
        for k in 0..self.len() {
            let mut row = vec![self.time[k], self.lambda[k]];
            for v in [
                &self.q[k],
                &self.qd[k],
                &self.qdd[k],
                &self.tau[k],
                &self.tau_motion[k],
            ] {
                row.extend(v.iter());
            }
            table.push(row);
        }
        table
    }
}

/// Samples the trajectory every `sample_dt` seconds (plus the final instant).
/// Within a transition the pseudo-acceleration is the recorded constant, so
/// `lambda(t)` is the exact quadratic through both nodes.
pub fn to_joint_trajectory(
    ppt: &PhasePlaneTrajectory,
    path: &PathSpec,
    projected: &ProjectedDynamics,
    profile: &WrenchProfile,
    limits: &ModifiedTorqueLimits,
    sample_dt: f64,
    nominal: NominalWrench,
) -> Result<JointTrajectory> {
    if !(sample_dt.is_finite() && sample_dt > 0.0) {
        return Err(Error::invalid("sample_dt", "must be positive"));
    }
    let total = ppt.total_time();
    if total > 0.0 && sample_dt > total {
        return Err(Error::SampleStepTooLarge {
            dt: sample_dt,
            total,
        });
    }
    let mut times: Vec<f64> = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * sample_dt;
        if t >= total - 1e-12 * total.max(1.0) {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(total);

    let weight = nominal.weight();
    let nodes = &ppt.nodes;
    let mut out = JointTrajectory {
        time: Vec::with_capacity(times.len()),
        lambda: Vec::with_capacity(times.len()),
        speed: Vec::with_capacity(times.len()),
        accel: Vec::with_capacity(times.len()),
        q: Vec::with_capacity(times.len()),
        qd: Vec::with_capacity(times.len()),
        qdd: Vec::with_capacity(times.len()),
        tau: Vec::with_capacity(times.len()),
        tau_motion: Vec::with_capacity(times.len()),
        env_lower: Vec::with_capacity(times.len()),
        env_upper: Vec::with_capacity(times.len()),
    };
    let mut seg = 0usize;
    for &t in &times {
        let (lambda, speed, accel) = if nodes.len() < 2 {
            (nodes[0].lambda, 0.0, 0.0)
        } else {
            while seg + 2 < nodes.len() && nodes[seg + 1].time <= t {
                seg += 1;
            }
            let (n0, n1) = (&nodes[seg], &nodes[seg + 1]);
            let tau = (t - n0.time).clamp(0.0, n1.time - n0.time);
            let a = n0.accel;
            let lambda =
                (n0.lambda + n0.speed * tau + 0.5 * a * tau * tau).clamp(n0.lambda, n1.lambda);
            let speed = if t >= total {
                0.0
            } else {
                (n0.speed + a * tau).max(0.0)
            };
            (lambda, speed, a)
        };
        let lambda = lambda.clamp(0.0, path.length());
        let p = path.eval(lambda)?;
        let k = projected.interpolate(lambda);
        let (h_lo, h_hi) = profile.interpolate(lambda);
        let h = h_lo + (h_hi - h_lo) * weight;
        let env = limits.interpolate(lambda);
        let tau_motion = k.motion_torque(speed, accel);
        let tau = &tau_motion + k.jacobian.transpose() * h;
        out.time.push(t);
        out.lambda.push(lambda);
        out.speed.push(speed);
        out.accel.push(accel);
        out.qd.push(&p.dq * speed);
        out.qdd.push(&p.ddq * (speed * speed) + &p.dq * accel);
        out.q.push(p.q);
        out.tau.push(tau);
        out.tau_motion.push(tau_motion);
        out.env_lower.push(env.lower);
        out.env_upper.push(env.upper);
    }
    Ok(out)
}

/// Motion torque at every planned grid node, using the pseudo-acceleration
/// applied from that node. These are exactly the states the planner checked,
/// so the wrench-aware plan keeps them inside the envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedTorques {
    pub lambda: Vec<f64>,
    pub tau_motion: Vec<DVector<f64>>,
    pub lower: Vec<DVector<f64>>,
    pub upper: Vec<DVector<f64>>,
}

impl PlannedTorques {
    pub fn violations(&self, tol: f64) -> Vec<EnvelopeViolation> {
        violations(&self.tau_motion, &self.lower, &self.upper, tol)
    }

    pub fn max_excess(&self) -> f64 {
        max_excess(&self.tau_motion, &self.lower, &self.upper)
    }
}

/// Evaluates the node torques of `ppt` against `limits`. The final node
/// carries no control and is skipped.
pub fn planned_torques(
    ppt: &PhasePlaneTrajectory,
    projected: &ProjectedDynamics,
    limits: &ModifiedTorqueLimits,
) -> PlannedTorques {
    let count = ppt.nodes.len().saturating_sub(1);
    let mut out = PlannedTorques {
        lambda: Vec::with_capacity(count),
        tau_motion: Vec::with_capacity(count),
        lower: Vec::with_capacity(count),
        upper: Vec::with_capacity(count),
    };
    for node in &ppt.nodes[..count] {
        let k = projected.interpolate(node.lambda);
        let env = limits.interpolate(node.lambda);
        out.lambda.push(node.lambda);
        out.tau_motion.push(k.motion_torque(node.speed, node.accel));
        out.lower.push(env.lower);
        out.upper.push(env.upper);
    }
    out
}

/// `lambda, lower_j, upper_j, gamma_lower_j, gamma_upper_j` per node.
pub fn envelope_table(limits: &ModifiedTorqueLimits) -> Table {
    let n = limits.dof();
    let mut headers = vec!["lambda".to_string()];
    for prefix in ["lower", "upper", "gamma_lower", "gamma_upper"] {
        headers.extend(joint_headers(prefix, n));
    }
    let mut table = Table::new(headers);
    for (i, &lambda) in limits.lambda().iter().enumerate() {
        let mut row = vec![lambda];
        for v in [
            &limits.lower()[i],
            &limits.upper()[i],
            &limits.gamma_lower()[i],
            &limits.gamma_upper()[i],
        ] {
            row.extend(v.iter());
        }
        table.push(row);
    }
    table
}
