//! Minimum-time path parametrization by dynamic programming on a uniform
//! `(lambda, ld)` grid.
//!
//! Columns are values of lambda, rows values of the pseudo-velocity `ld`.
//! A transition always moves one column to the right, with constant
//! pseudo-acceleration `ldd = (ld_next^2 - ld^2) / (2 dl)` checked against
//! the bounds at the source cell. The trajectory starts at `(0, 0)` and ends
//! at `(length, 0)`; interior columns never use the rest row.

mod brute_force;
mod reconstruct;

pub use brute_force::{brute_force_plan, BRUTE_FORCE_MAX_DIM};
pub use reconstruct::{
    envelope_table, planned_torques, to_joint_trajectory, EnvelopeViolation, JointTrajectory,
    NominalWrench, PlannedTorques,
};

use crate::error::{Error, Result};
use crate::io::Table;
use crate::limits::{accel_bounds, AccelBounds, SpeedCeiling};
use crate::parametrized_dynamics::ProjectedDynamics;
use crate::wrench_constraints::ModifiedTorqueLimits;

/// Uniform phase-plane grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    n_lambda: usize,
    n_speed: usize,
    length: f64,
    speed_max: f64,
}

impl PhaseGrid {
    pub const DEFAULT_N_LAMBDA: usize = 500;
    pub const DEFAULT_N_SPEED: usize = 5000;
    pub const DEFAULT_SPEED_MAX: f64 = 1.0;

    /// `n_lambda = 1` (or `length = 0`) describes a degenerate, zero-length
    /// path.
    pub fn new(n_lambda: usize, n_speed: usize, length: f64, speed_max: f64) -> Result<Self> {
        if n_lambda < 1 {
            return Err(Error::invalid("grid.n_lambda", "must be at least 1"));
        }
        if n_speed < 2 {
            return Err(Error::invalid("grid.n_speed", "must be at least 2"));
        }
        if !(length.is_finite() && length >= 0.0) {
            return Err(Error::invalid(
                "grid length",
                "must be finite and non-negative",
            ));
        }
        if !(speed_max.is_finite() && speed_max > 0.0) {
            return Err(Error::invalid("grid.speed_max", "must be positive"));
        }
        Ok(Self {
            n_lambda,
            n_speed,
            length,
            speed_max,
        })
    }

    /// 500 x 5000 cells with `ld` in `[0, 1]`.
    pub fn with_defaults(length: f64) -> Result<Self> {
        Self::new(
            Self::DEFAULT_N_LAMBDA,
            Self::DEFAULT_N_SPEED,
            length,
            Self::DEFAULT_SPEED_MAX,
        )
    }

    pub fn n_lambda(&self) -> usize {
        self.n_lambda
    }

    pub fn n_speed(&self) -> usize {
        self.n_speed
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn speed_max(&self) -> f64 {
        self.speed_max
    }

    pub fn is_degenerate(&self) -> bool {
        self.n_lambda == 1 || self.length == 0.0
    }

    /// Column spacing.
    pub fn step(&self) -> f64 {
        if self.n_lambda == 1 {
            0.0
        } else {
            self.length / (self.n_lambda - 1) as f64
        }
    }

    pub fn speed_step(&self) -> f64 {
        self.speed_max / (self.n_speed - 1) as f64
    }

    pub fn lambda_at(&self, column: usize) -> f64 {
        if column + 1 == self.n_lambda {
            self.length
        } else {
            column as f64 * self.step()
        }
    }

    pub fn speed_at(&self, row: usize) -> f64 {
        if row + 1 == self.n_speed {
            self.speed_max
        } else {
            row as f64 * self.speed_step()
        }
    }
}

/// Time to cover `step` with constant acceleration between the two speeds.
pub fn transition_cost(speed: f64, speed_next: f64, step: f64) -> Result<f64> {
    let sum = speed + speed_next;
    if !(sum > 0.0) {
        return Err(Error::RestToRest);
    }
    Ok(2.0 * step / sum)
}

/// Cost of one grid transition. Returning `f64::INFINITY` marks the
/// transition as not traversable.
pub trait TransitionCost {
    fn cost(&self, speed: f64, speed_next: f64, step: f64) -> f64;
}

/// Traversal time.
#[derive(Clone, Copy, Debug, Default)]
pub struct MinimumTime;

impl TransitionCost for MinimumTime {
    fn cost(&self, speed: f64, speed_next: f64, step: f64) -> f64 {
        transition_cost(speed, speed_next, step).unwrap_or(f64::INFINITY)
    }
}

/// Pseudo-acceleration implied by moving between two speeds over `step`.
pub fn implied_accel(speed: f64, speed_next: f64, step: f64) -> f64 {
    (speed_next * speed_next - speed * speed) / (2.0 * step)
}

/// Whether a transition from speed `speed` to `speed_next` over `step` is
/// admissible: the implied acceleration lies in the closed interval of
/// `bounds` (taken at the source cell) and `speed_next` respects the ceiling
/// of the destination column.
pub fn reachable(
    speed: f64,
    speed_next: f64,
    step: f64,
    bounds: &AccelBounds,
    next_ceiling: f64,
) -> bool {
    speed_next <= next_ceiling && bounds.admits(implied_accel(speed, speed_next, step))
}

/// Everything the search needs, resampled onto the grid columns. Coefficients
/// and limits are linearly interpolated from their lambda tables; the speed
/// ceiling is evaluated exactly.
#[derive(Clone, Debug)]
pub struct ColumnTable {
    grid: PhaseGrid,
    dof: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    g: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    ceiling: Vec<f64>,
}

impl ColumnTable {
    pub fn build(
        projected: &ProjectedDynamics,
        limits: &ModifiedTorqueLimits,
        ceiling: &dyn SpeedCeiling,
        grid: PhaseGrid,
    ) -> Result<Self> {
        let dof = projected.dof();
        if limits.dof() != dof {
            return Err(Error::DimensionMismatch {
                what: "torque limits vs projected dynamics",
                expected: dof,
                found: limits.dof(),
            });
        }
        let n = grid.n_lambda();
        let mut table = Self {
            grid,
            dof,
            a: Vec::with_capacity(n * dof),
            b: Vec::with_capacity(n * dof),
            c: Vec::with_capacity(n * dof),
            g: Vec::with_capacity(n * dof),
            lower: Vec::with_capacity(n * dof),
            upper: Vec::with_capacity(n * dof),
            ceiling: Vec::with_capacity(n),
        };
        for col in 0..n {
            let lambda = grid.lambda_at(col);
            let k = projected.interpolate(lambda);
            let env = limits.interpolate(lambda);
            table.a.extend(k.a.iter());
            table.b.extend(k.b.iter());
            table.c.extend(k.c.iter());
            table.g.extend(k.g.iter());
            table.lower.extend(env.lower.iter());
            table.upper.extend(env.upper.iter());
            table.ceiling.push(ceiling.max_speed(lambda));
        }
        Ok(table)
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn bounds(&self, column: usize, speed: f64) -> AccelBounds {
        let r = column * self.dof..(column + 1) * self.dof;
        accel_bounds(
            &self.a[r.clone()],
            &self.b[r.clone()],
            &self.c[r.clone()],
            &self.g[r.clone()],
            &self.lower[r.clone()],
            &self.upper[r],
            speed,
        )
    }

    pub fn ceiling(&self, column: usize) -> f64 {
        self.ceiling[column]
    }

    /// Rows a trajectory may occupy in `column`.
    pub(crate) fn row_allowed(&self, column: usize, row: usize) -> bool {
        let last = self.grid.n_lambda() - 1;
        if column == 0 || column == last {
            row == 0
        } else {
            row > 0
        }
    }

    /// Grid transition test between `(column, row)` and
    /// `(column + 1, row_next)`.
    pub fn transition_allowed(&self, column: usize, row: usize, row_next: usize) -> bool {
        if !self.row_allowed(column, row) || !self.row_allowed(column + 1, row_next) {
            return false;
        }
        let v = self.grid.speed_at(row);
        let w = self.grid.speed_at(row_next);
        if v + w <= 0.0 {
            return false;
        }
        reachable(
            v,
            w,
            self.grid.step(),
            &self.bounds(column, v),
            self.ceiling(column + 1),
        )
    }
}

/// A point of the planned phase-plane trajectory. `accel` is the control
/// applied from this node to the next one (zero at the final node).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseNode {
    pub lambda: f64,
    pub speed: f64,
    pub accel: f64,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhasePlaneTrajectory {
    pub nodes: Vec<PhaseNode>,
    /// Grid row of every node.
    pub rows: Vec<usize>,
}

impl PhasePlaneTrajectory {
    fn at_rest() -> Self {
        Self {
            nodes: vec![PhaseNode {
                lambda: 0.0,
                speed: 0.0,
                accel: 0.0,
                time: 0.0,
            }],
            rows: vec![0],
        }
    }

    pub fn total_time(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.time)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `lambda, speed, accel, time` per node.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(vec![
            "lambda".into(),
            "speed".into(),
            "accel".into(),
            "time".into(),
        ]);
        for n in &self.nodes {
            t.push(vec![n.lambda, n.speed, n.accel, n.time]);
        }
        t
    }

    /// Rebuilds a trajectory from one row per column, accumulating time in
    /// column order.
    pub fn from_rows<C: TransitionCost>(grid: &PhaseGrid, rows: &[usize], cost: &C) -> Self {
        let step = grid.step();
        let mut nodes = Vec::with_capacity(rows.len());
        let mut time = 0.0;
        for (col, &row) in rows.iter().enumerate() {
            let speed = grid.speed_at(row);
            let accel = match rows.get(col + 1) {
                Some(&next) => implied_accel(speed, grid.speed_at(next), step),
                None => 0.0,
            };
            nodes.push(PhaseNode {
                lambda: grid.lambda_at(col),
                speed,
                accel,
                time,
            });
            if let Some(&next) = rows.get(col + 1) {
                time += cost.cost(speed, grid.speed_at(next), step);
            }
        }
        Self {
            nodes,
            rows: rows.to_vec(),
        }
    }

    /// Re-checks every transition against the grid rules; returns the index
    /// of the first offending transition.
    pub fn verify(&self, table: &ColumnTable) -> std::result::Result<(), usize> {
        for (k, w) in self.rows.windows(2).enumerate() {
            if !table.transition_allowed(k, w[0], w[1]) {
                return Err(k);
            }
        }
        Ok(())
    }
}

/// Forward value function: `cost[col * n_speed + row]` is the least cost of
/// reaching the cell from `(0, 0)`.
struct ForwardPass {
    cost: Vec<f64>,
    pred: Vec<u32>,
    /// First column that no cell reaches, if any.
    blocked: Option<usize>,
}

const NO_PRED: u32 = u32::MAX;

fn forward<C: TransitionCost>(table: &ColumnTable, cost_fn: &C) -> ForwardPass {
    let grid = table.grid();
    let (nl, ns) = (grid.n_lambda(), grid.n_speed());
    let step = grid.step();
    let dv = grid.speed_step();
    let mut cost = vec![f64::INFINITY; nl * ns];
    let mut pred = vec![NO_PRED; nl * ns];
    cost[0] = 0.0;
    let mut blocked = None;
    for col in 0..nl - 1 {
        let next_ceiling = table.ceiling(col + 1);
        for row in 0..ns {
            let here = cost[col * ns + row];
            if !here.is_finite() {
                continue;
            }
            let v = grid.speed_at(row);
            let bounds = table.bounds(col, v);
            if !bounds.is_feasible() {
                continue;
            }
            // Candidate rows from the admissible range of ld_next^2, padded by
            // one row; the exact test below decides.
            let lo_sq = (v * v + 2.0 * step * bounds.lower).max(0.0);
            let hi_sq = v * v + 2.0 * step * bounds.upper;
            if hi_sq < 0.0 {
                continue;
            }
            let hi_speed = hi_sq.sqrt().min(next_ceiling).min(grid.speed_max());
            let r_lo = ((lo_sq.sqrt() / dv).floor() as usize).saturating_sub(1);
            let r_hi = (((hi_speed / dv).ceil() as usize) + 1).min(ns - 1);
            for next in r_lo..=r_hi {
                if !table.row_allowed(col + 1, next) {
                    continue;
                }
                let w = grid.speed_at(next);
                if v + w <= 0.0 || !reachable(v, w, step, &bounds, next_ceiling) {
                    continue;
                }
                let total = here + cost_fn.cost(v, w, step);
                let idx = (col + 1) * ns + next;
                let better = total < cost[idx]
                    || (total == cost[idx] && pred[idx] != NO_PRED && row as u32 > pred[idx]);
                if better {
                    cost[idx] = total;
                    pred[idx] = row as u32;
                }
            }
        }
        if blocked.is_none()
            && cost[(col + 1) * ns..(col + 2) * ns]
                .iter()
                .all(|c| !c.is_finite())
        {
            blocked = Some(col + 1);
            break;
        }
    }
    ForwardPass {
        cost,
        pred,
        blocked,
    }
}

/// Minimum-time trajectory over the grid.
pub fn plan_table(table: &ColumnTable) -> Result<PhasePlaneTrajectory> {
    plan_table_with(table, &MinimumTime)
}

/// Same search with a caller-supplied transition cost.
pub fn plan_table_with<C: TransitionCost>(
    table: &ColumnTable,
    cost_fn: &C,
) -> Result<PhasePlaneTrajectory> {
    let grid = table.grid();
    if grid.is_degenerate() {
        return Ok(PhasePlaneTrajectory::at_rest());
    }
    let (nl, ns) = (grid.n_lambda(), grid.n_speed());
    let pass = forward(table, cost_fn);
    let last = nl - 1;
    if let Some(column) = pass.blocked {
        return Err(Error::NoFeasiblePath {
            column,
            lambda: grid.lambda_at(column),
        });
    }
    if !pass.cost[last * ns].is_finite() {
        return Err(Error::NoFeasiblePath {
            column: last,
            lambda: grid.length(),
        });
    }
    let mut rows = vec![0usize; nl];
    for col in (1..nl).rev() {
        rows[col - 1] = pass.pred[col * ns + rows[col]] as usize;
    }
    Ok(PhasePlaneTrajectory::from_rows(grid, &rows, cost_fn))
}

/// Builds the column table and plans in one call.
pub fn plan(
    projected: &ProjectedDynamics,
    limits: &ModifiedTorqueLimits,
    ceiling: &dyn SpeedCeiling,
    grid: PhaseGrid,
) -> Result<PhasePlaneTrajectory> {
    plan_table(&ColumnTable::build(projected, limits, ceiling, grid)?)
}

/// Highest pseudo-velocity reachable from the start in every column
/// (zero for unreached columns), from the forward pass alone.
pub fn reachable_speed_profile(table: &ColumnTable) -> Vec<f64> {
    let grid = table.grid();
    if grid.is_degenerate() {
        return vec![0.0; grid.n_lambda()];
    }
    let ns = grid.n_speed();
    let pass = forward(table, &MinimumTime);
    (0..grid.n_lambda())
        .map(|col| {
            (0..ns)
                .rev()
                .find(|&r| pass.cost[col * ns + r].is_finite())
                .map_or(0.0, |r| grid.speed_at(r))
        })
        .collect()
}
