//! Exhaustive search over every row assignment, used to check the DP.

use super::{ColumnTable, MinimumTime, PhasePlaneTrajectory, TransitionCost};
use crate::error::{Error, Result};

/// Largest `n_lambda` and `n_speed` accepted by [`brute_force_plan`].
pub const BRUTE_FORCE_MAX_DIM: usize = 12;

struct Search<'a> {
    table: &'a ColumnTable,
    rows: Vec<usize>,
    best_rows: Option<Vec<usize>>,
    best_cost: f64,
    /// Deepest column any partial assignment reached.
    deepest: usize,
}

impl Search<'_> {
    fn visit(&mut self, column: usize, cost: f64) {
        let grid = *self.table.grid();
        let last = grid.n_lambda() - 1;
        self.deepest = self.deepest.max(column);
        if cost > self.best_cost {
            return;
        }
        if column == last {
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best_rows = Some(self.rows.clone());
            }
            return;
        }
        let row = self.rows[column];
        let v = grid.speed_at(row);
        for next in 0..grid.n_speed() {
            if !self.table.transition_allowed(column, row, next) {
                continue;
            }
            let step_cost = MinimumTime.cost(v, grid.speed_at(next), grid.step());
            self.rows.push(next);
            self.visit(column + 1, cost + step_cost);
            self.rows.pop();
        }
    }
}

/// Globally optimal row assignment by enumeration, on the same transition set
/// as the DP. Costs are summed in column order, as in the DP.
pub fn brute_force_plan(table: &ColumnTable) -> Result<PhasePlaneTrajectory> {
    let grid = *table.grid();
    if grid.n_lambda() > BRUTE_FORCE_MAX_DIM || grid.n_speed() > BRUTE_FORCE_MAX_DIM {
        return Err(Error::GridTooLarge {
            n_lambda: grid.n_lambda(),
            n_speed: grid.n_speed(),
        });
    }
    if grid.is_degenerate() {
        return Ok(PhasePlaneTrajectory::at_rest());
    }
    let mut search = Search {
        table,
        rows: vec![0],
        best_rows: None,
        best_cost: f64::INFINITY,
        deepest: 0,
    };
    search.visit(0, 0.0);
    match search.best_rows {
        Some(rows) => Ok(PhasePlaneTrajectory::from_rows(&grid, &rows, &MinimumTime)),
        None => {
            let column = (search.deepest + 1).min(grid.n_lambda() - 1);
            Err(Error::NoFeasiblePath {
                column,
                lambda: grid.lambda_at(column),
            })
        }
    }
}
