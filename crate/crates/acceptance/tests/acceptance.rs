//! Acceptance criteria, one line of output per criterion.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DVector, Matrix2, Matrix6xX, Vector2, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrench_totp::admittance_sim::{
    simulate, AdmittanceParams, EnvironmentModel, SimOptions, TaskReference,
};
use wrench_totp::cli::{run, Mode, RunOptions};
use wrench_totp::dp_planner::{
    brute_force_plan, plan_table, reachable_speed_profile, ColumnTable, PhaseGrid,
    PhasePlaneTrajectory,
};
use wrench_totp::io::Table;
use wrench_totp::limits::{JointVelocityBounds, PathSpeedLimit, SpeedCeiling, Unbounded};
use wrench_totp::parametrized_dynamics::{project_dynamics, project_point, ProjectedDynamics};
use wrench_totp::robot_model::Wrench;
use wrench_totp::wrench_constraints::{
    modified_torque_limits, GammaMode, ModifiedTorqueLimits, WrenchProfile,
};
use wrench_totp::Error;
use wrench_totp_acceptance::{check_boundary, demo_config, demo_config_with, sine_arm, sine_path};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn raw_limits(lo: &[f64], hi: &[f64], lambda: &[f64]) -> ModifiedTorqueLimits {
    ModifiedTorqueLimits::raw(
        &DVector::from_column_slice(lo),
        &DVector::from_column_slice(hi),
        lambda,
    )
    .expect("ordered limits")
}

fn projection_identity() -> Verdict {
    let start = Instant::now();
    let model = sine_arm();
    let path = sine_path(101);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let lambda = rng.gen_range(0.0..=path.length());
        let speed = rng.gen_range(0.0..3.0);
        let accel = rng.gen_range(-10.0..10.0);
        let h = Vector6::from_fn(|_, _| rng.gen_range(-50.0..50.0));
        let p = path.eval(lambda).map_err(fail)?;
        let qd = &p.dq * speed;
        let qdd = &p.ddq * (speed * speed) + &p.dq * accel;
        let full = model
            .eval_dynamics(&p.q, &qd, &qdd, &Wrench::from_vector(&h))
            .map_err(fail)?;
        let k = project_point(&model, &p).map_err(fail)?;
        let projected = k.motion_torque(speed, accel) + k.jacobian.transpose() * h;
        worst = worst.max((full - projected).amax());
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-9, || format!("max deviation {worst:e} > 1e-9"))?;
    ensure(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;
    Ok(format!(
        "max |tau_full - tau_projected| = {worst:.3e} N m in {elapsed:.3} s"
    ))
}

fn read_outputs(dir: &Path, names: &[&str]) -> Result<Vec<Vec<u8>>, String> {
    names
        .iter()
        .map(|n| std::fs::read(dir.join(n)).map_err(|e| format!("{n}: {e}")))
        .collect()
}

fn zero_wrench_reduction() -> Verdict {
    let zero = demo_config_with(
        "normal_lower = 1.0\nnormal_upper = 80.0\nfriction = 0.519",
        "normal_lower = 0.0\nnormal_upper = 0.0\nfriction = 0.0",
    )
    .map_err(fail)?;
    let demo = demo_config().map_err(fail)?;
    let a = tempfile::tempdir().map_err(fail)?;
    let b = tempfile::tempdir().map_err(fail)?;
    run(
        &zero,
        Mode::Plan,
        &RunOptions {
            out_dir: Some(a.path().into()),
            ..RunOptions::default()
        },
    )
    .map_err(fail)?;
    run(
        &demo,
        Mode::Plan,
        &RunOptions {
            out_dir: Some(b.path().into()),
            no_wrench: true,
            ..RunOptions::default()
        },
    )
    .map_err(fail)?;
    let files = ["ppt.csv", "joint_traj.csv", "envelopes.csv", "limits.csv"];
    let (x, y) = (
        read_outputs(a.path(), &files)?,
        read_outputs(b.path(), &files)?,
    );
    for (name, (p, q)) in files.iter().zip(x.iter().zip(&y)) {
        ensure(p == q, || format!("{name} differs"))?;
    }
    Ok(format!("{} artifacts byte-identical", files.len()))
}

fn bang_bang_time(n_lambda: usize, n_speed: usize) -> Result<(f64, PhasePlaneTrajectory), String> {
    let lambda = [0.0, 1.0];
    let projected = ProjectedDynamics::constant(&lambda, &[1.0], &[0.0], &[0.0], &[0.0]);
    let limits = raw_limits(&[-1.0], &[1.0], &lambda);
    let grid = PhaseGrid::new(n_lambda, n_speed, 1.0, 1.0).map_err(fail)?;
    let table = ColumnTable::build(&projected, &limits, &Unbounded, grid).map_err(fail)?;
    let ppt = plan_table(&table).map_err(fail)?;
    Ok((ppt.total_time(), ppt))
}

fn bang_bang_oracle() -> Verdict {
    let start = Instant::now();
    let (coarse, _) = bang_bang_time(200, 400)?;
    let (fine, _) = bang_bang_time(400, 800)?;
    let elapsed = start.elapsed().as_secs_f64();
    let err_coarse = (coarse - 2.0).abs() / 2.0;
    let err_fine = (fine - 2.0).abs() / 2.0;
    let detail = format!(
        "t_f = {coarse:.6} at 200x400 ({:.2}%), {fine:.6} at 400x800 ({:.2}%), {elapsed:.2} s",
        100.0 * err_coarse,
        100.0 * err_fine
    );
    ensure(err_coarse <= 0.03, || {
        format!("coarse error above 3%: {detail}")
    })?;
    ensure(err_fine <= 0.015, || {
        format!("fine error above 1.5%: {detail}")
    })?;
    ensure(fine <= coarse, || {
        format!("no improvement under refinement: {detail}")
    })?;
    ensure(elapsed < 30.0, || format!("too slow: {detail}"))?;
    Ok(detail)
}

/// Random tiny instance: one or two joints with tabulated coefficients.
fn random_instance(rng: &mut ChaCha8Rng) -> (ColumnTable, String) {
    let dof = rng.gen_range(1..=2);
    let length = rng.gen_range(0.5..2.0);
    let nodes = rng.gen_range(2..=5);
    let lambda: Vec<f64> = (0..nodes)
        .map(|i| length * i as f64 / (nodes - 1) as f64)
        .collect();
    let mut column = |lo: f64, hi: f64| -> Vec<DVector<f64>> {
        (0..nodes)
            .map(|_| DVector::from_fn(dof, |_, _| rng.gen_range(lo..hi)))
            .collect()
    };
    let mut a = column(0.2, 2.0);
    let b = column(-1.0, 1.0);
    let c = column(0.0, 0.5);
    let g = column(-0.6, 0.6);
    for v in &mut a {
        for x in v.iter_mut() {
            if rng.gen_bool(0.3) {
                *x = -*x;
            }
        }
    }
    let jac = vec![Matrix6xX::zeros(dof); nodes];
    let projected =
        ProjectedDynamics::from_tables(lambda.clone(), a, b, c, g, jac).expect("valid tables");
    let lo: Vec<f64> = (0..dof).map(|_| rng.gen_range(-3.0..-0.5)).collect();
    let hi: Vec<f64> = (0..dof).map(|_| rng.gen_range(0.5..3.0)).collect();
    let limits = raw_limits(&lo, &hi, &lambda);
    let n_lambda = rng.gen_range(3..=10);
    let n_speed = rng.gen_range(3..=10);
    let speed_max = rng.gen_range(0.5..2.5);
    let grid = PhaseGrid::new(n_lambda, n_speed, length, speed_max).expect("valid grid");
    struct Flat(f64);
    impl SpeedCeiling for Flat {
        fn max_speed(&self, _: f64) -> f64 {
            self.0
        }
    }
    let ceiling = Flat(if rng.gen_bool(0.5) {
        f64::INFINITY
    } else {
        rng.gen_range(0.3..2.5)
    });
    let table = ColumnTable::build(&projected, &limits, &ceiling, grid).expect("table");
    (table, format!("{dof} joint(s), {n_lambda}x{n_speed}"))
}

fn compare_with_brute_force(table: &ColumnTable, label: &str) -> Result<bool, String> {
    match (plan_table(table), brute_force_plan(table)) {
        (Ok(dp), Ok(bf)) => {
            ensure(dp.total_time() == bf.total_time(), || {
                format!(
                    "{label}: dp {} vs brute force {}",
                    dp.total_time(),
                    bf.total_time()
                )
            })?;
            Ok(true)
        }
        (
            Err(Error::NoFeasiblePath { column: x, .. }),
            Err(Error::NoFeasiblePath { column: y, .. }),
        ) => {
            ensure(x == y, || format!("{label}: blocking columns {x} vs {y}"))?;
            Ok(false)
        }
        (x, y) => Err(format!(
            "{label}: dp {:?} vs brute force {:?}",
            x.map(|p| p.total_time()),
            y.map(|p| p.total_time())
        )),
    }
}

fn brute_force_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut feasible, mut infeasible) = (0, 0);
    for i in 0..400 {
        let (table, label) = random_instance(&mut rng);
        if compare_with_brute_force(&table, &format!("instance {i} ({label})"))? {
            feasible += 1;
        } else {
            infeasible += 1;
        }
        if feasible >= 30 && i >= 60 {
            break;
        }
    }
    ensure(feasible >= 20, || {
        format!("only {feasible} feasible instances")
    })?;

    // 8 x 8 grid on the 2R sine path.
    let model = sine_arm();
    let path = sine_path(101);
    let projected = project_dynamics(&model, &path).map_err(fail)?;
    let limits = raw_limits(&[-60.0, -25.0], &[60.0, 25.0], path.lambda());
    let grid = PhaseGrid::new(8, 8, path.length(), 2.0).map_err(fail)?;
    let table = ColumnTable::build(&projected, &limits, &Unbounded, grid).map_err(fail)?;
    ensure(
        compare_with_brute_force(&table, "2R sine path 8x8")?,
        || "2R sine path instance is infeasible".into(),
    )?;
    Ok(format!(
        "{feasible} feasible and {infeasible} infeasible random instances plus the 8x8 sine path agree exactly"
    ))
}

fn torque_envelope() -> Verdict {
    let config = demo_config().map_err(fail)?;
    let dir = tempfile::tempdir().map_err(fail)?;
    let summary = run(
        &config,
        Mode::PlanCompare,
        &RunOptions {
            out_dir: Some(dir.path().into()),
            ..RunOptions::default()
        },
    )
    .map_err(fail)?;
    let cmp = summary.comparison.as_ref().ok_or("no comparison")?;
    ensure(summary.aware.node_violations == 0, || {
        format!(
            "{} wrench-aware samples outside the modified limits",
            summary.aware.node_violations
        )
    })?;
    ensure(cmp.blind_node_violations >= 1, || {
        "wrench-blind plan stays inside the modified limits".into()
    })?;
    Ok(format!(
        "wrench-aware: 0 of {} planned samples outside (tol 1e-6 N m); wrench-blind: {} planned and {} resampled outside, worst by {:.3} N m",
        summary.aware.ppt.len() - 1,
        cmp.blind_node_violations,
        cmp.blind_sample_violations,
        cmp.blind_worst_excess
    ))
}

fn dominance_direction() -> Verdict {
    let config = demo_config().map_err(fail)?;
    let dir = tempfile::tempdir().map_err(fail)?;
    let summary = run(
        &config,
        Mode::PlanCompare,
        &RunOptions {
            out_dir: Some(dir.path().into()),
            ..RunOptions::default()
        },
    )
    .map_err(fail)?;
    let t_with = summary.aware.ppt.total_time();
    let t_without = summary
        .comparison
        .as_ref()
        .ok_or("no comparison")?
        .blind
        .ppt
        .total_time();
    ensure(t_with >= t_without, || {
        format!("t_f with {t_with} < without {t_without}")
    })?;

    // A wrench whose joint torque is negative over the whole range lifts the
    // upper torque limit: [-1, 1] becomes [-0.4, 1.2].
    let lambda = [0.0, 1.0];
    let mut column = Matrix6xX::zeros(1);
    column[(0, 0)] = 1.0;
    let projected = ProjectedDynamics::constant(&lambda, &[1.0], &[0.2], &[0.0], &[0.1])
        .with_jacobian(vec![column.clone(), column])
        .map_err(fail)?;
    let mut lo = Vector6::zeros();
    let mut hi = Vector6::zeros();
    lo[0] = -0.6;
    hi[0] = -0.2;
    let profile = WrenchProfile::new(lambda.to_vec(), vec![lo; 2], vec![hi; 2]).map_err(fail)?;
    let tau_lo = DVector::from_element(1, -1.0);
    let tau_hi = DVector::from_element(1, 1.0);
    let with = modified_torque_limits(&tau_lo, &tau_hi, &profile, &projected, GammaMode::Segment)
        .map_err(fail)?;
    let without = ModifiedTorqueLimits::raw(&tau_lo, &tau_hi, &lambda).map_err(fail)?;
    let grid = PhaseGrid::new(60, 300, 1.0, 2.0).map_err(fail)?;
    let reach_with = reachable_speed_profile(
        &ColumnTable::build(&projected, &with, &Unbounded, grid).map_err(fail)?,
    );
    let reach_without = reachable_speed_profile(
        &ColumnTable::build(&projected, &without, &Unbounded, grid).map_err(fail)?,
    );
    let higher = reach_with
        .iter()
        .zip(&reach_without)
        .filter(|(a, b)| a > b)
        .count();
    ensure(higher >= 1, || {
        "no column reaches a higher speed with the relaxing wrench".into()
    })?;
    Ok(format!(
        "demo t_f {t_with:.4} s with >= {t_without:.4} s without; relaxing wrench raises the reachable speed in {higher} of {} columns",
        grid.n_lambda()
    ))
}

fn admittance_steady_state() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let kp = rng.gen_range(200.0..6000.0);
        let ke = rng.gen_range(2e3..5e4);
        let fd = rng.gen_range(5.0..60.0);
        let x_d = 0.004;
        let params = AdmittanceParams::new(
            Vector3::new(0.1, 0.1, 0.02),
            Vector3::new(300.0, 300.0, 1200.0),
            Vector3::new(5500.0, 5500.0, kp),
            Vector3::new(0.0, 0.0, fd),
        )
        .map_err(fail)?;
        let env = EnvironmentModel::new(2, 0.0, ke, 0.0).map_err(fail)?;
        // K_P z - h = -f_d and h + k_e z = k_e (x_d - x_e).
        let m = Matrix2::new(kp, -1.0, ke, 1.0);
        let sol = m
            .lu()
            .solve(&Vector2::new(-fd, ke * x_d))
            .ok_or("singular")?;
        let h_star = sol[1];
        let reference = TaskReference::constant(Vector3::new(0.0, 0.0, x_d), 6.0);
        let trace = simulate(&reference, &params, &env, &SimOptions::default()).map_err(fail)?;
        let h = trace.contact.last().ok_or("empty trace")?[2];
        worst = worst.max(((h - h_star) / h_star).abs());
    }
    ensure(worst <= 1e-3, || {
        format!("steady-state error {:.4}%", 100.0 * worst)
    })?;

    let config = demo_config().map_err(fail)?;
    let sim = config
        .simulation
        .as_ref()
        .ok_or("demo has no simulation section")?;
    ensure(
        sim.params == AdmittanceParams::writing_tuning(2, 20.0),
        || "demo tuning differs".into(),
    )?;
    let dir = tempfile::tempdir().map_err(fail)?;
    run(
        &config,
        Mode::PlanSimulate,
        &RunOptions {
            out_dir: Some(dir.path().into()),
            ..RunOptions::default()
        },
    )
    .map_err(fail)?;
    let trace = Table::read(std::fs::File::open(dir.path().join("sim_trace.csv")).map_err(fail)?)
        .map_err(fail)?;
    let normal = trace
        .headers
        .iter()
        .position(|h| h == "h_normal")
        .ok_or("no h_normal column")?;
    let (mut lo, mut hi, mut checked) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for row in trace.rows.iter().filter(|r| r[0] >= 0.5) {
        lo = lo.min(row[normal]);
        hi = hi.max(row[normal]);
        checked += 1;
    }
    ensure(checked > 0 && lo >= 1.0 && hi <= 80.0, || {
        format!("normal force range [{lo}, {hi}] N over {checked} samples")
    })?;
    Ok(format!(
        "20 triples within {:.4}% of the coupled-spring solution; demo normal force in [{lo:.2}, {hi:.2}] N after 0.5 s",
        100.0 * worst
    ))
}

fn boundary_conditions() -> Verdict {
    let mut checked = 0;
    let mut check = |ppt: &PhasePlaneTrajectory, label: &str| -> Result<(), String> {
        check_boundary(ppt).map_err(|e| format!("{label}: {e}"))?;
        checked += 1;
        Ok(())
    };
    let config = demo_config().map_err(fail)?;
    let dir = tempfile::tempdir().map_err(fail)?;
    let summary = run(
        &config,
        Mode::PlanCompare,
        &RunOptions {
            out_dir: Some(dir.path().into()),
            ..RunOptions::default()
        },
    )
    .map_err(fail)?;
    check(&summary.aware.ppt, "demo wrench-aware")?;
    check(
        &summary
            .comparison
            .as_ref()
            .ok_or("no comparison")?
            .blind
            .ppt,
        "demo wrench-blind",
    )?;
    let traj = &summary.aware.trajectory;
    ensure(traj.lambda.windows(2).all(|w| w[1] > w[0]), || {
        "resampled lambda(t) not strictly increasing".into()
    })?;
    check(&bang_bang_time(200, 400)?.1, "bang-bang")?;

    let model = sine_arm();
    let path = sine_path(101);
    let projected = project_dynamics(&model, &path).map_err(fail)?;
    let limits = raw_limits(&[-60.0, -25.0], &[60.0, 25.0], path.lambda());
    let bounds = JointVelocityBounds::symmetric(&[2.0, 2.0]).map_err(fail)?;
    let ceiling = PathSpeedLimit {
        path: &path,
        bounds: &bounds,
    };
    let grid = PhaseGrid::new(120, 600, path.length(), 3.0).map_err(fail)?;
    let table = ColumnTable::build(&projected, &limits, &ceiling, grid).map_err(fail)?;
    check(&plan_table(&table).map_err(fail)?, "sine path")?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..50 {
        let (table, label) = random_instance(&mut rng);
        if let Ok(ppt) = plan_table(&table) {
            check(&ppt, &format!("random {i} ({label})"))?;
        }
    }
    Ok(format!(
        "{checked} trajectories start and end at rest with lambda strictly increasing"
    ))
}

fn determinism() -> Verdict {
    let config = demo_config().map_err(fail)?;
    let mut compared = 0;
    for mode in [Mode::PlanCompare, Mode::PlanSimulate] {
        let a = tempfile::tempdir().map_err(fail)?;
        let b = tempfile::tempdir().map_err(fail)?;
        for dir in [&a, &b] {
            run(
                &config,
                mode,
                &RunOptions {
                    out_dir: Some(dir.path().into()),
                    ..RunOptions::default()
                },
            )
            .map_err(fail)?;
        }
        let mut names: Vec<String> = std::fs::read_dir(a.path())
            .map_err(fail)?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".csv"))
            .collect();
        names.sort();
        for name in &names {
            let x = std::fs::read(a.path().join(name)).map_err(fail)?;
            let y = std::fs::read(b.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
            ensure(x == y, || format!("{name} differs between runs"))?;
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} CSV artifacts byte-identical across repeated runs"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("projection identity", projection_identity),
        ("zero-wrench reduction", zero_wrench_reduction),
        ("bang-bang oracle", bang_bang_oracle),
        ("brute-force DP equivalence", brute_force_equivalence),
        ("torque-envelope respect", torque_envelope),
        ("phase-plane dominance direction", dominance_direction),
        (
            "admittance steady state and force bounds",
            admittance_steady_state,
        ),
        ("boundary conditions", boundary_conditions),
        ("determinism and idempotence", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
