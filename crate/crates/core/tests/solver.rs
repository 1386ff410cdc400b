mod common;

use common::*;
use h2_storage::dynamics::{feasible_actions, sell_bound, State};
use h2_storage::solver::*;
use h2_storage::{Error, GridResolution, SystemConfig};

fn identity(n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        p[i * n + i] = 1.0;
    }
    p
}

/// Three days, mixed shortages and overages, a two-price chain.
fn three_day_model(alpha: f64) -> h2_storage::Model {
    let mut cfg = small_config(3);
    cfg.alpha = alpha;
    tiny_model(
        cfg,
        small_resolution(),
        &[
            vec![(-1, 0.4), (0, 0.6)],
            vec![(0, 0.3), (1, 0.7)],
            vec![(-1, 0.5), (1, 0.5)],
        ],
        vec![0.7, 0.3, 0.4, 0.6],
    )
}

#[test]
fn myopic_backup_sells_to_the_cable_limit() {
    let mut cfg = SystemConfig::base_case();
    cfg.periods = 1;
    let res = GridResolution::base_case();
    let model = tiny_model(cfg, res, &[vec![(0, 1.0)]], identity(31));
    let n = model.grids.day_len(0);
    let mut v = vec![0.0; n];
    let mut p = vec![0i16; n];
    bellman_backup(&model, 0, &vec![0.0; n], &mut v, &mut p);
    let cell = model.grids.cell(0, 100, 0, 20);
    assert_eq!(model.grids.c[20], 60.0);
    assert_eq!(v[cell], 1800.0);
    assert_eq!(p[cell] as f64 * model.grids.du, 30.0);
}

#[test]
fn single_action_follows_the_successor() {
    let mut cfg = small_config(2);
    cfg.k_c = 0.0;
    let model = tiny_model(cfg, small_resolution(), &[vec![(0, 1.0)], vec![(0, 1.0)]], identity(2));
    let n = model.grids.day_len(1);
    let v_next: Vec<f64> = (0..n).map(|i| (i * 7 % 5) as f64 * 11.5).collect();
    let mut v = vec![0.0; n];
    let mut p = vec![0i16; n];
    bellman_backup(&model, 0, &v_next, &mut v, &mut p);
    assert_eq!(v, v_next);
    assert!(p.iter().all(|&k| k == 0));
}

#[test]
fn terminal_shift_passes_through() {
    let model = three_day_model(0.5);
    let n = model.grids.day_len(0);
    let mut v0 = ValueTable::zeros(&model.grids);
    let mut p0 = PolicyTable::zeros(&model.grids);
    solve_year(&model, &vec![0.0; n], &mut v0, &mut p0);
    let mut v1 = ValueTable::zeros(&model.grids);
    let mut p1 = PolicyTable::zeros(&model.grids);
    solve_year(&model, &vec![250.0; n], &mut v1, &mut p1);
    for (a, b) in v0.days[0].iter().zip(&v1.days[0]) {
        assert!((b - a - 250.0).abs() < 1e-9);
    }
    assert_eq!(p0.steps, p1.steps);
}

#[test]
fn degenerate_model_has_zero_gain() {
    let mut cfg = small_config(4);
    cfg.k_c = 0.0;
    let res = GridResolution {
        c_max: 0.0,
        ..small_resolution()
    };
    let model = tiny_model(cfg, res, &vec![vec![(0, 1.0)]; 4], vec![1.0]);
    let sol = solve_periodic(&model, &SolveOptions::default()).unwrap();
    assert_eq!(sol.report.g, 0.0);
    assert_eq!(sol.report.iterations, 2);
    assert!(sol.report.converged);
}

#[test]
fn gain_does_not_depend_on_terminal_values() {
    let model = three_day_model(0.5);
    let opts = SolveOptions {
        epsilon: 1e-8,
        ..SolveOptions::default()
    };
    let a = solve_periodic(&model, &opts).unwrap();
    let b = solve_periodic_from(&model, vec![500.0; model.grids.day_len(0)], &opts).unwrap();
    assert!(a.report.converged && b.report.converged);
    assert!((a.report.g - b.report.g).abs() <= opts.epsilon);
    assert_eq!(a.policy.steps, b.policy.steps);
}

#[test]
fn fixed_iteration_mode_runs_exactly() {
    let model = three_day_model(1.0);
    let sol = solve_periodic(&model, &SolveOptions::fixed(7)).unwrap();
    assert_eq!(sol.report.iterations, 7);
    assert_eq!(sol.report.span_trace.len(), 7);
}

#[test]
fn options_are_validated() {
    let model = three_day_model(1.0);
    let bad = SolveOptions {
        epsilon: 0.0,
        ..SolveOptions::default()
    };
    assert!(matches!(solve_periodic(&model, &bad), Err(Error::InvalidConfig { .. })));
}

#[test]
fn stored_actions_round_trip_and_reject_off_grid_states() {
    let model = three_day_model(0.5);
    let sol = solve_periodic(&model, &SolveOptions::default()).unwrap();
    let g = &model.grids;
    for day in 0..3 {
        for xi in 0..g.nx() {
            for yi in 0..g.ny(day) {
                for ci in 0..g.nc() {
                    let state = State {
                        day,
                        x: g.x[xi],
                        y_bar: g.y_value(day, yi),
                        c: g.c[ci],
                    };
                    let u = sol.policy.action_at(&state).unwrap();
                    assert_eq!(u, sol.policy.get(day, xi, yi, ci));
                    assert!(feasible_actions(state.x, state.y_bar, &model.cfg, g).contains(&u));
                }
            }
        }
    }
    let off = State {
        day: 0,
        x: 5.0,
        y_bar: 0.0,
        c: 0.0,
    };
    assert!(matches!(sol.policy.action_at(&off), Err(Error::OffGrid(_))));
    let off_day = State { day: 3, x: 0.0, ..off };
    assert!(sol.policy.action_at(&off_day).is_err());
}

#[test]
fn tables_round_trip_through_binary_files() {
    let model = three_day_model(0.5);
    let sol = solve_periodic(&model, &SolveOptions::default()).unwrap();
    let mut vb = Vec::new();
    sol.values.write_to(&mut vb).unwrap();
    let mut pb = Vec::new();
    sol.policy.write_to(&mut pb).unwrap();

    let values = read_values(vb.as_slice()).unwrap();
    assert_eq!(values.days, sol.values.days);
    assert_eq!(values.grids, sol.values.grids);
    let policy = read_policy(pb.as_slice()).unwrap();
    assert_eq!(policy.steps, sol.policy.steps);

    assert!(matches!(read_policy(vb.as_slice()), Err(Error::TableFormat(_))));
    assert!(read_values(&vb[..vb.len() - 3]).is_err());
    let mut bad = vb.clone();
    bad[0] = b'X';
    assert!(read_values(bad.as_slice()).is_err());
    let mut long = vb.clone();
    long.push(0);
    assert!(read_values(long.as_slice()).is_err());
}

#[test]
fn csv_export_filters_rows() {
    let model = three_day_model(0.5);
    let sol = solve_periodic(&model, &SolveOptions::default()).unwrap();
    let mut out = Vec::new();
    let n = write_policy_csv(&mut out, &sol.policy, Some(&sol.values), |d, _, _, _| d == 1).unwrap();
    assert_eq!(n, model.grids.day_len(1));
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("day,x,y_bar,c,u_star,value\n"));
    assert_eq!(text.lines().count(), n + 1);
    assert!(text.lines().skip(1).all(|l| l.starts_with("2,")));
}

#[test]
fn base_policy_buys_cheap_in_winter_and_sells_dear_in_summer() {
    let model = base_model();
    let sol = base_solution();
    let g = &model.grids;
    let winter = State {
        day: 0,
        x: 0.0,
        y_bar: g.y_value(0, g.y_index(0, -10.0).unwrap()),
        c: 0.0,
    };
    assert!(sol.policy.action_at(&winter).unwrap() < 0.0);

    let day = 180;
    let y = model.pmfs[day].quantile(0.75);
    assert!(y > 0.0);
    let summer = State {
        day,
        x: 1000.0,
        y_bar: y,
        c: 90.0,
    };
    let bound = (sell_bound(summer.x, y, &model.cfg) / g.du).floor() * g.du;
    assert_eq!(sol.policy.action_at(&summer).unwrap(), bound);
}

#[test]
fn base_solve_converges_and_is_feasible() {
    let sol = base_solution();
    let r = &sol.report;
    assert!(r.converged && r.iterations <= 200, "{r:?}");
    assert!(r.span <= 1e-3);
    for w in r.span_trace[1..].windows(2) {
        assert!(w[1] <= w[0], "{:?}", r.span_trace);
    }
    assert_eq!(audit_policy(&base_model().cfg, &sol.policy), 0);
}

#[test]
fn slice_rows_pick_quantiles() {
    let model = base_model();
    let rows = policy_slice_rows(model, &[0, 179], &[0.25, 0.75]);
    assert!(!rows.is_empty() && rows.len() <= 4);
    for (day, yi) in rows {
        let y = model.grids.y_value(day, yi);
        assert!(y == model.pmfs[day].quantile(0.25) || y == model.pmfs[day].quantile(0.75));
    }
}
