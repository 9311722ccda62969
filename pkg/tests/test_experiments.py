import json

import numpy as np
import pytest

from sperk.experiments import (
    ResultTable,
    ShockTrackingError,
    error_norm,
    estimate_convergence_order,
    estimate_shock_speed,
    experiment_config,
    run_experiment,
    shock_location,
)
from sperk.integrators import RunResult, tv_seminorm
from sperk.problems import advdiff_b, make_problem
from sperk.spatial import GridField


def test_make_problem_examples():
    p = make_problem("burgers", ic="smooth")
    x, u = p.grid.x, p.grid.values[:, 0]
    assert x[0] == -1.0
    i0 = np.flatnonzero(x == 0.0)[0]
    assert u[i0] == 0.0
    smooth = lambda s: 0.5 - 0.5 * np.cos(np.pi * (s - np.sin(2 * np.pi * s) / (4 * np.pi)))  # noqa: E731
    assert abs(smooth(-1.0) - smooth(1.0)) < 1e-15
    assert abs(advdiff_b(0.75) - 103.4) < 1e-12
    assert tv_seminorm(make_problem("burgers_square", 40).grid) == 2.0


def test_make_problem_configuration():
    sq = make_problem("burgers_square")
    assert sq.params["kappa"] == 1.0 and sq.grid.n_nodes == 40
    step = make_problem("burgers_step2", 100)
    assert step.params["kappa"] == 0.5 and step.grid.boundary == "extrapolate"
    assert step.grid.values[0, 0] == 2.0 and step.grid.values[-1, 0] == 0.0
    ad = make_problem("advdiff", 250)
    assert abs(ad.grid.dx - 1 / 250) < 1e-17
    assert abs(ad.grid.values[:, 0].max() - 2.1) < 1e-3
    eu = make_problem("euler_shu_osher", 400)
    assert eu.grid.components == 3 and eu.params["gamma"] == 1.4
    assert eu.grid.x_lo == -5.0 and eu.grid.x_hi == 5.0
    with pytest.raises(KeyError):
        make_problem("kdv")
    with pytest.raises(KeyError):
        make_problem("burgers", ic="triangle")
    with pytest.raises(ValueError):
        make_problem("burgers_smooth", splitting="roe")


def test_tv_examples():
    assert tv_seminorm(GridField(np.full(8, 4.0), 0.0, 1.0)) == 0
    assert tv_seminorm(GridField(np.linspace(-1, 2, 9), 0.0, 1.0, "extrapolate")) == 3.0


def test_error_norm_examples():
    g = GridField(np.zeros(10), -1.0, 1.0)
    assert error_norm(g, g) == 0
    r = np.zeros(10)
    r[3] = 0.25
    assert error_norm(g, r, "max") == 0.25
    e = 1e-3
    assert abs(error_norm(g, np.full(10, e), "l2") - e * np.sqrt(2)) < 1e-18
    with pytest.raises(ValueError):
        error_norm(g, np.zeros(9))
    with pytest.raises(ValueError):
        error_norm(g, g, "h1")


def test_order_examples():
    assert abs(estimate_convergence_order([1, 1 / 32]) - 5.0) < 1e-12
    assert abs(estimate_convergence_order([8e-3, 1e-3, 1.25e-4]) - 3.0) < 1e-12
    assert abs(estimate_convergence_order([1.29e-7, 4.09e-9, 1.29e-10]) - 4.99) < 0.01
    with pytest.raises(ValueError):
        estimate_convergence_order([1e-3, 0.0])
    with pytest.raises(ValueError):
        estimate_convergence_order([1e-3])


def test_order_matches_pairwise_average():
    errs = np.array([3e-4, 2.1e-5, 2.3e-6])
    pairwise = np.mean(np.log2(errs[:-1] / errs[1:]))
    assert abs(estimate_convergence_order(errs) - pairwise) < 0.05


def test_shock_speed_synthetic():
    grid = GridField(np.zeros(200), -1.0, 1.0, "extrapolate")
    x, dx = grid.x, grid.dx
    times = np.linspace(0, 0.5, 51)
    # one-cell linear ramp from 2 to 0 centred on x = t: linear interpolation recovers t exactly
    frames = [(t, np.clip(1 - (x - t) / dx, 0, 2)[:, None]) for t in times]
    run = RunResult(grid.with_values(frames[-1][1]), list(times), {}, frames=frames)
    assert abs(estimate_shock_speed(run, 1.0, x) - 1.0) < 1e-6


def test_shock_speed_tracking_error():
    x = np.linspace(-1, 1, 50)
    frames = [(t, np.full((50, 1), 2.0)) for t in (0.0, 0.1, 0.2)]
    run = RunResult(GridField(np.zeros(50), -1.0, 1.0), [0.0, 0.1, 0.2], {}, frames=frames)
    with pytest.raises(ShockTrackingError, match="frame"):
        estimate_shock_speed(run, 1.0, x)


def test_shock_location_uses_largest_pressure_jump():
    x = np.linspace(0, 1, 11)
    p = np.ones(11)
    p[:6] = 5.0
    assert abs(shock_location(np.ones(11), p, x) - 0.55) < 1e-12


def test_experiment_config_defaults_and_errors():
    cfg = experiment_config("convergence")
    assert cfg["cfl"] == [1.2] and cfg["epsilon"] == 1e-6 and cfg["widen"] == 4
    assert cfg["C"] == 500 and cfg["theta"] == 0.06 and cfg["seed"] == 42
    assert cfg["masks"] == ["constant(1)", "constant(0)", "heaviside(0)", "random(seed=42)"]
    assert experiment_config("shu_osher")["mask"] == "second_diff(C=500) | widen(4)"
    assert experiment_config("tv_scan")["mask"] == "weno(theta=0.06) | widen(4)"
    with pytest.raises(KeyError):
        experiment_config("tv_scan", {"ref_factor": 2})
    with pytest.raises(ValueError):
        experiment_config("plot")


def test_result_table_csv_and_json(tmp_path):
    t = ResultTable("tv_scan", "burgers_square", ["scheme", "cfl", "ok"], [["flux", 0.1, True]],
                    {"seed": 42}, {"x": np.float64(1.5), "bad": float("nan")})
    assert t.to_csv() == "scheme,cfl,ok\nflux,0.10000000000000001,true\n"
    side = json.loads(t.to_json())
    assert side["config"] == {"seed": 42} and side["metadata"]["bad"] == "nan"
    csv_path, json_path = t.write(tmp_path, "STAMP")
    assert csv_path.name == "tv_scan_burgers_square_STAMP.csv"
    assert json_path.name == "tv_scan_burgers_square_STAMP.json"
    assert t.where(scheme="flux")[0]["cfl"] == 0.1 and t.column("ok") == [True]


def test_small_tv_scan_rows_are_ordered():
    t = run_experiment("tv_scan", {"cfl": [1.0, 0.5], "schemes": ["single:bhat", "flux"], "t_final": 0.05})
    assert [(r[0], r[1]) for r in t.rows] == [("single:bhat", 0.5), ("single:bhat", 1.0), ("flux", 0.5),
                                               ("flux", 1.0)]
    assert all(r[-1] == "completed" for r in t.rows)


def test_parallel_scan_matches_serial():
    cfg = {"cfl": [0.8, 1.6], "schemes": ["single:b", "equation"], "t_final": 0.05}
    serial = run_experiment("tv_scan", cfg)
    pooled = run_experiment("tv_scan", {**cfg, "jobs": 2})
    assert serial.to_csv() == pooled.to_csv()


def test_small_convergence_table():
    t = run_experiment("convergence", {"n_nodes": [40, 80], "masks": ["constant(1)"], "modes": ["flux"],
                                       "t_final": 0.05, "ref_factor": 4})
    assert t.columns == ["mode", "mask", "n_nodes", "dx", "error", "est_order", "status"]
    errs = t.column("error")
    assert errs[1] < errs[0]
    assert t.metadata["reference"]["n_nodes"] == 320


def test_small_dt_scan_verdicts():
    t = run_experiment("dt_scan", {"dt": [1e-5, 1e-3], "schemes": ["single:bhat"], "t_final": 0.002,
                                   "with_errors": False})
    verdicts = t.column("verdict")
    assert verdicts[0] == "stable" and verdicts[1] in ("unstable", "diverged")


def test_small_shu_osher_run():
    t = run_experiment("shu_osher", {"n_nodes": [100], "t_final": 0.1, "ref_n_nodes": 200})
    m = t.metadata
    assert m["status"] == "completed" and m["density_finite"]
    assert 0 <= m["chi_zero_fraction"] < 1
    assert m["initial_condition"]["left_state_rho_v_p"] == [3.857143, 2.629369, 10.33333]
    assert t.columns == ["x", "density", "velocity", "pressure", "chi"]
