"""Experiment runners, error metrics and result tables.

Each runner takes a plain configuration dict (see ``DEFAULTS``), runs its
sub-runs serially or in a process pool, and returns a ``ResultTable`` whose
row order depends only on the configuration.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import logging
import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .integrators import RunResult, StepSpec, advance, total_mass, tv_seminorm
from .masks import MaskContext, MaskStrategy
from .problems import SemiDiscreteProblem, make_problem
from .spatial import GridField, euler_primitives
from .tableaux import builtin_pair

__all__ = [
    "DEFAULTS",
    "KINDS",
    "ResultTable",
    "SemiDiscreteProblem",
    "ShockTrackingError",
    "error_norm",
    "estimate_convergence_order",
    "estimate_shock_speed",
    "experiment_config",
    "make_problem",
    "run_experiment",
    "total_mass",
    "tv_seminorm",
]

log = logging.getLogger(__name__)

KINDS = ("run", "convergence", "tv_scan", "dt_scan", "shock_speed", "shu_osher")

_COMMON: dict[str, Any] = {
    "tableau": "pair75_53",
    "labels": ["b", "bhat"],
    "epsilon": 1e-6,
    "splitting": "local_lf",
    "kappa": None,
    "C": 500.0,
    "theta": 0.06,
    "widen": 4,
    "seed": 42,
    "jobs": 1,
}

# per-kind settings; a mask of None means the kind's default pipeline built from C / theta / widen
DEFAULTS: dict[str, dict[str, Any]] = {
    "run": {
        "problem": "burgers_smooth", "n_nodes": [320], "cfl": [1.2], "dt": [], "t_final": 0.25,
        "mode": "flux", "mask": None, "save_every": 0, "progress": False,
    },
    "convergence": {
        "problem": "burgers_smooth", "n_nodes": [320, 640, 1280], "cfl": [1.2], "t_final": 0.25,
        "modes": ["equation", "flux"], "masks": None, "ref_factor": 8, "ref_cfl": 0.5, "norm": "l2",
    },
    "tv_scan": {
        "problem": "burgers_square", "n_nodes": [40], "t_final": 0.5, "epsilon": 1e-30,
        "cfl": [0.2, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2, 1.4, 1.5, 1.6, 1.8, 2.0],
        "schemes": ["single:bhat", "single:b", "flux", "equation"], "mask": None,
    },
    "dt_scan": {
        "problem": "advdiff", "n_nodes": [250], "t_final": 0.1, "tableau": "pair32",
        "dt": [1.0e-5, 1.2e-5, 1.4e-5, 1.45e-5, 1.5e-5, 1.6e-5, 1.7e-5, 1.93e-5, 2.0e-5, 2.1e-5,
               2.5e-5, 3.0e-5, 4.0e-5, 5.0e-5, 6.0e-5],
        "schemes": ["single:bhat", "single:b", "equation", "flux"], "mask": "coef_threshold(0.005)",
        "ref_tableau": "pair42", "ref_label": "bhat", "dt_ref": 1e-7, "with_errors": True,
        "verdict_factor": 10.0,
    },
    "shock_speed": {
        "problem": "burgers_step2", "n_nodes": [200, 400, 800], "cfl": [1.2], "t_final": 0.5,
        "modes": ["equation", "flux"], "mask": "value_window(0.01, 1.99)", "splitting": "upwind",
        "level": 1.0,
    },
    "shu_osher": {
        "problem": "euler_shu_osher", "n_nodes": [400], "cfl": [1.2], "t_final": 1.8, "mode": "equation",
        "mask": None, "ref_n_nodes": 6400, "ref_label": "bhat",
    },
}


def experiment_config(kind: str, overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """Effective configuration of ``kind``: common defaults, kind defaults, then overrides."""
    if kind not in KINDS:
        raise ValueError(f"unknown experiment {kind!r}; valid: {', '.join(KINDS)}")
    cfg = {**_COMMON, **DEFAULTS[kind]}
    for key, value in (overrides or {}).items():
        if key not in cfg:
            raise KeyError(f"{kind} does not take a {key!r} setting")
        cfg[key] = value
    if "mask" in cfg and cfg["mask"] is None:
        cfg["mask"] = _default_mask(kind, cfg)
    if "masks" in cfg and cfg["masks"] is None:
        cfg["masks"] = ["constant(1)", "constant(0)", "heaviside(0)", f"random(seed={cfg['seed']})"]
    return cfg


def _default_mask(kind: str, cfg: dict[str, Any]) -> str:
    if kind == "shu_osher" or cfg.get("problem", "").startswith("euler"):
        return f"second_diff(C={cfg['C']:g}) | widen({cfg['widen']})"
    if cfg.get("problem") == "advdiff":
        return "coef_threshold(0.005)"
    return f"weno(theta={cfg['theta']:g}) | widen({cfg['widen']})"


# ---------------------------------------------------------------------------
# metrics

class ShockTrackingError(RuntimeError):
    pass


def error_norm(state: GridField | np.ndarray, reference: GridField | np.ndarray, norm: str = "l2",
               dx: float | None = None) -> float:
    """``l2 = sqrt(dx sum e^2)`` or ``max = max |e|`` over all nodes and components."""
    u = state.values if isinstance(state, GridField) else np.asarray(state, dtype=float)
    r = reference.values if isinstance(reference, GridField) else np.asarray(reference, dtype=float)
    if u.ndim == 2 and r.ndim == 1 and u.shape[1] == 1:
        r = r[:, None]
    if u.shape != r.shape:
        raise ValueError(f"grid mismatch: {u.shape} vs {r.shape}")
    e = u - r
    if norm == "max":
        return float(np.max(np.abs(e)))
    if norm != "l2":
        raise ValueError("norm must be 'l2' or 'max'")
    if dx is None:
        if not isinstance(state, GridField):
            raise ValueError("l2 norm needs dx for bare arrays")
        dx = state.dx
    return float(math.sqrt(dx * np.sum(e**2)))


def estimate_convergence_order(errors: Sequence[float], dxs: Sequence[float] | None = None) -> float:
    """Least-squares slope of log(error) against log(dx); dx halves when ``dxs`` is omitted."""
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        raise ValueError("need at least two errors")
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise ValueError("convergence order is undefined for zero, negative or non-finite errors")
    h = 0.5 ** np.arange(e.size) if dxs is None else np.asarray(dxs, dtype=float)
    if h.shape != e.shape:
        raise ValueError("errors and dxs differ in length")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def _crossing(x: np.ndarray, u: np.ndarray, level: float) -> float | None:
    s = u - level
    idx = np.flatnonzero((s[:-1] * s[1:] <= 0) & (u[:-1] != u[1:]))
    if idx.size == 0:
        return None
    i = idx[-1]
    return float(x[i] + (level - u[i]) / (u[i + 1] - u[i]) * (x[i + 1] - x[i]))


def estimate_shock_speed(run: RunResult, level: float = 1.0, x: np.ndarray | None = None,
                         component: int = 0) -> float:
    """Slope of the rightmost ``level`` crossing over the saved frames in the last half of the run."""
    if not run.completed:
        raise ShockTrackingError("cannot track a shock in a run that did not complete")
    if not run.frames:
        raise ShockTrackingError("run has no saved frames; use save_every > 0")
    x = run.final.x if x is None else x
    t_end = run.frames[-1][0]
    ts, xs = [], []
    for k, (t, values) in enumerate(run.frames):
        if t < 0.5 * t_end:
            continue
        pos = _crossing(x, values[:, component], level)
        if pos is None:
            raise ShockTrackingError(f"no crossing of level {level} in frame {k} (t={t:.6g})")
        ts.append(t)
        xs.append(pos)
    if len(ts) < 2:
        raise ShockTrackingError("fewer than two frames in the last half of the run")
    return float(np.polyfit(ts, xs, 1)[0])


def shock_location(density: np.ndarray, pressure: np.ndarray, x: np.ndarray) -> float:
    """Midpoint of the largest pressure jump (contact waves carry no pressure jump)."""
    i = int(np.argmax(np.abs(np.diff(pressure))))
    return float(0.5 * (x[i] + x[i + 1]))


# ---------------------------------------------------------------------------
# result tables

@dataclass
class ResultTable:
    kind: str
    problem: str
    columns: list[str]
    rows: list[list[Any]]
    config: dict[str, Any] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return bool(self.metadata.get("diverged", False))

    def column(self, name: str) -> list[Any]:
        j = self.columns.index(name)
        return [row[j] for row in self.rows]

    def where(self, **match) -> list[dict[str, Any]]:
        out = []
        for row in self.rows:
            rec = dict(zip(self.columns, row))
            if all(rec[k] == v for k, v in match.items()):
                out.append(rec)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def sidecar(self) -> dict[str, Any]:
        return {"kind": self.kind, "problem": self.problem, "columns": self.columns,
                "config": _jsonable(self.config), "metadata": _jsonable(self.metadata)}

    def to_json(self) -> str:
        return json.dumps(self.sidecar(), indent=2, sort_keys=True)

    def write(self, out_dir: str | os.PathLike, stamp: str | None = None) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stamp = stamp or datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
        base = out / f"{self.kind}_{self.problem}_{stamp}"
        csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json() + "\n")
        return csv_path, json_path


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# sub-runs (top-level so a process pool can pickle them)

def problem_for(cfg: dict[str, Any], n_nodes: int) -> SemiDiscreteProblem:
    name = cfg["problem"]
    params: dict[str, Any] = {}
    if name.startswith("burgers") or name == "advection":
        params["epsilon"] = cfg["epsilon"]
        if name.startswith("burgers"):
            params["splitting"] = cfg["splitting"]
            if cfg["kappa"] is not None:
                params["kappa"] = cfg["kappa"]
    elif name == "euler_shu_osher":
        params["epsilon"] = cfg["epsilon"]
        params["splitting"] = cfg["splitting"]
    return make_problem(name, n_nodes, **params)


def _scheme(token: str, labels: Sequence[str]) -> tuple[str, tuple[str, ...]]:
    if token.startswith("single:"):
        return "single", (token.split(":", 1)[1],)
    if token in ("equation", "flux", "blended"):
        return token, tuple(labels)
    raise ValueError(f"unknown scheme {token!r}; use single:<label>, equation, flux or blended")


def _strategy_for(mode: str, mask: str | None) -> MaskStrategy | None:
    if mode == "single":
        return None
    strategy = MaskStrategy.parse(mask)
    if mode != "flux" and strategy.location == "interface":
        raise ValueError(f"{mode} partitioning needs a node mask, got {mask!r}")
    return strategy


@dataclass
class _Task:
    cfg: dict[str, Any]
    n_nodes: int
    mode: str
    labels: tuple[str, ...]
    mask: str | None = None
    cfl: float | None = None
    dt: float | None = None
    tableau: str | None = None
    save_every: int = 0
    keep_final: bool = False


def _execute(task: _Task) -> dict[str, Any]:
    cfg = task.cfg
    problem = problem_for(cfg, task.n_nodes)
    tab = builtin_pair(task.tableau or cfg["tableau"])
    strategy = _strategy_for(task.mode, task.mask)
    seed = cfg["seed"]
    if strategy is not None and strategy.is_random:
        seed = int(strategy.params["seed"])
    started = _time.perf_counter()
    run = advance(problem, StepSpec(tab, task.mode, task.labels, task.dt), strategy, cfg["t_final"],
                  task.cfl, seed=seed, save_every=task.save_every)
    tv = np.asarray(run.diagnostics["tv"])
    out = {
        "status": run.status,
        "steps": run.steps,
        "t": run.times[-1],
        "tv_increase": float(np.max(tv) - tv[0]),
        "tv_change": float(tv[-1] - tv[0]),
        "mass_drift": float(abs(run.diagnostics["mass"][-1] - run.diagnostics["mass"][0])),
        "mass_change": float(run.diagnostics["mass"][-1] - run.diagnostics["mass"][0]),
        "max_abs": float(run.diagnostics["max_abs"][-1]),
        "peak_abs": float(np.max(run.diagnostics["max_abs"])),
        "chi_mean": float(np.mean(run.diagnostics["chi_fraction"])),
        "failure": run.failure,
        "seconds": _time.perf_counter() - started,
    }
    if task.keep_final:
        out["final"] = run.final.values
    if task.save_every:
        out["run"] = run
    return out


def _map(fn: Callable, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# runners

def run_single(cfg: dict[str, Any]) -> ResultTable:
    n = int(cfg["n_nodes"][0])
    mode, labels = _scheme(cfg["mode"] if cfg["mode"] != "single" else f"single:{cfg['labels'][0]}",
                           cfg["labels"])
    dt = float(cfg["dt"][0]) if cfg["dt"] else None
    problem = problem_for(cfg, n)
    tab = builtin_pair(cfg["tableau"])
    strategy = _strategy_for(mode, cfg["mask"])
    seed = int(strategy.params["seed"]) if strategy is not None and strategy.is_random else cfg["seed"]
    run = advance(problem, StepSpec(tab, mode, labels, dt), strategy, cfg["t_final"],
                  None if dt else float(cfg["cfl"][0]), seed=seed, save_every=int(cfg["save_every"]),
                  progress=bool(cfg.get("progress", False)))
    state = run.final
    comps = state.components
    names = ["u"] if comps == 1 else [f"u{k}" for k in range(comps)]
    columns = ["x"] + names
    rows = [[float(xi)] + [float(v) for v in vals] for xi, vals in zip(state.x, state.values)]
    tv = run.diagnostics["tv"]
    meta = {
        "status": run.status, "failure": run.failure, "steps": run.steps, "t_final_reached": run.times[-1],
        "mass_initial": run.diagnostics["mass"][0], "mass_final": run.diagnostics["mass"][-1],
        "tv_initial": tv[0], "tv_final": tv[-1], "tv_increase": max(tv) - tv[0],
        "chi_fraction_mean": float(np.mean(run.diagnostics["chi_fraction"])),
        "problem": problem.describe(), "diverged": not run.completed,
    }
    return ResultTable("run", cfg["problem"], columns, rows, cfg, meta)


def run_convergence(cfg: dict[str, Any]) -> ResultTable:
    ns = sorted(int(n) for n in cfg["n_nodes"])
    n_ref = int(cfg["ref_factor"]) * ns[-1]
    labels = tuple(cfg["labels"])
    ref_task = _Task(cfg, n_ref, "single", (labels[0],), cfl=float(cfg["ref_cfl"]), keep_final=True)
    tasks = [ref_task]
    keys = []
    for mode in cfg["modes"]:
        for mask in cfg["masks"]:
            for n in ns:
                tasks.append(_Task(cfg, n, mode, labels, mask, cfl=float(cfg["cfl"][0]), keep_final=True))
                keys.append((mode, mask, n))
    results = _map(_execute, tasks, int(cfg["jobs"]))
    ref = results[0]
    if ref["status"] != "completed":
        raise RuntimeError(f"reference run diverged: {ref['failure']}")
    x_lo, x_hi = problem_for(cfg, ns[0]).grid.x_lo, problem_for(cfg, ns[0]).grid.x_hi
    errors: dict[tuple[str, str], list[float]] = {}
    rows = []
    for (mode, mask, n), res in zip(keys, results[1:]):
        if n_ref % n:
            raise ValueError(f"reference size {n_ref} is not a multiple of {n}")
        dx = (x_hi - x_lo) / n
        if res["status"] == "completed":
            err = error_norm(res["final"], ref["final"][:: n_ref // n], cfg["norm"], dx)
        else:
            err = float("nan")
        errors.setdefault((mode, mask), []).append(err)
        rows.append([mode, mask, n, dx, err, res["status"]])
    orders = {}
    for key, errs in errors.items():
        try:
            orders[key] = estimate_convergence_order(errs)
        except ValueError:
            orders[key] = float("nan")
    for row in rows:
        row.insert(5, orders[(row[0], row[1])])
    meta = {"reference": {"n_nodes": n_ref, "label": labels[0], "cfl": cfg["ref_cfl"],
                          "restriction": "vertex-nested injection"},
            "orders": {f"{m}|{k}": v for (m, k), v in orders.items()},
            "diverged": any(row[-1] != "completed" for row in rows)}
    return ResultTable("convergence", cfg["problem"],
                       ["mode", "mask", "n_nodes", "dx", "error", "est_order", "status"], rows, cfg, meta)


def run_tv_scan(cfg: dict[str, Any]) -> ResultTable:
    n = int(cfg["n_nodes"][0])
    keys, tasks = [], []
    for scheme in cfg["schemes"]:
        mode, labels = _scheme(scheme, cfg["labels"])
        mask = cfg["mask"] if mode != "single" else None
        if mode == "flux" and mask and MaskStrategy.parse(mask).location == "node":
            mask = mask + " | to_interface"
        for cfl in sorted(float(c) for c in cfg["cfl"]):
            tasks.append(_Task(cfg, n, mode, labels, mask, cfl=cfl))
            keys.append((scheme, cfl))
    results = _map(_execute, tasks, int(cfg["jobs"]))
    rows = [[scheme, cfl, r["tv_increase"], r["tv_change"], r["steps"], r["status"]]
            for (scheme, cfl), r in zip(keys, results)]
    return ResultTable("tv_scan", cfg["problem"],
                       ["scheme", "cfl", "tv_increase", "tv_final_change", "steps", "status"], rows, cfg,
                       {"tv_initial": tv_seminorm(problem_for(cfg, n).grid)})


def rk_reference(problem: SemiDiscreteProblem, t_final: float, dt: float, tableau: str = "pair42",
                 label: str = "bhat") -> np.ndarray:
    """Plain explicit RK solution of the semi-discrete system on raw arrays (no masks, no diagnostics)."""
    tab = builtin_pair(tableau)
    a, b = tab.a_matrix, tab.weights(label)
    u = problem.grid.values.copy()
    n_steps = max(1, int(math.ceil(t_final / dt - 1e-9)))
    h = t_final / n_steps
    s = tab.stages
    k = [None] * s
    for _ in range(n_steps):
        for j in range(s):
            y = u
            for m in range(j):
                if a[j, m] != 0.0:
                    y = y + (h * a[j, m]) * k[m]
            k[j] = problem.rhs(y)
        for j in range(s):
            if b[j] != 0.0:
                u = u + (h * b[j]) * k[j]
    return u


def _dt_reference(cfg: dict[str, Any]) -> np.ndarray:
    keys = ("problem", "epsilon", "splitting", "kappa", "t_final", "dt_ref", "ref_tableau", "ref_label")
    return _cached_reference(int(cfg["n_nodes"][0]), tuple(cfg.get(k) for k in keys)).copy()


@functools.lru_cache(maxsize=4)
def _cached_reference(n: int, key: tuple) -> np.ndarray:
    problem, epsilon, splitting, kappa, t_final, dt_ref, ref_tableau, ref_label = key
    cfg = {"problem": problem, "epsilon": epsilon, "splitting": splitting, "kappa": kappa}
    return rk_reference(problem_for(cfg, n), t_final, float(dt_ref), ref_tableau, ref_label)


def run_dt_scan(cfg: dict[str, Any]) -> ResultTable:
    n = int(cfg["n_nodes"][0])
    u0 = problem_for(cfg, n).grid.values
    u0_max = float(np.max(np.abs(u0)))
    # an error as large as the initial variation means the run carries no information
    error_tol = 0.5 * float(np.max(u0) - np.min(u0))
    keys, tasks = [], []
    for scheme in cfg["schemes"]:
        mode, labels = _scheme(scheme, cfg["labels"])
        mask = cfg["mask"] if mode != "single" else None
        if mode == "flux" and mask and MaskStrategy.parse(mask).location == "node":
            mask = mask + " | to_interface"
        for dt in sorted(float(d) for d in cfg["dt"]):
            tasks.append(_Task(cfg, n, mode, labels, mask, dt=dt, keep_final=True))
            keys.append((scheme, dt))
    results = _map(_execute, tasks, int(cfg["jobs"]))
    ref = _dt_reference(cfg) if cfg["with_errors"] else None
    rows = []
    for (scheme, dt), r in zip(keys, results):
        if r["status"] != "completed":
            verdict, err = "diverged", float("nan")
        else:
            err = error_norm(r["final"], ref, "max") if ref is not None else float("nan")
            grew = r["max_abs"] > cfg["verdict_factor"] * u0_max
            verdict = "unstable" if grew or err > error_tol else "stable"
        rows.append([scheme, dt, verdict, r["max_abs"], err, r["steps"], r["status"]])
    rule = f"stable iff completed, final max|u| <= {cfg['verdict_factor']:g} max|u0|"
    if ref is not None:
        rule += f" and max-norm error <= {error_tol:g} (half the range of u0)"
    meta = {"verdict_rule": rule, "u0_max": u0_max, "error_tol": error_tol if ref is not None else None,
            "reference": {"tableau": cfg["ref_tableau"], "label": cfg["ref_label"], "dt": cfg["dt_ref"]}
            if cfg["with_errors"] else None}
    return ResultTable("dt_scan", cfg["problem"],
                       ["scheme", "dt", "verdict", "final_max_abs", "max_error", "steps", "status"],
                       rows, cfg, meta)


def run_shock_speed(cfg: dict[str, Any]) -> ResultTable:
    ns = sorted(int(n) for n in cfg["n_nodes"])
    labels = tuple(cfg["labels"])
    keys, tasks = [], []
    for mode in cfg["modes"]:
        m, lbl = _scheme(mode, labels)
        mask = cfg["mask"] if m != "single" else None
        for n in ns:
            tasks.append(_Task(cfg, n, m, lbl, mask, cfl=float(cfg["cfl"][0]), save_every=1))
            keys.append((mode, n))
    results = _map(_execute, tasks, int(cfg["jobs"]))
    rows = []
    for (mode, n), r in zip(keys, results):
        speed = float("nan")
        if r["status"] == "completed":
            try:
                speed = estimate_shock_speed(r["run"], float(cfg["level"]))
            except ShockTrackingError as exc:
                log.warning("%s N=%d: %s", mode, n, exc)
        # constant end states: the boundary fluxes are exact, so any other mass change is a defect
        p = problem_for(cfg, n)
        u0 = p.grid.values
        inflow = float((p.point_flux(u0[0]) - p.point_flux(u0[-1]))[0]) * r["t"]
        defect = r["mass_change"] - inflow if r["status"] == "completed" else float("nan")
        rows.append([mode, n, speed, abs(speed - 1.0), defect, r["chi_mean"], r["status"]])
    return ResultTable("shock_speed", cfg["problem"],
                       ["mode", "n_nodes", "speed", "speed_error", "mass_defect", "chi_mean", "status"],
                       rows, cfg, {"exact_speed": 1.0, "level": cfg["level"],
                                   "diverged": any(row[-1] != "completed" for row in rows)})


def run_shu_osher(cfg: dict[str, Any]) -> ResultTable:
    n = int(cfg["n_nodes"][0])
    labels = tuple(cfg["labels"])
    mode, lbl = _scheme(cfg["mode"] if cfg["mode"] != "single" else f"single:{labels[0]}", labels)
    main = _Task(cfg, n, mode, lbl, cfg["mask"] if mode != "single" else None, cfl=float(cfg["cfl"][0]),
                 keep_final=True)
    tasks = [main]
    n_ref = int(cfg["ref_n_nodes"])
    if n_ref > 0:
        tasks.append(_Task(cfg, n_ref, "single", (cfg["ref_label"],), cfl=float(cfg["cfl"][0]),
                           keep_final=True))
    results = _map(_execute, tasks, int(cfg["jobs"]))
    res = results[0]
    problem = problem_for(cfg, n)
    gamma = problem.params["gamma"]
    x = problem.grid.x
    final = problem.grid.with_values(res["final"])
    rho, vel, p = euler_primitives(final.values, gamma)
    strategy = _strategy_for(mode, cfg["mask"]) if mode != "single" else None
    if strategy is not None:
        chi = strategy(MaskContext(problem, final)).values
    else:
        chi = np.ones(n)
    meta: dict[str, Any] = {
        "status": res["status"], "failure": res["failure"], "steps": res["steps"],
        "diverged": res["status"] != "completed",
        "density_finite": bool(np.all(np.isfinite(rho))),
        "chi_zero_fraction": float(np.mean(chi == 0)),
        "shock_location": shock_location(rho, p, x),
        "initial_condition": {"left_state_rho_v_p": [3.857143, 2.629369, 10.33333], "x_split": -4.0,
                              "right_density": "1 + 0.2 sin(5x)", "source": "Shu-Osher literature values"},
    }
    if n_ref > 0:
        ref = results[1]
        meta["reference"] = {"n_nodes": n_ref, "label": cfg["ref_label"], "status": ref["status"]}
        if ref["status"] == "completed":
            rp = problem_for(cfg, n_ref)
            r_rho, _, r_p = euler_primitives(ref["final"], gamma)
            loc = shock_location(r_rho, r_p, rp.grid.x)
            meta["reference"]["shock_location"] = loc
            width = problem.grid.x_hi - problem.grid.x_lo
            meta["shock_offset_fraction"] = abs(meta["shock_location"] - loc) / width
    rows = [[float(xi), float(r), float(v), float(pp), float(c)] for xi, r, v, pp, c in zip(x, rho, vel, p, chi)]
    return ResultTable("shu_osher", cfg["problem"], ["x", "density", "velocity", "pressure", "chi"], rows,
                       cfg, meta)


_RUNNERS = {
    "run": run_single,
    "convergence": run_convergence,
    "tv_scan": run_tv_scan,
    "dt_scan": run_dt_scan,
    "shock_speed": run_shock_speed,
    "shu_osher": run_shu_osher,
}


def run_experiment(kind: str, config: dict[str, Any] | None = None) -> ResultTable:
    """Run one experiment; ``config`` overrides the kind's defaults."""
    cfg = experiment_config(kind, config)
    started = _time.perf_counter()
    table = _RUNNERS[kind](cfg)
    table.metadata.setdefault("wall_seconds", _time.perf_counter() - started)
    return table
