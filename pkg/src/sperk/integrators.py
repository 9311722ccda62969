"""One-step and time-loop drivers for spatially partitioned embedded RK methods.

Stages are computed once per step; each weight set then gives a per-node
increment ``D_k = sum_j b^(k)_j g(Y_j)``.  All partitioning modes are
combinations of these increments (or of the matching combined fluxes), so a
mask that selects a single weight set everywhere reproduces the unpartitioned
update bit for bit.
"""

from __future__ import annotations

import logging
import sys
import time as _time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .masks import Mask, MaskContext, MaskLocationError, node_to_interface
from .spatial import GridField, InterfaceFluxes, flux_difference_rhs
from .tableaux import EmbeddedTableau

log = logging.getLogger(__name__)

MODES = ("single", "equation", "flux", "blended")
DIVERGENCE_THRESHOLD = 1e10


class DivergenceError(RuntimeError):
    def __init__(self, message, stage=None, step=None, t=None):
        super().__init__(message)
        self.stage = stage
        self.step = step
        self.t = t


@dataclass
class StageWorkspace:
    tableau: EmbeddedTableau
    u0: np.ndarray
    dt: float
    dx: float
    grid: GridField
    stage_states: list[np.ndarray]
    stage_rhs: list[np.ndarray]
    stage_fluxes: list[InterfaceFluxes] | None = None

    @property
    def n_stages(self) -> int:
        return len(self.stage_states)

    def _b(self, label: str) -> np.ndarray:
        b = self.tableau.weights(label)
        if np.any(b[self.n_stages :] != 0):
            raise ValueError(f"weight set {label!r} needs stages beyond the {self.n_stages} computed")
        return b[: self.n_stages]

    def combined_flux(self, label: str) -> np.ndarray:
        b = self._b(label)
        out = np.zeros_like(self.stage_fluxes[0].values)
        for bj, f in zip(b, self.stage_fluxes):
            if bj != 0.0:
                out += bj * f.values
        return out

    def increment(self, label: str) -> np.ndarray:
        """``sum_j b_j g(Y_j)`` for one weight set."""
        if self.stage_fluxes is not None:
            return flux_difference_rhs(self.combined_flux(label), self.dx)
        b = self._b(label)
        out = np.zeros_like(self.u0)
        for bj, g in zip(b, self.stage_rhs):
            if bj != 0.0:
                out += bj * g
        return out


def _stages_needed(tab: EmbeddedTableau, labels: Sequence[str] | None) -> int:
    if labels is None:
        return tab.stages
    last = 0
    for label in labels:
        nz = np.flatnonzero(tab.weights(label))
        if nz.size:
            last = max(last, int(nz[-1]) + 1)
    return max(last, 1)


def rk_stages(problem, tab: EmbeddedTableau, state: GridField | np.ndarray, dt: float,
              labels: Sequence[str] | None = None) -> StageWorkspace:
    """Compute ``Y_j = U^n + dt sum_{k<j} a_jk g(Y_k)`` and keep stage fluxes and rhs.

    When ``labels`` is given, trailing stages that none of those weight sets
    use are skipped; explicit stages never depend on later ones.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    u0 = state.values if isinstance(state, GridField) else np.asarray(state, dtype=float)
    grid = problem.grid
    a = tab.a_matrix
    n = _stages_needed(tab, labels)
    flux_form = getattr(problem, "flux_form", True)
    states, rhs, fluxes = [], [], [] if flux_form else None
    for j in range(n):
        y = u0.copy()
        for k in range(j):
            if a[j, k] != 0.0:
                y += (dt * a[j, k]) * rhs[k]
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > DIVERGENCE_THRESHOLD:
            raise DivergenceError(f"stage {j + 1} diverged", stage=j + 1)
        states.append(y)
        if flux_form:
            flx = problem.interface_fluxes(y)
            fluxes.append(flx)
            rhs.append(flux_difference_rhs(flx, grid.dx))
        else:
            rhs.append(problem.rhs(y))
    return StageWorkspace(tab, u0, dt, grid.dx, grid, states, rhs, fluxes)


def _finish(ws: StageWorkspace, increment: np.ndarray) -> GridField:
    return ws.grid.with_values(ws.u0 + ws.dt * increment)


def step_single(ws: StageWorkspace, weight_label: str) -> GridField:
    return _finish(ws, ws.increment(weight_label))


def _mask_weights(masks: Mask | Sequence[Mask], labels: Sequence[str], location: str) -> list[np.ndarray]:
    """Per-label coefficient arrays; a single mask means (chi, 1 - chi)."""
    if isinstance(masks, Mask):
        masks = [masks]
    for m in masks:
        if m.location != location:
            raise MaskLocationError(f"expected a {location}-located mask, got {m.location}")
    if len(masks) == 1 and len(labels) == 2:
        chi = masks[0].values
        return [chi, 1.0 - chi]
    if len(masks) != len(labels):
        raise ValueError(f"{len(labels)} labels need {len(labels)} indicator masks, got {len(masks)}")
    coeffs = [m.values for m in masks]
    if np.max(np.abs(np.sum(coeffs, axis=0) - 1.0)) > 1e-12:
        raise ValueError("indicator masks must sum to 1 at every point")
    return coeffs


def _weighted_sum(coeffs: Sequence[np.ndarray], parts: Sequence[np.ndarray]) -> np.ndarray:
    out = coeffs[0][:, None] * parts[0]
    for c, p in zip(coeffs[1:], parts[1:]):
        out = out + c[:, None] * p
    return out


def step_equation_partitioned(ws: StageWorkspace, node_mask: Mask | Sequence[Mask],
                              labels: Sequence[str]) -> GridField:
    """Per-node choice of weights: ``u + dt [chi D_b + (1 - chi) D_bhat]``."""
    coeffs = _mask_weights(node_mask, labels, "node")
    return _finish(ws, _weighted_sum(coeffs, [ws.increment(lb) for lb in labels]))


def step_flux_partitioned(ws: StageWorkspace, edge_mask: Mask | Sequence[Mask],
                          labels: Sequence[str]) -> GridField:
    """Per-face choice of weights; conservative by construction."""
    if ws.stage_fluxes is None:
        raise ValueError("flux partitioning needs a flux-form problem")
    coeffs = _mask_weights(edge_mask, labels, "interface")
    flux = _weighted_sum(coeffs, [ws.combined_flux(lb) for lb in labels])
    return _finish(ws, flux_difference_rhs(flux, ws.dx))


def step_blended(ws: StageWorkspace, node_weights: Sequence[np.ndarray] | np.ndarray,
                 labels: Sequence[str]) -> GridField:
    """Node-wise convex combination of weight sets, ``b_eff(i) = sum_k alpha_k(i) b^(k)``."""
    w = np.asarray(node_weights, dtype=float)
    if w.ndim == 1:
        w = np.stack([w, 1.0 - w])
    if w.shape[0] != len(labels):
        raise ValueError("one coefficient row per label is required")
    if np.any(w < 0):
        raise ValueError("blending coefficients must be non-negative")
    if np.max(np.abs(w.sum(axis=0) - 1.0)) > 1e-12:
        raise ValueError("blending coefficients must sum to 1 at every node")
    return _finish(ws, _weighted_sum(list(w), [ws.increment(lb) for lb in labels]))


def step_godunov_split(problem, state: GridField, edge_mask: Mask, dt: float) -> GridField:
    """First-order operator splitting of the chi / 1 - chi flux parts (a counterexample).

    ``U* = U + dt G_chi(U)``, then ``U^{n+1} = U* + dt G_{1-chi}(U*)``.
    """
    if edge_mask.location != "interface":
        raise MaskLocationError("Godunov splitting needs an interface mask")
    chi = edge_mask.values[:, None]
    dx = problem.grid.dx
    u = state.values
    ustar = u + dt * flux_difference_rhs(chi * problem.interface_fluxes(u).values, dx)
    unew = ustar + dt * flux_difference_rhs((1 - chi) * problem.interface_fluxes(ustar).values, dx)
    return state.with_values(unew)


# ---------------------------------------------------------------------------
# time loop

@dataclass
class StepSpec:
    tableau: EmbeddedTableau
    mode: str = "single"
    labels: tuple[str, ...] = ("b",)
    dt: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.labels = tuple(self.labels)
        for label in self.labels:
            self.tableau.weights(label)
        if self.mode == "single" and len(self.labels) != 1:
            raise ValueError("single mode takes exactly one weight label")
        if self.mode != "single" and len(self.labels) != 2:
            raise ValueError(f"{self.mode} mode takes two weight labels (mask selects the first)")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass
class RunResult:
    final: GridField
    times: list[float]
    diagnostics: dict[str, list[float]]
    status: str = "completed"
    failure: dict[str, Any] | None = None
    frames: list[tuple[float, np.ndarray]] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def tv_seminorm(state: GridField, component: int = 0) -> float:
    u = state.values[:, component]
    d = np.abs(np.diff(u)).sum()
    if state.boundary == "periodic":
        d += abs(u[0] - u[-1])
    return float(d)


def total_mass(state: GridField) -> np.ndarray:
    return state.dx * state.values.sum(axis=0)


def _record(diag, state: GridField, chi_fraction: float):
    diag["mass"].append(float(total_mass(state)[0]))
    diag["tv"].append(tv_seminorm(state))
    diag["chi_fraction"].append(chi_fraction)
    diag["max_abs"].append(float(np.max(np.abs(state.values))))


def advance(problem, spec: StepSpec, mask_strategy: Callable[[MaskContext], Mask] | None = None,
            t_final: float = 1.0, cfl: float | None = None, *, seed: int = 42,
            save_every: int = 0, progress: bool = False, max_steps: int = 10_000_000) -> RunResult:
    """Integrate ``problem`` from its initial state to ``t_final``.

    The step is ``spec.dt`` if set, otherwise ``cfl * dx / max_speed(U^n)``
    re-estimated every step; the last step is clipped to land on
    ``t_final``.  The mask is rebuilt from ``U^n`` at the start of each step
    and held fixed during it.  ``save_every > 0`` keeps every that-many-th
    state (plus the final one) in ``frames``.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if spec.dt is None and (cfl is None or cfl <= 0):
        raise ValueError("a positive cfl is required when StepSpec.dt is unset")
    state = problem.initial_state()
    dx = state.dx
    rng = np.random.default_rng(seed)
    diag = {"mass": [], "tv": [], "chi_fraction": [], "max_abs": []}
    labels = spec.labels
    mode = spec.mode
    _record(diag, state, 1.0 if mode == "single" else float("nan"))
    times = [0.0]
    frames = [(0.0, state.values.copy())] if save_every else []
    t = 0.0
    step = 0
    wants_weights = getattr(mask_strategy, "source", None) == "weno"
    started = _time.monotonic()

    def backfill():
        # the initial entry reports the mask of the first step
        if np.isnan(diag["chi_fraction"][0]):
            diag["chi_fraction"][0] = diag["chi_fraction"][1] if len(diag["chi_fraction"]) > 1 else 1.0

    def fail(reason, **info):
        log.warning("run aborted at step %d, t=%.6g: %s", step, t, reason)
        backfill()
        return RunResult(state, times, diag, "diverged", {"step": step, "t": t, "reason": reason, **info},
                         frames, {})

    while t < t_final:
        if step >= max_steps:
            return fail("step limit reached")
        if spec.dt is not None:
            dt = spec.dt
        else:
            dt = cfl * dx / max(problem.max_speed(state.values), 1e-12)
        if not dt > 0:
            return fail("time step underflow", dt=dt)
        remaining = t_final - t
        # absorb round-off remainders into the last step instead of taking a sliver step
        last = remaining - dt <= 1e-9 * dt
        if last:
            dt = remaining
        try:
            ws = rk_stages(problem, spec.tableau, state, dt, labels)
        except DivergenceError as exc:
            return fail(str(exc), stage=exc.stage)
        if mode == "single":
            new = step_single(ws, labels[0])
            frac = 1.0
        else:
            weights = None
            if wants_weights and ws.stage_fluxes is not None:
                weights = ws.stage_fluxes[0].weno_weights
            mask = mask_strategy(MaskContext(problem, state, weights, rng))
            if mode == "flux":
                if mask.location == "node":
                    mask = node_to_interface(mask, state.boundary)
                new = step_flux_partitioned(ws, mask, labels)
            elif mode == "equation":
                new = step_equation_partitioned(ws, _as_node(mask), labels)
            else:
                new = step_blended(ws, _as_node(mask).values, labels)
            frac = mask.fraction_ones
        step += 1
        t = t_final if last else t + dt
        if not np.all(np.isfinite(new.values)):
            return fail("non-finite state")
        state = new
        times.append(t)
        _record(diag, state, frac)
        if save_every and step % save_every == 0:
            frames.append((t, state.values.copy()))
        if progress and step % 100 == 0:
            print(f"\rstep {step}  t={t:.5g}", end="", file=sys.stderr)
    if progress:
        print(f"\rstep {step}  t={t:.5g}  ({_time.monotonic() - started:.1f}s)", file=sys.stderr)
    if save_every and (not frames or frames[-1][0] != t):
        frames.append((t, state.values.copy()))
    backfill()
    return RunResult(state, times, diag, "completed", None, frames, {})


def _as_node(mask: Mask) -> Mask:
    if mask.location != "node":
        raise MaskLocationError("equation-based and blended partitioning need node masks")
    return mask
