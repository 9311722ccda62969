"""Partitioning masks chi and the strategies that build them each step.

A mask value of 1 selects the *first* weight set of the tableau, 0 the
second, and values in between blend the two.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .spatial import GridField, WENO_LINEAR_WEIGHTS

LOCATIONS = ("node", "interface")


class MaskLocationError(ValueError):
    pass


@dataclass(frozen=True)
class Mask:
    location: str
    values: np.ndarray

    def __post_init__(self):
        if self.location not in LOCATIONS:
            raise ValueError(f"mask location must be one of {LOCATIONS}")
        v = np.asarray(self.values, dtype=float).ravel()
        if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
            raise ValueError("mask values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def binary_flag(self) -> bool:
        return bool(np.all((self.values == 0) | (self.values == 1)))

    @property
    def fraction_ones(self) -> float:
        return float(np.mean(self.values == 1))

    def __len__(self):
        return self.values.size


def constant_mask(n_nodes: int, value: float = 1.0, location: str = "node") -> Mask:
    size = n_nodes if location == "node" else n_nodes + 1
    return Mask(location, np.full(size, float(value)))


def _scalar(state: GridField, component: int) -> np.ndarray:
    return state.values[:, component]


def mask_second_difference(state: GridField, c_threshold: float = 500.0, dx: float | None = None,
                           component: int = 0) -> Mask:
    """chi_i = 1 where |u_{i+1} - 2 u_i + u_{i-1}| < C dx^2, else 0."""
    if c_threshold <= 0:
        raise ValueError("second-difference threshold must be positive")
    dx = state.dx if dx is None else dx
    u = _scalar(state, component)
    mode = "wrap" if state.boundary == "periodic" else "edge"
    p = np.pad(u, 1, mode=mode)
    d2 = np.abs(p[2:] - 2 * p[1:-1] + p[:-2])
    return Mask("node", (d2 < c_threshold * dx**2).astype(float))


def mask_from_weno_weights(weights: np.ndarray, threshold: float = 0.06) -> Mask:
    """chi_i = 1 iff all three weights at face i + 1/2 are within ``threshold`` of ideal.

    ``weights`` has N + 1 rows in face order; node i reads row i + 1, the
    face whose left-biased stencil is centred on node i.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[1] != 3:
        raise ValueError("WENO weights must be an (N + 1) x 3 array")
    if np.max(np.abs(w.sum(axis=1) - 1.0)) > 1e-10:
        raise ValueError("WENO weight rows must sum to 1")
    ok = np.all(np.abs(w[1:] - WENO_LINEAR_WEIGHTS) <= threshold, axis=1)
    return Mask("node", ok.astype(float))


def mask_value_window(state: GridField, lo: float, hi: float, component: int = 0) -> Mask:
    """chi_i = 0 where lo < u_i < hi, 1 elsewhere."""
    if not lo < hi:
        raise ValueError("value window needs lo < hi")
    u = _scalar(state, component)
    inside = (u > lo) & (u < hi)
    return Mask("node", (~inside).astype(float))


def mask_coefficient_threshold(a_fn: Callable, grid: GridField, cutoff: float) -> Mask:
    return Mask("node", (np.asarray(a_fn(grid.x)) > cutoff).astype(float))


def mask_heaviside(grid: GridField, x0: float = 0.0) -> Mask:
    return Mask("node", (grid.x >= x0).astype(float))


def widen_mask(mask: Mask, radius: int = 4, boundary: str = "periodic") -> Mask:
    """chi_i <- min over |j| <= radius of chi_{i+j}."""
    if radius < 0:
        raise ValueError("widening radius must be non-negative")
    if radius == 0:
        return mask
    v = mask.values
    periodic_faces = boundary == "periodic" and mask.location == "interface"
    core = v[:-1] if periodic_faces else v
    mode = "wrap" if boundary == "periodic" else "edge"
    p = np.pad(core, radius, mode=mode)
    out = sliding_window_view(p, 2 * radius + 1).min(axis=1)
    if periodic_faces:
        out = np.append(out, out[0])
    return Mask(mask.location, out)


def node_to_interface(mask: Mask, boundary: str = "periodic") -> Mask:
    """chi_{i+1/2} = min(chi_i, chi_{i+1}); boundary faces wrap or copy their single neighbour."""
    if mask.location != "node":
        raise MaskLocationError("node_to_interface expects a node-located mask")
    v = mask.values
    if boundary == "periodic":
        left = np.concatenate([v[-1:], v])
        right = np.concatenate([v, v[:1]])
    else:
        left = np.concatenate([v[:1], v])
        right = np.concatenate([v, v[-1:]])
    return Mask("interface", np.minimum(left, right))


# ---------------------------------------------------------------------------
# strategy pipelines such as "weno(theta=0.06) | widen(4) | to_interface"

SOURCES = ("second_diff", "weno", "value_window", "coef_threshold", "constant", "heaviside", "random")
_TERM = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")
_POSITIONAL = {
    "second_diff": ("C",),
    "weno": ("theta",),
    "value_window": ("lo", "hi"),
    "coef_threshold": ("cutoff",),
    "constant": ("v",),
    "heaviside": ("x0",),
    "random": ("seed",),
    "widen": ("r",),
}
_DEFAULTS = {
    "second_diff": {"C": 500.0},
    "weno": {"theta": 0.06},
    "value_window": {"lo": 0.01, "hi": 1.99},
    "coef_threshold": {"cutoff": 0.005},
    "constant": {"v": 1.0},
    "heaviside": {"x0": 0.0},
    "random": {"seed": 42},
    "widen": {"r": 4},
}


class MaskSpecError(ValueError):
    pass


@dataclass
class MaskContext:
    """What a strategy may look at when building the mask for step n."""

    problem: Any
    state: GridField
    weno_weights: np.ndarray | None = None
    rng: np.random.Generator | None = None


def _parse_args(name: str, argtext: str | None) -> dict[str, float]:
    params = dict(_DEFAULTS.get(name, {}))
    if not argtext or not argtext.strip():
        return params
    names = _POSITIONAL.get(name, ())
    for i, item in enumerate(a.strip() for a in argtext.split(",")):
        if "=" in item:
            key, val = (s.strip() for s in item.split("=", 1))
        else:
            if i >= len(names):
                raise MaskSpecError(f"too many arguments for {name}()")
            key, val = names[i], item
        if key not in names:
            raise MaskSpecError(f"{name}() has no parameter {key!r}")
        try:
            params[key] = float(val)
        except ValueError:
            raise MaskSpecError(f"{name}({key}=...) needs a number, got {val!r}") from None
    return params


@dataclass
class MaskStrategy:
    """Parsed mask pipeline: one source, then optional ``widen`` / ``to_interface`` stages."""

    source: str
    params: dict[str, float] = field(default_factory=dict)
    stages: list[tuple[str, dict[str, float]]] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "MaskStrategy":
        terms = [t for t in text.split("|")]
        parsed = []
        for term in terms:
            m = _TERM.match(term)
            if not m:
                raise MaskSpecError(f"cannot parse mask term {term.strip()!r}")
            parsed.append((m.group(1), m.group(2)))
        (src, srcargs), rest = parsed[0], parsed[1:]
        if src not in SOURCES:
            raise MaskSpecError(f"unknown mask source {src!r}; valid: {', '.join(SOURCES)}")
        strategy = cls(src, _parse_args(src, srcargs))
        for name, args in rest:
            if name == "widen":
                p = _parse_args("widen", args)
                if p["r"] < 0 or p["r"] != int(p["r"]):
                    raise MaskSpecError("widen() radius must be a non-negative integer")
                strategy.stages.append(("widen", p))
            elif name == "to_interface":
                if args:
                    raise MaskSpecError("to_interface takes no arguments")
                strategy.stages.append(("to_interface", {}))
            else:
                raise MaskSpecError(f"unknown mask stage {name!r}")
        if strategy.source == "constant" and not 0 <= strategy.params["v"] <= 1:
            raise MaskSpecError("constant(v) needs 0 <= v <= 1")
        if strategy.source == "weno" and strategy.params["theta"] <= 0:
            raise MaskSpecError("weno(theta) must be positive")
        if strategy.source == "second_diff" and strategy.params["C"] <= 0:
            raise MaskSpecError("second_diff(C) must be positive")
        return strategy

    @property
    def location(self) -> str:
        return "interface" if any(name == "to_interface" for name, _ in self.stages) else "node"

    @property
    def is_random(self) -> bool:
        return self.source == "random"

    def __str__(self) -> str:
        def fmt(name, params):
            if not params:
                return name
            return f"{name}(" + ", ".join(f"{k}={_num(v)}" for k, v in params.items()) + ")"

        return " | ".join([fmt(self.source, self.params)] + [fmt(n, p) for n, p in self.stages])

    def __call__(self, ctx: MaskContext) -> Mask:
        state = ctx.state
        p = self.params
        if self.source == "second_diff":
            mask = mask_second_difference(state, p["C"])
        elif self.source == "weno":
            if ctx.weno_weights is None:
                raise MaskSpecError("weno mask needs a WENO flux assembler")
            mask = mask_from_weno_weights(ctx.weno_weights, p["theta"])
        elif self.source == "value_window":
            mask = mask_value_window(state, p["lo"], p["hi"])
        elif self.source == "coef_threshold":
            a_fn = getattr(ctx.problem, "a_fn", None)
            if a_fn is None:
                raise MaskSpecError("coef_threshold mask needs a problem with a diffusion coefficient")
            mask = mask_coefficient_threshold(a_fn, state, p["cutoff"])
        elif self.source == "constant":
            mask = constant_mask(state.n_nodes, p["v"])
        elif self.source == "heaviside":
            mask = mask_heaviside(state, p["x0"])
        else:
            rng = ctx.rng if ctx.rng is not None else np.random.default_rng(int(p["seed"]))
            mask = Mask("node", rng.uniform(0.0, 1.0, state.n_nodes))
        for name, sp in self.stages:
            if name == "widen":
                mask = widen_mask(mask, int(sp["r"]), state.boundary)
            else:
                mask = node_to_interface(mask, state.boundary)
        return mask


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))
