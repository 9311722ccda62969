"""Semi-discrete test problems: advection, Burgers, advection-diffusion, Euler."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .spatial import (
    GridField,
    InterfaceFluxes,
    advdiff_interface_flux,
    euler_flux,
    euler_max_speed,
    euler_primitives,
    llf_flux_split,
    upwind_interface_flux,
    weno5_interface_flux,
    weno5_local_lf_flux,
    _advdiff_flux,
)

ASSEMBLERS = ("upwind", "advdiff", "weno_scalar", "weno_euler")
PROBLEMS = ("advection", "burgers", "advdiff", "euler_shu_osher")
BURGERS_ICS = ("smooth", "square", "step2")
SPLITTINGS = ("local_lf", "llf", "upwind")

# left state of the Shu-Osher shock-density interaction (rho, v, p)
SHU_OSHER_LEFT = (3.857143, 2.629369, 10.33333)


def advdiff_a(x):
    return 1 / 1000 + 1 / 10000 * (np.cos(2 * np.pi * x - np.pi / 2) + 1) ** 10


def advdiff_b(x):
    return 1 + 1 / 10 * (np.cos(2 * np.pi * x - 3 * np.pi / 2) + 1) ** 10


def burgers_smooth_ic(x):
    return 0.5 - 0.5 * np.cos(np.pi * (x - np.sin(2 * np.pi * x) / (4 * np.pi)))


def square_wave_ic(x, lo=0.25, hi=0.75):
    return np.where((x >= lo) & (x < hi), 1.0, 0.0)


def step2_ic(x):
    return np.where(x <= 0, 2.0, 0.0)


def shu_osher_ic(x, gamma=1.4):
    rho_l, v_l, p_l = SHU_OSHER_LEFT
    left = x < -4
    rho = np.where(left, rho_l, 1 + 0.2 * np.sin(5 * x))
    v = np.where(left, v_l, 0.0)
    p = np.where(left, p_l, 1.0)
    return np.stack([rho, rho * v, p / (gamma - 1) + 0.5 * rho * v**2], axis=1)


@dataclass
class SemiDiscreteProblem:
    """A named flux-differencing semi-discretization with its initial data.

    Scalar problems use the point flux ``f(u) = a u`` (advection) or
    ``f(u) = kappa u^2`` (Burgers).
    """

    name: str
    assembler: str
    grid: GridField
    params: dict[str, Any] = field(default_factory=dict)
    a_fn: Callable | None = None
    b_fn: Callable | None = None

    flux_form = True

    def __post_init__(self):
        if self.assembler not in ASSEMBLERS:
            raise ValueError(f"unknown assembler {self.assembler!r}")
        if (self.assembler == "weno_euler") != (self.grid.components == 3):
            raise ValueError("the Euler assembler needs exactly 3 components")
        if self.assembler == "advdiff":
            xf = self.grid.x_interfaces
            self._a_face = self.a_fn(xf)[:, None]
            self._b_face = self.b_fn(xf)[:, None]
            if self.grid.boundary == "periodic":
                # the two boundary faces are one face
                self._a_face[-1] = self._a_face[0]
                self._b_face[-1] = self._b_face[0]

    def initial_state(self) -> GridField:
        return self.grid

    @property
    def epsilon(self) -> float:
        return self.params.get("epsilon", 1e-6)

    def point_flux(self, u: np.ndarray) -> np.ndarray:
        if self.assembler == "weno_euler":
            return euler_flux(u, self.params["gamma"])
        if "kappa" in self.params:
            return self.params["kappa"] * u**2
        return self.params["a"] * u

    def max_speed(self, u: np.ndarray) -> float:
        if self.assembler == "weno_euler":
            return euler_max_speed(u, self.params["gamma"])
        if self.assembler == "advdiff":
            return float(np.max(np.abs(self._b_face)))
        if "kappa" in self.params:
            return float(np.max(np.abs(2 * self.params["kappa"] * u)))
        return abs(self.params["a"])

    def _node_speeds(self, u: np.ndarray) -> np.ndarray:
        if self.assembler == "weno_euler":
            rho, vel, p = euler_primitives(u, self.params["gamma"])
            return np.abs(vel) + np.sqrt(np.maximum(self.params["gamma"] * p / rho, 0.0))
        if "kappa" in self.params:
            return 2 * self.params["kappa"] * u[:, 0]
        return np.full(u.shape[0], self.params["a"])

    def interface_fluxes(self, u: np.ndarray) -> InterfaceFluxes:
        g = self.grid
        if self.assembler == "upwind":
            return upwind_interface_flux(_raw(g, u), self.params["a"])
        if self.assembler == "advdiff":
            return InterfaceFluxes(_advdiff_flux(u, self._a_face, self._b_face, g.dx))
        f = self.point_flux(u)
        alpha = self.max_speed(u)
        splitting = self.params.get("splitting", "llf")
        if splitting == "upwind" and self.assembler == "weno_scalar":
            return weno5_interface_flux(f, None, self.epsilon, g.boundary)
        if splitting == "local_lf":
            return weno5_local_lf_flux(f, u, self._node_speeds(u), self.epsilon, g.boundary)
        f_plus, f_minus = llf_flux_split(f, u, alpha)
        return weno5_interface_flux(f_plus, f_minus, self.epsilon, g.boundary)

    def rhs(self, u: np.ndarray) -> np.ndarray:
        f = self.interface_fluxes(u).values
        return -(f[1:] - f[:-1]) / self.grid.dx

    def with_grid(self, grid: GridField) -> "SemiDiscreteProblem":
        return SemiDiscreteProblem(self.name, self.assembler, grid, dict(self.params), self.a_fn, self.b_fn)

    def describe(self) -> dict[str, Any]:
        out = {"name": self.name, "assembler": self.assembler, "n_nodes": self.grid.n_nodes,
               "x_lo": self.grid.x_lo, "x_hi": self.grid.x_hi, "boundary": self.grid.boundary,
               "centering": self.grid.centering}
        out.update({k: v for k, v in self.params.items() if not callable(v)})
        return out


def _raw(grid: GridField, u: np.ndarray) -> GridField:
    # skips validation on the hot path
    g = object.__new__(GridField)
    object.__setattr__(g, "values", u)
    for name in ("x_lo", "x_hi", "boundary", "centering"):
        object.__setattr__(g, name, getattr(grid, name))
    return g


def make_problem(name: str, n_nodes: int | None = None, ic: str | None = None,
                 **params) -> SemiDiscreteProblem:
    """Build a configured problem.

    Names: ``advection``, ``burgers`` (``ic`` one of smooth, square, step2;
    the aliases ``burgers_smooth`` etc. also work), ``advdiff`` and
    ``euler_shu_osher``.  Remaining keyword arguments override flux
    parameters (``a``, ``kappa``, ``epsilon``, ``splitting``, ``gamma``,
    ``assembler``).
    """
    if name.startswith("burgers_"):
        name, ic = "burgers", name[len("burgers_"):]
    epsilon = params.pop("epsilon", 1e-6)
    if name == "advection":
        n = n_nodes or 160
        ic = ic or "sine"
        a = params.pop("a", 1.0)
        if a <= 0:
            raise ValueError("advection speed must be positive")
        assembler = params.pop("assembler", "weno_scalar")
        x_lo, x_hi = params.pop("x_lo", 0.0), params.pop("x_hi", 1.0)
        if ic == "sine":
            fn = lambda x: np.sin(2 * np.pi * x)  # noqa: E731
        elif ic == "square":
            fn = square_wave_ic
        else:
            raise KeyError(f"unknown advection initial condition {ic!r}; valid: sine, square")
        grid = GridField.from_function(fn, n, x_lo, x_hi, "periodic")
        return SemiDiscreteProblem(name, assembler, grid, {"a": a, "epsilon": epsilon, "ic": ic, **params})
    if name == "burgers":
        ic = ic or "smooth"
        if ic == "smooth":
            # f = u^2 / 2 keeps t = 0.25 before shock formation (t_break = 0.42; 0.21 for f = u^2)
            grid = GridField.from_function(burgers_smooth_ic, n_nodes or 320, -1.0, 1.0, "periodic")
            kappa = 0.5
        elif ic == "square":
            grid = GridField.from_function(square_wave_ic, n_nodes or 40, 0.0, 1.0, "periodic")
            kappa = 1.0
        elif ic == "step2":
            grid = GridField.from_function(step2_ic, n_nodes or 800, -1.0, 1.0, "extrapolate")
            kappa = 0.5
        else:
            raise KeyError(f"unknown Burgers initial condition {ic!r}; valid: {', '.join(BURGERS_ICS)}")
        kappa = params.pop("kappa", kappa)
        splitting = params.pop("splitting", "local_lf")
        if splitting not in SPLITTINGS:
            raise ValueError(f"splitting must be one of {SPLITTINGS}")
        return SemiDiscreteProblem("burgers_" + ic, "weno_scalar", grid,
                                   {"kappa": kappa, "epsilon": epsilon, "splitting": splitting, "ic": ic,
                                    **params})
    if name == "advdiff":
        grid = GridField.from_function(lambda x: 0.1 * np.sin(2 * np.pi * x) ** 3 + 2, n_nodes or 250,
                                       0.0, 1.0, "periodic")
        return SemiDiscreteProblem(name, "advdiff", grid, dict(params), advdiff_a, advdiff_b)
    if name == "euler_shu_osher":
        gamma = params.pop("gamma", 1.4)
        grid = GridField.from_function(lambda x: shu_osher_ic(x, gamma), n_nodes or 400, -5.0, 5.0,
                                       "extrapolate")
        splitting = params.pop("splitting", "llf")
        if splitting not in ("llf", "local_lf"):
            raise ValueError("Euler splitting must be 'llf' or 'local_lf'")
        return SemiDiscreteProblem(name, "weno_euler", grid,
                                   {"gamma": gamma, "epsilon": epsilon, "splitting": splitting, **params})
    raise KeyError(f"unknown problem {name!r}; valid: {', '.join(PROBLEMS)}")
