"""Grids, interface fluxes and flux-differencing right-hand sides.

Interface arrays have ``N + 1`` rows.  Row ``k`` holds the flux through the
left face of node ``k`` (0-based), so row 0 is the left boundary face and
row ``N`` the right boundary face.  Under periodic boundaries rows 0 and N
coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BOUNDARIES = ("periodic", "extrapolate")
CENTERINGS = ("vertex", "cell")
N_GHOST = 3


class GridTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class GridField:
    """Uniform 1-D grid on ``[x_lo, x_hi]`` with an ``N x m`` state array.

    ``centering='vertex'`` puts node ``i`` (0-based) at ``x_lo + i dx``;
    ``'cell'`` puts it at ``x_lo + (i + 1/2) dx``.  Either way
    ``dx = (x_hi - x_lo) / N``.
    """

    values: np.ndarray
    x_lo: float
    x_hi: float
    boundary: str = "periodic"
    centering: str = "vertex"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError("values must be N or N x m")
        if v.shape[0] < 5:
            raise GridTooSmallError(f"need at least 5 nodes, got {v.shape[0]}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.centering not in CENTERINGS:
            raise ValueError(f"centering must be one of {CENTERINGS}, got {self.centering!r}")
        if not self.x_hi > self.x_lo:
            raise ValueError("x_hi must exceed x_lo")
        if not np.all(np.isfinite(v)):
            raise ValueError("state contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def components(self) -> int:
        return self.values.shape[1]

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_nodes

    @property
    def x(self) -> np.ndarray:
        offset = 0.5 if self.centering == "cell" else 0.0
        return self.x_lo + (np.arange(self.n_nodes) + offset) * self.dx

    @property
    def x_interfaces(self) -> np.ndarray:
        """Coordinates of the N + 1 faces; face k sits half a cell left of node k."""
        offset = 0.0 if self.centering == "cell" else -0.5
        return self.x_lo + (np.arange(self.n_nodes + 1) + offset) * self.dx

    def with_values(self, values: np.ndarray) -> "GridField":
        return replace(self, values=values)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], n_nodes: int,
                      x_lo: float, x_hi: float, boundary: str = "periodic",
                      centering: str = "vertex") -> "GridField":
        dx = (x_hi - x_lo) / n_nodes
        offset = 0.5 if centering == "cell" else 0.0
        x = x_lo + (np.arange(n_nodes) + offset) * dx
        return cls(np.asarray(fn(x), dtype=float), x_lo, x_hi, boundary, centering)


@dataclass(frozen=True)
class InterfaceFluxes:
    values: np.ndarray
    weno_weights: np.ndarray | None = None


def pad(values: np.ndarray, boundary: str, n_ghost: int = N_GHOST) -> np.ndarray:
    """Add ghost rows: periodic wrap or constant extrapolation."""
    mode = "wrap" if boundary == "periodic" else "edge"
    width = ((n_ghost, n_ghost),) + ((0, 0),) * (values.ndim - 1)
    return np.pad(values, width, mode=mode)


def flux_difference_rhs(flx: InterfaceFluxes | np.ndarray, dx: float) -> np.ndarray:
    f = flx.values if isinstance(flx, InterfaceFluxes) else np.asarray(flx)
    return -(f[1:] - f[:-1]) / dx


def upwind_interface_flux(state: GridField, a: float) -> InterfaceFluxes:
    """First-order upwind flux ``f_{i+1/2} = a u_i`` for right-moving advection."""
    if a <= 0:
        raise ValueError(f"upwind flux requires a > 0, got {a}")
    if state.components != 1:
        raise ValueError("upwind flux is scalar only")
    return InterfaceFluxes(a * _left_values(state.values, state.boundary))


def _left_values(u: np.ndarray, boundary: str) -> np.ndarray:
    """Value of the node left of each face (N + 1 rows)."""
    ghost = u[-1:] if boundary == "periodic" else u[:1]
    return np.concatenate([ghost, u], axis=0)


def advdiff_interface_flux(state: GridField, a_fn: Callable, b_fn: Callable) -> InterfaceFluxes:
    """Centered flux for ``u_t + (b u)_x = (a (u^2)_x)_x``.

    ``f_{i+1/2} = b (u_{i+1} + u_i)/2 - a (u_{i+1}^2 - u_i^2)/dx`` with the
    coefficients sampled at the face.
    """
    if state.boundary != "periodic":
        raise ValueError("advection-diffusion flux is only configured for periodic boundaries")
    if state.components != 1:
        raise ValueError("advection-diffusion flux is scalar only")
    xf = state.x_interfaces
    a_face, b_face = np.array(a_fn(xf), dtype=float), np.array(b_fn(xf), dtype=float)
    a_face[-1], b_face[-1] = a_face[0], b_face[0]
    return InterfaceFluxes(_advdiff_flux(state.values, a_face[:, None], b_face[:, None], state.dx))


def _advdiff_flux(u: np.ndarray, a_face: np.ndarray, b_face: np.ndarray, dx: float) -> np.ndarray:
    left = np.concatenate([u[-1:], u], axis=0)
    right = np.concatenate([u, u[:1]], axis=0)
    return b_face * 0.5 * (right + left) - a_face * (right**2 - left**2) / dx


def llf_flux_split(point_fluxes: np.ndarray, state: GridField | np.ndarray, alpha: float):
    """Global Lax-Friedrichs splitting ``f^{+/-} = (f +/- alpha u) / 2``."""
    if alpha < 0:
        raise ValueError(f"splitting speed must be non-negative, got {alpha}")
    u = state.values if isinstance(state, GridField) else np.asarray(state)
    f = np.asarray(point_fluxes, dtype=float).reshape(u.shape)
    return 0.5 * (f + alpha * u), 0.5 * (f - alpha * u)


# ideal weights of the three candidate stencils
WENO_LINEAR_WEIGHTS = np.array([0.1, 0.6, 0.3])


def _weno5_side(fm2, fm1, f0, fp1, fp2, eps):
    """Left-biased reconstruction at j + 1/2 from f_{j-2} ... f_{j+2}."""
    q0 = (2 * fm2 - 7 * fm1 + 11 * f0) / 6
    q1 = (-fm1 + 5 * f0 + 2 * fp1) / 6
    q2 = (2 * f0 + 5 * fp1 - fp2) / 6
    beta0 = 13 / 12 * (fm2 - 2 * fm1 + f0) ** 2 + 0.25 * (fm2 - 4 * fm1 + 3 * f0) ** 2
    beta1 = 13 / 12 * (fm1 - 2 * f0 + fp1) ** 2 + 0.25 * (fm1 - fp1) ** 2
    beta2 = 13 / 12 * (f0 - 2 * fp1 + fp2) ** 2 + 0.25 * (3 * f0 - 4 * fp1 + fp2) ** 2
    a0 = 0.1 / (eps + beta0) ** 2
    a1 = 0.6 / (eps + beta1) ** 2
    a2 = 0.3 / (eps + beta2) ** 2
    total = a0 + a1 + a2
    w0, w1, w2 = a0 / total, a1 / total, a2 / total
    return w0 * q0 + w1 * q1 + w2 * q2, (w0, w1, w2)


def weno5_interface_flux(f_plus: np.ndarray, f_minus: np.ndarray | None = None,
                         epsilon: float = 1e-6, boundary: str = "periodic") -> InterfaceFluxes:
    """Fifth-order WENO interface fluxes from split point fluxes.

    ``f_plus`` is reconstructed from the left, ``f_minus`` (if given) by the
    mirrored stencil from the right.  The weights of the positive part for
    the first component are returned in ``weno_weights``.
    """
    fp = np.asarray(f_plus, dtype=float)
    if fp.ndim == 1:
        fp = fp[:, None]
    n = fp.shape[0]
    if n < 5:
        raise GridTooSmallError(f"WENO5 needs at least 5 nodes, got {n}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    p = pad(fp, boundary)
    flux, w = _weno5_side(p[0 : n + 1], p[1 : n + 2], p[2 : n + 3], p[3 : n + 4], p[4 : n + 5], epsilon)
    if f_minus is not None:
        fm = np.asarray(f_minus, dtype=float).reshape(fp.shape)
        q = pad(fm, boundary)
        flux = flux + _weno5_side(q[5 : n + 6], q[4 : n + 5], q[3 : n + 4], q[2 : n + 3], q[1 : n + 2],
                                  epsilon)[0]
    weights = np.stack([w[0][:, 0], w[1][:, 0], w[2][:, 0]], axis=1)
    return InterfaceFluxes(flux, weights)


def weno5_local_lf_flux(point_fluxes: np.ndarray, u: np.ndarray, speeds: np.ndarray,
                        epsilon: float = 1e-6, boundary: str = "periodic") -> InterfaceFluxes:
    """WENO5 with a Lax-Friedrichs splitting local to each face.

    Face ``k`` splits ``f = f^+ + f^-`` with ``alpha_k`` the largest
    ``speeds`` value on the six nodes its two stencils touch.
    """
    f = np.asarray(point_fluxes, dtype=float)
    u = np.asarray(u, dtype=float)
    if f.ndim == 1:
        f, u = f[:, None], u.reshape(-1, 1)
    n = f.shape[0]
    if n < 5:
        raise GridTooSmallError(f"WENO5 needs at least 5 nodes, got {n}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pf, pu = pad(f, boundary), pad(u, boundary)
    ps = pad(np.abs(np.asarray(speeds, dtype=float)).reshape(n), boundary)
    alpha = sliding_window_view(ps, 6).max(axis=1)[:, None]
    plus = [0.5 * (pf[k : k + n + 1] + alpha * pu[k : k + n + 1]) for k in range(6)]
    minus = [0.5 * (pf[k : k + n + 1] - alpha * pu[k : k + n + 1]) for k in range(6)]
    flux, w = _weno5_side(*plus[:5], epsilon)
    flux = flux + _weno5_side(*minus[:0:-1], epsilon)[0]
    weights = np.stack([w[0][:, 0], w[1][:, 0], w[2][:, 0]], axis=1)
    return InterfaceFluxes(flux, weights)


# ---------------------------------------------------------------------------
# point fluxes used by the problem library

def euler_primitives(u: np.ndarray, gamma: float = 1.4):
    rho = u[:, 0]
    vel = u[:, 1] / rho
    p = (gamma - 1) * (u[:, 2] - 0.5 * rho * vel**2)
    return rho, vel, p


def euler_flux(u: np.ndarray, gamma: float = 1.4) -> np.ndarray:
    rho, vel, p = euler_primitives(u, gamma)
    return np.stack([u[:, 1], u[:, 1] * vel + p, (u[:, 2] + p) * vel], axis=1)


def euler_max_speed(u: np.ndarray, gamma: float = 1.4) -> float:
    rho, vel, p = euler_primitives(u, gamma)
    sound = np.sqrt(np.maximum(gamma * p / rho, 0.0))
    return float(np.max(np.abs(vel) + sound))
