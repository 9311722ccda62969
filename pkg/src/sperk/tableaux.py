"""Embedded Runge-Kutta pairs: coefficients, order conditions and stability.

An embedded pair shares one coefficient matrix ``A`` (and so one set of
stages) between several weight vectors.  Everything in this module is a pure
function of the coefficients.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "WeightSet",
    "EmbeddedTableau",
    "StabilityMeasures",
    "builtin_pair",
    "forward_euler",
    "ssprk33",
    "BUILTIN_PAIRS",
    "order_residuals",
    "stability_polynomial",
    "stability_measures",
    "weno_bean",
    "ssp_coefficient",
    "tableau_to_text",
    "tableau_from_text",
]


class UnsupportedOrderError(ValueError):
    pass


@dataclass(frozen=True)
class WeightSet:
    label: str
    b: np.ndarray
    order: int


@dataclass(frozen=True)
class EmbeddedTableau:
    """Explicit RK coefficient matrix with one or more weight vectors.

    ``c_nodes`` defaults to the row sums of ``a_matrix``.  The first weight
    set is the one selected where a partitioning mask equals 1.
    """

    a_matrix: np.ndarray
    weight_sets: tuple[WeightSet, ...]
    c_nodes: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        a = np.array(self.a_matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"A must be a non-empty square matrix, got shape {a.shape}")
        s = a.shape[0]
        if np.any(np.triu(a) != 0.0):
            raise ValueError("only explicit tableaus are supported (a_jk must vanish for k >= j)")
        c = a.sum(axis=1) if self.c_nodes is None else np.array(self.c_nodes, dtype=float)
        if c.shape != (s,):
            raise ValueError(f"c must have {s} entries")
        if np.max(np.abs(c - a.sum(axis=1))) > 1e-14:
            raise ValueError("abscissae inconsistent with row sums of A")
        if not self.weight_sets:
            raise ValueError("at least one weight set is required")
        sets = []
        seen = set()
        for ws in self.weight_sets:
            b = np.array(ws.b, dtype=float)
            if b.shape != (s,):
                raise ValueError(f"weight set {ws.label!r} has {b.size} entries, expected {s}")
            if abs(b.sum() - 1.0) > 1e-12:
                raise ValueError(f"weights {ws.label!r} sum to {b.sum()!r}, not 1")
            if ws.order < 1:
                raise ValueError("declared order must be >= 1")
            if ws.label in seen:
                raise ValueError(f"duplicate weight label {ws.label!r}")
            seen.add(ws.label)
            b.setflags(write=False)
            sets.append(WeightSet(ws.label, b, int(ws.order)))
        a.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "c_nodes", c)
        object.__setattr__(self, "weight_sets", tuple(sets))

    @property
    def stages(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def labels(self) -> list[str]:
        return [ws.label for ws in self.weight_sets]

    def weight_set(self, label: str) -> WeightSet:
        for ws in self.weight_sets:
            if ws.label == label:
                return ws
        raise KeyError(f"tableau {self.name!r} has no weight set {label!r}; "
                       f"available: {', '.join(self.labels)}")

    def weights(self, label: str) -> np.ndarray:
        return self.weight_set(label).b

    def with_weights(self, weight_sets: Sequence[WeightSet], name: str | None = None):
        return EmbeddedTableau(self.a_matrix, tuple(weight_sets), self.c_nodes,
                               self.name if name is None else name)


def _lower(rows: Sequence[Sequence[float]]) -> np.ndarray:
    """Strictly lower-triangular matrix from ragged rows (row 1 is empty)."""
    s = len(rows)
    a = np.zeros((s, s))
    for j, row in enumerate(rows):
        a[j, : len(row)] = [float(v) for v in row]
    return a


def _pair32() -> EmbeddedTableau:
    F = Fraction
    a = _lower([[], [F(3, 8)], [F(3, 16), F(3, 16)]])
    b_real = [F(-1, 3), F(4, 9), F(8, 9)]
    b_imag = [F(-1, 3), F(-20, 9), F(32, 9)]
    return EmbeddedTableau(a, (WeightSet("b", b_real, 2), WeightSet("bhat", b_imag, 2)),
                           name="pair32")


def _pair42() -> EmbeddedTableau:
    F = Fraction
    a = _lower([[], [F(1, 2)], [0, F(1, 2)], [0, 0, 1]])
    b_rkc = [F(2, 125), F(17, 25), F(36, 125), F(2, 125)]
    b_rk4 = [F(1, 6), F(1, 3), F(1, 3), F(1, 6)]
    return EmbeddedTableau(a, (WeightSet("b", b_rkc, 2), WeightSet("bhat", b_rk4, 4)),
                           name="pair42")


def _pair75_53() -> EmbeddedTableau:
    a21 = 0.377268915331368
    a41 = 0.242995220537396
    a51 = 0.153589067695126
    a = _lower([
        [],
        [a21],
        [a21, a21],
        [a41, a41, a41],
        [a51, a51, a51, 0.23845893284629],
        [0.113015751552667, 1.49947221487533, 0.134753400626063,
         -1.06421259296782, 0.205145170072233],
        [-0.512110930783855, 3.91735780781337, -0.0470520461913835,
         -0.218621292015928, -1.64543995945252, -0.494133579369683],
    ])
    b = [0.122097569374901, 0.492898173466563, -0.232023614650883,
         -1.98394581022939, 1.85394392181784, 0.965538124667539,
         -0.21850836444657]
    bhat = [0.206734020864804, 0.206734020864804, 0.117097251841844,
            0.18180256012014, 0.287632146308408, 0.0, 0.0]
    return EmbeddedTableau(a, (WeightSet("b", b, 5), WeightSet("bhat", bhat, 3)),
                           name="pair75_53")


BUILTIN_PAIRS: dict[str, Callable[[], EmbeddedTableau]] = {
    "pair32": _pair32,
    "pair42": _pair42,
    "pair75_53": _pair75_53,
}


def builtin_pair(name: str) -> EmbeddedTableau:
    """Return one of the shipped embedded pairs.

    In every pair the weight set labelled ``"b"`` comes first:

    * ``pair32``: ``b`` is the real-axis (RKC-type) method, ``bhat`` the
      imaginary-axis method with ``alpha_3 = 1/4``.  Both second order.
    * ``pair42``: ``b`` is the RKC(4,2)-type method, ``bhat`` classical RK4.
    * ``pair75_53``: ``b`` is the seven-stage fifth-order method, ``bhat``
      the five-stage third-order SSP method (zero weight on stages 6, 7).
    """
    try:
        return BUILTIN_PAIRS[name]()
    except KeyError:
        raise KeyError(f"unknown tableau {name!r}; valid options: "
                       f"{', '.join(sorted(BUILTIN_PAIRS))}") from None


def forward_euler() -> EmbeddedTableau:
    return EmbeddedTableau(np.zeros((1, 1)), (WeightSet("b", [1.0], 1),), name="forward_euler")


def ssprk33() -> EmbeddedTableau:
    """Three-stage third-order SSP method of Shu and Osher."""
    a = _lower([[], [1.0], [0.25, 0.25]])
    return EmbeddedTableau(a, (WeightSet("b", [1 / 6, 1 / 6, 2 / 3], 3),), name="ssprk33")


# ---------------------------------------------------------------------------
# order conditions

def _condition_table(a: np.ndarray, c: np.ndarray) -> list[tuple[str, int, np.ndarray, float]]:
    """The 17 rooted-tree conditions through order five as (id, order, vector, rhs).

    Each condition reads ``b @ vector == rhs``.
    """
    one = np.ones_like(c)
    ac = a @ c
    ac2 = a @ c**2
    a2c = a @ ac
    return [
        ("1", 1, one, 1.0),
        ("2", 2, c, 1 / 2),
        ("3a:c^2", 3, c**2, 1 / 3),
        ("3b:Ac", 3, ac, 1 / 6),
        ("4a:c^3", 4, c**3, 1 / 4),
        ("4b:c*Ac", 4, c * ac, 1 / 8),
        ("4c:Ac^2", 4, ac2, 1 / 12),
        ("4d:A^2c", 4, a2c, 1 / 24),
        ("5a:c^4", 5, c**4, 1 / 5),
        ("5b:c^2*Ac", 5, c**2 * ac, 1 / 10),
        ("5c:c*Ac^2", 5, c * ac2, 1 / 15),
        ("5d:c*A^2c", 5, c * a2c, 1 / 30),
        ("5e:(Ac)^2", 5, ac * ac, 1 / 20),
        ("5f:Ac^3", 5, a @ c**3, 1 / 20),
        ("5g:A(c*Ac)", 5, a @ (c * ac), 1 / 40),
        ("5h:A^2c^2", 5, a @ ac2, 1 / 60),
        ("5i:A^3c", 5, a @ a2c, 1 / 120),
    ]


def order_residuals(tab: EmbeddedTableau, weight_label: str, up_to_order: int,
                    weights: np.ndarray | None = None) -> list[tuple[str, float]]:
    """Residuals ``lhs - rhs`` of all order conditions through ``up_to_order``.

    ``weights`` may override the stored vector (used for blended weights);
    ``weight_label`` is then ignored.
    """
    if up_to_order > 5:
        raise UnsupportedOrderError(f"order conditions are tabulated through order 5, got {up_to_order}")
    if up_to_order < 1:
        raise ValueError("up_to_order must be >= 1")
    b = tab.weights(weight_label) if weights is None else np.asarray(weights, dtype=float)
    return [(cid, float(b @ vec - rhs))
            for cid, order, vec, rhs in _condition_table(tab.a_matrix, tab.c_nodes)
            if order <= up_to_order]


# ---------------------------------------------------------------------------
# linear stability

def stability_polynomial(tab: EmbeddedTableau, weight_label: str) -> np.ndarray:
    """Coefficients ``[alpha_0, ..., alpha_s]`` of R(z) = sum alpha_k z^k."""
    b = tab.weights(weight_label)
    a = tab.a_matrix
    coeffs = [1.0]
    v = np.ones(tab.stages)
    for _ in range(tab.stages):
        coeffs.append(float(b @ v))
        v = a @ v
    return np.array(coeffs)


def _evaluate(poly: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(z, poly)


@dataclass(frozen=True)
class StabilityMeasures:
    real_axis_extent: float
    imag_axis_extent: float
    inscribed_disc_radius: float
    weno_bean_scale: float
    inconsistent: bool = False
    resolution: float = field(default=1e-6, repr=False)


def weno_bean(n_samples: int = 4096) -> np.ndarray:
    """Fourier symbol of the linear fifth-order upwind-biased advection operator.

    Returns ``z(theta) = -(1 - e^{-i theta}) F(theta)`` sampled on
    ``[0, 2 pi)`` for unit CFL, where ``F`` is the symbol of the interface
    flux built with the ideal weights 1/10, 6/10, 3/10.
    """
    theta = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    e = np.exp(1j * theta)
    flux = (2 * e**-2 - 13 * e**-1 + 47 + 27 * e - 3 * e**2) / 60
    return -(1 - 1 / e) * flux


def _largest_scale(fits: Callable[[float], bool], resolution: float,
                   start: float = 1.0, limit: float = 1e4) -> float:
    """Largest scale accepted by ``fits`` found by doubling then bisection."""
    lo, hi = 0.0, start
    while fits(hi):
        lo, hi = hi, 2 * hi
        if hi > limit:
            return lo
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


def stability_measures(poly: Sequence[float], resolution: float = 1e-6,
                       n_samples: int = 4096, tol: float = 1e-12) -> StabilityMeasures:
    """Real-axis, imaginary-axis, disc and WENO-bean extents of |R| <= 1.

    Each extent is the largest scaling of a reference set (segment, circle
    or bean curve) whose samples all satisfy ``|R(z)| <= 1 + tol``.  For the
    closed curves only the boundary is sampled; the maximum principle covers
    the interior.
    """
    poly = np.asarray(poly, dtype=float)
    if poly.size == 0 or poly[0] != 1.0:
        raise ValueError("stability polynomial must start with alpha_0 = 1")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    n_samples = max(int(n_samples), 512)
    inconsistent = poly.size < 2 or abs(poly[1] - 1.0) > 1e-12
    if inconsistent:
        warnings.warn("stability polynomial has alpha_1 != 1 (inconsistent method)", RuntimeWarning)

    t = np.linspace(0.0, 1.0, n_samples)
    phi = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    circle = np.exp(1j * phi) - 1.0
    bean = weno_bean(n_samples)

    def fits(shape):
        return lambda scale: bool(np.all(np.abs(_evaluate(poly, scale * shape)) <= 1.0 + tol))

    return StabilityMeasures(
        real_axis_extent=_largest_scale(fits(-t.astype(complex)), resolution),
        imag_axis_extent=_largest_scale(fits(1j * t), resolution),
        inscribed_disc_radius=_largest_scale(fits(circle), resolution),
        weno_bean_scale=_largest_scale(fits(bean), resolution),
        inconsistent=inconsistent,
        resolution=resolution,
    )


# ---------------------------------------------------------------------------
# strong stability preservation

def _active_stages(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Indices of stages that the weights depend on, directly or through A."""
    needed = set(np.flatnonzero(b).tolist())
    frontier = list(needed)
    while frontier:
        j = frontier.pop()
        for k in np.flatnonzero(a[j]).tolist():
            if k not in needed:
                needed.add(k)
                frontier.append(k)
    return np.array(sorted(needed), dtype=int)


def _absolutely_monotonic(k: np.ndarray, r: float, tol: float = 1e-12) -> bool:
    n = k.shape[0]
    m = np.eye(n) + r * k
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.isfinite(inv)):
        return False
    if np.any(k @ inv < -tol):
        return False
    row = inv @ np.ones(n)
    return bool(np.all(row >= -tol) and np.all(row <= 1 + tol))


def ssp_coefficient(tab: EmbeddedTableau, weight_label: str, tol: float = 1e-8) -> float:
    """Radius of absolute monotonicity of ``(A, b)``.

    Stages that carry no weight and feed no weighted stage are dropped
    first, so trailing stages of a larger embedding do not spoil the SSP
    coefficient of the smaller method.
    """
    b = tab.weights(weight_label)
    idx = _active_stages(tab.a_matrix, b)
    a = tab.a_matrix[np.ix_(idx, idx)]
    s = idx.size
    k = np.zeros((s + 1, s + 1))
    k[:s, :s] = a
    k[s, :s] = b[idx]
    if not _absolutely_monotonic(k, 0.0):
        return 0.0
    return _largest_scale(lambda r: _absolutely_monotonic(k, r), tol, start=1.0, limit=1e3)


# ---------------------------------------------------------------------------
# plain-text serialization

def tableau_to_text(tab: EmbeddedTableau) -> str:
    """Line 1: s; then s rows of A; then c; then ``label order b_1 ... b_s`` per weight set."""
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    lines = [str(tab.stages)]
    lines += [" ".join(fmt(v) for v in row) for row in tab.a_matrix]
    lines.append(" ".join(fmt(v) for v in tab.c_nodes))
    for ws in tab.weight_sets:
        lines.append(" ".join([ws.label, str(ws.order)] + [fmt(v) for v in ws.b]))
    return "\n".join(lines) + "\n"


def tableau_from_text(text: str, name: str = "") -> EmbeddedTableau:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    try:
        s = int(lines[0])
        a = np.array([[float(v) for v in ln.split()] for ln in lines[1 : s + 1]])
        c = np.array([float(v) for v in lines[s + 1].split()])
        sets = []
        for ln in lines[s + 2 :]:
            parts = ln.split()
            sets.append(WeightSet(parts[0], np.array([float(v) for v in parts[2:]]), int(parts[1])))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed tableau text: {exc}") from exc
    if a.shape != (s, s):
        raise ValueError(f"expected {s}x{s} coefficient rows, got shape {a.shape}")
    return EmbeddedTableau(a, tuple(sets), c, name)
