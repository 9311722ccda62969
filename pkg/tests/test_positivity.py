"""Positivity of flux-partitioned steps for upwind advection (a = 1)."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sperk.integrators import rk_stages, step_flux_partitioned
from sperk.masks import Mask
from sperk.problems import make_problem
from sperk.spatial import GridField
from sperk.tableaux import EmbeddedTableau, WeightSet, builtin_pair, ssp_coefficient

RK75 = builtin_pair("pair75_53")
seeds = st.integers(0, 2**32 - 1)


def ssp53_pair() -> EmbeddedTableau:
    """SSPRK(5,3) plus a first-order weight set on the same five stages; both have C = 2.65."""
    a = RK75.a_matrix[:5, :5]
    # stage 5's own row completed by a forward-Euler step from stage 5
    alt = np.append(RK75.a_matrix[4, :4], 1 - RK75.c_nodes[4])
    return EmbeddedTableau(a, (WeightSet("alt", alt, 1), WeightSet("ssp", RK75.weights("bhat")[:5], 3)))


def mixed_mask_threshold(tab: EmbeddedTableau, labels=("b", "bhat"), n: int = 12) -> float:
    """Largest dt/dx keeping every coefficient of the (linear) update non-negative for all face pairs.

    The update of node i depends only on chi at its two faces and is affine in
    each, so checking the four binary face pairs covers every mask in [0, 1].
    """
    a = tab.a_matrix
    w1, w2 = tab.weights(labels[0]), tab.weights(labels[1])

    def positive(lam):
        stages = []
        for j in range(tab.stages):
            y = np.eye(n)[0]
            for k in range(j):
                y = y - lam * a[j, k] * (stages[k] - np.roll(stages[k], 1))
            stages.append(y)
        y = np.array(stages)
        for right in (0, 1):
            for left in (0, 1):
                wr = right * w1 + (1 - right) * w2
                wl = left * w1 + (1 - left) * w2
                out = np.eye(n)[0] - lam * (wr @ y) + lam * (wl @ np.roll(y, 1, axis=1))
                if out.min() < -1e-13:
                    return False
        return True

    lo, hi = 0.0, 8.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if positive(mid) else (lo, mid)
    return lo


def flux_step(tab, labels, seed, cfl, binary=False, n=32):
    rng = np.random.default_rng(seed)
    u0 = rng.uniform(0, 1, n) * (rng.uniform(size=n) < 0.5)
    p = make_problem("advection", n, assembler="upwind").with_grid(GridField(u0, 0.0, 1.0))
    ws = rk_stages(p, tab, p.grid, cfl * p.grid.dx)
    chi = rng.uniform(size=n)
    if binary:
        chi = (chi < 0.5).astype(float)
    return step_flux_partitioned(ws, Mask("interface", np.append(chi, chi[0])), labels).values


def test_rk75_bound_is_zero():
    # b of the 7-stage pair has a negative entry, so its SSP coefficient and the bound vanish
    assert ssp_coefficient(RK75, "b") == 0.0
    assert abs(ssp_coefficient(RK75, "bhat") - 2.6506) < 1e-3


def test_ssp53_pair_coefficients():
    tab = ssp53_pair()
    assert abs(ssp_coefficient(tab, "alt") - 2.6506) < 1e-3
    assert abs(ssp_coefficient(tab, "ssp") - 2.6506) < 1e-3


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([0.0, 1.0]))
def test_single_weight_set_positive_at_ssp_limit(seed, value):
    tab = ssp53_pair()
    c = min(ssp_coefficient(tab, lb) for lb in tab.labels)
    rng = np.random.default_rng(seed)
    u0 = rng.uniform(0, 1, 32) * (rng.uniform(size=32) < 0.5)
    p = make_problem("advection", 32, assembler="upwind").with_grid(GridField(u0, 0.0, 1.0))
    ws = rk_stages(p, tab, p.grid, c * p.grid.dx)
    out = step_flux_partitioned(ws, Mask("interface", np.full(33, value)), ("alt", "ssp")).values
    assert out.min() >= -1e-12


def test_mixed_masks_threshold_is_below_the_ssp_bound():
    tab = ssp53_pair()
    lam = mixed_mask_threshold(tab, ("alt", "ssp"))
    c = ssp_coefficient(tab, "ssp")
    assert 2.19 < lam < 2.21
    assert lam < 0.85 * c


@settings(max_examples=40, deadline=None)
@given(seeds, st.booleans())
def test_mixed_masks_positive_below_threshold(seed, binary):
    tab = ssp53_pair()
    lam = mixed_mask_threshold(tab, ("alt", "ssp"))
    assert flux_step(tab, ("alt", "ssp"), seed, 0.99 * lam, binary).min() >= -1e-12


def test_mixed_mask_counterexample_at_ssp_bound():
    tab = ssp53_pair()
    c = ssp_coefficient(tab, "ssp")
    worst = min(flux_step(tab, ("alt", "ssp"), seed, c, binary=True).min() for seed in range(20))
    assert worst < -1e-3


def test_rk75_flux_partitioned_mixed_threshold():
    lam = mixed_mask_threshold(RK75)
    assert 0.0 < lam < 0.05
    for seed in range(10):
        assert flux_step(RK75, ("b", "bhat"), seed, 0.99 * lam).min() >= -1e-12
