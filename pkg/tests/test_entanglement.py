import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renyisplit.ed import ground_space, select_sector
from renyisplit.entanglement import (
    EntanglementSpectrum,
    renyi,
    renyi_value,
    schmidt_rank,
    schmidt_spectrum,
)
from renyisplit.lattice import InvalidRegion, Region, build_torus, region_star, region_star_plaquette, wilson_loops
from renyisplit.pauli import PerturbationSpec, build_model

LN2 = math.log(2)


def _reduced_density_direct(v, mask, n):
    """rho_A by explicit partial trace over the complement (independent route)."""
    a = [i for i in range(n) if mask >> i & 1]
    dA = 1 << len(a)
    rho = np.zeros((dA, dA))
    idx = np.arange(1 << n)
    sub = np.zeros(1 << n, dtype=int)
    for k, i in enumerate(a):
        sub |= ((idx >> i) & 1) << k
    rest = idx & ~mask
    for r in np.unique(rest):
        sel = rest == r
        vec = np.zeros(dA)
        vec[sub[sel]] = v[sel]
        rho += np.outer(vec, vec)
    return rho


def test_schmidt_spectrum_matches_partial_trace(rng):
    n = 7
    v = rng.standard_normal(1 << n)
    v /= np.linalg.norm(v)
    mask = 0b1010011
    p = schmidt_spectrum(v, mask, n).probs
    w = np.sort(np.linalg.eigvalsh(_reduced_density_direct(v, mask, n)))[::-1]
    np.testing.assert_allclose(p, w[: len(p)], atol=1e-13)


def test_toric_code_star_spectrum_22():
    g = build_torus(2, 2)
    gs = ground_space(build_model(g), k=4)
    # z-loop sector: both 2-edge z-loops lie inside the star
    from renyisplit.lattice import horizontal_loops

    psi = select_sector(gs, (wilson_loops(g)[0], horizontal_loops(g)[0]))
    np.testing.assert_allclose(schmidt_spectrum(psi, region_star(g)).probs, [0.5, 0.5], atol=1e-12)


def test_toric_code_star_plaquette_flat_32():
    g = build_torus(3, 2)
    psi = select_sector(ground_space(build_model(g), k=4, seed=1), wilson_loops(g))
    np.testing.assert_allclose(schmidt_spectrum(psi, region_star_plaquette(g)).probs, [0.25] * 4, atol=1e-10)


def test_product_state_spectrum():
    v = np.zeros(2**8)
    v[0] = 1.0
    g = build_torus(2, 2)
    np.testing.assert_allclose(schmidt_spectrum(v, region_star(g)).probs, [1.0])


def test_renyi_examples():
    flat = EntanglementSpectrum.from_values([0.5, 0.5])
    for a in (0, 0.5, 1, 2, 7, math.inf):
        assert renyi_value(flat, a) == pytest.approx(LN2, abs=1e-14)
    assert renyi(EntanglementSpectrum.from_values([1.0]), 7).value == 0.0
    sp = EntanglementSpectrum.from_values([0.9, 0.1])
    s1 = renyi_value(sp, 1.0)
    assert abs(renyi_value(sp, 1 + 1e-4) - s1) < 1e-3
    assert abs(renyi_value(sp, 1 - 1e-4) - s1) < 1e-3
    assert renyi_value(flat, 1, base=2) == pytest.approx(1.0)


def test_negative_alpha_rejected():
    with pytest.raises(ValueError):
        renyi_value(EntanglementSpectrum.from_values([1.0]), -0.5)


def test_schmidt_rank_examples():
    assert schmidt_rank(EntanglementSpectrum.from_values([0.5, 0.5]), 1e-10) == 2
    assert schmidt_rank(EntanglementSpectrum.from_values([1.0]), 1e-10) == 1
    g = build_torus(3, 2)
    A = region_star(g)
    lz, lx = wilson_loops(g)
    psi0 = select_sector(ground_space(build_model(g), k=4), (lz, lx))
    H = build_model(g, PerturbationSpec("UniformXZ", lam_x=0.05, lam_z=0.025))
    psi = select_sector(ground_space(H, k=4), (lz, lx))
    assert schmidt_rank(schmidt_spectrum(psi, A)) > schmidt_rank(schmidt_spectrum(psi0, A))


def test_region_validation():
    with pytest.raises(InvalidRegion):
        schmidt_spectrum(np.ones(8) / math.sqrt(8), 0, 3)
    with pytest.raises(ValueError):
        schmidt_spectrum(np.ones(8), 1, 4)


# ---- property suite (random pure states, random regions, N <= 12) ----------

ALPHAS = (0.0, 0.25, 0.5, 1.0, 2.0, 3.0, math.inf)


@st.composite
def state_and_region(draw):
    n = draw(st.integers(2, 12))
    seed = draw(st.integers(0, 2**32 - 1))
    mask = draw(st.integers(1, (1 << n) - 2))
    r = np.random.default_rng(seed)
    v = r.standard_normal(1 << n)
    if draw(st.booleans()):
        # low-rank states exercise the rank tolerance
        keep = r.random(1 << n) < 0.05
        keep[0] = True
        v = np.where(keep, v, 0.0)
    return n, v / np.linalg.norm(v), mask


@settings(max_examples=200, deadline=None, derandomize=True)
@given(state_and_region())
def test_random_state_properties(case):
    n, v, mask = case
    A = Region("A", mask, n)
    pa = schmidt_spectrum(v, A)
    pb = schmidt_spectrum(v, A.swapped())
    assert abs(pa.total - 1.0) <= 1e-10
    assert abs(pb.total - 1.0) <= 1e-10
    sa = [renyi_value(pa, a) for a in ALPHAS]
    sb = [renyi_value(pb, a) for a in ALPHAS]
    np.testing.assert_allclose(sa, sb, atol=1e-10)
    assert all(x >= y - 1e-10 for x, y in zip(sa, sa[1:]))
    assert sa[0] == pytest.approx(math.log(schmidt_rank(pa)), abs=1e-12)
