from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.characters import enumerate_dual
from ergolab.counterexamples import CounterexampleFunction, SinglePrime
from ergolab.diagnostics import (
    GoodSetConfig,
    build_aux_h,
    good_set_measure,
    good_set_measure_direct,
    level_set_measure,
    parseval_chain_check,
    select_B,
    shift_index,
    verify_return_identity,
)
from ergolab.functions import Constant, CylinderStep
from ergolab.groups import PadicTruncated, scalar_mul
from ergolab.rng import make_rng

G81 = PadicTruncated(3, 4)
SPIKE = CylinderStep.spike(G81, 4, 81)
CFG = GoodSetConfig(K=2, eps=0.5, N_orbit=12)


def _alphas(n, seed=0):
    rng = make_rng(seed)
    return [G81.sample_haar(rng) for _ in range(n)]


def test_level_set_constants():
    f = Constant(G81, Fraction(-2))
    assert level_set_measure(f, 2) == 0
    assert level_set_measure(f, 5) == 0
    assert level_set_measure(f, 1) == 1


def test_level_set_of_f_k():
    spec = SinglePrime(3, 6)
    for k in (1, 2, 3):
        f_k = CounterexampleFunction(spec, k)
        # the series up to k equals p^k only on H_k; lower terms stay below p^k
        assert level_set_measure(f_k, 3**k - 1) == Fraction(1, 3**k)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), t1=st.floats(0, 3), t2=st.floats(0, 3))
def test_level_sets_monotone(seed, t1, t2):
    f = CylinderStep.random(G81, 3, make_rng(seed))
    lo, hi = sorted((t1, t2))
    assert level_set_measure(f, hi) <= level_set_measure(f, lo)


def test_good_set_trivial_cases():
    for a in _alphas(3):
        assert good_set_measure(Constant(G81, 0), a, CFG) == 1
        assert good_set_measure(Constant(G81, CFG.K**2 - 1), a, CFG) == 1


@pytest.mark.parametrize("seed", range(4))
def test_good_set_matches_direct_scan(seed):
    G = PadicTruncated(3, 3)
    rng = make_rng(seed)
    f = CylinderStep(G, 3, tuple(float(v) for v in rng.integers(0, 12, size=27)))
    cfg = GoodSetConfig(K=2, eps=0.5, N_orbit=8)
    a = G.sample_haar(rng)
    assert good_set_measure(f, a, cfg) == good_set_measure_direct(f, a, cfg)


def test_aux_h_zero_function():
    h = build_aux_h(Constant(G81, 0), _alphas(1)[0], CFG)
    assert h.in_B and h.a == 0 and h.off_value == 0
    assert all(v == 0 for v in h.exact_values())


def test_aux_h_off_value():
    # a(alpha) = 1/3: a level-1 indicator of height > K^2 marks one third of the group as bad
    G = PadicTruncated(3, 2)
    f = CylinderStep(G, 1, (0, 100, 0))
    cfg = GoodSetConfig(K=2, eps=0.5, N_orbit=2)
    h = build_aux_h(f, G.zero(), cfg)
    assert h.a == Fraction(1, 3)
    assert h.off_value == Fraction(-1, 2)
    assert h.exact_mean() == 0


@pytest.mark.parametrize("seed", range(3))
def test_aux_h_mean_zero_and_bounded(seed):
    for a in _alphas(6, seed):
        h = build_aux_h(SPIKE, a, CFG)
        assert h.exact_mean() == 0
        assert sum(h.exact_values(), Fraction(0)) == 0
        if h.in_B:
            assert h.a < 1 - Fraction(CFG.eps)
            assert max(abs(v) for v in h.exact_values()) <= h.bound()


def test_return_identity_spike():
    for a in select_B(SPIKE, _alphas(9), CFG):
        assert verify_return_identity(SPIKE, a.alpha, CFG, 5, a)


def test_return_identity_exhaustive_oracle():
    h = select_B(SPIKE, _alphas(9), CFG)[0]
    n5 = 5
    idx = shift_index(G81, scalar_mul(n5, -h.alpha))
    for i, x in enumerate(G81.elements()):
        if abs(SPIKE(x)) > 5 * CFG.K:
            assert h.values[idx[i]] == 1


def test_return_identity_vacuous_and_injected():
    f = Constant(G81, CFG.K**2 - 1)
    a = _alphas(1)[0]
    assert verify_return_identity(f, a, CFG, 5)
    h = select_B(SPIKE, _alphas(9), CFG)[0]
    bad = h.values.copy()
    # the only point of L_10 is 0, and the identity reads h at -5 alpha
    hit = G81.index_of(scalar_mul(5, -h.alpha))
    assert bad[hit] == 1.0
    bad[hit] = 0.0
    corrupted = type(h)(h.alpha, h.in_B, h.H_mask, h.a, h.off_value, bad)
    assert not verify_return_identity(SPIKE, h.alpha, CFG, 5, corrupted)


def test_chain_zero_function():
    rep = parseval_chain_check(Constant(G81, 0), _alphas(3), CFG, 5)
    assert rep.lhs == 0 and rep.rhs >= 0 and rep.holds


def test_chain_spike():
    alphas = _alphas(9)
    for k in range(CFG.K + 1, CFG.K + 11):
        rep = parseval_chain_check(SPIKE, alphas, CFG, k)
        assert rep.holds and rep.slack >= 0
        assert rep.lhs == Fraction(1, 81)
        assert abs(rep.rhs - rep.rhs_parseval) < 1e-9
        assert rep.coefficient_error < 1e-9


def test_chain_phi_hat_brute_force():
    # oracle: build phi_k pointwise and take its Fourier transform by a direct sum over points
    alphas = _alphas(9)
    k = 4
    auxes = select_B(SPIKE, alphas, CFG)
    pts = list(G81.elements())
    phi = np.zeros(len(pts))
    for h in auxes:
        for i, x in enumerate(pts):
            phi[i] += h.values[G81.index_of(x - scalar_mul(k, h.alpha))]
    phi /= len(auxes)
    rhs_direct = float(np.mean(phi**2))
    hat = [sum(phi[i] * g(x).conjugate() for i, x in enumerate(pts)) / len(pts) for g in enumerate_dual(G81)]
    rep = parseval_chain_check(SPIKE, alphas, CFG, k)
    assert rep.rhs == pytest.approx(rhs_direct, abs=1e-12)
    assert sum(abs(c) ** 2 for c in hat) == pytest.approx(rhs_direct, abs=1e-12)


def test_chain_argument_checks():
    with pytest.raises(ValueError):
        parseval_chain_check(SPIKE, _alphas(3), CFG, 2)
    with pytest.raises(ValueError):
        parseval_chain_check(SPIKE, [], CFG, 5)
    with pytest.raises(ValueError):
        GoodSetConfig(K=2, eps=1.5, N_orbit=5)
