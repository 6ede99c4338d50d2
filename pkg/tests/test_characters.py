import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.characters import (
    PadicChar,
    Phase,
    ProductChar,
    TorusChar,
    block_sum_direct,
    char_eval,
    char_from_json,
    char_order,
    char_pow,
    character_mean_exact,
    enumerate_dual,
    fourier_coeff,
    geometric_block_sum,
    inner_product_exact,
    parseval_residual,
    trivial_character,
)
from ergolab.errors import DepthExceeded, DomainMismatch, NotQuotientRepresentable
from ergolab.functions import Constant, CylinderStep, TrigPolynomial
from ergolab.groups import FiniteProduct, PadicTruncated, Torus
from ergolab.rng import make_rng

T = Torus()


def test_trivial_character_is_one():
    for G in (T, PadicTruncated(3, 4), FiniteProduct((2, 5))):
        g0 = trivial_character(G)
        x = G.sample_haar(make_rng(1))
        assert char_eval(g0, x).is_one() and g0(x) == 1
        assert char_order(g0) == 1


def test_padic_char_examples():
    G = PadicTruncated(3, 4)
    val = PadicChar(3, 1, 1)(G.element((1, 0, 0, 0)))
    assert val == pytest.approx(cmath.exp(2j * math.pi / 3), abs=1e-15)
    H = PadicTruncated(2, 4)
    assert char_eval(PadicChar(2, 1, 2), H.element((1, 1, 0, 0))).angle == Fraction(3, 4)
    assert PadicChar(2, 1, 2)(H.element((1, 1, 0, 0))) == -1j


def test_orders():
    assert char_order(PadicChar(3, 1, 2)) == 9
    assert char_order(PadicChar(3, 2, 2)) == 9
    assert char_order(TorusChar(5)) == math.inf
    assert char_order(ProductChar((2, 3), (1, 1))) == 6
    assert char_order(ProductChar((4, 6), (2, 3))) == 2


def test_powers():
    g = PadicChar(3, 1, 1)
    assert char_pow(g, 0).is_trivial()
    assert char_pow(g, 3).is_trivial()
    assert char_pow(TorusChar(2), 3) == TorusChar(6)
    assert char_pow(PadicChar(3, 1, 2), 3) == PadicChar(3, 1, 1)


def test_padic_char_validation():
    with pytest.raises(ValueError):
        PadicChar(3, 3, 2)  # l divisible by p
    with pytest.raises(DepthExceeded):
        PadicChar(3, 1, 5)(PadicTruncated(3, 4).zero())


def test_dual_sizes():
    assert len(enumerate_dual(FiniteProduct((2,)))) == 2
    for p, r in [(2, 3), (3, 2), (5, 2), (3, 4)]:
        dual = enumerate_dual(PadicTruncated(p, r))
        assert len(dual) == p**r
        # oracle: (l, r') with r' = r and gcd(l, p) = 1
        exact = sum(1 for g in dual if g.order() == p**r)
        assert exact == sum(1 for l in range(p**r) if math.gcd(l, p) == 1)
    orders = sorted(g.order() for g in enumerate_dual(FiniteProduct((2, 3))))
    assert orders == [1, 2, 3, 3, 6, 6]
    assert len(enumerate_dual(T, 3)) == 7


def test_dual_is_distinct():
    dual = enumerate_dual(PadicTruncated(3, 3))
    G = PadicTruncated(3, 3)
    tables = {tuple(char_eval(g, x).angle for x in G.elements()) for g in dual}
    assert len(tables) == len(dual)


@pytest.mark.parametrize("G", [PadicTruncated(2, 4), PadicTruncated(3, 3), FiniteProduct((2, 3, 4))], ids=str)
def test_orthogonality_exact(G):
    dual = enumerate_dual(G)
    for i, a in enumerate(dual):
        for j, b in enumerate(dual):
            assert inner_product_exact(a, b, G) == (1 if i == j else 0)


def test_orthogonality_numeric_oracle():
    G = FiniteProduct((3, 5))
    pts = list(G.elements())
    for a in enumerate_dual(G):
        for b in enumerate_dual(G):
            s = sum(a(x) * b(x).conjugate() for x in pts) / len(pts)
            assert abs(s - (1 if a == b else 0)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_multiplicativity(seed):
    rng = make_rng(seed)
    for G, chars in [
        (PadicTruncated(3, 6), [PadicChar(3, 5, 4), PadicChar(3, 1, 6)]),
        (FiniteProduct((4, 9)), [ProductChar((4, 9), (1, 2))]),
        (T, [TorusChar(7), TorusChar(-3)]),
    ]:
        for _ in range(50):
            a, b = G.sample_haar(rng), G.sample_haar(rng)
            for g in chars:
                assert char_eval(g, a + b) == char_eval(g, a) * char_eval(g, b)


@pytest.mark.parametrize("G", [PadicTruncated(2, 4), PadicTruncated(5, 2), FiniteProduct((4, 6))], ids=str)
def test_order_consistency(G):
    for g in enumerate_dual(G):
        n = g.order()
        assert g.pow(n).is_trivial()
        for d in range(1, n):
            if n % d == 0:
                assert not g.pow(d).is_trivial()


def test_distinct_powers_on_torus():
    for g in (TorusChar(1), TorusChar(-2), TorusChar(5)):
        for seq in (range(101), [k * k for k in range(101)]):
            assert len({g.pow(n) for n in seq}) == 101


def test_json_parsing():
    G = PadicTruncated(3, 4)
    assert char_from_json(G, {"kind": "padic", "l": 3, "r": 2}) == PadicChar(3, 1, 1)
    P = FiniteProduct((2, 3))
    assert char_from_json(P, {"kind": "product", "residues": [1]}) == ProductChar((2, 3), (1, 0))
    with pytest.raises(DomainMismatch):
        char_from_json(T, {"kind": "padic", "l": 1, "r": 1})


# -- Fourier coefficients -----------------------------------------------


def _brute_coeff(f, g):
    """Oracle: direct sum of f(x) conj(gamma(x)) over every point."""
    pts = list(f.group.elements())
    return sum(f(x) * g(x).conjugate() for x in pts) / len(pts)


def test_coeff_of_constant():
    G = PadicTruncated(3, 2)
    f = Constant(G, 1)
    for g in enumerate_dual(G):
        assert fourier_coeff(f, g) == pytest.approx(1 if g.is_trivial() else 0, abs=1e-12)


@pytest.mark.parametrize("q", [2, 5, 9])
def test_coeff_of_point_indicator(q):
    G = FiniteProduct((q,))
    f = CylinderStep.spike(G, 1, 1)
    for g in enumerate_dual(G):
        assert fourier_coeff(f, g) == pytest.approx(1 / q, abs=1e-12)


def test_coeff_of_real_part_on_z5():
    G = FiniteProduct((5,))
    g1 = ProductChar((5,), (1,))
    f = TrigPolynomial(G, ((g1, 1),))
    for g in enumerate_dual(G):
        want = 0.5 if g in (g1, g1.inverse()) else 0.0
        assert fourier_coeff(f, g) == pytest.approx(want, abs=1e-12)
        assert fourier_coeff(f, g) == pytest.approx(_brute_coeff(f, g), abs=1e-12)


def test_coeff_matches_fft_on_cyclic_padic():
    # Z/p^r is cyclic: the DFT of the value table ordered by integer value is numpy's FFT
    G = PadicTruncated(3, 4)
    f = CylinderStep.random(G, 4, make_rng(5))
    vals = f.quotient_values(4)  # index = integer value
    fft = np.fft.fft(vals) / len(vals)
    for g in enumerate_dual(G):
        s = int(g.l * 3 ** (4 - g.r)) % 81 if not g.is_trivial() else 0
        assert fourier_coeff(f, g) == pytest.approx(fft[s], abs=1e-12)


def test_coeff_matches_brute_force_on_product():
    G = FiniteProduct((2, 3, 4))
    f = CylinderStep.random(G, 3, make_rng(6))
    for g in enumerate_dual(G):
        assert fourier_coeff(f, g) == pytest.approx(_brute_coeff(f, g), abs=1e-12)


def test_coeff_on_coarser_level():
    G = PadicTruncated(2, 5)
    f = CylinderStep.random(G, 2, make_rng(0))
    g_fine = PadicChar(2, 1, 4)
    assert fourier_coeff(f, g_fine, 4) == pytest.approx(_brute_coeff(f, g_fine), abs=1e-12)
    assert fourier_coeff(f, g_fine, 2) == 0
    with pytest.raises(NotQuotientRepresentable):
        fourier_coeff(f, PadicChar(2, 1, 1), 1)


def test_torus_coefficients_algebraic():
    f = TrigPolynomial(T, ((TorusChar(0), 0.5), (TorusChar(2), 1 - 1j)))
    assert fourier_coeff(f, TorusChar(2)) == pytest.approx(0.5 - 0.5j)
    assert fourier_coeff(f, TorusChar(-2)) == pytest.approx(0.5 + 0.5j)
    assert fourier_coeff(f, TorusChar(0)) == pytest.approx(0.5)


# -- Parseval -------------------------------------------------------------


@pytest.mark.parametrize("q", [3, 8])
def test_parseval_point_indicator(q):
    G = FiniteProduct((q,))
    f = CylinderStep.spike(G, 1, 1)
    assert parseval_residual(f, f) < 1e-15
    assert float(np.mean(f.quotient_values(1) ** 2)) == pytest.approx(1 / q)


def test_parseval_constant():
    G = PadicTruncated(5, 2)
    assert parseval_residual(Constant(G, 3), Constant(G, 3)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_parseval_random_cylinder(seed):
    G = PadicTruncated(3, 4)
    rng = make_rng(seed)
    f, g = CylinderStep.random(G, 4, rng), CylinderStep.random(G, 3, rng)
    assert parseval_residual(f, g) < 1e-9
    assert parseval_residual(f, f) < 1e-9


def test_parseval_torus():
    f = TrigPolynomial(T, ((TorusChar(1), 2), (TorusChar(3), 1j)))
    g = TrigPolynomial(T, ((TorusChar(0), 1), (TorusChar(3), 1)))
    assert parseval_residual(f, g) < 1e-12
    assert parseval_residual(f, f) < 1e-12


def test_character_mean_exact():
    G = PadicTruncated(3, 3)
    assert character_mean_exact(PadicChar(3, 1, 3), G) == 0
    assert character_mean_exact(PadicChar.trivial(3), G) == 1


# -- block sums ----------------------------------------------------------


def test_block_sum_cube_roots_vanish():
    G = PadicTruncated(3, 4)
    a = G.element((1, 0, 0, 0))
    g = PadicChar(3, 1, 1)
    assert geometric_block_sum(g, a, 1) == 0
    direct = sum(cmath.exp(-2j * math.pi * k / 3) for k in (3, 4, 5))
    assert abs(direct) < 1e-12


def test_block_sum_trivial_character():
    G = PadicTruncated(3, 4)
    assert geometric_block_sum(PadicChar.trivial(3), G.from_int(2), 2) == pytest.approx(9)


def test_block_sum_closed_form_matches_direct():
    G = PadicTruncated(2, 4)
    a = G.element((1, 0, 0, 0))
    g = PadicChar(2, 1, 2)
    oracle = sum(cmath.exp(-2j * math.pi * k / 4) for k in range(4, 8))
    assert abs(geometric_block_sum(g, a, 2) - block_sum_direct(g, a, 2)) < 1e-12
    assert abs(block_sum_direct(g, a, 2) - oracle) < 1e-12


@pytest.mark.parametrize("p,kappa", [(2, 3), (3, 2), (5, 2)])
def test_block_sums_vanish_below_order(p, kappa):
    G = PadicTruncated(p, kappa + 2)
    for a0 in range(1, p):
        a = G.from_int(a0)
        for g in enumerate_dual(G, kappa):
            if g.is_trivial():
                continue
            assert abs(geometric_block_sum(g, a, kappa)) < 1e-9
            assert abs(block_sum_direct(g, a, kappa)) < 1e-9


def test_block_sum_witness_at_next_order():
    p, kappa = 3, 2
    G = PadicTruncated(p, kappa + 1)
    for l in (1, 2, 4):
        g = PadicChar(p, l, kappa + 1)
        assert max(abs(geometric_block_sum(g, G.from_int(a0), kappa)) for a0 in range(1, p)) > 0.1


def test_phase_renderings():
    assert Phase(Fraction(1, 4)).value == 1j
    assert Phase(Fraction(5, 4)) == Phase(Fraction(1, 4))
    assert Phase(Fraction(1, 3)).value == pytest.approx(cmath.exp(2j * math.pi / 3))
    assert (Phase(Fraction(1, 3)) ** 3).is_one()


@pytest.mark.parametrize("moduli", [(2, 3, 4), (4, 9, 25), (6, 10)])
def test_product_transform_matches_dense_sum(moduli):
    from ergolab.characters import fourier_transform

    G = FiniteProduct(moduli)
    v = make_rng(3).normal(size=G.size)
    chars = enumerate_dual(G)
    separable = fourier_transform(v, G, G.max_level(), chars)
    dense = np.concatenate([fourier_transform(v, G, G.max_level(), chars[i : i + 64])
                            for i in range(0, len(chars), 64)])
    assert np.abs(separable - dense).max() < 1e-12
