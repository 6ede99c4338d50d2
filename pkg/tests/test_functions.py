from fractions import Fraction

import numpy as np
import pytest

from ergolab.characters import PadicChar, ProductChar, TorusChar
from ergolab.errors import DomainMismatch, NotQuotientRepresentable
from ergolab.functions import Constant, CylinderStep, TrigPolynomial, function_from_json
from ergolab.groups import FiniteProduct, PadicTruncated, Torus
from ergolab.rng import make_rng


def test_pointwise_examples():
    G = PadicTruncated(3, 4)
    assert Constant(G, 2.5)(G.zero()) == 2.5
    assert CylinderStep(G, 1, (0, 3, 0))(G.element((1, 2, 0, 0))) == 3
    f = TrigPolynomial(Torus(), ((TorusChar(1), 1),))
    assert f(Torus().element(Fraction(1, 4))) == pytest.approx(0, abs=1e-15)


def test_batch_matches_pointwise():
    rng = make_rng(0)
    for G, f in [
        (PadicTruncated(5, 3), CylinderStep.random(PadicTruncated(5, 3), 2, rng)),
        (FiniteProduct((3, 4)), TrigPolynomial(FiniteProduct((3, 4)), ((ProductChar((3, 4), (1, 3)), 2 - 1j),))),
        (PadicTruncated(2, 6), TrigPolynomial(PadicTruncated(2, 6), ((PadicChar(2, 3, 4), 1j),))),
        (Torus(), TrigPolynomial(Torus(), ((TorusChar(3), 1), (TorusChar(0), 0.25)))),
    ]:
        xs = [G.sample_haar(rng) for _ in range(50)]
        assert np.allclose(f.eval_batch(G.to_batch(xs)), [f(x) for x in xs], atol=1e-12)


def test_quotient_values_and_integrals():
    G = PadicTruncated(3, 3)
    f = CylinderStep(G, 1, (Fraction(1), Fraction(2), Fraction(6)))
    assert f.exact_integral() == 3
    assert np.array_equal(f.quotient_values(2), np.array([1, 2, 6] * 3, dtype=float))
    with pytest.raises(NotQuotientRepresentable):
        CylinderStep(G, 2, tuple(range(9))).quotient_values(1)
    t = TrigPolynomial(G, ((PadicChar.trivial(3), 0.5), (PadicChar(3, 1, 2), 1)))
    assert t.exact_integral() == pytest.approx(0.5)
    assert np.mean(t.quotient_values(2)) == pytest.approx(0.5)


def test_json_roundtrip():
    G = PadicTruncated(3, 3)
    for f in (Constant(G, Fraction(1, 3)), CylinderStep(G, 1, (0, Fraction(1, 2), 2)),
              TrigPolynomial(G, ((PadicChar(3, 1, 1), 1 + 2j),))):
        assert function_from_json(G, f.to_json()) == f
    spike = function_from_json(G, {"kind": "cylinder", "level": 2, "spike": 9, "index": 4})
    assert spike.table[4] == 9 and sum(spike.table) == 9


def test_domain_errors():
    with pytest.raises(NotQuotientRepresentable):
        CylinderStep(Torus(), 1, (1,))
    with pytest.raises(ValueError):
        CylinderStep(PadicTruncated(3, 3), 1, (1, 2))
    with pytest.raises(DomainMismatch):
        Constant(PadicTruncated(3, 3), 1)(PadicTruncated(2, 3).zero())
