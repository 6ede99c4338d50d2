"""Finitely described real functions on the supported groups."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Any, Sequence

import numpy as np

from .characters import (
    Character,
    char_from_json,
    char_numerators,
    factors_through,
    level_denominator,
    quotient_points,
)
from .errors import DomainMismatch, NotQuotientRepresentable
from .groups import CompactAbelianGroup, GroupElement, Torus, quotient_project


class SampleFunction(ABC):
    """A measurable ``f: G -> R`` that can be evaluated pointwise and on batches."""

    group: CompactAbelianGroup

    @abstractmethod
    def eval(self, x: GroupElement) -> float: ...

    @abstractmethod
    def eval_batch(self, batch: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def to_json(self) -> dict: ...

    def _check(self, x: GroupElement) -> None:
        if x.group != self.group:
            raise DomainMismatch(f"function on {self.group} evaluated at a point of {x.group}")

    def __call__(self, x: GroupElement) -> float:
        return self.eval(x)

    def quotient_values(self, r: int) -> np.ndarray:
        """Values on every point of the level-``r`` quotient, in index order."""
        raise NotQuotientRepresentable(f"{type(self).__name__} is not representable on a finite quotient")

    def exact_table(self) -> tuple[int, list[Fraction]] | None:
        """``(level, exact rational values on that quotient)`` when available."""
        return None

    def exact_integral(self):
        """Exact Haar integral, or raise :class:`NotQuotientRepresentable`."""
        table = self.exact_table()
        if table is None:
            raise NotQuotientRepresentable(f"{type(self).__name__} has no exact integral")
        _, vals = table
        return sum(vals, Fraction(0)) / len(vals)

    def orbit_values(self, orbit, x: GroupElement) -> np.ndarray:
        """``f(x + n_k alpha)`` for every ``k`` of a precomputed orbit."""
        self._check(x)
        return self.eval_batch(self.group.translate(orbit.offsets, x))


def _exact(v):
    return v if isinstance(v, Rational) else None


@dataclass(frozen=True)
class Constant(SampleFunction):
    group: CompactAbelianGroup
    c: Any = 0

    def eval(self, x):
        self._check(x)
        return float(self.c)

    def eval_batch(self, batch):
        return np.full(len(batch), float(self.c))

    def quotient_values(self, r):
        return np.full(self.group.level_size(r), float(self.c))

    def exact_table(self):
        if _exact(self.c) is None:
            return None
        return 0, [Fraction(self.c)]

    def exact_integral(self):
        return Fraction(self.c) if _exact(self.c) is not None else float(self.c)

    def to_json(self):
        return {"kind": "constant", "c": _num_json(self.c)}


@dataclass(frozen=True)
class TrigPolynomial(SampleFunction):
    """``Re sum_j c_j gamma_j(x)``."""

    group: CompactAbelianGroup
    terms: tuple[tuple[Character, complex], ...]

    def __post_init__(self):
        terms = tuple((g, complex(c)) for g, c in self.terms)
        for g, _ in terms:
            if not g.compatible(self.group):
                raise DomainMismatch(f"{g} does not act on {self.group}")
        object.__setattr__(self, "terms", terms)

    def eval(self, x):
        self._check(x)
        return float(sum(c * g(x) for g, c in self.terms).real)

    def eval_batch(self, batch):
        out = np.zeros(len(batch), dtype=complex)
        for g, c in self.terms:
            out += c * np.exp(2j * np.pi * g.batch_angles(self.group, batch))
        return out.real

    def orbit_values(self, orbit, x):
        self._check(x)
        chars = tuple(g for g, _ in self.terms)

        def stack():
            rows = [orbit.character_values(g) for g in chars]
            return np.vstack([r.real for r in rows] + [r.imag for r in rows])

        # Re(w chi) = Re w Re chi - Im w Im chi, with w = c gamma(x)
        basis = orbit.cached(("trig", chars), stack)
        w = np.array([c * g(x) for g, c in self.terms])
        return np.concatenate([w.real, -w.imag]) @ basis

    def degree(self) -> int:
        return max((abs(g.n) for g, _ in self.terms), default=0)

    def torus_coefficient(self, gamma: Character) -> complex:
        """Fourier coefficient read off the representation ``f = sum (c/2) g + (conj c/2) conj g``."""
        out = 0j
        inv = gamma.inverse()
        for g, c in self.terms:
            if g == gamma:
                out += c / 2
            if g == inv:
                out += c.conjugate() / 2
        return out

    def quotient_values(self, r):
        if isinstance(self.group, Torus):
            raise NotQuotientRepresentable("circle functions have no finite quotient table")
        for g, _ in self.terms:
            if not factors_through(g, self.group, r):
                raise NotQuotientRepresentable(f"{g} does not factor through level {r}")
        pts = quotient_points(self.group, r)
        L = level_denominator(self.group, r)
        roots = np.exp(2j * np.pi * np.arange(L) / L)
        out = np.zeros(len(pts), dtype=complex)
        for g, c in self.terms:
            out += c * roots[char_numerators(g, self.group, r, pts)]
        return out.real

    def exact_integral(self):
        return float(sum((c for g, c in self.terms if g.is_trivial()), 0j).real)

    def to_json(self):
        return {
            "kind": "trig",
            "terms": [{"char": g.to_json(), "coeff": [c.real, c.imag]} for g, c in self.terms],
        }


@dataclass(frozen=True)
class CylinderStep(SampleFunction):
    """A function of the first ``level`` digits (p-adic) or factors (product).

    ``table[i]`` is the value on the quotient point with index ``i``
    (little-endian mixed radix, matching ``x_0 + p x_1 + ...``).
    """

    group: CompactAbelianGroup
    level: int
    table: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if isinstance(self.group, Torus):
            raise NotQuotientRepresentable("cylinder functions need a finite quotient")
        size = self.group.level_size(self.level)
        table = tuple(self.table)
        if len(table) != size:
            raise ValueError(f"table has {len(table)} entries, quotient has {size}")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "_array", np.array([float(v) for v in table]))

    @classmethod
    def spike(cls, group: CompactAbelianGroup, level: int, height, index: int = 0) -> "CylinderStep":
        """``height`` on one quotient cell, 0 elsewhere."""
        table = [0] * group.level_size(level)
        table[index] = height
        return cls(group, level, tuple(table))

    @classmethod
    def random(cls, group: CompactAbelianGroup, level: int, rng: np.random.Generator) -> "CylinderStep":
        return cls(group, level, tuple(rng.normal(size=group.level_size(level)).tolist()))

    def eval(self, x):
        self._check(x)
        q = quotient_project(x, self.level)
        return float(self._array[q.group.index_of(q)])

    def eval_batch(self, batch):
        return self._array[self.group.level_index(batch, self.level)]

    def quotient_values(self, r):
        if r < self.level:
            raise NotQuotientRepresentable(f"level-{self.level} function on a level-{r} quotient")
        q = self.group.quotient(r)
        return self._array[q.level_index(q.all_points(), self.level)]

    def exact_table(self):
        if any(_exact(v) is None for v in self.table):
            return None
        return self.level, [Fraction(v) for v in self.table]

    def exact_integral(self):
        table = self.exact_table()
        if table is None:
            return float(np.mean(self._array))
        return super().exact_integral()

    def to_json(self):
        return {"kind": "cylinder", "level": self.level, "table": [_num_json(v) for v in self.table]}


def _num_json(v):
    if isinstance(v, Fraction) and v.denominator != 1:
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, Rational):
        return int(v)
    return float(v)


def _num_parse(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


def function_from_json(group: CompactAbelianGroup, obj: dict) -> SampleFunction:
    """Parse constant, trig and cylinder functions (counterexamples parse elsewhere)."""
    kind = obj.get("kind")
    if kind == "constant":
        return Constant(group, _num_parse(obj.get("c", 0)))
    if kind == "trig":
        terms = []
        for t in obj["terms"]:
            c = t.get("coeff", 1)
            c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
            terms.append((char_from_json(group, t["char"]), c))
        return TrigPolynomial(group, tuple(terms))
    if kind == "cylinder":
        level = int(obj["level"])
        if "spike" in obj:
            return CylinderStep.spike(group, level, _num_parse(obj["spike"]), int(obj.get("index", 0)))
        return CylinderStep(group, level, tuple(_num_parse(v) for v in obj["table"]))
    raise ValueError(f"unknown function kind {kind!r}")
