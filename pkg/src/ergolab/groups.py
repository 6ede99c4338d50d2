"""Compact Abelian groups: the circle, finite products of cyclic groups and
truncated p-adic integers.

Elements are immutable and all arithmetic is exact. Besides the scalar API
(:class:`GroupElement` with ``+``, unary ``-`` and ``n * a``) each carrier
has a *batch* representation used by the averaging engine: a numpy array
holding many points at once.

* ``Torus``: float64 array of positions in [0, 1).
* ``FiniteProduct``: int64 array of shape ``(n, D)`` holding residues.
* ``PadicTruncated``: integer array of shape ``(n,)`` holding the value
  ``x_0 + p x_1 + ... (mod p^D)``; dtype object when ``p^D`` is too large
  for int64 products.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterator, Sequence

import numpy as np

from .errors import DepthExceeded, DomainMismatch, NotQuotientRepresentable, SizeExceeded

#: Largest finite quotient the package will enumerate.
MAX_ENUMERATION = 10**7

_INT64_SAFE = 1 << 62


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class CompactAbelianGroup(ABC):
    """Common interface of the three carriers."""

    kind: str = ""

    # -- scalar arithmetic on raw values --------------------------------
    @abstractmethod
    def _normalize(self, value: Any) -> Any: ...

    @abstractmethod
    def _add(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def _neg(self, a: Any) -> Any: ...

    @abstractmethod
    def _mul(self, n: int, a: Any) -> Any: ...

    @abstractmethod
    def _zero_value(self) -> Any: ...

    @abstractmethod
    def _sample_value(self, rng: np.random.Generator) -> Any: ...

    @abstractmethod
    def to_json(self) -> dict: ...

    # -- batch representation -------------------------------------------
    @abstractmethod
    def to_batch(self, elements: Sequence["GroupElement"]) -> np.ndarray: ...

    @abstractmethod
    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    @abstractmethod
    def orbit_offsets(self, alpha: "GroupElement", ns: np.ndarray) -> np.ndarray:
        """Batch of ``n * alpha`` for every ``n`` in ``ns`` (no incremental sums)."""

    @abstractmethod
    def translate(self, batch: np.ndarray, x: "GroupElement") -> np.ndarray:
        """Batch of ``x + b`` for every point ``b`` of ``batch``."""

    is_finite: bool = True

    def element(self, value: Any) -> "GroupElement":
        return GroupElement(self, self._normalize(value))

    def zero(self) -> "GroupElement":
        return GroupElement(self, self._zero_value())

    def sample_haar(self, rng: np.random.Generator) -> "GroupElement":
        return GroupElement(self, self._sample_value(rng))

    # -- finite quotients (overridden by the finite carriers) ------------
    def max_level(self) -> int:
        raise NotQuotientRepresentable(f"{self.kind} group has no finite quotients")

    def quotient(self, r: int) -> "CompactAbelianGroup":
        raise NotQuotientRepresentable(f"{self.kind} group has no finite quotients")

    def level_size(self, r: int) -> int:
        raise NotQuotientRepresentable(f"{self.kind} group has no finite quotients")

    def level_index(self, batch: np.ndarray, r: int) -> np.ndarray:
        """Index in ``range(level_size(r))`` of each point's image in the level-r quotient."""
        raise NotQuotientRepresentable(f"{self.kind} group has no finite quotients")

    def project_value(self, value: Any, r: int) -> Any:
        raise NotQuotientRepresentable(f"{self.kind} group has no finite quotients")

    @property
    def size(self) -> int:
        return self.level_size(self.max_level())

    def all_points(self) -> np.ndarray:
        """Batch of every element, in index order."""
        raise SizeExceeded(f"{self.kind} group is infinite")

    def element_at(self, index: int) -> "GroupElement":
        raise SizeExceeded(f"{self.kind} group is infinite")

    def index_of(self, x: "GroupElement") -> int:
        raise SizeExceeded(f"{self.kind} group is infinite")

    def elements(self) -> Iterator["GroupElement"]:
        for i in range(self.size):
            yield self.element_at(i)

    def _check_enumerable(self, size: int) -> None:
        if size > MAX_ENUMERATION:
            raise SizeExceeded(f"quotient of size {size} exceeds limit {MAX_ENUMERATION}")


@dataclass(frozen=True)
class GroupElement:
    group: CompactAbelianGroup
    value: Any

    def _check(self, other: "GroupElement") -> None:
        if not isinstance(other, GroupElement) or other.group != self.group:
            raise DomainMismatch(f"cannot combine elements of {self.group} and {getattr(other, 'group', other)}")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group, self.group._add(self.value, other.value))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group, self.group._add(self.value, self.group._neg(other.value)))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.group, self.group._neg(self.value))

    def __rmul__(self, n: int) -> "GroupElement":
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            return NotImplemented
        return scalar_mul(int(n), self)

    def is_zero(self) -> bool:
        return self.value == self.group._zero_value()

    @property
    def digits(self) -> tuple[int, ...]:
        if not isinstance(self.group, PadicTruncated):
            raise DomainMismatch("digits are only defined for p-adic elements")
        return self.value

    @cached_property
    def integer(self) -> int:
        """Integer value ``x_0 + p x_1 + ...`` of a p-adic element."""
        if not isinstance(self.group, PadicTruncated):
            raise DomainMismatch("integer value is only defined for p-adic elements")
        return self.group._to_int(self.value)

    def to_json(self) -> Any:
        if isinstance(self.group, Torus):
            return f"{self.value.numerator}/{self.value.denominator}"
        return list(self.value)

    def __repr__(self) -> str:
        return f"GroupElement({self.group.kind}, {self.to_json()})"


# -- circle -----------------------------------------------------------------


@dataclass(frozen=True)
class Torus(CompactAbelianGroup):
    """The circle R/Z with exact rational points.

    ``resolution_bits`` sets the dyadic grid used by Haar sampling.
    """

    resolution_bits: int = 64
    kind = "torus"
    is_finite = False

    def _normalize(self, value: Any) -> Fraction:
        if isinstance(value, float):
            value = Fraction(value)
        elif isinstance(value, (tuple, list)):
            value = Fraction(int(value[0]), int(value[1]))
        else:
            value = Fraction(value)
        return value - math.floor(value)

    def _zero_value(self) -> Fraction:
        return Fraction(0)

    def _add(self, a: Fraction, b: Fraction) -> Fraction:
        s = a + b
        return s - 1 if s >= 1 else s

    def _neg(self, a: Fraction) -> Fraction:
        return (1 - a) if a else a

    def _mul(self, n: int, a: Fraction) -> Fraction:
        return Fraction((n * a.numerator) % a.denominator, a.denominator)

    def _sample_value(self, rng: np.random.Generator) -> Fraction:
        bits = self.resolution_bits
        k = int(rng.integers(0, 1 << bits, dtype=np.uint64)) if bits <= 64 else _big_randbits(rng, bits)
        return Fraction(k, 1 << bits)

    def to_json(self) -> dict:
        out: dict = {"kind": "torus"}
        if self.resolution_bits != 64:
            out["resolution_bits"] = self.resolution_bits
        return out

    def to_batch(self, elements: Sequence[GroupElement]) -> np.ndarray:
        return np.array([float(e.value) for e in elements], dtype=np.float64)

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.to_batch([self.sample_haar(rng) for _ in range(n)])

    def orbit_offsets(self, alpha: GroupElement, ns: np.ndarray) -> np.ndarray:
        a, q = alpha.value.numerator, alpha.value.denominator
        # exact residue n*a mod q, correctly rounded once
        return np.array([((n * a) % q) / q for n in np.asarray(ns).tolist()], dtype=np.float64)

    def translate(self, batch: np.ndarray, x: GroupElement) -> np.ndarray:
        return np.mod(batch + float(x.value), 1.0)


def _big_randbits(rng: np.random.Generator, bits: int) -> int:
    out = 0
    for _ in range((bits + 63) // 64):
        out = (out << 64) | int(rng.integers(0, 1 << 64, dtype=np.uint64))
    return out >> ((-bits) % 64)


def continued_fraction_convergent(x, min_denominator: int = 1 << 63) -> Fraction:
    """First convergent of ``x`` (an mpmath number in [0, 1)) with denominator >= ``min_denominator``."""
    import mpmath

    h_prev, h = 0, 1
    k_prev, k = 1, 0
    y = x
    while True:
        a = int(mpmath.floor(y))
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        frac = y - a
        if k >= min_denominator:
            return Fraction(h, k)
        if frac == 0:
            raise ValueError("value is rational with small denominator; no high-denominator convergent")
        y = 1 / frac


def irrational_model(expr: str, min_denominator: int = 1 << 63, group: Torus | None = None) -> GroupElement:
    """Torus element modelling the fractional part of an irrational expression.

    ``expr`` is parsed by sympy (e.g. ``"sqrt(2)"``, ``"(sqrt(5)-1)/2"``, ``"pi"``)
    and replaced by its first continued-fraction convergent with denominator
    at least ``min_denominator``.
    """
    import mpmath
    import sympy

    digits = 2 * len(str(min_denominator)) + 30
    value = sympy.sympify(expr).evalf(digits)
    with mpmath.workdps(digits):
        x = mpmath.mpf(str(value))
        x = x - mpmath.floor(x)
        frac = continued_fraction_convergent(x, min_denominator)
    return (group or Torus()).element(frac)


# -- finite carriers --------------------------------------------------------


@dataclass(frozen=True)
class FiniteProduct(CompactAbelianGroup):
    """Z/m_1 x ... x Z/m_D with residue vectors."""

    moduli: tuple[int, ...]
    kind = "product"

    def __post_init__(self):
        moduli = tuple(int(m) for m in self.moduli)
        if not moduli:
            raise ValueError("moduli list must be non-empty")
        if any(m < 2 for m in moduli):
            raise ValueError(f"every modulus must be >= 2, got {moduli}")
        object.__setattr__(self, "moduli", moduli)

    @property
    def dim(self) -> int:
        return len(self.moduli)

    def _normalize(self, value: Any) -> tuple[int, ...]:
        value = tuple(int(v) for v in value)
        if len(value) != self.dim:
            raise DomainMismatch(f"expected {self.dim} residues, got {len(value)}")
        if any(not 0 <= v < m for v, m in zip(value, self.moduli)):
            raise ValueError(f"residues {value} out of range for moduli {self.moduli}")
        return value

    def _zero_value(self) -> tuple[int, ...]:
        return (0,) * self.dim

    def _add(self, a, b):
        return tuple((x + y) % m for x, y, m in zip(a, b, self.moduli))

    def _neg(self, a):
        return tuple((-x) % m for x, m in zip(a, self.moduli))

    def _mul(self, n, a):
        return tuple((n * x) % m for x, m in zip(a, self.moduli))

    def _sample_value(self, rng):
        return tuple(int(rng.integers(0, m)) for m in self.moduli)

    def to_json(self) -> dict:
        return {"kind": "product", "moduli": list(self.moduli)}

    def max_level(self) -> int:
        return self.dim

    def quotient(self, r: int) -> "FiniteProduct":
        self._check_level(r)
        return FiniteProduct(self.moduli[:r])

    def _check_level(self, r: int) -> None:
        if not 1 <= r <= self.dim:
            raise DepthExceeded(f"level {r} outside 1..{self.dim}")

    def level_size(self, r: int) -> int:
        self._check_level(r)
        return math.prod(self.moduli[:r])

    @cached_property
    def _strides(self) -> np.ndarray:
        return np.concatenate([[1], np.cumprod(self.moduli[:-1])]).astype(np.int64)

    def level_index(self, batch: np.ndarray, r: int) -> np.ndarray:
        self._check_level(r)
        self._check_enumerable(self.level_size(r))
        return batch[:, :r] @ self._strides[:r]

    def project_value(self, value, r: int):
        self._check_level(r)
        return value[:r]

    def all_points(self) -> np.ndarray:
        self._check_enumerable(self.size)
        idx = np.arange(self.size, dtype=np.int64)
        return np.stack([(idx // s) % m for s, m in zip(self._strides, self.moduli)], axis=1)

    def element_at(self, index: int) -> GroupElement:
        vals = []
        for m in self.moduli:
            index, r = divmod(index, m)
            vals.append(r)
        return GroupElement(self, tuple(vals))

    def index_of(self, x: GroupElement) -> int:
        return int(sum(int(v) * int(s) for v, s in zip(x.value, self._strides)))

    def to_batch(self, elements):
        return np.array([e.value for e in elements], dtype=np.int64).reshape(-1, self.dim)

    def sample_batch(self, rng, n):
        return np.stack([rng.integers(0, m, size=n) for m in self.moduli], axis=1).astype(np.int64)

    def orbit_offsets(self, alpha, ns):
        m = np.array(self.moduli, dtype=np.int64)
        a = np.array(alpha.value, dtype=np.int64)
        ns = np.asarray(ns, dtype=np.int64)
        return ((ns[:, None] % m) * a) % m

    def translate(self, batch, x):
        m = np.array(self.moduli, dtype=np.int64)
        return (batch + np.array(x.value, dtype=np.int64)) % m


@dataclass(frozen=True)
class PadicTruncated(CompactAbelianGroup):
    """Z_p kept to ``depth`` digits, i.e. the ring Z/p^depth in base-p digits."""

    p: int
    depth: int = 16
    kind = "padic"

    def __post_init__(self):
        if not is_prime(int(self.p)):
            raise ValueError(f"p={self.p} is not prime")
        if int(self.depth) < 1:
            raise ValueError("depth must be >= 1")

    @property
    def modulus(self) -> int:
        return self.p**self.depth

    def _to_int(self, digits) -> int:
        v = 0
        for d in reversed(digits):
            v = v * self.p + d
        return v

    def _from_int(self, v: int) -> tuple[int, ...]:
        v %= self.modulus
        out = []
        for _ in range(self.depth):
            v, d = divmod(v, self.p)
            out.append(d)
        return tuple(out)

    def from_int(self, v: int) -> GroupElement:
        return GroupElement(self, self._from_int(int(v)))

    def _normalize(self, value):
        if isinstance(value, (int, np.integer)):
            return self._from_int(int(value))
        digits = tuple(int(d) for d in value)
        if len(digits) > self.depth:
            raise DepthExceeded(f"{len(digits)} digits given for depth {self.depth}")
        if any(not 0 <= d < self.p for d in digits):
            raise ValueError(f"digits {digits} out of range for p={self.p}")
        return digits + (0,) * (self.depth - len(digits))

    def _zero_value(self):
        return (0,) * self.depth

    def _add(self, a, b):
        # base-p addition with carry; the final carry is dropped
        out, carry = [], 0
        for x, y in zip(a, b):
            carry, d = divmod(x + y + carry, self.p)
            out.append(d)
        return tuple(out)

    def _neg(self, a):
        return self._from_int(-self._to_int(a))

    def _mul(self, n, a):
        return self._from_int(n * self._to_int(a))

    def _sample_value(self, rng):
        return tuple(int(d) for d in rng.integers(0, self.p, size=self.depth))

    def to_json(self) -> dict:
        return {"kind": "padic", "p": self.p, "depth": self.depth}

    @property
    def _dtype(self):
        return np.int64 if self.modulus**2 < _INT64_SAFE else object

    def max_level(self) -> int:
        return self.depth

    def _check_level(self, r: int) -> None:
        if not 0 <= r <= self.depth:
            raise DepthExceeded(f"level {r} exceeds depth {self.depth}")

    def quotient(self, r: int) -> "PadicTruncated":
        self._check_level(r)
        if r == 0:
            raise DepthExceeded("level 0 is the trivial group")
        return PadicTruncated(self.p, r)

    def level_size(self, r: int) -> int:
        self._check_level(r)
        return self.p**r

    def level_index(self, batch, r):
        self._check_level(r)
        self._check_enumerable(self.p**r)
        return (batch % (self.p**r)).astype(np.int64)

    def project_value(self, value, r):
        self._check_level(r)
        return value[:r]

    def all_points(self):
        self._check_enumerable(self.modulus)
        return np.arange(self.modulus, dtype=np.int64)

    def element_at(self, index):
        return self.from_int(index)

    def index_of(self, x):
        return x.integer

    def to_batch(self, elements):
        return np.array([e.integer for e in elements], dtype=self._dtype)

    def sample_batch(self, rng, n):
        digits = rng.integers(0, self.p, size=(n, self.depth))
        if self._dtype is np.int64:
            weights = self.p ** np.arange(self.depth, dtype=np.int64)
            return digits @ weights
        return np.array([self._to_int(row) for row in digits.tolist()], dtype=object)

    def orbit_offsets(self, alpha, ns):
        M = self.modulus
        if self._dtype is np.int64:
            return ((np.asarray(ns, dtype=np.int64) % M) * alpha.integer) % M
        a = alpha.integer
        return np.array([(int(n) * a) % M for n in np.asarray(ns).tolist()], dtype=object)

    def translate(self, batch, x):
        return (batch + x.integer) % self.modulus


# -- module-level operations -----------------------------------------------


def add(a: GroupElement, b: GroupElement) -> GroupElement:
    return a + b


def neg(a: GroupElement) -> GroupElement:
    return -a


def scalar_mul(n: int, a: GroupElement) -> GroupElement:
    """``n``-fold sum of ``a`` by exact modular arithmetic; negative ``n`` uses the inverse."""
    if n < 0:
        return scalar_mul(-n, -a)
    return GroupElement(a.group, a.group._mul(n, a.value))


def sample_haar(desc: CompactAbelianGroup, rng: np.random.Generator) -> GroupElement:
    return desc.sample_haar(rng)


def cylinder_contains(prefix: Sequence[int], x: GroupElement) -> bool:
    """Whether the p-adic element ``x`` lies in the cylinder ``[x_0, ..., x_j]``."""
    if not isinstance(x.group, PadicTruncated):
        raise DomainMismatch("cylinder sets are defined on p-adic groups")
    if len(prefix) > x.group.depth:
        raise DepthExceeded(f"prefix of length {len(prefix)} exceeds depth {x.group.depth}")
    return tuple(x.value[: len(prefix)]) == tuple(prefix)


def measure_of_cylinder(desc: PadicTruncated, j: int) -> Fraction:
    """Haar measure of a cylinder fixing digits ``x_0..x_j``."""
    if j + 1 > desc.depth:
        raise DepthExceeded(f"cylinder of length {j + 1} exceeds depth {desc.depth}")
    return Fraction(1, desc.p ** (j + 1))


def quotient_project(x: GroupElement, r: int) -> GroupElement:
    """Image of ``x`` in the level-``r`` quotient (first ``r`` digits or factors)."""
    g = x.group
    if isinstance(g, (PadicTruncated, FiniteProduct)) and r > g.max_level():
        raise DepthExceeded(f"level {r} exceeds {g.max_level()}")
    q = g.quotient(r)
    return GroupElement(q, g.project_value(x.value, r))


def group_from_json(obj: dict) -> CompactAbelianGroup:
    kind = obj.get("kind")
    if kind == "torus":
        return Torus(int(obj.get("resolution_bits", 64)))
    if kind == "product":
        return FiniteProduct(tuple(obj["moduli"]))
    if kind == "padic":
        return PadicTruncated(int(obj["p"]), int(obj.get("depth", 16)))
    raise ValueError(f"unknown group kind {kind!r}")


def element_from_json(group: CompactAbelianGroup, obj: Any) -> GroupElement:
    """Parse an element: ``"1/3"`` or ``{"irrational": "sqrt(2)"}`` on the circle,
    a residue list on products, a digit list or ``{"value": n}`` on p-adics."""
    if isinstance(obj, dict):
        if "irrational" in obj:
            if not isinstance(group, Torus):
                raise DomainMismatch("irrational models live on the torus")
            return irrational_model(obj["irrational"], group=group)
        if "value" in obj:
            return group.element(obj["value"])
        if "digits" in obj:
            return group.element(obj["digits"])
        raise ValueError(f"cannot parse element {obj!r}")
    return group.element(obj)
