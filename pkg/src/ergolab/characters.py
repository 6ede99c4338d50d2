"""Characters of the supported groups and exact harmonic analysis on finite quotients.

Character values are carried as exact rational angles: ``gamma(x) = exp(2 pi i * angle)``
with ``angle`` a :class:`~fractions.Fraction` in [0, 1). Complex floats are only a rendering.
"""

from __future__ import annotations

import cmath
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterator

import numpy as np

from .errors import DepthExceeded, DomainMismatch, NotQuotientRepresentable, SizeExceeded
from .groups import (
    MAX_ENUMERATION,
    CompactAbelianGroup,
    FiniteProduct,
    GroupElement,
    PadicTruncated,
    Torus,
    scalar_mul,
)


_QUARTERS = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}


@dataclass(frozen=True)
class Phase:
    """A point ``exp(2 pi i angle)`` of the unit circle with an exact angle."""

    angle: Fraction

    def __post_init__(self):
        a = Fraction(self.angle)
        object.__setattr__(self, "angle", a - math.floor(a))

    @property
    def value(self) -> complex:
        # exact values at quarter turns keep renderings clean
        a = self.angle
        exact = _QUARTERS.get(a)
        return exact if exact is not None else cmath.exp(2j * math.pi * float(a))

    def __complex__(self) -> complex:
        return self.value

    def __mul__(self, other: "Phase") -> "Phase":
        return Phase(self.angle + other.angle)

    def __pow__(self, n: int) -> "Phase":
        return Phase(self.angle * n)

    def conjugate(self) -> "Phase":
        return Phase(-self.angle)

    def is_one(self) -> bool:
        return self.angle == 0


class Character(ABC):
    """A continuous homomorphism from a group to the unit circle."""

    @abstractmethod
    def angle(self, x: GroupElement) -> Fraction: ...

    @abstractmethod
    def order(self) -> float | int: ...

    @abstractmethod
    def pow(self, n: int) -> "Character": ...

    @abstractmethod
    def is_trivial(self) -> bool: ...

    @abstractmethod
    def compatible(self, group: CompactAbelianGroup) -> bool: ...

    @abstractmethod
    def to_json(self) -> dict: ...

    @abstractmethod
    def _mul(self, other: "Character") -> "Character": ...

    @abstractmethod
    def batch_angles(self, group: CompactAbelianGroup, batch: np.ndarray) -> np.ndarray:
        """Float angles in [0, 1) at every point of a batch."""

    def __call__(self, x: GroupElement) -> complex:
        return self.evaluate(x).value

    def evaluate(self, x: GroupElement) -> Phase:
        if not self.compatible(x.group):
            raise DomainMismatch(f"{self} does not act on {x.group}")
        return Phase(self.angle(x))

    def __mul__(self, other: "Character") -> "Character":
        if type(other) is not type(self):
            raise DomainMismatch("characters of different groups")
        return self._mul(other)

    def inverse(self) -> "Character":
        return self.pow(-1)


@dataclass(frozen=True)
class TorusChar(Character):
    """``x -> exp(2 pi i n x)`` on the circle."""

    n: int

    def compatible(self, group):
        return isinstance(group, Torus)

    def angle(self, x):
        return Fraction((self.n * x.value.numerator) % x.value.denominator, x.value.denominator)

    def order(self):
        return 1 if self.n == 0 else math.inf

    def pow(self, n):
        return TorusChar(self.n * n)

    def is_trivial(self):
        return self.n == 0

    def _mul(self, other):
        return TorusChar(self.n + other.n)

    def batch_angles(self, group, batch):
        return np.mod(self.n * batch, 1.0)

    def to_json(self):
        return {"kind": "torus", "n": self.n}


@dataclass(frozen=True)
class ProductChar(Character):
    """``r -> exp(2 pi i sum a_i r_i / m_i)`` on Z/m_1 x ... x Z/m_D."""

    moduli: tuple[int, ...]
    residues: tuple[int, ...]

    def __post_init__(self):
        moduli = tuple(int(m) for m in self.moduli)
        residues = tuple(int(a) % m for a, m in zip(self.residues, moduli))
        if len(residues) != len(moduli):
            raise ValueError("residues and moduli differ in length")
        object.__setattr__(self, "moduli", moduli)
        object.__setattr__(self, "residues", residues)

    def compatible(self, group):
        return isinstance(group, FiniteProduct) and group.moduli == self.moduli

    def angle(self, x):
        return sum((Fraction(a * r, m) for a, r, m in zip(self.residues, x.value, self.moduli)), Fraction(0)) % 1

    def order(self):
        return math.lcm(*(m // math.gcd(a, m) for a, m in zip(self.residues, self.moduli)))

    def pow(self, n):
        return ProductChar(self.moduli, tuple(a * n for a in self.residues))

    def is_trivial(self):
        return not any(self.residues)

    def _mul(self, other):
        if other.moduli != self.moduli:
            raise DomainMismatch("characters of different product groups")
        return ProductChar(self.moduli, tuple(a + b for a, b in zip(self.residues, other.residues)))

    def level(self) -> int:
        """Smallest quotient level the character factors through."""
        nz = [i for i, a in enumerate(self.residues) if a]
        return nz[-1] + 1 if nz else 0

    def batch_angles(self, group, batch):
        L = math.lcm(*self.moduli)
        w = np.array([a * (L // m) for a, m in zip(self.residues, self.moduli)], dtype=np.int64)
        return ((batch @ w) % L) / L

    def to_json(self):
        return {"kind": "product", "residues": list(self.residues)}


@dataclass(frozen=True)
class PadicChar(Character):
    """``x -> exp(2 pi i l (x_0 + p x_1 + ... + p^(r-1) x_(r-1)) / p^r)`` on Z_p.

    ``r = 0`` is the trivial character. For ``r > 0`` the exponent ``l`` is a
    unit modulo ``p^r``. Use :meth:`normalized` to build from arbitrary ``(l, r)``.
    """

    p: int
    l: int
    r: int

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be >= 0")
        if self.r == 0:
            if self.l != 0:
                raise ValueError("trivial character must have l = 0; use PadicChar.normalized")
        elif not (1 <= self.l < self.p**self.r and self.l % self.p != 0):
            raise ValueError(f"l={self.l} must be a unit modulo {self.p}^{self.r}; use PadicChar.normalized")

    @classmethod
    def normalized(cls, p: int, l: int, r: int) -> "PadicChar":
        """Reduce ``exp(2 pi i l x / p^r)`` to canonical form."""
        if r <= 0:
            return cls(p, 0, 0)
        l %= p**r
        while r > 0 and l % p == 0:
            l //= p
            r -= 1
        return cls(p, l if r else 0, r)

    @classmethod
    def trivial(cls, p: int) -> "PadicChar":
        return cls(p, 0, 0)

    def compatible(self, group):
        return isinstance(group, PadicTruncated) and group.p == self.p and group.depth >= self.r

    def evaluate(self, x):
        if isinstance(x.group, PadicTruncated) and x.group.p == self.p and x.group.depth < self.r:
            raise DepthExceeded(f"character reads {self.r} digits, element has {x.group.depth}")
        return super().evaluate(x)

    def angle(self, x):
        if self.r == 0:
            return Fraction(0)
        q = self.p**self.r
        return Fraction((self.l * (x.integer % q)) % q, q)

    def order(self):
        return self.p**self.r

    def pow(self, n):
        return PadicChar.normalized(self.p, self.l * n, self.r)

    def is_trivial(self):
        return self.r == 0

    def _mul(self, other):
        if other.p != self.p:
            raise DomainMismatch("characters of different p-adic groups")
        r = max(self.r, other.r)
        l = self.l * self.p ** (r - self.r) + other.l * other.p ** (r - other.r)
        return PadicChar.normalized(self.p, l, r)

    def batch_angles(self, group, batch):
        if self.r == 0:
            return np.zeros(len(batch))
        q = self.p**self.r
        nums = (batch % q) * self.l % q
        return np.asarray(nums, dtype=np.float64) / q

    def to_json(self):
        return {"kind": "padic", "l": self.l, "r": self.r}


def char_from_json(group: CompactAbelianGroup, obj: dict) -> Character:
    kind = obj.get("kind")
    if kind == "torus":
        return TorusChar(int(obj["n"]))
    if kind == "product":
        if not isinstance(group, FiniteProduct):
            raise DomainMismatch("product character needs a product group")
        res = list(obj["residues"]) + [0] * (group.dim - len(obj["residues"]))
        return ProductChar(group.moduli, tuple(res))
    if kind == "padic":
        if not isinstance(group, PadicTruncated):
            raise DomainMismatch("p-adic character needs a p-adic group")
        return PadicChar.normalized(group.p, int(obj["l"]), int(obj["r"]))
    raise ValueError(f"unknown character kind {kind!r}")


# -- basic operations -------------------------------------------------------


def char_eval(gamma: Character, x: GroupElement) -> Phase:
    return gamma.evaluate(x)


def char_order(gamma: Character) -> float | int:
    """Smallest ``n >= 1`` with ``gamma^n`` trivial; ``math.inf`` for infinite order."""
    return gamma.order()


def char_pow(gamma: Character, n: int) -> Character:
    return gamma.pow(n)


def trivial_character(group: CompactAbelianGroup) -> Character:
    if isinstance(group, Torus):
        return TorusChar(0)
    if isinstance(group, FiniteProduct):
        return ProductChar(group.moduli, (0,) * group.dim)
    return PadicChar.trivial(group.p)


def _default_level(group: CompactAbelianGroup, r: int | None) -> int:
    return group.max_level() if r is None else r


def enumerate_dual(desc: CompactAbelianGroup, r: int | None = None) -> list[Character]:
    """All characters of the level-``r`` quotient (lifted to ``desc``).

    For the circle, ``r`` is a band limit and the result is ``n = -r..r``.
    """
    if isinstance(desc, Torus):
        if r is None:
            raise SizeExceeded("the dual of the circle is infinite; give a band limit")
        return [TorusChar(n) for n in range(-r, r + 1)]
    r = _default_level(desc, r)
    size = desc.level_size(r)
    if size > MAX_ENUMERATION:
        raise SizeExceeded(f"dual of size {size} exceeds limit {MAX_ENUMERATION}")
    if isinstance(desc, PadicTruncated):
        p = desc.p
        out: list[Character] = [PadicChar.trivial(p)]
        for rr in range(1, r + 1):
            out.extend(PadicChar(p, l, rr) for l in range(1, p**rr) if l % p)
        return out
    pad = (0,) * (desc.dim - r)
    q = desc.quotient(r)
    return [ProductChar(desc.moduli, tuple(int(v) for v in row) + pad) for row in q.all_points()]


# -- finite-quotient machinery ----------------------------------------------


def level_denominator(group: CompactAbelianGroup, r: int) -> int:
    """Common denominator of all character angles on the level-``r`` quotient."""
    if isinstance(group, PadicTruncated):
        return group.p**r
    if isinstance(group, FiniteProduct):
        return math.lcm(*group.moduli[:r])
    raise NotQuotientRepresentable("the circle has no finite quotients")


def factors_through(gamma: Character, group: CompactAbelianGroup, r: int) -> bool:
    if not gamma.compatible(group):
        raise DomainMismatch(f"{gamma} does not act on {group}")
    if isinstance(gamma, PadicChar):
        return gamma.r <= r
    if isinstance(gamma, ProductChar):
        return gamma.level() <= r
    raise NotQuotientRepresentable("circle characters do not factor through finite quotients")


def quotient_points(group: CompactAbelianGroup, r: int) -> np.ndarray:
    """Every point of the level-``r`` quotient, in index order (quotient batch form)."""
    return group.quotient(r).all_points()


def char_numerators(gamma: Character, group: CompactAbelianGroup, r: int, points: np.ndarray) -> np.ndarray:
    """Integer angle numerators (mod ``level_denominator``) on level-``r`` quotient points."""
    L = level_denominator(group, r)
    if isinstance(gamma, PadicChar):
        if gamma.r == 0:
            return np.zeros(len(points), dtype=np.int64)
        q = gamma.p**gamma.r
        return ((points % q) * gamma.l % q) * (L // q) % L
    w = np.array([a * (L // m) for a, m in zip(gamma.residues[:r], group.moduli[:r])], dtype=np.int64)
    return (points @ w) % L


def _roots(L: int) -> np.ndarray:
    k = np.arange(L)
    out = np.exp(2j * np.pi * k / L)
    out[0] = 1
    if L % 2 == 0:
        out[L // 2] = -1
    if L % 4 == 0:
        out[L // 4] = 1j
        out[3 * L // 4] = -1j
    return out


def _chunked(seq: list, n: int) -> Iterator[list]:
    for i in range(0, len(seq), n):
        yield seq[i : i + n]


def fourier_transform(values: np.ndarray, group: CompactAbelianGroup, r: int,
                      chars: list[Character]) -> np.ndarray:
    """``(1/|G_r|) sum_x v(x) gamma(-x)`` for each character, by direct summation.

    On products with many requested characters the same sum is contracted one
    coordinate at a time (characters factor over the coordinates), which costs
    ``|G_r| sum_i m_i`` instead of ``|G_r|^2``.
    """
    if isinstance(group, FiniteProduct) and r > 1 and len(chars) > 64:
        return _product_transform(values, group, r, chars)
    pts = quotient_points(group, r)
    L = level_denominator(group, r)
    roots = _roots(L)
    values = np.asarray(values)
    out = np.empty(len(chars), dtype=complex)
    chunk = max(1, 2_000_000 // max(1, len(pts)))
    i = 0
    for block in _chunked(chars, chunk):
        nums = np.stack([char_numerators(g, group, r, pts) for g in block])
        out[i : i + len(block)] = roots[(-nums) % L] @ values / len(pts)
        i += len(block)
    return out


def _product_transform(values: np.ndarray, group: FiniteProduct, r: int, chars: list[Character]) -> np.ndarray:
    moduli = group.moduli[:r]
    # little-endian index: coordinate 0 varies fastest, i.e. it is the last C-order axis
    t = np.asarray(values, dtype=complex).reshape(moduli[::-1])
    for i, m in enumerate(moduli):
        k = np.arange(m)
        w = _roots(m)[(-np.outer(k, k)) % m]  # w[a, x] = exp(-2 pi i a x / m)
        axis = r - 1 - i
        t = np.moveaxis(np.tensordot(w, t, axes=([1], [axis])), 0, axis)
    flat = t.reshape(-1) / t.size
    strides = np.cumprod((1,) + tuple(moduli[:-1]))
    idx = [int(np.dot(np.array(g.residues[:r]) % np.array(moduli), strides)) for g in chars]
    for g in chars:
        if not factors_through(g, group, r):
            raise NotQuotientRepresentable(f"{g} does not factor through level {r}")
    return flat[idx]


def fourier_coeff(f, gamma: Character, r: int | None = None) -> complex:
    """Fourier coefficient ``integral f(x) gamma(-x) dm(x)``.

    On finite carriers this is the exact finite sum over the level-``r``
    quotient (``f`` must be representable there). On the circle ``f`` must be
    a trigonometric polynomial and the coefficient is read off algebraically.
    """
    group = f.group
    if isinstance(group, Torus):
        return f.torus_coefficient(gamma)
    r = _default_level(group, r)
    if not factors_through(gamma, group, r):
        f.quotient_values(r)  # representability check
        return 0j
    return complex(fourier_transform(f.quotient_values(r), group, r, [gamma])[0])


def parseval_residual(f, g, r: int | None = None) -> float:
    """``|int f g dm - sum_gamma f^(gamma) conj(g^(gamma))|`` on the level-``r`` quotient.

    On the circle both must be trigonometric polynomials; the integral is then
    computed by equispaced quadrature, which is exact for their degree.
    """
    if f.group != g.group:
        raise DomainMismatch("functions live on different groups")
    group = f.group
    if isinstance(group, Torus):
        deg = max(f.degree(), g.degree())
        M = 2 * deg + 1
        pts = np.arange(M) / M
        lhs = float(np.mean(f.eval_batch(pts) * g.eval_batch(pts)))
        chars = enumerate_dual(group, deg)
        rhs = sum(f.torus_coefficient(c) * np.conj(g.torus_coefficient(c)) for c in chars)
        return abs(lhs - rhs)
    r = _default_level(group, r)
    fv = np.asarray(f.quotient_values(r), dtype=float)
    gv = np.asarray(g.quotient_values(r), dtype=float)
    lhs = float(np.mean(fv * gv))
    chars = enumerate_dual(group, r)
    fh = fourier_transform(fv, group, r, chars)
    gh = fourier_transform(gv, group, r, chars)
    rhs = complex(np.sum(fh * np.conj(gh)))
    return abs(lhs - rhs)


def character_mean_exact(gamma: Character, group: CompactAbelianGroup, r: int | None = None) -> Fraction:
    """Exact ``(1/|G_r|) sum_x gamma(x)``: 1 for the trivial character, else 0.

    Decided from the histogram of exact angles: a nontrivial character takes
    each value of its image subgroup equally often, so the roots cancel.
    """
    r = _default_level(group, r)
    pts = quotient_points(group, r)
    L = level_denominator(group, r)
    counts = np.bincount(char_numerators(gamma, group, r, pts), minlength=L)
    support = np.flatnonzero(counts)
    if len(support) == 1 and support[0] == 0:
        return Fraction(1)
    step = math.gcd(*(int(s) for s in support), L)
    expected = np.arange(0, L, step)
    if not (np.array_equal(support, expected) and np.all(counts[support] == counts[support[0]])):
        raise ArithmeticError("angle histogram is not uniform on a subgroup")
    return Fraction(0)


def inner_product_exact(g1: Character, g2: Character, group: CompactAbelianGroup, r: int | None = None) -> Fraction:
    """Exact ``(1/|G_r|) sum_x g1(x) conj(g2(x))``."""
    return character_mean_exact(g1 * g2.inverse(), group, r)


# -- block sums over k = p^kappa .. 2 p^kappa - 1 ----------------------------


def block_sum_direct(gamma: PadicChar, alpha: GroupElement, kappa: int) -> complex:
    """``sum_{k=p^kappa}^{2p^kappa-1} gamma(-k alpha)`` by term-by-term summation."""
    p = gamma.p
    start = p**kappa
    total = 0j
    for k in range(start, 2 * start):
        total += gamma.evaluate(scalar_mul(k, -alpha)).value
    return total


def geometric_block_sum(gamma: PadicChar, alpha: GroupElement, kappa: int) -> complex:
    """``sum_{k=p^kappa}^{2p^kappa-1} gamma(-k alpha)`` in closed geometric form.

    Evaluated as ``gamma(-p^kappa alpha) (1 - gamma^(p^kappa)(-alpha)) / (1 - gamma(-alpha))``
    with exact angles, so the sum is exactly zero whenever ``gamma^(p^kappa)`` is
    trivial and ``gamma(-alpha) != 1``. Falls back to direct summation when
    ``gamma(-alpha) = 1``.
    """
    if not isinstance(gamma, PadicChar):
        raise DomainMismatch("block sums are defined for p-adic characters")
    p = gamma.p
    step = gamma.evaluate(-alpha)
    if step.is_one():
        return block_sum_direct(gamma, alpha, kappa)
    head = step ** (p**kappa)  # gamma(-p^kappa alpha)
    numer_phase = gamma.pow(p**kappa).evaluate(-alpha)
    if numer_phase.is_one():
        return 0j
    return head.value * (1 - numer_phase.value) / (1 - step.value)
