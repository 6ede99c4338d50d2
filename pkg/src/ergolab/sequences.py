"""Integer sequences ``(n_k)`` and finite-evidence ergodicity checks modulo ``q``."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidSequence

FINITE_EVIDENCE = "finite-Q evidence, not a proof"


class IntegerSequence(ABC):
    kind: str = ""

    @abstractmethod
    def generate(self, N: int) -> np.ndarray:
        """Terms ``n_0..n_N`` as an int64 array."""

    @abstractmethod
    def to_json(self) -> dict: ...


@dataclass(frozen=True)
class Identity(IntegerSequence):
    kind = "identity"

    def generate(self, N):
        return np.arange(N + 1, dtype=np.int64)

    def to_json(self):
        return {"kind": "identity"}


@dataclass(frozen=True)
class Squares(IntegerSequence):
    kind = "squares"

    def generate(self, N):
        k = np.arange(N + 1, dtype=np.int64)
        return k * k

    def to_json(self):
        return {"kind": "squares"}


def first_primes(count: int) -> np.ndarray:
    """The first ``count`` primes, by a sieve of Eratosthenes."""
    if count <= 0:
        return np.zeros(0, dtype=np.int64)
    n = max(count, 6)
    bound = int(n * (math.log(n) + math.log(math.log(n)))) + 10
    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(bound) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.flatnonzero(sieve)[:count].astype(np.int64)


@dataclass(frozen=True)
class Primes(IntegerSequence):
    """``n_k`` is the ``(k+1)``-th prime, so ``n_0 = 2``."""

    kind = "primes"

    def generate(self, N):
        return first_primes(N + 1)

    def to_json(self):
        return {"kind": "primes"}


@dataclass(frozen=True)
class Affine(IntegerSequence):
    a: int = 1
    b: int = 0
    kind = "affine"

    def __post_init__(self):
        if self.a < 1:
            raise InvalidSequence(f"affine slope must be >= 1, got {self.a}")

    def generate(self, N):
        return self.a * np.arange(N + 1, dtype=np.int64) + self.b

    def to_json(self):
        return {"kind": "affine", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Explicit(IntegerSequence):
    values: tuple[int, ...] = field(default_factory=tuple)
    kind = "explicit"

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InvalidSequence("explicit sequence is not strictly increasing")
        object.__setattr__(self, "values", vals)

    def generate(self, N):
        if N + 1 > len(self.values):
            raise InvalidSequence(f"explicit sequence has {len(self.values)} terms, {N + 1} requested")
        return np.array(self.values[: N + 1], dtype=np.int64)

    def to_json(self):
        return {"kind": "explicit", "values": list(self.values)}


def sequence_from_json(obj: dict) -> IntegerSequence:
    kind = obj.get("kind")
    if kind == "identity":
        return Identity()
    if kind == "squares":
        return Squares()
    if kind == "primes":
        return Primes()
    if kind == "affine":
        return Affine(int(obj.get("a", 1)), int(obj.get("b", 0)))
    if kind == "explicit":
        return Explicit(tuple(obj["values"]))
    raise ValueError(f"unknown sequence kind {kind!r}")


def generate(seq: IntegerSequence, N: int) -> list[int]:
    if N < 0:
        raise ValueError("N must be >= 0")
    return seq.generate(N).tolist()


def _residue_counts(seq: IntegerSequence, q: int, N: int) -> np.ndarray:
    return np.bincount(seq.generate(N) % q, minlength=q)


def residue_frequency(seq: IntegerSequence, q: int, h: int, N: int) -> Fraction:
    """Exact ``#{k <= N : n_k = h mod q} / (N + 1)``."""
    if q < 1 or not 0 <= h < q:
        raise ValueError("need q >= 1 and 0 <= h < q")
    return Fraction(int(_residue_counts(seq, q, N)[h]), N + 1)


def default_tol(q: int, N: int) -> float:
    return 5 * q / N


@dataclass
class ModQVerdict:
    q: int
    N: int
    tol: float
    passed: bool
    max_deviation: Fraction
    worst_h: int
    frequencies: list[Fraction]


def is_ergodic_mod_q(seq: IntegerSequence, q: int, N: int, tol: float | None = None) -> ModQVerdict:
    if N < q:
        raise ValueError("need N >= q")
    tol = default_tol(q, N) if tol is None else tol
    counts = _residue_counts(seq, q, N)
    freqs = [Fraction(int(c), N + 1) for c in counts]
    devs = [abs(fr - Fraction(1, q)) for fr in freqs]
    worst = max(range(q), key=devs.__getitem__)
    return ModQVerdict(q, N, tol, devs[worst] <= tol, devs[worst], worst, freqs)


@dataclass
class PeriodicReport:
    Q_max: int
    N: int
    rows: list[ModQVerdict]
    label: str = FINITE_EVIDENCE

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> list[int]:
        return [r.q for r in self.rows if not r.passed]

    def csv_rows(self) -> list[tuple]:
        """One row per (q, h): q, h, freq, dev, verdict."""
        out = []
        for r in self.rows:
            verdict = "pass" if r.passed else "fail"
            for h, fr in enumerate(r.frequencies):
                out.append((r.q, h, float(fr), float(abs(fr - Fraction(1, r.q))), verdict))
        return out


def is_ergodic_periodic(seq: IntegerSequence, Q_max: int, N: int, tol: float | None = None) -> PeriodicReport:
    """Run :func:`is_ergodic_mod_q` for ``q = 1..Q_max``. Evidence only, up to ``Q_max`` and ``N``."""
    return PeriodicReport(Q_max, N, [is_ergodic_mod_q(seq, q, N, tol) for q in range(1, Q_max + 1)])
