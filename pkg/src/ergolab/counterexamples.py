"""Non-integrable functions whose rotation averages still behave, on groups with
many independent torsion characters, together with their escape sets.

Two torsion layouts are supported:

* :class:`SinglePrime` -- ``(Z/p)^D``; the generators are the coordinate
  characters, so ``H_k`` is the set of points whose first ``k`` coordinates vanish
  and ``f_k = p^k`` on ``H_k``.
* :class:`DistinctPrimes` -- ``prod_j (Z/p_j)^2``; ``H_k`` is the set of points
  whose ``k``-th block vanishes and ``f_k = p_k^2`` on ``H_k``.

The series ``f = sum_{k <= K_max} f_k`` has integral exactly ``K_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .averaging import (
    GammaConfig,
    GammaVerdict,
    Verdict,
    sample_flags,
    scan_alphas,
)
from .errors import DomainMismatch, NotQuotientRepresentable
from .functions import SampleFunction
from .groups import FiniteProduct, GroupElement, is_prime
from .rng import make_rng
from .sequences import Identity, IntegerSequence, PeriodicReport, is_ergodic_periodic


class TorsionGroupSpec:
    kind: str = ""

    @property
    def group(self) -> FiniteProduct: ...

    @property
    def n_blocks(self) -> int: ...

    def coords(self, k: int) -> slice: ...

    def block_value(self, k: int) -> int: ...

    def period(self, k: int) -> int: ...

    def to_json(self) -> dict: ...

    def check_k(self, k: int) -> None:
        if not 1 <= k <= self.n_blocks:
            raise ValueError(f"k={k} outside 1..{self.n_blocks}")


@dataclass(frozen=True)
class SinglePrime(TorsionGroupSpec):
    p: int
    D: int
    kind = "single_prime"

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.D < 1:
            raise ValueError("D must be >= 1")

    @property
    def group(self):
        return FiniteProduct((self.p,) * self.D)

    @property
    def n_blocks(self):
        return self.D

    def coords(self, k):
        return slice(0, k)

    def block_value(self, k):
        return self.p**k

    def period(self, k):
        return self.p

    def to_json(self):
        return {"kind": "single_prime", "p": self.p, "depth": self.D}


def smallest_prime_above(n: int) -> int:
    m = n + 1
    while not is_prime(m):
        m += 1
    return m


@dataclass(frozen=True)
class DistinctPrimes(TorsionGroupSpec):
    """Blocks ``(Z/p_j)^2`` with ``p_j >= j^2`` so that ``sum 1/p_j`` stays finite."""

    primes: tuple[int, ...]
    kind = "distinct_primes"

    def __post_init__(self):
        primes = tuple(int(p) for p in self.primes)
        if not primes:
            raise ValueError("need at least one prime")
        if any(not is_prime(p) for p in primes):
            raise ValueError(f"{primes} contains a non-prime")
        if any(b <= a for a, b in zip(primes, primes[1:])):
            raise ValueError("primes must be strictly increasing")
        if any(p < j * j for j, p in enumerate(primes, start=1)):
            raise ValueError("need p_j >= j^2")
        object.__setattr__(self, "primes", primes)

    @classmethod
    def default(cls, J: int) -> "DistinctPrimes":
        """``p_k`` = smallest prime above ``k^2``."""
        return cls(tuple(smallest_prime_above(k * k) for k in range(1, J + 1)))

    @property
    def group(self):
        return FiniteProduct(tuple(p for p in self.primes for _ in range(2)))

    @property
    def n_blocks(self):
        return len(self.primes)

    def coords(self, k):
        return slice(2 * k - 2, 2 * k)

    def block_value(self, k):
        return self.primes[k - 1] ** 2

    def period(self, k):
        return self.primes[k - 1]

    def to_json(self):
        return {"kind": "distinct_primes", "primes": list(self.primes)}


def spec_from_json(obj: dict) -> TorsionGroupSpec:
    kind = obj.get("kind")
    if kind == "single_prime":
        return SinglePrime(int(obj["p"]), int(obj.get("depth", obj.get("D", 12))))
    if kind == "distinct_primes":
        if "primes" in obj:
            return DistinctPrimes(tuple(obj["primes"]))
        return DistinctPrimes.default(int(obj["J"]))
    raise ValueError(f"unknown counterexample kind {kind!r}")


def _check_point(spec: TorsionGroupSpec, x: GroupElement) -> None:
    if x.group != spec.group:
        raise DomainMismatch(f"point of {x.group} given for {spec.group}")


def subgroup_contains(spec: TorsionGroupSpec, k: int, x: GroupElement) -> bool:
    """Membership in ``H_k``, the joint kernel of the ``k``-th generator set."""
    spec.check_k(k)
    _check_point(spec, x)
    return not any(x.value[spec.coords(k)])


def subgroup_measure(spec: TorsionGroupSpec, k: int) -> Fraction:
    """``m(H_k)`` from the tiling: one over the number of distinct cosets ``x + H_k``."""
    return Fraction(1, coset_count(spec, k))


def coset_count(spec: TorsionGroupSpec, k: int, points: np.ndarray | None = None) -> int:
    """Number of translates of ``H_k`` tiling the group, counted over ``points``
    (default: every point of the smallest quotient that sees ``H_k``)."""
    spec.check_k(k)
    g = spec.group
    sl = spec.coords(k)
    if points is None:
        points = FiniteProduct(g.moduli[sl]).all_points()
        sl = slice(0, points.shape[1])
    # x and y share a coset iff the generators agree, i.e. the H_k coordinates agree
    cols = points[:, sl].astype(np.int64)
    moduli = g.moduli[spec.coords(k)]
    code = np.zeros(len(cols), dtype=np.int64)
    for j, m in enumerate(moduli):
        code = code * m + cols[:, j]
    return len(np.unique(code))


def subgroup_count(spec: TorsionGroupSpec, k: int, points: np.ndarray) -> int:
    """``|H_k cap points|`` by direct counting."""
    spec.check_k(k)
    return int(np.count_nonzero(~points[:, spec.coords(k)].any(axis=1)))


def f_k_eval(spec: TorsionGroupSpec, k: int, x: GroupElement) -> int:
    return spec.block_value(k) if subgroup_contains(spec, k, x) else 0


@dataclass(frozen=True)
class CounterexampleFunction(SampleFunction):
    """``sum_{k=1}^{K_max} f_k``; finite everywhere on the truncated group."""

    spec: TorsionGroupSpec
    k_max: int | None = None
    group: FiniteProduct = field(init=False)

    def __post_init__(self):
        k_max = self.k_max
        if k_max is None:
            k_max = max(1, self.spec.n_blocks - 2) if isinstance(self.spec, SinglePrime) else self.spec.n_blocks
        if not 1 <= k_max <= self.spec.n_blocks:
            raise ValueError(f"K_max={k_max} outside 1..{self.spec.n_blocks}")
        object.__setattr__(self, "k_max", k_max)
        object.__setattr__(self, "group", self.spec.group)

    @property
    def level(self) -> int:
        return self.spec.coords(self.k_max).stop

    def eval(self, x):
        _check_point(self.spec, x)
        return float(self.exact_value(x))

    def exact_value(self, x: GroupElement) -> int:
        return sum(f_k_eval(self.spec, k, x) for k in range(1, self.k_max + 1))

    def eval_batch(self, batch):
        spec = self.spec
        if isinstance(spec, SinglePrime):
            zero = batch[:, : self.k_max] == 0
            z = np.cumprod(zero, axis=1).sum(axis=1)
            partial = np.cumsum([0.0] + [float(spec.p**k) for k in range(1, self.k_max + 1)])
            return partial[z]
        out = np.zeros(len(batch))
        for k in range(1, self.k_max + 1):
            out += spec.block_value(k) * ~batch[:, spec.coords(k)].any(axis=1)
        return out

    def quotient_values(self, r):
        if r < self.level:
            raise NotQuotientRepresentable(f"series reads {self.level} coordinates, quotient has {r}")
        pts = self.group.quotient(r).all_points()
        return self.eval_batch(pts)

    def exact_table(self):
        pts = self.group.quotient(self.level).all_points()
        return self.level, [Fraction(int(v)) for v in self.eval_batch(pts)]

    def exact_integral(self) -> Fraction:
        return sum((self.spec.block_value(k) * subgroup_measure(self.spec, k)
                    for k in range(1, self.k_max + 1)), Fraction(0))

    def to_json(self):
        return {"kind": "counterexample", "spec": self.spec.to_json(), "k_max": self.k_max}


def counterexample_eval(cf: CounterexampleFunction, x: GroupElement) -> int:
    return cf.exact_value(x)


def escape_set_contains(spec: TorsionGroupSpec, k: int, alpha: GroupElement, x: GroupElement) -> bool:
    """``x in X_k = union_j (H_k - j alpha)``, ``j`` over one period of the ``k``-th block."""
    spec.check_k(k)
    _check_point(spec, alpha)
    step = x
    for _ in range(spec.period(k)):
        if subgroup_contains(spec, k, step):
            return True
        step = step + alpha
    return False


def escape_batch(spec: TorsionGroupSpec, k: int, alpha: GroupElement, batch: np.ndarray) -> np.ndarray:
    spec.check_k(k)
    sl = spec.coords(k)
    m = np.array(spec.group.moduli[sl], dtype=np.int64)
    a = np.array(alpha.value[sl], dtype=np.int64)
    x = batch[:, sl]
    hit = np.zeros(len(batch), dtype=bool)
    for j in range(spec.period(k)):
        hit |= ~((x + j * a) % m).any(axis=1)
    return hit


def escape_set_measure(spec: TorsionGroupSpec, k: int, alpha: GroupElement) -> Fraction:
    """Exact ``m(X_k)``: number of distinct translates ``H_k - j alpha`` times ``m(H_k)``."""
    sl = spec.coords(k)
    m = spec.group.moduli[sl]
    shifts = {tuple((j * a) % mm for a, mm in zip(alpha.value[sl], m)) for j in range(spec.period(k))}
    return len(shifts) * subgroup_measure(spec, k)


@dataclass(frozen=True)
class MembershipConfig:
    n_alphas: int = 50
    include_special: bool = True
    gamma: GammaConfig = GammaConfig(N=10_000)
    q_max: int = 12
    tail_tol: float = 1e-2
    threads: int = 1


@dataclass
class MembershipReport:
    alphas: list[GroupElement]
    alpha_kinds: list[str]
    verdicts: list[GammaVerdict]
    ergodicity: PeriodicReport
    identity_seq: bool
    n_diverging: int
    converging_fraction: float
    tail_fraction: float
    flags: list[str]
    passed: bool

    def rows(self) -> list[tuple]:
        return [
            (i, kind, v.verdict.value, v.max_sup_ratio, v.max_window_spread, v.n_converging, v.samples)
            for i, (kind, v) in enumerate(zip(self.alpha_kinds, self.verdicts))
        ]


def special_alphas(group: FiniteProduct) -> list[tuple[str, GroupElement]]:
    """The identity and two coordinate generators (all torsion)."""
    out = [("zero", group.zero())]
    for i in (0, group.dim - 1):
        v = [0] * group.dim
        v[i] = 1
        out.append((f"e{i}", group.element(v)))
    return out


def verify_universal_membership(cf: CounterexampleFunction, seq: IntegerSequence,
                                cfg: MembershipConfig = MembershipConfig()) -> MembershipReport:
    """Desk-scale check that every sampled rotation keeps a non-diverging tail.

    Failures are reported, not raised.
    """
    group = cf.group
    gcfg = replace(cfg.gamma, seq=seq)
    rng = make_rng(gcfg.seed, 0xA1FA)
    pairs = special_alphas(group) if cfg.include_special else []
    pairs += [("haar", group.sample_haar(rng)) for _ in range(cfg.n_alphas)]
    alphas = [a for _, a in pairs]
    verdicts = scan_alphas(cf, alphas, gcfg, threads=cfg.threads)

    ergodic = is_ergodic_periodic(seq, cfg.q_max, gcfg.N)
    identity = isinstance(seq, Identity)
    n_div = sum(v.verdict is Verdict.DIVERGING for v in verdicts)
    all_stats = [s for v in verdicts for s in v.stats]
    n_pairs = max(1, len(all_stats))
    conv = sum(sample_flags(s, gcfg)[0] and sample_flags(s, gcfg)[1] for s in all_stats) / n_pairs
    tail = sum(s.ratio_at_N < cfg.tail_tol for s in all_stats) / n_pairs

    flags = []
    if not ergodic.passed:
        flags.append(
            "sequence not ergodic mod " + ", ".join(map(str, ergodic.failures))
            + "; universal-convergence hypothesis unmet"
        )
    passed = n_div == 0
    if identity:
        passed = passed and conv >= gcfg.quorum
    return MembershipReport(alphas, [k for k, _ in pairs], verdicts, ergodic, identity,
                            n_div, conv, tail, flags, passed)
