"""Non-conventional Birkhoff averages ``M_N f(x) = (1/(N+1)) sum_k f(x + n_k alpha)``,
tail statistics and empirical classification of rotations.

Verdicts are finite-N, finite-sample evidence. The thresholds in
:class:`GammaConfig` are engineering choices and are echoed in every report.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainMismatch, NotQuotientRepresentable
from .functions import SampleFunction
from .groups import CompactAbelianGroup, GroupElement
from .rng import make_rng
from .sequences import Identity, IntegerSequence

EVIDENCE_LABEL = "empirical finite-N evidence, not a proof"


class Orbit:
    """The points ``n_k alpha`` for ``k = 0..N``, shared by every starting point."""

    def __init__(self, alpha: GroupElement, seq: IntegerSequence, N: int):
        self.group = alpha.group
        self.alpha = alpha
        self.seq = seq
        self.N = N
        self.ns = seq.generate(N)
        self.offsets = self.group.orbit_offsets(alpha, self.ns)
        self._chars: dict = {}

    def character_values(self, gamma) -> np.ndarray:
        """``gamma(n_k alpha)`` along the orbit (cached)."""
        if gamma not in self._chars:
            self._chars[gamma] = np.exp(2j * np.pi * gamma.batch_angles(self.group, self.offsets))
        return self._chars[gamma]

    def cached(self, key, factory):
        """Per-orbit memo for derived arrays."""
        if key not in self._chars:
            self._chars[key] = factory()
        return self._chars[key]


def _check(f: SampleFunction, *elements: GroupElement) -> None:
    for e in elements:
        if e.group != f.group:
            raise DomainMismatch(f"function on {f.group} used with a point of {e.group}")


def birkhoff_average(f: SampleFunction, alpha: GroupElement, x: GroupElement, N: int,
                     seq: IntegerSequence = Identity(), exact: bool = False):
    """``M_N f(x)``. With ``exact=True`` and a rational quotient table, returns a Fraction."""
    _check(f, alpha, x)
    if N < 0:
        raise ValueError("N must be >= 0")
    orbit = Orbit(alpha, seq, N)
    if exact:
        table = f.exact_table()
        if table is None:
            raise NotQuotientRepresentable("exact averages need a rational quotient table")
        level, vals = table
        if level == 0:
            return vals[0]
        idx = f.group.level_index(f.group.translate(orbit.offsets, x), level)
        counts = np.bincount(idx, minlength=len(vals))
        return sum((int(c) * v for c, v in zip(counts, vals) if c), Fraction(0)) / (N + 1)
    return math.fsum(f.orbit_values(orbit, x).tolist()) / (N + 1)


def running_means(values: np.ndarray) -> np.ndarray:
    """``M_n`` for every ``n``, from one pass of running sums."""
    return np.cumsum(values) / np.arange(1, len(values) + 1)


def average_trajectory(f: SampleFunction, alpha: GroupElement, x: GroupElement,
                       checkpoints: Sequence[int], seq: IntegerSequence = Identity()) -> list[tuple[int, float]]:
    _check(f, alpha, x)
    checkpoints = list(checkpoints)
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be increasing")
    if not checkpoints:
        return []
    orbit = Orbit(alpha, seq, checkpoints[-1])
    means = running_means(f.orbit_values(orbit, x))
    return [(n, float(means[n])) for n in checkpoints]


@dataclass
class TailStats:
    """Tail of one orbit.

    ``sup_ratio`` is the sup of ``|f(x + n_k alpha)| / k`` over ``K0 < k <= N`` and
    ``early_sup_ratio`` the same over ``K0 < k <= N // 10``. Window statistics
    are taken over the running means of the last ``ceil(N/10)`` terms.
    """

    sup_ratio: float
    last_window_mean: float
    window_spread: float
    N: int
    K0: int
    early_sup_ratio: float = 0.0
    ratio_at_N: float = 0.0
    final_mean: float = 0.0

    @property
    def relative_spread(self) -> float:
        return self.window_spread / max(1.0, abs(self.last_window_mean))


def stats_from_values(values: np.ndarray, K0: int, N: int) -> TailStats:
    if not 0 <= K0 < N:
        raise ValueError("need 0 <= K0 < N")
    k = np.arange(K0 + 1, N + 1)
    ratios = np.abs(values[K0 + 1 : N + 1]) / k
    early_end = N // 10
    early = float(ratios[: max(0, early_end - K0)].max()) if early_end > K0 else 0.0
    means = running_means(values[: N + 1])
    w = math.ceil(N / 10)
    window = means[N - w + 1 : N + 1]
    return TailStats(
        sup_ratio=float(ratios.max()),
        last_window_mean=float(window.mean()),
        window_spread=float(window.max() - window.min()),
        N=N,
        K0=K0,
        early_sup_ratio=early,
        ratio_at_N=float(abs(values[N]) / N),
        final_mean=float(means[N]),
    )


def tail_stats(f: SampleFunction, alpha: GroupElement, x: GroupElement, K0: int, N: int,
               seq: IntegerSequence = Identity()) -> TailStats:
    _check(f, alpha, x)
    return stats_from_values(f.orbit_values(Orbit(alpha, seq, N), x), K0, N)


@dataclass
class Integral:
    value: float | Fraction
    error_estimate: float


@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 100_000
    seed: int = 0


def integrate(f: SampleFunction, desc: CompactAbelianGroup | None = None, mode="exact") -> Integral:
    """Haar integral of ``f``: exact over a quotient, or a Monte Carlo mean with standard error."""
    if desc is not None and desc != f.group:
        raise DomainMismatch("function lives on another group")
    if mode == "exact":
        return Integral(f.exact_integral(), 0.0)
    if isinstance(mode, MonteCarlo):
        rng = make_rng(mode.seed)
        vals = f.eval_batch(f.group.sample_batch(rng, mode.samples))
        return Integral(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mode.samples)))
    raise ValueError(f"unknown integration mode {mode!r}")


class Verdict(str, Enum):
    CONVERGING = "Converging"
    BOUNDED_TAIL = "BoundedTail"
    DIVERGING = "Diverging"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class GammaConfig:
    """Knobs of :func:`classify_gamma`.

    A sample *converges* when the relative spread of its last-window running
    means is below ``spread_tol``. Its tail is *growing* when ``sup_ratio`` at
    least doubles from ``N/10`` to ``N`` and reaches ``sup_tol``.
    """

    x_samples: int = 32
    N: int = 100_000
    K0: int = 10
    spread_tol: float = 1e-2
    sup_tol: float = 1.0
    quorum: float = 0.95
    diverging_quorum: float = 0.5
    seed: int = 0
    seq: IntegerSequence = Identity()

    def to_json(self) -> dict:
        return {
            "x_samples": self.x_samples, "N": self.N, "K0": self.K0,
            "spread_tol": self.spread_tol, "sup_tol": self.sup_tol, "quorum": self.quorum,
            "diverging_quorum": self.diverging_quorum, "seed": self.seed, "seq": self.seq.to_json(),
        }


def sample_flags(s: TailStats, cfg: GammaConfig) -> tuple[bool, bool, bool]:
    """``(converged, bounded, growing)`` for one orbit."""
    growing = s.sup_ratio > 0 and s.sup_ratio >= 2 * s.early_sup_ratio and s.sup_ratio >= cfg.sup_tol
    converged = s.relative_spread < cfg.spread_tol
    return converged, not growing, growing


@dataclass
class GammaVerdict:
    verdict: Verdict
    samples: int
    n_converging: int
    n_bounded: int
    n_growing: int
    max_sup_ratio: float
    max_window_spread: float
    N: int
    seed: int
    stream: int
    stats: list[TailStats] = field(repr=False, default_factory=list)
    label: str = EVIDENCE_LABEL

    @property
    def limits(self) -> list[float]:
        return [s.final_mean for s in self.stats]


def decide_verdict(stats: Sequence[TailStats], cfg: GammaConfig) -> tuple[Verdict, int, int, int]:
    flags = [sample_flags(s, cfg) for s in stats]
    n = len(flags)
    n_conv = sum(c and b for c, b, _ in flags)
    n_bounded = sum(b for _, b, _ in flags)
    n_growing = sum(g for _, _, g in flags)
    if n == 0:
        return Verdict.INCONCLUSIVE, 0, 0, 0
    if n_conv >= cfg.quorum * n:
        v = Verdict.CONVERGING
    elif n_bounded >= cfg.quorum * n:
        v = Verdict.BOUNDED_TAIL
    elif n_growing >= cfg.diverging_quorum * n:
        v = Verdict.DIVERGING
    else:
        v = Verdict.INCONCLUSIVE
    return v, n_conv, n_bounded, n_growing


def classify_gamma(f: SampleFunction, alpha: GroupElement, cfg: GammaConfig = GammaConfig(),
                   stream: int = 0) -> GammaVerdict:
    """Monte Carlo over Haar-random starting points ``x`` for one rotation ``alpha``."""
    _check(f, alpha)
    rng = make_rng(cfg.seed, stream)
    orbit = Orbit(alpha, cfg.seq, cfg.N)
    stats = []
    for _ in range(cfg.x_samples):
        x = f.group.sample_haar(rng)
        stats.append(stats_from_values(f.orbit_values(orbit, x), cfg.K0, cfg.N))
    verdict, n_conv, n_bounded, n_growing = decide_verdict(stats, cfg)
    return GammaVerdict(
        verdict=verdict,
        samples=len(stats),
        n_converging=n_conv,
        n_bounded=n_bounded,
        n_growing=n_growing,
        max_sup_ratio=max((s.sup_ratio for s in stats), default=0.0),
        max_window_spread=max((s.window_spread for s in stats), default=0.0),
        N=cfg.N,
        seed=cfg.seed,
        stream=stream,
        stats=stats,
    )


def scan_alphas(f: SampleFunction, alphas: Sequence[GroupElement], cfg: GammaConfig = GammaConfig(),
                threads: int = 1) -> list[GammaVerdict]:
    """Independent :func:`classify_gamma` per rotation; stream ``i`` for ``alphas[i]``.

    Results come back in input order whatever the thread count.
    """
    jobs = list(enumerate(alphas))
    if threads <= 1 or len(jobs) <= 1:
        return [classify_gamma(f, a, cfg, stream=i) for i, a in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: classify_gamma(f, job[1], cfg, stream=job[0]), jobs))


VERDICT_COLUMNS = ("alpha_id", "verdict", "sup_ratio", "window_spread", "N", "samples", "seed")


def verdict_rows(verdicts: Sequence[GammaVerdict]) -> list[tuple]:
    return [
        (i, v.verdict.value, v.max_sup_ratio, v.max_window_spread, v.N, v.samples, v.seed)
        for i, v in enumerate(verdicts)
    ]
