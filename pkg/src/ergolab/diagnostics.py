"""Exact finite-group versions of the L^1 argument: level sets, good sets, the
mean-zero auxiliary function ``h`` and the Parseval inequality chain.

Everything runs on a finite group (a product, or a p-adic truncation seen as
Z/p^D), where every integral is a finite sum. The positive-measure set of
rotations is replaced by an explicit finite sample, and integrals over it by
uniform averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .characters import Character, char_numerators, enumerate_dual, fourier_transform, level_denominator
from .errors import DomainMismatch, NotQuotientRepresentable
from .functions import SampleFunction
from .groups import CompactAbelianGroup, GroupElement, scalar_mul
from .sequences import Identity, IntegerSequence

B_SAMPLE_LABEL = "finite sample of rotations stands in for the positive-measure set B"


def _full_values(f: SampleFunction) -> np.ndarray:
    g = f.group
    if not g.is_finite:
        raise NotQuotientRepresentable("diagnostics need a finite group")
    return np.asarray(f.quotient_values(g.max_level()), dtype=float)


def shift_index(group: CompactAbelianGroup, c: GroupElement) -> np.ndarray:
    """``idx[i]`` is the index of ``element_i + c``."""
    return group.level_index(group.translate(group.all_points(), c), group.max_level())


def level_set_mask(f: SampleFunction, t) -> np.ndarray:
    return np.abs(_full_values(f)) > t


def level_set_measure(f: SampleFunction, t) -> Fraction:
    """Exact measure of ``{x : |f(x)| > t}``."""
    mask = level_set_mask(f, t)
    return Fraction(int(mask.sum()), mask.size)


@dataclass(frozen=True)
class GoodSetConfig:
    """Threshold ``K``, margin ``eps`` and the orbit length scanned for membership."""

    K: int
    eps: float
    N_orbit: int
    seq: IntegerSequence = Identity()

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.N_orbit < self.K:
            raise ValueError("N_orbit must be >= K")

    def bound(self, k: int):
        """``K^2`` for ``k <= K``, ``K k`` beyond."""
        return self.K**2 if k <= self.K else self.K * k


def good_set_mask(f: SampleFunction, alpha: GroupElement, cfg: GoodSetConfig) -> np.ndarray:
    """Points whose orbit respects the bound ``|f(x + n_k alpha)| < bound(k)`` for ``k <= N_orbit``."""
    if alpha.group != f.group:
        raise DomainMismatch("rotation lives on another group")
    g = f.group
    values = _full_values(f)
    good = np.ones(values.size, dtype=bool)
    for k, n in enumerate(cfg.seq.generate(cfg.N_orbit).tolist()):
        shifted = values[shift_index(g, scalar_mul(n, alpha))]
        good &= np.abs(shifted) < cfg.bound(k)
    return good


def good_set_measure(f: SampleFunction, alpha: GroupElement, cfg: GoodSetConfig) -> Fraction:
    good = good_set_mask(f, alpha, cfg)
    return Fraction(int(good.sum()), good.size)


def good_set_measure_direct(f: SampleFunction, alpha: GroupElement, cfg: GoodSetConfig) -> Fraction:
    """Point-by-point evaluation of the definition, for cross-checking."""
    ns = cfg.seq.generate(cfg.N_orbit).tolist()
    steps = [scalar_mul(n, alpha) for n in ns]
    count = 0
    for x in f.group.elements():
        if all(abs(f.eval(x + s)) < cfg.bound(k) for k, s in enumerate(steps)):
            count += 1
    return Fraction(count, f.group.size)


@dataclass
class AuxFunction:
    """``h(., alpha)``: 1 on the bad set ``H``, ``-a/(1-a)`` off it, with ``a = m(H)``.

    Outside ``B`` the function is identically zero.
    """

    alpha: GroupElement
    in_B: bool
    H_mask: np.ndarray
    a: Fraction
    off_value: Fraction
    values: np.ndarray = field(repr=False)

    def exact_values(self) -> list[Fraction]:
        if not self.in_B:
            return [Fraction(0)] * self.H_mask.size
        return [Fraction(1) if h else self.off_value for h in self.H_mask.tolist()]

    def exact_mean(self) -> Fraction:
        if not self.in_B:
            return Fraction(0)
        n_h = int(self.H_mask.sum())
        return (n_h + (self.H_mask.size - n_h) * self.off_value) / self.H_mask.size

    def bound(self) -> Fraction:
        return max(Fraction(1), self.a / (1 - self.a)) if self.in_B else Fraction(0)


def build_aux_h(f: SampleFunction, alpha: GroupElement, cfg: GoodSetConfig) -> AuxFunction:
    good = good_set_mask(f, alpha, cfg)
    measure = Fraction(int(good.sum()), good.size)
    if not measure > Fraction(cfg.eps):
        zeros = np.zeros(good.size, dtype=bool)
        return AuxFunction(alpha, False, zeros, Fraction(0), Fraction(0), np.zeros(good.size))
    H = ~good
    a = Fraction(int(H.sum()), H.size)
    off = -a / (1 - a)
    return AuxFunction(alpha, True, H, a, off, np.where(H, 1.0, float(off)))


def _check_k(cfg: GoodSetConfig, k: int) -> None:
    if not cfg.K < k <= cfg.N_orbit:
        raise ValueError(f"need K < k <= N_orbit, got k={k}")


def verify_return_identity(f: SampleFunction, alpha: GroupElement, cfg: GoodSetConfig, k: int,
                           h: AuxFunction | None = None) -> bool:
    """Whether ``h(x - n_k alpha, alpha) = 1`` for every ``x`` with ``|f(x)| > k K``."""
    _check_k(cfg, k)
    h = build_aux_h(f, alpha, cfg) if h is None else h
    if not h.in_B:
        raise ValueError("rotation is not in B (good set too small)")
    n_k = int(cfg.seq.generate(k)[k])
    idx = shift_index(f.group, scalar_mul(n_k, -alpha))
    level = level_set_mask(f, k * cfg.K)
    return bool(np.all(h.values[idx[level]] == 1.0))


@dataclass
class ChainReport:
    lhs: Fraction
    rhs: float
    rhs_parseval: float
    slack: float
    coefficient_error: float
    parseval_error: float
    holds: bool
    group: dict
    K: int
    eps: float
    k: int
    n_B: int
    label: str = B_SAMPLE_LABEL

    def to_json(self) -> dict:
        return {
            "lhs": float(self.lhs), "lhs_exact": f"{self.lhs.numerator}/{self.lhs.denominator}",
            "rhs": self.rhs, "rhs_parseval": self.rhs_parseval, "slack": self.slack,
            "coefficient_error": self.coefficient_error, "parseval_error": self.parseval_error,
            "holds": self.holds, "group": self.group, "K": self.K, "eps": self.eps, "k": self.k,
            "n_B": self.n_B, "label": self.label,
        }


def select_B(f: SampleFunction, alphas: Sequence[GroupElement], cfg: GoodSetConfig) -> list[AuxFunction]:
    """Auxiliary functions of the sampled rotations that pass ``m(G_alpha) > eps``."""
    return [h for h in (build_aux_h(f, a, cfg) for a in alphas) if h.in_B]


def _phases(chars: Sequence[Character], group: CompactAbelianGroup, point: GroupElement) -> np.ndarray:
    """``gamma(-point)`` for each character, from exact angle numerators."""
    r = group.max_level()
    L = level_denominator(group, r)
    pt = group.to_batch([-point])
    nums = np.array([int(char_numerators(g, group, r, pt)[0]) for g in chars])
    return np.exp(2j * np.pi * nums / L)


def parseval_chain_check(f: SampleFunction, B_sample: Sequence[GroupElement], cfg: GoodSetConfig,
                         k: int, tol: float = 1e-12) -> ChainReport:
    """Compare ``m(L_{kK}(f))`` with ``int |phi_k|^2``.

    ``phi_k(x)`` is the average over the accepted rotations of ``h(x - n_k alpha, alpha)``.
    The right side is computed directly and again through Parseval, and the
    Fourier coefficients of ``phi_k`` are compared against the averaged
    ``gamma(-n_k alpha) c_gamma(alpha)``.
    """
    _check_k(cfg, k)
    if not B_sample:
        raise ValueError("B_sample is empty")
    group = f.group
    auxes = select_B(f, B_sample, cfg)
    if not auxes:
        raise ValueError("no sampled rotation passes the good-set test")
    n_k = int(cfg.seq.generate(k)[k])
    r = group.max_level()
    chars = enumerate_dual(group, r)

    phi = np.zeros(group.size)
    coeff_sum = np.zeros(len(chars), dtype=complex)
    for h in auxes:
        phi += h.values[shift_index(group, scalar_mul(n_k, -h.alpha))]
        c_gamma = fourier_transform(h.values, group, r, chars)
        coeff_sum += _phases(chars, group, scalar_mul(n_k, h.alpha)) * c_gamma
    phi /= len(auxes)
    coeff_avg = coeff_sum / len(auxes)

    lhs = level_set_measure(f, k * cfg.K)
    rhs = float(np.mean(phi**2))
    phi_hat = fourier_transform(phi, group, r, chars)
    rhs_parseval = float(np.sum(np.abs(phi_hat) ** 2))
    return ChainReport(
        lhs=lhs,
        rhs=rhs,
        rhs_parseval=rhs_parseval,
        slack=rhs - float(lhs),
        coefficient_error=float(np.max(np.abs(phi_hat - coeff_avg))),
        parseval_error=abs(rhs - rhs_parseval),
        holds=float(lhs) <= rhs + tol,
        group=group.to_json(),
        K=cfg.K,
        eps=cfg.eps,
        k=k,
        n_B=len(auxes),
    )
