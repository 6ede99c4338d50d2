"""Experiment catalog: parameter schemas and the function that runs each kind."""

from __future__ import annotations

import difflib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import jsonschema

from . import averaging, characters, counterexamples, diagnostics, sequences
from .characters import PadicChar, enumerate_dual, geometric_block_sum, parseval_residual
from .errors import ConfigError
from .functions import CylinderStep, function_from_json
from .groups import FiniteProduct, PadicTruncated, Torus, element_from_json, group_from_json
from .rng import make_rng

_GROUP = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["torus", "product", "padic"]},
        "moduli": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "p": {"type": "integer", "minimum": 2},
        "depth": {"type": "integer", "minimum": 1},
        "resolution_bits": {"type": "integer", "minimum": 1},
    },
}
_SEQUENCE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["identity", "squares", "primes", "affine", "explicit"]},
        "a": {"type": "integer", "minimum": 1},
        "b": {"type": "integer"},
        "values": {"type": "array", "items": {"type": "integer"}},
    },
}
_FUNCTION = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["constant", "trig", "cylinder"]}},
}
_COUNTEREXAMPLE_SPEC = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["single_prime", "distinct_primes"]},
        "p": {"type": "integer", "minimum": 2},
        "depth": {"type": "integer", "minimum": 1},
        "k_max": {"type": "integer", "minimum": 1},
        "J": {"type": "integer", "minimum": 1},
        "primes": {"type": "array", "items": {"type": "integer"}},
    },
}
_POS = {"type": "integer", "minimum": 1}
_NONNEG = {"type": "integer", "minimum": 0}
_REAL = {"type": "number", "exclusiveMinimum": 0}
_GAMMA_PARAMS = {
    "N": _POS, "K0": _NONNEG, "x_samples": _POS,
    "spread_tol": _REAL, "sup_tol": _REAL, "quorum": _REAL,
}


def _params(props: dict, required: list[str] | None = None) -> dict:
    return {"type": "object", "properties": props, "required": required or [], "additionalProperties": False}


CATALOG: dict[str, dict] = {
    "parseval": {
        "description": "Parseval residuals of random cylinder functions on finite quotients",
        "required": ["group"],
        "properties": {
            "group": _GROUP,
            "params": _params({"level": _POS, "n_functions": _POS, "tol": _REAL}),
        },
    },
    "char_sums": {
        "description": "Block sums of p-adic characters over k = p^kappa .. 2p^kappa-1",
        "required": [],
        "properties": {
            "params": _params({
                "primes": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "kappa_max": _POS, "tol": _REAL, "witness_min": _REAL,
            }),
        },
    },
    "ergodic_seq": {
        "description": "Residue-class frequencies of an integer sequence modulo q = 1..Q_max",
        "required": ["sequence"],
        "properties": {
            "sequence": _SEQUENCE,
            "params": _params({"Q_max": _POS, "N": _POS, "tol": _REAL}),
        },
    },
    "average_scan": {
        "description": "Empirical rotation-set verdicts for one function over a list of rotations",
        "required": ["group", "function"],
        "properties": {
            "group": _GROUP,
            "function": _FUNCTION,
            "sequence": _SEQUENCE,
            "alphas": {"type": "array"},
            "params": _params({**_GAMMA_PARAMS, "n_alphas": _POS}),
        },
    },
    "counterexample": {
        "description": "Non-integrable torsion series: rotation verdicts over sampled rotations",
        "required": ["spec"],
        "properties": {
            "spec": _COUNTEREXAMPLE_SPEC,
            "sequence": _SEQUENCE,
            "params": _params({**_GAMMA_PARAMS, "n_alphas": _POS, "include_special": {"type": "boolean"},
                               "q_max": _POS, "tail_tol": _REAL}),
        },
    },
    "proof_chain": {
        "description": "Level-set versus Parseval inequality chain on a finite group",
        "required": ["group", "function"],
        "properties": {
            "group": _GROUP,
            "function": _FUNCTION,
            "sequence": _SEQUENCE,
            "params": _params({"K": _POS, "eps": _REAL, "N_orbit": _POS, "b_sample": _POS,
                               "ks": {"type": "array", "items": _POS}, "tol": _REAL}),
        },
    },
}

_TOP = {"experiment", "seed", "output", "threads"}


def schema_for(kind: str) -> dict:
    entry = CATALOG[kind]
    return {
        "type": "object",
        "required": ["experiment", *entry["required"]],
        "properties": {
            "experiment": {"const": kind},
            "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            "output": {"type": "string"},
            "threads": _POS,
            **entry["properties"],
        },
        "additionalProperties": False,
    }


def catalog_json() -> dict:
    return {kind: {"description": e["description"], "schema": schema_for(kind)} for kind, e in CATALOG.items()}


def validate(config: Any) -> dict:
    if not isinstance(config, dict):
        raise ConfigError("configuration must be a JSON object")
    kind = config.get("experiment")
    if kind not in CATALOG:
        near = difflib.get_close_matches(str(kind), CATALOG, n=1)
        hint = f"; did you mean {near[0]!r}?" if near else f"; choose one of {sorted(CATALOG)}"
        raise ConfigError(f"unknown experiment {kind!r}{hint}")
    try:
        jsonschema.validate(config, schema_for(kind))
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return config


@dataclass
class Result:
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict = field(default_factory=dict)
    passed: bool | None = None  # None: not an assertion-type experiment


def _pmap(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _gamma_cfg(params: dict, seed: int, seq) -> averaging.GammaConfig:
    keys = {"N", "K0", "x_samples", "spread_tol", "sup_tol", "quorum"}
    return averaging.GammaConfig(seed=seed, seq=seq, **{k: v for k, v in params.items() if k in keys})


def _sequence(config: dict):
    return sequences.sequence_from_json(config.get("sequence", {"kind": "identity"}))


def run_parseval(config: dict, seed: int, threads: int) -> Result:
    group = group_from_json(config["group"])
    if isinstance(group, Torus):
        raise ConfigError("parseval experiment needs a finite group")
    params = config.get("params", {})
    level = params.get("level", group.max_level())
    n = params.get("n_functions", 100)
    tol = params.get("tol", 1e-9)

    def case(i: int):
        rng = make_rng(seed, i)
        f = CylinderStep.random(group, level, rng)
        g = CylinderStep.random(group, level, rng)
        return (i, group.level_size(level), parseval_residual(f, f, level), parseval_residual(f, g, level))

    rows = []
    for i, size, self_res, cross_res in _pmap(case, list(range(n)), threads):
        rows.append((i, size, self_res, cross_res, "pass" if max(self_res, cross_res) < tol else "fail"))
    worst = max((max(r[2], r[3]) for r in rows), default=0.0)
    return Result(("case", "size", "residual_ff", "residual_fg", "verdict"), rows,
                  {"max_residual": worst, "tol": tol, "level": level}, passed=worst < tol)


def block_sum_table(p: int, kappa: int) -> tuple[float, float, int, int]:
    """Exhaustive block sums at one ``(p, kappa)``.

    Rotations run over ``alpha_0 in {1, ..., p-1}``. Returns the max modulus over
    nontrivial characters of order <= p^kappa, the min over order-p^(kappa+1)
    characters of their best modulus, and the two case counts.
    """
    depth = kappa + 1
    G = PadicTruncated(p, depth)
    alphas = [G.from_int(a0) for a0 in range(1, p)]
    small = [g for g in enumerate_dual(G, kappa) if not g.is_trivial()]
    worst = 0.0
    for g in small:
        for a in alphas:
            worst = max(worst, abs(geometric_block_sum(g, a, kappa)))
    top = [PadicChar(p, l, depth) for l in range(1, p**depth) if l % p]
    witness = min(max(abs(geometric_block_sum(g, a, kappa)) for a in alphas) for g in top)
    return worst, witness, len(small) * len(alphas), len(top)


def run_char_sums(config: dict, seed: int, threads: int) -> Result:
    params = config.get("params", {})
    primes = params.get("primes", [2, 3, 5])
    kmax = params.get("kappa_max", 4)
    tol = params.get("tol", 1e-9)
    wmin = params.get("witness_min", 0.1)
    jobs = [(p, k) for p in primes for k in range(1, kmax + 1)]
    rows = []
    for (p, k), (worst, witness, n_zero, n_top) in zip(jobs, _pmap(lambda j: block_sum_table(*j), jobs, threads)):
        rows.append((p, k, n_zero, worst, n_top, witness, "pass" if worst < tol and witness > wmin else "fail"))
    ok = all(r[-1] == "pass" for r in rows)
    return Result(("p", "kappa", "zero_checks", "max_modulus", "witness_chars", "min_witness_modulus", "verdict"),
                  rows, {"tol": tol, "witness_min": wmin}, passed=ok)


def run_ergodic_seq(config: dict, seed: int, threads: int) -> Result:
    seq = _sequence(config)
    params = config.get("params", {})
    report = sequences.is_ergodic_periodic(seq, params.get("Q_max", 20), params.get("N", 100_000), params.get("tol"))
    summary = {"passed": report.passed, "failures": report.failures, "Q_max": report.Q_max, "N": report.N,
               "label": report.label}
    return Result(("q", "h", "freq", "dev", "verdict"), report.csv_rows(), summary)


def run_average_scan(config: dict, seed: int, threads: int) -> Result:
    group = group_from_json(config["group"])
    f = function_from_json(group, config["function"])
    params = config.get("params", {})
    cfg = _gamma_cfg(params, seed, _sequence(config))
    if "alphas" in config:
        alphas = [element_from_json(group, a) for a in config["alphas"]]
    else:
        rng = make_rng(seed, 0xA1FA)
        alphas = [group.sample_haar(rng) for _ in range(params.get("n_alphas", 10))]
    verdicts = averaging.scan_alphas(f, alphas, cfg, threads=threads)
    counts = {v.value: sum(x.verdict is v for x in verdicts) for v in averaging.Verdict}
    return Result(averaging.VERDICT_COLUMNS, averaging.verdict_rows(verdicts),
                  {"verdict_counts": counts, "gamma_config": cfg.to_json(), "label": averaging.EVIDENCE_LABEL})


def run_counterexample(config: dict, seed: int, threads: int) -> Result:
    spec_obj = config["spec"]
    spec = counterexamples.spec_from_json(spec_obj)
    cf = counterexamples.CounterexampleFunction(spec, spec_obj.get("k_max"))
    params = config.get("params", {})
    seq = _sequence(config)
    gcfg = _gamma_cfg({"N": 10_000, **params}, seed, seq)
    mcfg = counterexamples.MembershipConfig(
        n_alphas=params.get("n_alphas", 50),
        include_special=params.get("include_special", True),
        gamma=gcfg,
        q_max=params.get("q_max", 12),
        tail_tol=params.get("tail_tol", 1e-2),
        threads=threads,
    )
    rep = counterexamples.verify_universal_membership(cf, seq, mcfg)
    summary = {
        "n_diverging": rep.n_diverging, "converging_fraction": rep.converging_fraction,
        "tail_fraction": rep.tail_fraction, "flags": rep.flags, "identity_sequence": rep.identity_seq,
        "exact_integral": int(cf.exact_integral()), "k_max": cf.k_max, "gamma_config": gcfg.to_json(),
    }
    return Result(("alpha_id", "alpha_kind", "verdict", "sup_ratio", "window_spread", "converging", "samples"),
                  rep.rows(), summary, passed=rep.passed)


def run_proof_chain(config: dict, seed: int, threads: int) -> Result:
    group = group_from_json(config["group"])
    if isinstance(group, Torus):
        raise ConfigError("proof_chain experiment needs a finite group")
    f = function_from_json(group, config["function"])
    params = config.get("params", {})
    K = params.get("K", 2)
    cfg = diagnostics.GoodSetConfig(K=K, eps=params.get("eps", 0.5), N_orbit=params.get("N_orbit", K + 10),
                                    seq=_sequence(config))
    tol = params.get("tol", 1e-9)
    rng = make_rng(seed, 0xB5)
    B = [group.sample_haar(rng) for _ in range(params.get("b_sample", 9))]
    ks = params.get("ks", list(range(K + 1, K + 11)))
    reports = _pmap(lambda k: diagnostics.parseval_chain_check(f, B, cfg, k), ks, threads)
    rows = []
    for rep in reports:
        ok = rep.holds and rep.slack >= 0 and rep.coefficient_error < tol and rep.parseval_error < tol
        rows.append((rep.k, float(rep.lhs), rep.rhs, rep.rhs_parseval, rep.slack, rep.coefficient_error,
                     rep.n_B, "pass" if ok else "fail"))
    passed = all(r[-1] == "pass" for r in rows)
    return Result(("k", "lhs", "rhs", "rhs_parseval", "slack", "coefficient_error", "n_B", "verdict"), rows,
                  {"K": K, "eps": cfg.eps, "N_orbit": cfg.N_orbit, "tol": tol, "label": diagnostics.B_SAMPLE_LABEL,
                   "reports": [r.to_json() for r in reports]},
                  passed=passed)


RUNNERS: dict[str, Callable[[dict, int, int], Result]] = {
    "parseval": run_parseval,
    "char_sums": run_char_sums,
    "ergodic_seq": run_ergodic_seq,
    "average_scan": run_average_scan,
    "counterexample": run_counterexample,
    "proof_chain": run_proof_chain,
}
