"""Experiment harness: instance generation, single runs, epsilon sweeps and
spectral campaigns, with CSV/JSON output.

Configuration is a flat ``key = value`` file plus ``--set key=value`` and
dedicated flag overrides (flags win). Recognised keys::

    graph              random:n=64[,p=0.1] | lb:sqrt_n=8[,x=0101..,y=..]
                       | path:n=.. | cycle:n=.. | complete:n=.. | file:PATH
    algo               basic | improved | baseline | all  (comma lists allowed)
    epsilons           comma list, fractions allowed (1/4,1/16)
    seeds              number of seeds, counted up from base_seed
    seed_list          explicit seeds (overrides seeds)
    base_seed          defaults to $SMOOTHMST_SEED, else 0
    c_smooth           constant c in the smoothing round count
    backbone_degree_c  constant c of spectral campaigns
    route_setup_rounds rounds charged per routing invocation
    n_grid             spectral node counts
    rounds             spectral smoothing rounds (default ceil(c log2 n / eps))
    min_conductance    spectral conductance floor
    max_tmix_ratio     spectral bound on median t(2n)/t(n)
    workers            process count for parallel runs
    out                output directory
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import statistics
import sys
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .engine import BandwidthViolation
from .graph import (
    GraphError,
    GraphGenerationError,
    WeightedGraph,
    complete_graph,
    cycle_graph,
    diameter,
    format_bits,
    generate_lower_bound_graph,
    generate_random_connected,
    kruskal_mst,
    parse_bits,
    path_graph,
    read_graph,
    write_graph,
)
from .lowerbound import SdInstance, encode_sd, spanning_connected
from .mst import (
    DEFAULT_C,
    BoruvkaStall,
    MstResult,
    SmoothingPrecondition,
    baseline_mst,
    smoothed_mst_basic,
    smoothed_mst_improved,
)
from .routing import PathFailure
from .smoothing import SmoothingSpecError, materialize, parse_smoothing_spec
from .spectral import SpectralError, verify_backbone_lemma

__all__ = [
    "ENV_SEED",
    "RUN_HEADER",
    "SPECTRAL_HEADER",
    "ROUTING_HEADER",
    "ALGORITHMS",
    "SLOPE_WINDOWS",
    "ConfigError",
    "ExperimentConfig",
    "RunRecord",
    "SweepResult",
    "parse_config_text",
    "load_config",
    "build_graph",
    "engine_seed",
    "execute_runs",
    "fit_loglog_slope",
    "scaling_summary",
    "write_csv",
    "dump_json",
    "cmd_run",
    "cmd_sweep",
    "cmd_spectral",
    "main",
]

ENV_SEED = "SMOOTHMST_SEED"

RUN_HEADER = (
    "algo", "n", "m", "D", "epsilon", "seed", "rounds_total", "rounds_smoothing",
    "rounds_mst", "boruvka_iters", "frag_count_post_ghs", "ok",
)
SPECTRAL_HEADER = ("n", "epsilon", "seed", "conductance", "cond_method", "tmix", "tmix_method")
ROUTING_HEADER = ("instance_id", "pairs", "width", "c", "d", "delivery_rounds", "retries")

SMOOTHED = ("basic", "improved")
ALGO_ORDER = ("basic", "improved", "baseline")

# metric, low, high for the fitted log-log slope against 1/eps
SLOPE_WINDOWS: dict[str, tuple[str, float, float]] = {
    "improved": ("rounds_total", 0.3, 0.7),
    "basic": ("rounds_smoothing", 0.8, 1.2),
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# algorithms


Runner = Callable[[WeightedGraph, float, np.random.SeedSequence, "ExperimentConfig"], MstResult]


def _run_basic(g, eps, seed, cfg):
    return smoothed_mst_basic(g, eps, seed, cfg.c_smooth, cfg.route_setup_rounds)


def _run_improved(g, eps, seed, cfg):
    return smoothed_mst_improved(g, eps, seed, cfg.c_smooth, cfg.route_setup_rounds)


def _run_baseline(g, eps, seed, cfg):
    return baseline_mst(g, seed)


# Tests may register extra entries (a constant-rounds dummy, for instance).
ALGORITHMS: dict[str, Runner] = {
    "basic": _run_basic,
    "improved": _run_improved,
    "baseline": _run_baseline,
}


def _algo_rank(algo: str) -> tuple[int, str]:
    return (ALGO_ORDER.index(algo), "") if algo in ALGO_ORDER else (len(ALGO_ORDER), algo)


def engine_seed(base_seed: int, seed: int, algo: str, epsilon: float) -> np.random.SeedSequence:
    """Per-run RNG stream, independent of scheduling order.

    The baseline ignores epsilon, so its runs repeat across epsilon groups.
    """
    algo_code = sum(ord(ch) << (8 * i) for i, ch in enumerate(algo[:7]))
    frac = Fraction(0) if algo == "baseline" else Fraction(epsilon).limit_denominator(1 << 30)
    return np.random.SeedSequence([base_seed, seed, algo_code, frac.numerator, frac.denominator])


# ---------------------------------------------------------------------------
# configuration


def _parse_float(text: str) -> float:
    return float(Fraction(text.strip()))


def _parse_float_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return [_parse_float(t) for t in items]


def _parse_int_list(text: str) -> list[int]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return [int(t) for t in items]


def _parse_algos(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if names == ["all"]:
        return list(ALGO_ORDER)
    for name in names:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r} (choose from {', '.join(ALGORITHMS)}, all)")
    if not names:
        raise ValueError("no algorithm given")
    return sorted(set(names), key=_algo_rank)


def _parse_optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


def _default_base_seed() -> int:
    raw = os.environ.get(ENV_SEED)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"environment {ENV_SEED}={raw!r}: not an integer") from None


@dataclass
class ExperimentConfig:
    graph: str = "random:n=64"
    algo: list[str] = field(default_factory=lambda: list(ALGO_ORDER))
    epsilons: list[float] = field(default_factory=lambda: [0.25])
    seeds: int = 1
    seed_list: list[int] | None = None
    base_seed: int = 0
    c_smooth: float = DEFAULT_C
    backbone_degree_c: float = 10.0
    route_setup_rounds: int = 0
    n_grid: list[int] = field(default_factory=lambda: [16])
    rounds: int | None = None
    min_conductance: float = 0.1
    max_tmix_ratio: float = 1.6
    workers: int = 1
    out: str | None = None

    @property
    def seed_values(self) -> list[int]:
        if self.seed_list is not None:
            return list(self.seed_list)
        return list(range(self.base_seed, self.base_seed + self.seeds))

    def validate(self, where: str = "config") -> None:
        if self.seed_list is None and self.seeds < 1:
            raise ConfigError(f"{where}: field 'seeds': need at least one seed")
        if self.seed_list is not None and not self.seed_list:
            raise ConfigError(f"{where}: field 'seed_list': empty")
        if any(a in SMOOTHED for a in self.algo):
            if not self.epsilons:
                raise ConfigError(f"{where}: field 'epsilons': a smoothed algorithm needs at least one epsilon")
            bad = [e for e in self.epsilons if not (0.0 < e <= 1.0)]
            if bad:
                raise ConfigError(
                    f"{where}: field 'epsilons': epsilon={bad[0]:g} outside (0, 1] for a smoothed "
                    "algorithm; without smoothing use algo=baseline, which is what the "
                    "min{improved, baseline} report falls back to"
                )
        if self.workers < 1:
            raise ConfigError(f"{where}: field 'workers': must be >= 1")
        if self.c_smooth <= 0 or self.backbone_degree_c <= 0:
            raise ConfigError(f"{where}: constants must be positive")
        if self.route_setup_rounds < 0:
            raise ConfigError(f"{where}: field 'route_setup_rounds': must be >= 0")
        try:
            _parse_graph_source(self.graph)
        except ValueError as exc:
            raise ConfigError(f"{where}: field 'graph': {exc}") from None


_PARSERS: dict[str, Callable[[str], Any]] = {
    "graph": str.strip,
    "algo": _parse_algos,
    "epsilons": _parse_float_list,
    "seeds": int,
    "seed_list": _parse_int_list,
    "base_seed": int,
    "c_smooth": _parse_float,
    "backbone_degree_c": _parse_float,
    "route_setup_rounds": int,
    "n_grid": _parse_int_list,
    "rounds": _parse_optional_int,
    "min_conductance": _parse_float,
    "max_tmix_ratio": _parse_float,
    "workers": int,
    "out": str.strip,
}
assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def _apply(cfg: ExperimentConfig, key: str, value: str, where: str) -> ExperimentConfig:
    key = key.strip()
    if key not in _PARSERS:
        raise ConfigError(f"{where}: unknown field {key!r}")
    try:
        parsed = _PARSERS[key](value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: field {key!r}: cannot parse {value.strip()!r} ({exc})") from None
    return replace(cfg, **{key: parsed})


def parse_config_text(
    text: str, source: str = "<config>", base: ExperimentConfig | None = None
) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    cfg = base if base is not None else ExperimentConfig(base_seed=_default_base_seed())
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        if key.strip() in seen:
            raise ConfigError(f"{where}: field {key.strip()!r} already set on line {seen[key.strip()]}")
        seen[key.strip()] = lineno
        cfg = _apply(cfg, key, value, where)
    return cfg


def load_config(path: str | None, overrides: Sequence[tuple[str, str, str]] = ()) -> ExperimentConfig:
    """Read ``path`` (if any), then apply ``(key, value, origin)`` overrides."""
    cfg = ExperimentConfig(base_seed=_default_base_seed())
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        cfg = parse_config_text(text, path, cfg)
    for key, value, origin in overrides:
        cfg = _apply(cfg, key, value, origin)
    cfg.validate(path or "config")
    return cfg


# ---------------------------------------------------------------------------
# graph sources


def _parse_graph_source(source: str) -> tuple[str, dict[str, str]]:
    kind, _, rest = source.partition(":")
    kind = kind.strip()
    if kind == "file":
        if not rest.strip():
            raise ValueError("file: needs a path")
        return kind, {"path": rest.strip()}
    params: dict[str, str] = {}
    for part in filter(None, (p.strip() for p in rest.split(","))):
        if "=" not in part:
            raise ValueError(f"malformed graph parameter {part!r}")
        k, v = part.split("=", 1)
        params[k.strip()] = v.strip()
    allowed = {
        "random": {"n", "p"},
        "lb": {"sqrt_n", "x", "y", "weight_seed"},
        "path": {"n"},
        "cycle": {"n"},
        "complete": {"n"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown graph kind {kind!r}")
    extra = set(params) - allowed[kind]
    if extra:
        raise ValueError(f"unknown parameter(s) {sorted(extra)} for {kind}")
    need = "sqrt_n" if kind == "lb" else "n"
    if need not in params:
        raise ValueError(f"{kind} graphs need {need}=")
    return kind, params


def build_graph(source: str, seed: int) -> WeightedGraph:
    """Instantiate a graph source; random sources draw from ``seed``."""
    kind, params = _parse_graph_source(source)
    if kind == "file":
        return read_graph(params["path"])[0]
    if kind == "lb":
        k = int(params["sqrt_n"])
        rng = np.random.default_rng(seed)
        bits = {}
        for name in ("x", "y"):
            spec = params.get(name, "random")
            bits[name] = rng.integers(0, 2, size=k).tolist() if spec == "random" else parse_bits(spec)
        return generate_lower_bound_graph(k, bits["x"], bits["y"], int(params.get("weight_seed", 0)))
    n = int(params["n"])
    if kind == "random":
        p = _parse_float(params["p"]) if "p" in params else min(1.0, 3 * math.log(n) / n)
        return generate_random_connected(n, p, seed)
    return {"path": path_graph, "cycle": cycle_graph, "complete": complete_graph}[kind](n)


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunRecord:
    algo: str
    n: int
    m: int
    D: int
    epsilon: float
    seed: int
    rounds_total: int
    rounds_smoothing: int
    rounds_mst: int
    boruvka_iters: int
    frag_count_post_ghs: int
    ok: bool
    error: str = ""
    routing: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def sort_key(self) -> tuple:
        return (_algo_rank(self.algo), self.epsilon, self.seed)

    def row(self) -> list[str]:
        return [
            self.algo, str(self.n), str(self.m), str(self.D), _fmt_eps(self.epsilon), str(self.seed),
            str(self.rounds_total), str(self.rounds_smoothing), str(self.rounds_mst),
            str(self.boruvka_iters), str(self.frag_count_post_ghs), "true" if self.ok else "false",
        ]


def _fmt_eps(eps: float) -> str:
    return format(eps, ".10g")


def run_one(g: WeightedGraph, d: int, algo: str, eps: float, seed: int, cfg: ExperimentConfig) -> RunRecord:
    rec = RunRecord(algo, g.n, g.m, d, eps, seed, -1, -1, -1, 0, 0, False)
    try:
        res = ALGORITHMS[algo](g, eps, engine_seed(cfg.base_seed, seed, algo, eps), cfg)
        res.report.check()
    except (PathFailure, BoruvkaStall, SmoothingPrecondition, SpectralError, BandwidthViolation, AssertionError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    rec.rounds_total = res.report.total_rounds
    rec.rounds_smoothing = res.report.smoothing_rounds
    rec.rounds_mst = rec.rounds_total - rec.rounds_smoothing
    rec.boruvka_iters = res.boruvka_iterations
    rec.frag_count_post_ghs = res.fragments_after_ghs
    rec.ok = set(res.edges) == kruskal_mst(g)
    if not rec.ok:
        rec.error = "MST differs from the Kruskal oracle"
    if res.boruvka is not None:
        rec.routing = [s for s in res.boruvka.route_stats if s is not None]
    if res.super_graph is not None:
        sg = res.super_graph
        rec.extras = {
            "n_prime": sg.n_prime,
            "p_prime": sg.p_prime,
            "density_floor": sg.density_floor,
            "r_prime_connected": sg.overlay_connected(),
        }
    return rec


def _seed_task(args: tuple[str, int, list[tuple[str, float]], ExperimentConfig]) -> list[RunRecord]:
    source, seed, jobs, cfg = args
    g = build_graph(source, seed)
    d = diameter(g)
    baseline: RunRecord | None = None  # epsilon-independent, run once per graph
    out = []
    for algo, eps in jobs:
        if algo == "baseline" and baseline is not None:
            out.append(replace(baseline, epsilon=eps))
            continue
        rec = run_one(g, d, algo, eps, seed, cfg)
        if algo == "baseline":
            baseline = rec
        out.append(rec)
    return out


def execute_runs(cfg: ExperimentConfig) -> list[RunRecord]:
    """Run every (algo, epsilon, seed) cell; rows come back in canonical order."""
    jobs = [(a, e) for a in cfg.algo for e in cfg.epsilons]
    tasks = [(cfg.graph, s, jobs, cfg) for s in cfg.seed_values]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_seed_task, tasks))
    else:
        chunks = [_seed_task(t) for t in tasks]
    return sorted((r for chunk in chunks for r in chunk), key=lambda r: r.sort_key)


# ---------------------------------------------------------------------------
# summaries


def fit_loglog_slope(epsilons: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``log(value)`` against ``log(1/eps)``."""
    x = np.log(1.0 / np.asarray(epsilons, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 2 or np.ptp(x) == 0:
        raise ValueError("need at least two distinct epsilon values")
    return float(np.polyfit(x, y, 1)[0])


def _medians(records: Iterable[RunRecord]) -> list[dict[str, Any]]:
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        if r.ok:
            groups.setdefault((_algo_rank(r.algo), r.epsilon, r.algo), []).append(r)
    out = []
    for (_, eps, algo), rs in sorted(groups.items()):
        out.append({
            "algo": algo,
            "epsilon": eps,
            "runs": len(rs),
            "rounds_total": statistics.median(r.rounds_total for r in rs),
            "rounds_smoothing": statistics.median(r.rounds_smoothing for r in rs),
            "rounds_mst": statistics.median(r.rounds_mst for r in rs),
        })
    return out


def _min_composition(records: Sequence[RunRecord]) -> list[dict[str, Any]]:
    by = {(r.algo, r.epsilon, r.seed): r for r in records if r.ok}
    out = []
    for (algo, eps, seed), r in sorted(by.items(), key=lambda kv: (kv[0][1], kv[0][2])):
        if algo != "improved" or ("baseline", eps, seed) not in by:
            continue
        b = by[("baseline", eps, seed)].rounds_total
        out.append({"epsilon": eps, "seed": seed, "improved": r.rounds_total, "baseline": b,
                    "min": min(r.rounds_total, b)})
    return out


def scaling_summary(records: Sequence[RunRecord]) -> dict[str, Any]:
    """Per-algorithm slope fits and monotonicity checks over an epsilon sweep."""
    med = _medians(records)
    out: dict[str, Any] = {}
    for algo in sorted({m["algo"] for m in med}, key=_algo_rank):
        rows = sorted((m for m in med if m["algo"] == algo), key=lambda m: m["epsilon"])
        eps = [m["epsilon"] for m in rows]
        entry: dict[str, Any] = {"epsilons": eps}
        if len(eps) < 2:
            entry["error"] = "fewer than two epsilon values with successful runs"
            out[algo] = entry
            continue
        for metric in ("rounds_total", "rounds_smoothing"):
            vals = [m[metric] for m in rows]
            entry[f"median_{metric}"] = vals
            entry[f"slope_{metric}"] = fit_loglog_slope(eps, vals) if min(vals) > 0 else None
        if algo in SLOPE_WINDOWS:
            metric, lo, hi = SLOPE_WINDOWS[algo]
            slope = entry[f"slope_{metric}"]
            vals = entry[f"median_{metric}"]
            entry["checked_metric"] = metric
            entry["slope_window"] = [lo, hi]
            entry["slope_ok"] = slope is not None and lo <= slope <= hi
            # eps ascending, so rounds must not increase along the list
            entry["monotone_ok"] = all(a >= b for a, b in zip(vals, vals[1:]))
        out[algo] = entry
    return out


@dataclass
class SweepResult:
    records: list[RunRecord]
    summary: dict[str, Any]

    @property
    def ok(self) -> bool:
        return bool(self.summary.get("ok", False))


def _base_summary(command: str, cfg: ExperimentConfig, records: Sequence[RunRecord]) -> dict[str, Any]:
    failures = [
        {"algo": r.algo, "epsilon": r.epsilon, "seed": r.seed, "error": r.error}
        for r in records if not r.ok
    ]
    expected = len(cfg.algo) * len(cfg.epsilons) * len(cfg.seed_values)
    return {
        "command": command,
        "graph": cfg.graph,
        "rows": len(records),
        "expected_rows": expected,
        "medians": _medians(records),
        "min_composition": _min_composition(records),
        "super_graph": [
            {"epsilon": r.epsilon, "seed": r.seed, **r.extras} for r in records if r.extras
        ],
        "failures": failures,
        "ok": not failures and len(records) == expected,
    }


def _finite(obj: Any) -> Any:
    # strict JSON has no NaN
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dump_json(obj: Any, indent: int | None = 2) -> str:
    return json.dumps(_finite(obj), indent=indent, allow_nan=False)


def write_csv(stream, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _routing_rows(records: Sequence[RunRecord]) -> list[list[str]]:
    rows = []
    for r in records:
        for i, s in enumerate(r.routing):
            rows.append([f"{r.algo}:{_fmt_eps(r.epsilon)}:{r.seed}:{i}", str(s.pairs), str(s.width),
                         str(s.c), str(s.d), str(s.delivery_rounds), str(s.retries)])
    return rows


def _emit(cfg: ExperimentConfig, result: SweepResult, stdout) -> None:
    rows = [r.row() for r in result.records]
    if cfg.out is None:
        write_csv(stdout, RUN_HEADER, rows)
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "runs.csv", "w", encoding="utf-8", newline="") as fh:
        write_csv(fh, RUN_HEADER, rows)
    with open(out / "routing.csv", "w", encoding="utf-8", newline="") as fh:
        write_csv(fh, ROUTING_HEADER, _routing_rows(result.records))
    (out / "summary.json").write_text(dump_json(result.summary) + "\n", encoding="utf-8")


def cmd_run(cfg: ExperimentConfig) -> SweepResult:
    records = execute_runs(cfg)
    return SweepResult(records, _base_summary("run", cfg, records))


def cmd_sweep(cfg: ExperimentConfig) -> SweepResult:
    if len(set(cfg.epsilons)) < 2:
        raise ConfigError("sweep: field 'epsilons': need at least two distinct values")
    records = execute_runs(cfg)
    summary = _base_summary("sweep", cfg, records)
    scaling = scaling_summary(records)
    summary["scaling"] = scaling
    checks = [v for v in scaling.values() if "slope_ok" in v]
    summary["ok"] = summary["ok"] and all(v["slope_ok"] and v["monotone_ok"] for v in checks) and all(
        "error" not in scaling.get(a, {}) for a in cfg.algo if a in SLOPE_WINDOWS
    )
    return SweepResult(records, summary)


def cmd_spectral(cfg: ExperimentConfig) -> tuple[list[list[str]], dict[str, Any]]:
    """Backbone campaign over ``n_grid x epsilons x seeds``."""
    rows: list[list[str]] = []
    cells = []
    median_t: dict[tuple[float, int], float] = {}
    low_conductance = []
    for eps in cfg.epsilons:
        for n in cfg.n_grid:
            s = verify_backbone_lemma(n, eps, cfg.seed_values, c=cfg.backbone_degree_c, rounds=cfg.rounds)
            for seed in cfg.seed_values:
                rep = s.reports.get(seed)
                if rep is None:
                    rows.append([str(n), _fmt_eps(eps), str(seed), "nan", "failed", "-1", "failed"])
                    continue
                rows.append([str(n), _fmt_eps(eps), str(seed), repr(float(rep.conductance)),
                             rep.cond_method.value, str(rep.mixing_time), rep.mix_method.value])
                if rep.conductance < cfg.min_conductance:
                    low_conductance.append({"n": n, "epsilon": eps, "seed": seed, "conductance": rep.conductance})
            if s.reports:
                median_t[(eps, n)] = s.mixing_time[1]
            cells.append({
                "n": n, "epsilon": eps, "rounds": s.rounds, "failures": s.failures,
                "initiation_violations": s.initiation_violations,
                "initiations_range": list(s.initiations_range), "degree_range": list(s.degree_range),
                "conductance": list(s.conductance), "tmix": list(s.mixing_time),
            })
    ratios = []
    for (eps, n), t in sorted(median_t.items()):
        if (eps, 2 * n) in median_t:
            ratios.append({"epsilon": eps, "n": n, "ratio": median_t[(eps, 2 * n)] / t})
    failures = [{"n": c["n"], "epsilon": c["epsilon"], "seeds": c["failures"]} for c in cells if c["failures"]]
    summary = {
        "command": "spectral",
        "cells": cells,
        "tmix_ratios": ratios,
        "low_conductance": low_conductance,
        "failures": failures,
        "ok": not failures and not low_conductance and all(r["ratio"] <= cfg.max_tmix_ratio for r in ratios),
    }
    return rows, summary


# ---------------------------------------------------------------------------
# entry point


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config field")
    p.add_argument("--graph", help="graph source, e.g. random:n=64 or file:g.txt")
    p.add_argument("--algo", help="basic, improved, baseline or all")
    p.add_argument("--eps", dest="epsilons", help="comma list of epsilon values")
    p.add_argument("--seeds", help="number of seeds")
    p.add_argument("--workers", help="parallel worker processes")
    p.add_argument("--out", help="output directory (default: CSV on stdout)")


def _overrides(args: argparse.Namespace) -> list[tuple[str, str, str]]:
    out = []
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"flag --set {item!r}: expected KEY=VALUE")
        k, v = item.split("=", 1)
        out.append((k.strip(), v, f"flag --set {k.strip()}"))
    for key in ("graph", "algo", "epsilons", "seeds", "workers", "out"):
        val = getattr(args, key, None)
        if val is not None:
            flag = "--eps" if key == "epsilons" else f"--{key}"
            out.append((key, val, f"flag {flag}"))
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smoothmst", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a graph file")
    g.add_argument("--graph", required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--smooth", help="overlay model: eps:E,rounds:R | k:K | delta:D")
    g.add_argument("-o", "--output", required=True)

    for name, text in (("run", "run algorithms and verify against Kruskal"),
                       ("sweep", "epsilon sweep with scaling fits"),
                       ("spectral", "backbone conductance and mixing campaign")):
        sp = sub.add_parser(name, help=text)
        _add_config_flags(sp)

    lb = sub.add_parser("lb-gen", help="emit G(x, y) with H membership flags")
    lb.add_argument("--sqrt-n", type=int, required=True)
    lb.add_argument("--x", required=True, help="bit string of length sqrt_n")
    lb.add_argument("--y", required=True, help="bit string of length sqrt_n")
    lb.add_argument("--weight-seed", type=int, default=0)
    lb.add_argument("-o", "--output", required=True)
    return ap


def _write_summary(cfg: ExperimentConfig, summary: dict[str, Any], stderr) -> None:
    if cfg.out is None:
        print(dump_json(summary, indent=None), file=stderr)


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            seed = args.seed if args.seed is not None else _default_base_seed()
            g = build_graph(args.graph, seed)
            overlay = materialize(parse_smoothing_spec(args.smooth, seed), g).pairs() if args.smooth else []
            write_graph(args.output, g, overlay)
            print(f"n={g.n} m={g.m} D={diameter(g)} overlay={len(overlay)}", file=stdout)
            return 0
        if args.command == "lb-gen":
            inst = SdInstance.from_strings(args.x, args.y)
            css = encode_sd(inst, args.weight_seed)
            write_graph(args.output, css.g, h_edges=set(css.h))
            print(
                f"n={css.g.n} m={css.g.m} D={diameter(css.g)} x={format_bits(inst.x)} y={format_bits(inst.y)} "
                f"disjoint={str(inst.disjoint).lower()} h_spanning_connected="
                f"{str(spanning_connected(css.g.n, css.h)).lower()}",
                file=stdout,
            )
            return 0
        cfg = load_config(args.config, _overrides(args))
        if args.command == "spectral":
            rows, summary = cmd_spectral(cfg)
            if cfg.out is None:
                write_csv(stdout, SPECTRAL_HEADER, rows)
            else:
                out = Path(cfg.out)
                out.mkdir(parents=True, exist_ok=True)
                with open(out / "spectral.csv", "w", encoding="utf-8", newline="") as fh:
                    write_csv(fh, SPECTRAL_HEADER, rows)
                (out / "summary.json").write_text(dump_json(summary) + "\n", encoding="utf-8")
            _write_summary(cfg, summary, stderr)
            return 0 if summary["ok"] else 1
        result = cmd_run(cfg) if args.command == "run" else cmd_sweep(cfg)
        _emit(cfg, result, stdout)
        _write_summary(cfg, result.summary, stderr)
        for f in result.summary["failures"]:
            print(f"FAILED {f['algo']} eps={f['epsilon']:g} seed={f['seed']}: {f['error']}", file=stderr)
        for algo, entry in result.summary.get("scaling", {}).items():
            if entry.get("slope_ok") is False:
                print(
                    f"SLOPE {algo}: fitted {entry['checked_metric']} slope "
                    f"{entry['slope_' + entry['checked_metric']]:.3f} outside {entry['slope_window']}",
                    file=stderr,
                )
            if entry.get("monotone_ok") is False:
                print(f"MONOTONE {algo}: median {entry['checked_metric']} increases with epsilon", file=stderr)
        return 0 if result.ok else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return 2
    except (GraphError, GraphGenerationError, SmoothingSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
