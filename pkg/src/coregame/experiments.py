"""Seeded Monte Carlo runs with CSV output.

Every experiment takes an ExperimentConfig and returns its rows (dicts in a
fixed column order); ``write_rows`` serialises them.  Trial t of a run uses
seed ``seed + t``.
"""

from __future__ import annotations

import csv
import io
import math
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import numerics as nm
from .breaker import build_rank_table, sb_strategy
from .engine import BREAKER, MAKER, play, random_strategy
from .graphs import degree_histogram, gen_gnp
from .maker import NaiveStrategy, TwoPhaseStrategy
from .peeling import k_core, largest_component_at, peel, peel_degrees_at


class ConfigError(ValueError):
    pass


LIST_KEYS = {"n": int, "c": float, "maker": str, "breaker": str, "t": int}
SCALAR_KEYS = {
    "experiment": str,
    "b": int,
    "k": int,
    "trials": int,
    "seed": int,
    "N": int,
    "L": int,
    "d0": int,
    "restarts": int,
    "first": str,
    "output": str,
    "workers": int,
}


@dataclass
class ExperimentConfig:
    experiment: str = ""
    n: list[int] = field(default_factory=lambda: [1000])
    c: list[float] = field(default_factory=lambda: [3.0])
    b: int = 1
    k: int | None = None
    trials: int = 1
    seed: int = 0
    maker: list[str] = field(default_factory=lambda: ["naive"])
    breaker: list[str] = field(default_factory=lambda: ["sb"])
    t: list[int] = field(default_factory=lambda: [1, 2, 3])
    N: int | None = None
    L: int | None = None
    d0: int | None = None
    restarts: int = 10
    first: str | None = None
    output: str | None = None
    workers: int = 1

    @property
    def kk(self) -> int:
        return self.k if self.k is not None else self.b + 2

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.b < 1:
            raise ConfigError("b must be >= 1")
        if self.first not in (None, "maker", "breaker"):
            raise ConfigError("first must be 'maker' or 'breaker'")


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in LIST_KEYS:
                conv = LIST_KEYS[key]
                items = [conv(float(v)) if conv is int else conv(v) for v in value.replace(",", " ").split()]
                if not items:
                    raise ValueError("empty list")
                setattr(cfg, key, items)
            elif key in SCALAR_KEYS:
                conv = SCALAR_KEYS[key]
                setattr(cfg, key, conv(float(value)) if conv is int else conv(value))
            else:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r}") from None
    try:
        cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), str(path))


def write_rows(rows: list[dict], out=None) -> str:
    """CSV text for the rows; also written to ``out`` (path or '-') if given."""
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    text = buf.getvalue()
    if out == "-":
        sys.stdout.write(text)
    elif out:
        with open(out, "w") as fh:
            fh.write(text)
    return text


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _map(cfg: ExperimentConfig, fn, jobs: list) -> list:
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# -- strategies by name ------------------------------------------------------

MAKERS = ("naive", "two-phase", "random")
BREAKERS = ("sb", "sb-refined", "random")


def make_maker(name: str, board, b: int, seed: int, cfg: ExperimentConfig | None = None):
    if name == "random":
        return random_strategy(seed)
    if name == "naive":
        core = k_core(board, b + 2)
        if core.nhat == 0:
            return NaiveStrategy()
        mask = np.zeros(board.n, dtype=bool)
        mask[core.vertex_map] = True
        return NaiveStrategy(mask)
    if name == "two-phase":
        kw = {}
        if cfg is not None:
            kw = dict(N=cfg.N, L=cfg.L, d0=cfg.d0, restarts=cfg.restarts)
        return TwoPhaseStrategy(board, b, seed, **kw)
    raise ConfigError(f"unknown maker strategy {name!r} (choose from {', '.join(MAKERS)})")


def make_breaker(name: str, board, b: int, seed: int, table=None):
    if name in ("sb", "sb-refined"):
        table = build_rank_table(board, b) if table is None else table
        return sb_strategy(table, refined=name == "sb-refined")
    if name == "random":
        return random_strategy(seed)
    raise ConfigError(f"unknown breaker strategy {name!r} (choose from {', '.join(BREAKERS)})")


def default_first(maker: str) -> int:
    # Breaker-side results assume Maker starts; the tree-building strategy assumes Breaker starts
    return BREAKER if maker == "two-phase" else MAKER


# -- phase transition --------------------------------------------------------


def _game_trial(job) -> list[dict]:
    cfg, n, c, trial = job
    seed = cfg.seed + trial
    board = gen_gnp(n, c / n, seed)
    table = build_rank_table(board, cfg.b) if any(x.startswith("sb") for x in cfg.breaker) else None
    rows = []
    for mname, bname in product(cfg.maker, cfg.breaker):
        t0 = time.perf_counter()
        maker = make_maker(mname, board, cfg.b, seed, cfg)
        breaker = make_breaker(bname, board, cfg.b, seed + 7919, table)
        first = default_first(mname) if cfg.first is None else (MAKER if cfg.first == "maker" else BREAKER)
        res = play(board, cfg.b, maker, breaker, first=first, seed=seed)
        info = res.info
        rows.append(
            {
                "experiment": "phase-transition",
                "n": n,
                "c": c,
                "b": cfg.b,
                "maker": mname,
                "breaker": bname,
                "first": "maker" if first == MAKER else "breaker",
                "trial": trial,
                "seed": seed,
                "N": info.get("N", ""),
                "L": info.get("L", ""),
                "d0": info.get("d0", ""),
                "degraded": info.get("degraded", ""),
                "largest_maker_component": res.largest_maker_component,
                "fraction": _fmt(res.largest_maker_component / n),
                "log3n": _fmt(math.log(n) ** 3),
                "rounds": res.rounds,
                "ledger_checks": info.get("ledger_checks", ""),
                "two_core_vertices": info.get("two_core_vertices", ""),
                "violations": len(res.invariant_violations),
                "first_violation": res.invariant_violations[0] if res.invariant_violations else "",
                "wall_time": _fmt(time.perf_counter() - t0),
            }
        )
    return rows


def run_phase_transition(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(cfg, n, c, t) for n in cfg.n for c in cfg.c for t in range(cfg.trials)]
    return [row for rows in _map(cfg, _game_trial, jobs) for row in rows]


# -- peeling experiments -----------------------------------------------------


def _require_subcritical(k: int, c: float) -> None:
    ck = nm.solve_ck(k)
    if c >= ck:
        raise ConfigError(f"c={c} is not below c_{k}={ck:.4f}; shattering and stabilization need c < c_k")


def _shatter_trial(job) -> dict:
    cfg, n, c, trial, t_dag = job
    k = cfg.kk
    seed = cfg.seed + trial
    t0 = time.perf_counter()
    g = gen_gnp(n, c / n, seed)
    trace = peel(g, k, stats=True)
    stats = trace.per_iteration
    initial = stats[0].largest_component
    if t_dag < len(stats):
        at = stats[t_dag].largest_component
    else:
        at = largest_component_at(g, trace.ranks, t_dag)
    return {
        "experiment": "shattering",
        "n": n,
        "c": c,
        "k": k,
        "trial": trial,
        "seed": seed,
        "t_dagger": t_dag,
        "largest_initial": initial,
        "largest_at_t_dagger": at,
        "log3n": _fmt(math.log(n) ** 3),
        "ratio": _fmt(at / initial if initial else 0.0),
        "T_star": trace.t_star,
        "wall_time": _fmt(time.perf_counter() - t0),
    }


def run_shattering(cfg: ExperimentConfig) -> list[dict]:
    k = cfg.kk
    for c in cfg.c:
        _require_subcritical(k, c)
    tds = {c: nm.find_t_dagger(k, c) for c in cfg.c}
    jobs = [(cfg, n, c, t, tds[c]) for n in cfg.n for c in cfg.c for t in range(cfg.trials)]
    return _map(cfg, _shatter_trial, jobs)


def stabilization_bound(n: int, k: int) -> float:
    return math.log(math.log(n), k - 1) + 10.0


def _stab_trial(job) -> dict:
    cfg, n, c, trial, t_dag = job
    k = cfg.kk
    seed = cfg.seed + trial
    t0 = time.perf_counter()
    trace = peel(gen_gnp(n, c / n, seed), k, stats=False)
    bound = stabilization_bound(n, k)
    return {
        "experiment": "stabilization",
        "n": n,
        "c": c,
        "k": k,
        "trial": trial,
        "seed": seed,
        "t_dagger": t_dag,
        "T_star": trace.t_star,
        "bound": _fmt(bound),
        "within_bound": trace.t_star <= bound,
        "wall_time": _fmt(time.perf_counter() - t0),
    }


def run_stabilization(cfg: ExperimentConfig) -> list[dict]:
    k = cfg.kk
    for c in cfg.c:
        _require_subcritical(k, c)
    tds = {c: nm.find_t_dagger(k, c) for c in cfg.c}
    jobs = [(cfg, n, c, t, tds[c]) for n in cfg.n for c in cfg.c for t in range(cfg.trials)]
    return _map(cfg, _stab_trial, jobs)


def _hist_trial(job) -> list[dict]:
    cfg, n, c, trial = job
    k = cfg.kk
    seed = cfg.seed + trial
    t0 = time.perf_counter()
    g = gen_gnp(n, c / n, seed)
    rows = []
    for t in cfg.t:
        emp = degree_histogram_at(g, k, t)
        pred = nm.predicted_histogram(k, c, t).fractions()
        for j in sorted(set(pred) | set(emp)):
            p = pred.get(j, 0.0)
            e = emp.get(j, 0.0)
            rows.append(
                {
                    "experiment": "histogram",
                    "n": n,
                    "c": c,
                    "k": k,
                    "trial": trial,
                    "seed": seed,
                    "t": t,
                    "j": j,
                    "empirical": _fmt(e),
                    "predicted": _fmt(p),
                    "rel_error": _fmt(abs(e - p) / p) if p > 0 else "",
                    "wall_time": _fmt(time.perf_counter() - t0),
                }
            )
    return rows


def degree_histogram_at(g, k: int, t: int) -> dict[int, float]:
    deg = peel_degrees_at(g, k, t)
    counts = np.bincount(deg)
    return {j: cnt / g.n for j, cnt in enumerate(counts.tolist()) if cnt}


def run_histogram(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(cfg, n, c, t) for n in cfg.n for c in cfg.c for t in range(cfg.trials)]
    return [row for rows in _map(cfg, _hist_trial, jobs) for row in rows]


def _core_trial(job) -> dict:
    cfg, n, c, trial, consts = job
    k = cfg.kk
    seed = cfg.seed + trial
    t0 = time.perf_counter()
    g = gen_gnp(n, c / n, seed)
    core = k_core(g, k)
    hist = degree_histogram(core.core).fractions()
    row = {
        "experiment": "core",
        "n": n,
        "c": c,
        "k": k,
        "trial": trial,
        "seed": seed,
        "nhat": core.nhat,
        "nhat_predicted": _fmt(consts.nhat_frac * n),
        "mhat": core.mhat,
        "mhat_predicted": _fmt(consts.mhat_frac * n),
    }
    for j in range(k, k + 4):
        row[f"frac_{j}"] = _fmt(hist.get(j, 0.0))
        row[f"frac_{j}_predicted"] = _fmt(nm.truncated_poisson_pmf(k, consts.mu_c, j))
    row["wall_time"] = _fmt(time.perf_counter() - t0)
    return row


def run_core_stats(cfg: ExperimentConfig) -> list[dict]:
    k = cfg.kk
    consts = {c: nm.core_constants(k, c) for c in cfg.c}
    jobs = [(cfg, n, c, t, consts[c]) for n in cfg.n for c in cfg.c for t in range(cfg.trials)]
    return _map(cfg, _core_trial, jobs)


# -- numeric identity suite --------------------------------------------------

KNOWN_CK = {3: 3.351, 4: 5.149, 5: 6.799, 6: 8.365}


def min_atom_bound_holds(k: int, c: float, delta_shift: float = 0.0) -> bool:
    """P[Z_{k-1}(mu_c) = k-1] < (1 - 2 delta)/(k-1)."""
    delta = nm.lemma_delta(k, c) + delta_shift
    mu = nm.solve_mu_c(k, c)
    return nm.truncated_poisson_pmf(k - 1, mu, k - 1) < (1.0 - 2.0 * delta) / (k - 1)


def min_atom_grid(points: int = 12) -> list[tuple[int, float]]:
    grid = []
    for k in range(3, 11):
        ck = nm.solve_ck(k)
        for i in range(1, points + 1):
            grid.append((k, ck + (2.0 * ck) * i / points))
    return grid


def run_identity_suite(seed: int = 0, points: int = 200, delta_shift: float = 0.0) -> list[dict]:
    """Numeric identities and inequalities; one row per check with pass/fail."""
    rng = random.Random(seed)
    rows = []

    def record(name, ok, detail):
        rows.append({"check": name, "passed": bool(ok), "detail": detail})

    worst = max(abs(nm.solve_ck(k) - v) for k, v in KNOWN_CK.items())
    record("ck_table", worst <= 1e-3, f"max |c_k - table| = {worst:.2e}")

    worst_conv = 0.0
    for _ in range(points):
        mu = rng.uniform(0.0, 20.0)
        lam = rng.uniform(0.0, mu)
        k = rng.randint(0, 12)
        ell = rng.randint(0, k)
        lhs, rhs = nm.poisson_convolution_check(lam, mu, k, ell)
        # lambda^ell reaches ~1e10 on this grid; compare at the scale of the values
        worst_conv = max(worst_conv, abs(lhs - rhs) / max(1.0, abs(rhs)))
    record("poisson_convolution", worst_conv <= 1e-10, f"max scaled |lhs - rhs| = {worst_conv:.2e}")

    worst_obs = 0.0
    for _ in range(points):
        lam = rng.uniform(0.0, 30.0)
        ell = rng.randint(0, 6)
        j = rng.randint(ell, ell + 40)
        lhs = nm.falling(j, ell) * nm.psi(j, lam)
        rhs = lam**ell * nm.psi(j - ell, lam)
        worst_obs = max(worst_obs, abs(lhs - rhs) / max(1.0, abs(rhs)))
    record("poisson_falling_factorial", worst_obs <= 1e-10, f"max rel diff = {worst_obs:.2e}")

    fails = [(k, c) for k, c in min_atom_grid() if not min_atom_bound_holds(k, c, delta_shift)]
    record("min_atom_bound", not fails, f"{len(fails)} failing grid points" + (f", first {fails[0]}" if fails else ""))

    worst_f = max(abs(nm.f_func(k, nm.solve_mu_ck(k)) - (k - 1)) for k in range(3, 11))
    record("zero_derivative", worst_f <= 1e-6, f"max |F(mu_ck) - (k-1)| = {worst_f:.2e}")

    worst_h = 0.0
    for k in range(3, 8):
        ck = nm.solve_ck(k)
        for c in (ck + 0.1, ck + 1.0, 2 * ck):
            worst_h = max(worst_h, abs(nm.h_func(k, nm.solve_mu_c(k, c)) - c))
    record("h_at_mu_c", worst_h <= 1e-8, f"max |h(mu_c) - c| = {worst_h:.2e}")

    worst_m = 0.0
    for _ in range(20):
        k = rng.randint(3, 6)
        c = rng.uniform(1.0, 10.0)
        t = rng.randint(1, 6)
        hp = nm.predicted_histogram(k, c, t)
        prof = nm.beta_sequence(k, c, t)
        bt, bt1 = prof.betas[t], prof.betas[t - 1]
        m1 = sum(j * p for j, p in hp.entries.items())
        m2 = sum(j * (j - 1) * p for j, p in hp.entries.items())
        worst_m = max(worst_m, abs(m1 - c * bt * bt), abs(m2 - (c * bt) ** 2 * nm.psi_ge(k - 2, c * bt1)))
    record("histogram_moments", worst_m <= 1e-9, f"max moment error = {worst_m:.2e}")
    return rows


EXPERIMENTS = {
    "phase-transition": run_phase_transition,
    "shattering": run_shattering,
    "stabilization": run_stabilization,
    "histogram": run_histogram,
    "core": run_core_stats,
}


def violation_count(rows: list[dict]) -> int:
    total = 0
    for r in rows:
        v = r.get("violations", 0)
        total += int(v) if v != "" else 0
        if r.get("passed") is False:
            total += 1
    return total
