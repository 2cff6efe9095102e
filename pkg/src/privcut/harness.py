"""Trial orchestration, error statistics, and the empirical privacy auditor.

Determinism contract: every trial's randomness derives from
(master seed, instance index, trial index), so results are independent of
worker count and execution order, and report files are byte-identical
across reruns of the same configuration (volatile timing fields are kept
out of the serialized artifacts by default).
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from collections import Counter
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np
from scipy.stats import beta as beta_dist

from . import instances, kcut, multiway, oracles, shifting
from .dp import RandomSource
from .errors import CapabilityError
from .graphs import Graph, Partition, TerminalSet, apply_delta, cut_cost

CI_ALPHA = 0.01  # Clopper-Pearson at 99%
COUNT_FLOOR = 20


# ---------------------------------------------------------------------------
# mechanism registry

@dataclass(frozen=True)
class Mechanism:
    """A registered mechanism: how to run it, its oracle, and its budget."""

    name: str
    run: callable        # (g, extras, params, rng) -> Partition
    opt: callable | None  # (g, extras, params) -> float, or None
    budget: callable      # (g, params) -> (epsilon, delta)
    direction: str = "minimize"


def _terminal_pair(extras, params):
    if "s" in params and "t" in params:
        return int(params["s"]), int(params["t"])
    terms = extras.get("terminals")
    if isinstance(terms, TerminalSet) and terms.kind == "st":
        return terms.pairs[0]
    raise ValueError("mechanism needs s and t terminals")


def _terminal_pairs(extras, params):
    if "pairs" in params:
        return [(int(s), int(t)) for s, t in params["pairs"]]
    terms = extras.get("terminals")
    if isinstance(terms, TerminalSet) and terms.kind == "pairs":
        return list(terms.pairs)
    raise ValueError("mechanism needs terminal pairs")


def _multiway_terminals(extras, params):
    if "terminals" in params:
        return TerminalSet.multiway(params["terminals"])
    terms = extras.get("terminals")
    if isinstance(terms, TerminalSet) and terms.kind == "multiway":
        return terms
    raise ValueError("mechanism needs multiway terminals")


MECHANISMS: dict = {}


def register(mech: Mechanism):
    MECHANISMS[mech.name] = mech
    return mech


register(Mechanism(
    "min-st-cut",
    lambda g, ex, p, rng: shifting.private_min_st_cut(
        g, *_terminal_pair(ex, p), p["epsilon"], rng, p.get("lift_c")),
    lambda g, ex, p: oracles.exact_min_st_cut(g, *_terminal_pair(ex, p))[1],
    lambda g, p: (p["epsilon"], 0.0),
))

register(Mechanism(
    "multicut",
    lambda g, ex, p, rng: shifting.private_multicut(
        g, _terminal_pairs(ex, p), p["epsilon"], rng, p.get("lift_c")),
    lambda g, ex, p: oracles.exact_multicut(g, _terminal_pairs(ex, p))[1],
    lambda g, p: (p["epsilon"], 0.0),
))

register(Mechanism(
    "max-cut",
    lambda g, ex, p, rng: shifting.private_max_cut(g, p["epsilon"], rng, p.get("lift_c")),
    lambda g, ex, p: oracles.exact_max_cut(g)[1],
    lambda g, p: (p["epsilon"], 0.0),
    direction="maximize",
))

register(Mechanism(
    "multiway",
    lambda g, ex, p, rng: multiway.private_multiway_cut(
        g, _multiway_terminals(ex, p), p["epsilon"], rng),
    lambda g, ex, p: oracles.exact_multiway_cut(g, _multiway_terminals(ex, p))[1],
    lambda g, p: (p["epsilon"], 0.0),
))

register(Mechanism(
    "kcut-exponential",
    lambda g, ex, p, rng: kcut.private_kcut_exponential(g, p["k"], p["epsilon"], rng),
    lambda g, ex, p: oracles.exact_min_kcut(g, p["k"])[1],
    lambda g, p: (2.0 * p["epsilon"], 0.0),
))

register(Mechanism(
    "kcut-exponential-restricted",
    lambda g, ex, p, rng: kcut.private_kcut_exponential(
        g, p["k"], p["epsilon"], rng, mode="restricted",
        catalog_method=p.get("catalog_method", "exhaustive")),
    lambda g, ex, p: oracles.exact_min_kcut(g, p["k"])[1],
    lambda g, p: (2.0 * p["epsilon"], 1.0 / g.n ** 2),
))

register(Mechanism(
    "min-cut",
    lambda g, ex, p, rng: kcut.private_min_cut(g, p["epsilon"], p.get("delta", 0.0), rng),
    lambda g, ex, p: oracles.global_min_cut_value(g),
    lambda g, p: (p["epsilon"], 0.0),
))

register(Mechanism(
    "split-kcut",
    lambda g, ex, p, rng: kcut.private_split_kcut(g, p["k"], p["epsilon"], p["delta"], rng),
    lambda g, ex, p: oracles.exact_min_kcut(g, p["k"])[1],
    lambda g, p: tuple(
        (lambda b: (b.epsilon, b.delta))(kcut.split_ledger(p["k"], p["epsilon"], p["delta"]).total())
    ),
))

# non-private controls for audit soundness
register(Mechanism(
    "argmin-min-cut",
    lambda g, ex, p, rng: kcut.split_kcut_noiseless(g, 2)[0],
    lambda g, ex, p: oracles.global_min_cut_value(g),
    lambda g, p: (float("inf"), 0.0),
))

register(Mechanism(
    "constant",
    lambda g, ex, p, rng: Partition(np.zeros(g.n, dtype=np.int64), 1),
    None,
    lambda g, p: (0.0, 0.0),
))


# ---------------------------------------------------------------------------
# trial reports

@dataclass
class TrialReport:
    instance: str
    mechanism: str
    params: dict
    instance_index: int
    trial: int
    labels: list | None
    cost: float | None
    opt: float | None
    additive_error: float | None
    ratio: float | None
    epsilon: float
    delta: float
    wall_time: float = 0.0
    error: str = ""

    def row(self, include_timing: bool = False) -> dict:
        out = {
            "instance": self.instance,
            "mechanism": self.mechanism,
            "instance_index": self.instance_index,
            "trial": self.trial,
            "cost": self.cost,
            "opt": self.opt,
            "additive_error": self.additive_error,
            "ratio": self.ratio,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "error": self.error,
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out


CSV_COLUMNS = [
    "instance", "mechanism", "instance_index", "trial", "cost", "opt",
    "additive_error", "ratio", "epsilon", "delta", "error",
]


def _run_one_trial(mech: Mechanism, g: Graph, extras: dict, params: dict,
                   name: str, instance_index: int, trial: int, master_seed: int,
                   opt: float | None) -> TrialReport:
    rng = RandomSource(master_seed).derive(instance_index, trial)
    eps, delta = mech.budget(g, params)
    started = time.perf_counter()
    try:
        part = mech.run(g, extras, params, rng)
    except CapabilityError as exc:
        return TrialReport(name, mech.name, params, instance_index, trial, None,
                           None, opt, None, None, eps, delta,
                           time.perf_counter() - started, f"capability: {exc}")
    except Exception as exc:  # recorded, not fatal
        return TrialReport(name, mech.name, params, instance_index, trial, None,
                           None, opt, None, None, eps, delta,
                           time.perf_counter() - started, f"{type(exc).__name__}: {exc}")
    cost = cut_cost(g, part)
    add_err = ratio = None
    if opt is not None:
        add_err = cost - opt if mech.direction == "minimize" else opt - cost
        ratio = cost / opt if opt > 0 else None
    return TrialReport(name, mech.name, params, instance_index, trial,
                       part.labels.tolist(), cost, opt, add_err, ratio,
                       eps, delta, time.perf_counter() - started)


def run_trials(
    mechanism: str,
    instance_list,
    trials: int,
    params: dict,
    master_seed: int = 0,
    workers: int = 1,
) -> list:
    """Run ``trials`` seeded trials of a registered mechanism per instance.

    ``instance_list`` entries are (name, Graph, extras) triples or
    InstanceSpec objects.  Per-trial failures are recorded in the report,
    never fatal.  Output order is (instance, trial), independent of
    workers.
    """
    mech = MECHANISMS[mechanism]
    resolved = []
    for item in instance_list:
        if isinstance(item, instances.InstanceSpec):
            g, extras = instances.generate(item)
            resolved.append((item.to_json(), g, extras))
        else:
            resolved.append(item)

    jobs = []
    for idx, (name, g, extras) in enumerate(resolved):
        opt = None
        if mech.opt is not None:
            try:
                opt = float(mech.opt(g, extras, params))
            except CapabilityError:
                opt = None
        for trial in range(trials):
            jobs.append((idx, trial, name, g, extras, opt))

    if workers <= 1 or len(jobs) <= 1:
        reports = [
            _run_one_trial(mech, g, extras, params, name, idx, trial, master_seed, opt)
            for idx, trial, name, g, extras, opt in jobs
        ]
    else:
        ctx = get_context("fork")
        args = [(mechanism, params, name, g.n, g.weights.tolist(),
                 _pickle_extras(extras), idx, trial, master_seed, opt)
                for idx, trial, name, g, extras, opt in jobs]
        with ctx.Pool(workers) as pool:
            reports = pool.map(_trial_worker, args, chunksize=max(1, len(args) // (workers * 4)))
    reports.sort(key=lambda r: (r.instance_index, r.trial))
    return reports


def _pickle_extras(extras: dict) -> dict:
    out = dict(extras)
    terms = out.get("terminals")
    if isinstance(terms, TerminalSet):
        out["terminals"] = ("__terminalset__", terms.kind, terms.terminals, terms.pairs)
    return out


def _unpickle_extras(extras: dict) -> dict:
    out = dict(extras)
    terms = out.get("terminals")
    if isinstance(terms, tuple) and terms and terms[0] == "__terminalset__":
        out["terminals"] = TerminalSet(terms[1], terminals=terms[2], pairs=terms[3])
    return out


def _trial_worker(args):
    (mechanism, params, name, n, weights, extras, idx, trial, master_seed, opt) = args
    mech = MECHANISMS[mechanism]
    g = Graph(n, np.asarray(weights))
    return _run_one_trial(mech, g, _unpickle_extras(extras), params, name, idx,
                          trial, master_seed, opt)


def write_reports(reports, out_dir, fmt: str = "csv", include_timing: bool = False,
                  basename: str = "reports"):
    """Write reports as CSV and/or JSON lines; refuses to overwrite
    existing artifacts (reports are append-only across runs)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if fmt in ("csv", "both"):
        path = os.path.join(out_dir, basename + ".csv")
        _refuse_overwrite(path)
        with open(path, "w", newline="") as fh:
            cols = CSV_COLUMNS + (["wall_time"] if include_timing else [])
            writer = csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            for r in reports:
                writer.writerow(r.row(include_timing))
        paths.append(path)
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, basename + ".jsonl")
        _refuse_overwrite(path)
        with open(path, "w") as fh:
            for r in reports:
                row = r.row(include_timing)
                row["labels"] = r.labels
                fh.write(json.dumps(row) + "\n")
        paths.append(path)
    return paths


def _refuse_overwrite(path):
    if os.path.exists(path):
        raise FileExistsError(f"{path} exists; reports are append-only, pick a fresh directory")


# ---------------------------------------------------------------------------
# privacy auditor

@dataclass
class AuditReport:
    """Outcome of an empirical epsilon-ratio audit on one neighbor pair.

    An audit can only refute privacy: PASS means no output's 99%
    Clopper-Pearson interval certifies a log-ratio above epsilon; a FAIL
    is a certified violation.
    """

    neighbor: str
    epsilon: float
    trials: int
    max_log_ratio: float
    certified_log_ratio: float
    passed: bool
    unresolved_mass: float
    count_floor: int
    n_outputs: int
    ci_method: str = "clopper-pearson-99"
    per_output: list = field(default_factory=list)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} max-log-ratio {self.max_log_ratio:.3f} "
            f"(certified {self.certified_log_ratio:.3f}, eps {self.epsilon:g}, "
            f"{self.trials} trials, unresolved mass {self.unresolved_mass:.4f})"
        )


def _cp_interval(k: int, n: int):
    lo = 0.0 if k == 0 else float(beta_dist.ppf(CI_ALPHA / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - CI_ALPHA / 2, k + 1, n - k))
    return lo, hi


def _audit_worker(args):
    (mechanism, params, n, weights, extras, start, count, master_seed, side) = args
    mech = MECHANISMS[mechanism]
    g = Graph(n, np.asarray(weights))
    extras = _unpickle_extras(extras)
    hist: Counter = Counter()
    for trial in range(start, start + count):
        rng = RandomSource(master_seed).derive(side, trial)
        part = mech.run(g, extras, params, rng)
        hist[part.key()] += 1
    return hist


def audit_privacy(
    mechanism: str,
    g: Graph,
    delta_edge,
    epsilon: float,
    trials: int,
    params: dict | None = None,
    extras: dict | None = None,
    master_seed: int = 0,
    workers: int = 1,
    count_floor: int = COUNT_FLOOR,
    max_outputs: int = 200_000,
) -> AuditReport:
    """Empirical epsilon-ratio audit of a registered mechanism.

    Runs the mechanism ``trials`` times on g and on its neighbor, then
    histograms canonical partition labelings (so equivalent partitions
    collide) and compares per-output frequencies against e^epsilon.
    Outputs with fewer than ``count_floor`` observations on either side
    contribute to the unresolved mass instead of the ratio.
    """
    params = dict(params or {})
    extras = extras or {}
    g2 = apply_delta(g, delta_edge)
    hists = []
    for side, graph in enumerate((g, g2)):
        if workers <= 1:
            hist = _audit_worker((mechanism, params, graph.n, graph.weights.tolist(),
                                  _pickle_extras(extras), 0, trials, master_seed, side))
        else:
            ctx = get_context("fork")
            chunk = (trials + workers - 1) // workers
            args = [
                (mechanism, params, graph.n, graph.weights.tolist(),
                 _pickle_extras(extras), start, min(chunk, trials - start), master_seed, side)
                for start in range(0, trials, chunk)
            ]
            with ctx.Pool(workers) as pool:
                parts = pool.map(_audit_worker, args)
            hist = Counter()
            for p in parts:
                hist.update(p)
        hists.append(hist)

    h1, h2 = hists
    keys = set(h1) | set(h2)
    if len(keys) > max_outputs:
        raise CapabilityError(f"output space too large to histogram ({len(keys)} keys)")
    max_ratio = 0.0
    certified = 0.0
    unresolved = 0.0
    per_output = []
    for key in sorted(keys):
        c1, c2 = h1.get(key, 0), h2.get(key, 0)
        if min(c1, c2) < count_floor and not (max(c1, c2) >= count_floor):
            unresolved += (c1 + c2) / (2.0 * trials)
            continue
        if min(c1, c2) < count_floor:
            # heavy on one side only: still check for a certified violation
            lo1, hi1 = _cp_interval(c1, trials)
            lo2, hi2 = _cp_interval(c2, trials)
            cert = max(_safe_log_ratio(lo1, hi2), _safe_log_ratio(lo2, hi1))
            certified = max(certified, cert)
            unresolved += (c1 + c2) / (2.0 * trials)
            continue
        p1, p2 = c1 / trials, c2 / trials
        point = abs(np.log(p1 / p2))
        lo1, hi1 = _cp_interval(c1, trials)
        lo2, hi2 = _cp_interval(c2, trials)
        cert = max(_safe_log_ratio(lo1, hi2), _safe_log_ratio(lo2, hi1))
        max_ratio = max(max_ratio, point)
        certified = max(certified, cert)
        per_output.append({"key": key.hex(), "count_g": c1, "count_g2": c2,
                           "log_ratio": point, "certified": cert})
    passed = certified <= epsilon
    return AuditReport(
        neighbor=f"pair {delta_edge.pair} amount {delta_edge.amount:+g}",
        epsilon=epsilon,
        trials=trials,
        max_log_ratio=max_ratio,
        certified_log_ratio=certified,
        passed=passed,
        unresolved_mass=unresolved,
        count_floor=count_floor,
        n_outputs=len(keys),
        per_output=per_output,
    )


def _safe_log_ratio(lo: float, hi: float) -> float:
    if lo <= 0.0:
        return 0.0
    if hi <= 0.0:
        return float("inf")
    return float(np.log(lo / hi))


def audit_privacy_exact(dist_fn, g: Graph, delta_edge, epsilon: float) -> AuditReport:
    """Audit from exact output distributions (no sampling error).

    ``dist_fn(graph)`` returns (labelings, probabilities).  The reported
    max log ratio is exact, so PASS/FAIL is sharp up to 1e-9.
    """
    g2 = apply_delta(g, delta_edge)
    dists = []
    for graph in (g, g2):
        labs, probs = dist_fn(graph)
        keyed = {}
        for row, p in zip(np.asarray(labs), probs):
            key = Partition(row.astype(np.int64), int(row.max()) + 1).key()
            keyed[key] = keyed.get(key, 0.0) + float(p)
        dists.append(keyed)
    d1, d2 = dists
    keys = set(d1) | set(d2)
    worst = 0.0
    for key in keys:
        p, q = d1.get(key, 0.0), d2.get(key, 0.0)
        if p <= 0.0 and q <= 0.0:
            continue
        if p <= 0.0 or q <= 0.0:
            worst = float("inf")
            break
        worst = max(worst, abs(float(np.log(p / q))))
    passed = worst <= epsilon + 1e-9
    return AuditReport(
        neighbor=f"pair {delta_edge.pair} amount {delta_edge.amount:+g}",
        epsilon=epsilon,
        trials=0,
        max_log_ratio=worst,
        certified_log_ratio=worst,
        passed=passed,
        unresolved_mass=0.0,
        count_floor=0,
        n_outputs=len(keys),
        ci_method="exact-distribution",
    )


# ---------------------------------------------------------------------------
# error curves

def error_curve(
    mechanism: str,
    base_spec: instances.InstanceSpec,
    sweep_param: str,
    values,
    trials: int,
    params: dict,
    master_seed: int = 0,
    theory=None,
    workers: int = 1,
) -> list:
    """Mean/quantile additive error along a parameter sweep, with the
    theory curve evaluated alongside when provided.

    ``sweep_param`` starting with "instance." varies the instance family
    parameters; anything else varies the mechanism parameters.
    """
    rows = []
    for vi, value in enumerate(values):
        spec = base_spec
        mech_params = dict(params)
        if sweep_param.startswith("instance."):
            key = sweep_param.split(".", 1)[1]
            spec = instances.InstanceSpec(
                base_spec.family, {**base_spec.params, key: value}, base_spec.seed
            )
        else:
            mech_params[sweep_param] = value
        reports = run_trials(mechanism, [spec], trials, mech_params,
                             master_seed=master_seed + vi, workers=workers)
        errs = np.array([r.additive_error for r in reports if r.additive_error is not None])
        row = {
            sweep_param: value,
            "trials": int(errs.size),
            "mean_error": float(errs.mean()) if errs.size else None,
            "median_error": float(np.median(errs)) if errs.size else None,
            "q90_error": float(np.quantile(errs, 0.9)) if errs.size else None,
        }
        if theory is not None:
            g, _ = instances.generate(spec)
            row["theory"] = float(theory(g, mech_params))
        rows.append(row)
    return rows
