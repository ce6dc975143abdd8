"""Monte Carlo risk of the Neyman-Pearson test, and a naive structure-learning detector.

The simulated problem is the one-sided reduction: a reference dataset is
known to come from P, and the test decides whether an ``n``-sample dataset
came from P (H0) or from an alternative drawn uniformly from Q (H1).

The optimal threshold is picked on the same draws that score it, which biases
the reported optimum downward by roughly ``sqrt(log(trials) / trials)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from mrfcd._rng import make_rng, map_chunks
from mrfcd.ensembles import ChangeEnsemble
from mrfcd.errors import EnumerationCapError, ValidationError
from mrfcd.ising import IsingModel, log_prob_table
from mrfcd.lecam import (
    chi2_gaussian_single_edge_exact,
    chi2_ising_clique_exact,
    chi2_ising_single_edge,
    chi2_lift,
    null_sampler,
    risk_lower_bound,
)
from mrfcd.likelihood import log_lr
from mrfcd.samples import as_array

ML_MAX_P = 5
CSV_FIELDS = ("kind", "p", "d", "lambda", "n", "trials", "seed", "risk", "se", "lower_bound", "log_tau_opt")

_NULL_STREAM = 11
_ALT_STREAM = 12
_REF_STREAM = 13


@dataclass
class RiskReport:
    kind: str
    p: int
    d: int | None
    lam: float
    n: int
    trials: int
    seed: int
    empirical_optimal_risk: float
    mc_std_error: float
    theoretical_lower_bound: float
    threshold_at_optimum: float
    curve: list[tuple[float, float, float]] = field(default_factory=list, repr=False)

    def csv_row(self) -> list[str]:
        return [
            self.kind, str(self.p), "" if self.d is None else str(self.d), _fmt(self.lam), str(self.n),
            str(self.trials), str(self.seed), _fmt(self.empirical_optimal_risk), _fmt(self.mc_std_error),
            _fmt(self.theoretical_lower_bound), _fmt(self.threshold_at_optimum),
        ]

    @classmethod
    def from_csv_row(cls, row: dict) -> "RiskReport":
        return cls(
            kind=row["kind"], p=int(row["p"]), d=int(row["d"]) if row["d"] else None,
            lam=float(row["lambda"]), n=int(row["n"]), trials=int(row["trials"]), seed=int(row["seed"]),
            empirical_optimal_risk=float(row["risk"]), mc_std_error=float(row["se"]),
            theoretical_lower_bound=float(row["lower_bound"]), threshold_at_optimum=float(row["log_tau_opt"]),
        )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def reports_from_csv(text: str) -> list[RiskReport]:
    return [RiskReport.from_csv_row(row) for row in csv.DictReader(io.StringIO(text))]


def optimal_threshold(null_lr: np.ndarray, alt_lr: np.ndarray):
    """Minimise ``P0(L >= tau) + P1(L < tau)`` over tau in the observed values and +-inf.

    Returns ``(risk, log_tau, typeI, typeII, curve)``; ties go to the smallest tau.
    """
    null_lr = np.sort(np.asarray(null_lr, dtype=np.float64))
    alt_lr = np.sort(np.asarray(alt_lr, dtype=np.float64))
    taus = np.unique(np.concatenate([[-np.inf], null_lr, alt_lr, [np.inf]]))
    type1 = 1.0 - np.searchsorted(null_lr, taus, side="left") / len(null_lr)
    type2 = np.searchsorted(alt_lr, taus, side="left") / len(alt_lr)
    total = type1 + type2
    k = int(np.argmin(total))
    curve = list(zip(taus.tolist(), type1.tolist(), type2.tolist()))
    return float(total[k]), float(taus[k]), float(type1[k]), float(type2[k]), curve


def exact_lower_bound(e: ChangeEnsemble, n: int) -> float:
    """Le Cam risk bound from the exact second moment of the built-in ensembles (floored at 0)."""
    lam = e.params.get("lambda")
    if e.kind == "ising-single-edge":
        chi2 = chi2_ising_single_edge(n, e.p, lam)
    elif e.kind == "ising-clique":
        chi2 = chi2_lift(chi2_ising_clique_exact(n, e.params["d"], lam), e.p, e.params["d"])
    elif e.kind == "gaussian-single-edge":
        chi2 = chi2_gaussian_single_edge_exact(n, e.p, lam)
    else:
        from mrfcd.lecam import chi2_exact

        chi2 = chi2_exact(e, n)
    return max(risk_lower_bound(chi2), 0.0)


def _draw_alternatives(e: ChangeEnsemble, draw, picks: np.ndarray, n: int, rng) -> np.ndarray:
    out = np.empty((len(picks), n, e.p), dtype=np.int8 if e.is_ising else np.float64)
    for k in np.unique(picks):
        rows = np.flatnonzero(picks == k)
        out[rows] = draw(e.alternatives[k], len(rows) * n, rng).reshape(len(rows), n, e.p)
    return out


def _simulate_lrs(e: ChangeEnsemble, n: int, trials: int, seed: int, key: tuple, threads):
    draw = null_sampler(e)

    def run(c, lo, hi):
        m = hi - lo
        rng0 = make_rng(seed, *key, _NULL_STREAM, c)
        rng1 = make_rng(seed, *key, _ALT_STREAM, c)
        x0 = draw(e.null_model, m * n, rng0).reshape(m, n, e.p)
        picks = rng1.integers(0, len(e), size=m)
        x1 = _draw_alternatives(e, draw, picks, n, rng1)
        return np.asarray(log_lr(e, x0)), np.asarray(log_lr(e, x1))

    parts = map_chunks(run, trials, threads)
    return np.concatenate([a for a, _ in parts]), np.concatenate([b for _, b in parts])


def simulate_risk(e: ChangeEnsemble, n: int, trials: int, seed: int, threads: int | None = None,
                  *, _key: tuple = ()) -> RiskReport:
    """Empirical optimal average risk of the likelihood-ratio test at sample size ``n``."""
    if trials < 100:
        raise ValidationError("simulate_risk needs at least 100 trials")
    if n < 0:
        raise ValidationError("n must be non-negative")
    null_lr, alt_lr = _simulate_lrs(e, n, trials, seed, _key, threads)
    risk, tau, t1, t2, curve = optimal_threshold(null_lr, alt_lr)
    se = math.sqrt(t1 * (1 - t1) / trials + t2 * (1 - t2) / trials)
    return RiskReport(
        kind=e.kind, p=e.p, d=e.params.get("d"), lam=float(e.params.get("lambda", float("nan"))), n=n,
        trials=trials, seed=seed, empirical_optimal_risk=risk, mc_std_error=se,
        theoretical_lower_bound=exact_lower_bound(e, n), threshold_at_optimum=tau, curve=curve,
    )


def isotonic_decreasing(values) -> list[float]:
    """Least-squares nonincreasing fit (pool adjacent violators)."""
    blocks: list[list[float]] = []  # [mean, weight]
    for v in values:
        blocks.append([float(v), 1.0])
        while len(blocks) > 1 and blocks[-2][0] < blocks[-1][0]:
            m2, w2 = blocks.pop()
            m1, w1 = blocks.pop()
            blocks.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2])
    out = []
    for m, w in blocks:
        out += [m] * int(w)
    return out


def risk_vs_n_sweep(e: ChangeEnsemble, n_list, trials: int, seed: int, threads: int | None = None):
    """``simulate_risk`` at each n (stream keyed by position); returns (reports, smoothed risks)."""
    reports = [simulate_risk(e, int(n), trials, seed, threads, _key=(k,)) for k, n in enumerate(n_list)]
    smoothed = isotonic_decreasing([r.empirical_optimal_risk for r in reports])
    return reports, smoothed


# --- naive structure-learning detector -------------------------------------------------


def degree_bounded_graphs(p: int, d: int) -> list[tuple[tuple[int, int], ...]]:
    """All edge sets on p nodes with max degree <= d, ordered by size then lexicographically."""
    pairs = list(combinations(range(p), 2))
    graphs = []
    for size in range(len(pairs) + 1):
        for es in combinations(pairs, size):
            deg = np.zeros(p, dtype=int)
            for i, j in es:
                deg[i] += 1
                deg[j] += 1
            if deg.max(initial=0) <= d:
                graphs.append(es)
    return graphs


@lru_cache(maxsize=16)
def _model_bank(p: int, d: int, grid: tuple[float, ...]):
    """Log-probability tables of every (graph, weight assignment) pair."""
    if p > ML_MAX_P:
        raise EnumerationCapError(f"ml_structure_detector supports p <= {ML_MAX_P}")
    graphs = degree_bounded_graphs(p, d)
    tables, owner = [], []
    for g_idx, es in enumerate(graphs):
        for ws in product(grid, repeat=len(es)):
            model = IsingModel(p, tuple((i, j, w) for (i, j), w in zip(es, ws)))
            tables.append(log_prob_table(model))
            owner.append(g_idx)
    return graphs, np.asarray(tables), np.asarray(owner)


def _state_counts(x: np.ndarray) -> np.ndarray:
    """Histogram over the 2^p spin states for each dataset in a (trials, n, p) batch."""
    p = x.shape[-1]
    idx = (((1 - x.astype(np.int64)) // 2) << np.arange(p)).sum(axis=-1)
    out = np.zeros((x.shape[0], 2**p))
    np.add.at(out, (np.repeat(np.arange(x.shape[0]), x.shape[1]), idx.ravel()), 1.0)
    return out


def ml_graph_estimates(x: np.ndarray, p: int, d: int, grid) -> np.ndarray:
    """Index into ``degree_bounded_graphs(p, d)`` of the max-likelihood graph per dataset.

    Each graph is scored by its best log-likelihood over weights from ``grid``.
    Near-ties (within 1e-9 relative) go to the earliest graph, i.e. fewer
    edges first, then lexicographic.
    """
    graphs, tables, owner = _model_bank(p, d, tuple(float(w) for w in grid))
    ll = _state_counts(x) @ tables.T
    best = np.full((x.shape[0], len(graphs)), -np.inf)
    np.maximum.at(best.T, owner, ll.T)
    top = best.max(axis=1, keepdims=True)
    near = best >= top - 1e-9 * np.maximum(1.0, np.abs(top))
    return np.argmax(near, axis=1)


def ml_structure_detector(xs1, xs2, p: int, d: int, grid) -> int:
    """1 iff the max-likelihood graphs of the two datasets differ."""
    if p > ML_MAX_P:
        raise EnumerationCapError(f"ml_structure_detector supports p <= {ML_MAX_P}")
    x1 = as_array(xs1, "spin")[None]
    x2 = as_array(xs2, "spin")[None]
    g1 = ml_graph_estimates(x1, p, d, grid)[0]
    g2 = ml_graph_estimates(x2, p, d, grid)[0]
    return int(g1 != g2)


@dataclass
class DetectorComparison:
    np_risk: float
    np_se: float
    ml_risk: float
    ml_se: float

    @property
    def se_diff(self) -> float:
        return math.hypot(self.np_se, self.ml_se)


def compare_np_ml(e: ChangeEnsemble, n: int, trials: int, seed: int, d: int, grid,
                  n_reference: int | None = None, threads: int | None = None) -> DetectorComparison:
    """Risk of the swept NP test and of the naive detector on the same datasets.

    The naive detector also sees a reference dataset from P of size
    ``n_reference`` (default n), the dataset the reduction assumes known.
    """
    if not e.is_ising:
        raise ValidationError("the naive detector is Ising-only")
    if e.p > ML_MAX_P:
        raise EnumerationCapError(f"ml_structure_detector supports p <= {ML_MAX_P}")
    n_ref = n if n_reference is None else n_reference
    draw = null_sampler(e)

    def run(c, lo, hi):
        m = hi - lo
        rng0 = make_rng(seed, _NULL_STREAM, c)
        rng1 = make_rng(seed, _ALT_STREAM, c)
        rng2 = make_rng(seed, _REF_STREAM, c)
        x0 = draw(e.null_model, m * n, rng0).reshape(m, n, e.p)
        picks = rng1.integers(0, len(e), size=m)
        x1 = _draw_alternatives(e, draw, picks, n, rng1)
        ref = draw(e.null_model, 2 * m * n_ref, rng2).reshape(2 * m, n_ref, e.p)
        g_ref = ml_graph_estimates(ref, e.p, d, grid)
        ml0 = g_ref[:m] != ml_graph_estimates(x0, e.p, d, grid)
        ml1 = g_ref[m:] != ml_graph_estimates(x1, e.p, d, grid)
        return np.asarray(log_lr(e, x0)), np.asarray(log_lr(e, x1)), ml0, ml1

    parts = map_chunks(run, trials, threads)
    l0, l1, m0, m1 = (np.concatenate(z) for z in zip(*parts))
    risk, _, t1, t2, _ = optimal_threshold(l0, l1)
    np_se = math.sqrt(t1 * (1 - t1) / trials + t2 * (1 - t2) / trials)
    a, b = m0.mean(), 1.0 - m1.mean()
    ml_se = math.sqrt(a * (1 - a) / trials + b * (1 - b) / trials)
    return DetectorComparison(risk, np_se, float(a + b), ml_se)
