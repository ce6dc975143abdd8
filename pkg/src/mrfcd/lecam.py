"""Second-moment (chi-square) formulas, Le Cam risk bounds and sample thresholds.

All logarithms are natural. ``E[L_n^2]`` is called ``chi2`` throughout (it is
one plus the chi-square divergence of the mixture from the null).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.special import logsumexp

from mrfcd._rng import concat, make_rng, map_chunks
from mrfcd.ensembles import ChangeEnsemble
from mrfcd.errors import BoundNotApplicableError, EnumerationCapError, ValidationError
from mrfcd.ising import lemma2_bound, lemma2_exact_V, lemma2_gate, log_prob_table
from mrfcd.likelihood import log_lr

JOINT_ENUM_CAP = 18
GAUSSIAN_GAMMA_MAX = 0.39

_MC_STREAM = 1


def chi2_ising_single_edge(n: int, p: int, lam: float) -> float:
    """Exact ``E_P[L_n^2] = 1 + ((1 + tanh^2 lam)^n - 1) / C(p, 2)``."""
    if p < 2 or n < 0:
        raise ValidationError("need p >= 2 and n >= 0")
    t2 = math.tanh(lam) ** 2
    return 1.0 + math.expm1(n * math.log1p(t2)) / math.comb(p, 2)


def _gaussian_check(p: int, lam: float, n: int):
    if p < 2 or n < 0:
        raise ValidationError("need p >= 2 and n >= 0")
    if abs(lam) >= 0.5:
        raise ValidationError(f"need |lam| < 1/2, got {lam}")


def chi2_gaussian_single_edge_exact(n: int, p: int, lam: float) -> float:
    """Exact ``E_P[L_n^2]`` for the Gaussian single-edge ensemble.

    Pairs of alternatives are disjoint (factor 1), share one node (factor
    ``((1-lam^2)/sqrt(1-2 lam^2))^n``) or coincide (``((1-lam^2)/sqrt(1-4 lam^2))^n``).
    """
    _gaussian_check(p, lam, n)
    l2 = lam * lam
    m = math.comb(p, 2)
    shared = math.exp(n * (math.log1p(-l2) - 0.5 * math.log1p(-2 * l2)))
    same = math.exp(n * (math.log1p(-l2) - 0.5 * math.log1p(-4 * l2)))
    return (m * math.comb(p - 2, 2) + 2 * m * (p - 2) * shared + m * same) / (m * m)


def chi2_gaussian_single_edge_bound(n: int, p: int, lam: float) -> float:
    """Upper bound ``((2p - 3) a^n + C(p-2, 2)) / C(p, 2)`` with ``a = (1-lam^2)/sqrt(1-4 lam^2)``."""
    _gaussian_check(p, lam, n)
    l2 = lam * lam
    a_n = math.exp(n * (math.log1p(-l2) - 0.5 * math.log1p(-4 * l2)))
    return ((2 * p - 3) * a_n + math.comb(p - 2, 2)) / math.comb(p, 2)


def chi2_lift(h: float, p: int, d: int) -> float:
    """Second moment of the r-block lifted ensemble given the one-block value ``h``."""
    if h < 1:
        raise ValidationError(f"h must be >= 1, got {h}")
    if d < 1 or p < d + 1:
        raise ValidationError(f"need p >= d+1, got p={p}, d={d}")
    return 1.0 + (h - 1.0) / (p // (d + 1))


def chi2_ising_clique_bound(n: int, d: int, lam: float) -> float:
    """``V^n`` with the closed-form bound on V; needs ``d >= 4`` and ``lam (d-3) >= ln d``."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    return lemma2_bound(d, lam) ** n


def chi2_ising_clique_exact(n: int, d: int, lam: float) -> float:
    """Exact one-block ``E_P[L_n^2] = V^n`` with V by enumeration."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    return lemma2_exact_V(d, lam) ** n


def risk_lower_bound(chi2: float) -> float:
    """``1 - sqrt(chi2 - 1) / 2`` (unfloored; may be negative)."""
    if chi2 < 1:
        if chi2 > 1 - 1e-12:
            chi2 = 1.0
        else:
            raise ValidationError(f"chi2 must be >= 1, got {chi2}")
    return 1.0 - 0.5 * math.sqrt(chi2 - 1.0)


def _check_delta(delta: float, mode: str) -> float:
    if not 0 <= delta <= 1:
        raise ValidationError(f"delta must lie in [0, 1], got {delta}")
    if mode == "structure-learning":
        delta = 2 * delta
        if delta > 1:
            raise ValidationError("structure-learning mode needs 2 delta <= 1")
    elif mode != "change-detection":
        raise ValidationError(f"unknown mode {mode!r}")
    return delta


def sample_threshold(kind: str, *, p: int, delta: float, alpha: float | None = None,
                     beta: float | None = None, d: int | None = None, gamma: float | None = None,
                     mode: str = "change-detection") -> float:
    """Necessary sample size: detection with risk <= delta needs min(n1, n2) above this.

    ``kind`` is ``"ising-easy"`` (needs alpha), ``"ising-clique"`` (beta, d)
    or ``"gaussian"`` (gamma). Structure-learning mode doubles delta.
    Returns ``inf`` when the rate denominator vanishes.
    """
    delta = _check_delta(delta, mode)
    slack = 4 * (1 - delta) ** 2
    if kind in ("ising-easy", "ising-single-edge"):
        if alpha is None or alpha < 0 or p < 2:
            raise ValidationError("ising-easy needs alpha >= 0 and p >= 2")
        rate = math.log1p(math.tanh(alpha) ** 2)
        return math.inf if rate == 0 else math.log1p(slack * math.comb(p, 2)) / rate
    if kind == "ising-clique":
        if beta is None or d is None:
            raise ValidationError("ising-clique needs beta and d")
        if p < d + 1:
            raise ValidationError(f"need p >= d+1, got p={p}, d={d}")
        if not lemma2_gate(d, beta):
            raise BoundNotApplicableError(f"need d >= 4 and beta(d-3) >= ln d (d={d}, beta={beta})")
        r = p // (d + 1)
        # e^{2 beta d} / (8 (e^{4 beta} + d)), evaluated in log space
        log_scale = 2 * beta * d - math.log(8.0) - math.log(math.exp(4 * beta) + d)
        return math.exp(log_scale) * math.log1p(slack * r)
    if kind in ("gaussian", "gaussian-single-edge"):
        if gamma is None or gamma < 0:
            raise ValidationError("gaussian needs gamma >= 0")
        if gamma > GAUSSIAN_GAMMA_MAX:
            raise BoundNotApplicableError(f"need gamma <= {GAUSSIAN_GAMMA_MAX}, got {gamma}")
        if gamma == 0:
            return math.inf
        return math.log1p((1 - delta) ** 2 * p) / (2 * gamma * gamma)
    raise ValidationError(f"unknown threshold kind {kind!r}")


def _joint_log_tables(e: ChangeEnsemble, n: int) -> tuple[np.ndarray, np.ndarray]:
    """log P^n and log L_n over every joint outcome of n samples."""
    if not e.is_ising:
        raise ValidationError("exact enumeration is only available for Ising ensembles")
    if n < 0:
        raise ValidationError("n must be non-negative")
    if e.p * n > JOINT_ENUM_CAP:
        raise EnumerationCapError(f"p*n = {e.p * n} exceeds the joint enumeration cap {JOINT_ENUM_CAP}")
    log_p = log_prob_table(e.null_model)

    def joint(v):
        out = np.zeros(1)
        for _ in range(n):
            out = (out[:, None] + v[None, :]).ravel()
        return out

    log_p_joint = joint(log_p)
    log_l = np.full(log_p_joint.shape, -np.inf)
    for q in e.alternatives:
        log_l = np.logaddexp(log_l, joint(log_prob_table(q) - log_p))
    return log_p_joint, log_l - math.log(len(e))


def chi2_exact(e: ChangeEnsemble, n: int) -> float:
    """``E_{P^n}[L_n^2]`` summed over all ``2^(p n)`` joint outcomes."""
    if n == 0:
        return 1.0
    log_p, log_l = _joint_log_tables(e, n)
    return float(np.exp(logsumexp(log_p + 2 * log_l)))


def tv_exact(e: ChangeEnsemble, n: int) -> float:
    """Total variation between P^n and the uniform mixture of the Q^n."""
    if n == 0:
        return 0.0
    log_p, log_l = _joint_log_tables(e, n)
    return float(0.5 * np.sum(np.exp(log_p) * np.abs(np.expm1(log_l))))


def null_sampler(e: ChangeEnsemble):
    """``draw(model, count, rng) -> (count, p)`` array for the ensemble's family."""
    if e.is_ising:
        from mrfcd.ising import sampler_for

        return lambda model, count, rng: sampler_for(model).sample(count, rng)
    from mrfcd.gaussian import draw

    return draw


def chi2_monte_carlo(e: ChangeEnsemble, n: int, trials: int, seed: int,
                     threads: int | None = None) -> tuple[float, float]:
    """Mean and standard error of ``L_n^2`` over null-sampled datasets."""
    if trials < 2:
        raise ValidationError("need at least 2 trials")
    draw = null_sampler(e)

    def run(c, lo, hi):
        rng = make_rng(seed, _MC_STREAM, c)
        m = hi - lo
        x = draw(e.null_model, m * n, rng).reshape(m, n, e.p)
        return np.exp(2 * np.asarray(log_lr(e, x)))

    vals = concat(map_chunks(run, trials, threads))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials))


@dataclass
class BoundReport:
    kind: str
    params: dict[str, Any]
    chi2: float
    risk_lower_bound: float
    risk_lower_bound_raw: float
    n_threshold: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(self.n_threshold):
            out["n_threshold"] = "inf"
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "BoundReport":
        obj = dict(obj)
        obj["n_threshold"] = float(obj["n_threshold"])
        return cls(**obj)


def bound_report(kind: str, *, p: int, delta: float, alpha=None, beta=None, d=None, gamma=None,
                 n: int | None = None, mode: str = "change-detection") -> BoundReport:
    """Threshold plus the second-moment bound and Le Cam risk bound at ``n``.

    ``n`` defaults to the largest integer below the threshold (0 when the
    threshold is infinite or below 1).
    """
    thr = sample_threshold(kind, p=p, delta=delta, alpha=alpha, beta=beta, d=d, gamma=gamma, mode=mode)
    if n is None:
        n = int(math.ceil(thr) - 1) if math.isfinite(thr) and thr >= 1 else 0
    notes = []
    if kind in ("ising-easy", "ising-single-edge"):
        chi2 = chi2_ising_single_edge(n, p, alpha)
        notes.append("chi2 is exact for the single-edge ensemble at lambda = alpha")
    elif kind == "ising-clique":
        chi2 = chi2_lift(chi2_ising_clique_bound(n, d, beta), p, d)
        notes.append("chi2 is the lifted closed-form upper bound at lambda = beta")
    else:
        chi2 = chi2_gaussian_single_edge_bound(n, p, gamma) if gamma > 0 else 1.0
        notes.append("chi2 is the closed-form upper bound at lambda = gamma")
    raw = risk_lower_bound(chi2)
    params = {"p": p, "d": d, "alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta,
              "n": n, "mode": mode}
    return BoundReport(kind, params, chi2, max(raw, 0.0), raw, thr, notes)
