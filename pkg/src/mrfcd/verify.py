"""Deterministic verification suites run by ``mrfcd verify``.

Each suite returns a list of :class:`Check`; a suite passes iff all checks do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from mrfcd.ensembles import ising_clique_ensemble, ising_single_edge_ensemble
from mrfcd.gaussian import delta_matrix, pairwise_delta_det
from mrfcd.ising import (
    IsingModel,
    clique_log_partition,
    clique_partition_ratio,
    clique_sandwich_upper,
    clipped_clique_log_partition,
    ising_log_partition,
    lemma2_bound,
    lemma2_exact_V,
)
from mrfcd.lecam import (
    JOINT_ENUM_CAP,
    chi2_exact,
    chi2_gaussian_single_edge_bound,
    chi2_gaussian_single_edge_exact,
    chi2_ising_clique_exact,
    chi2_ising_single_edge,
    chi2_lift,
    risk_lower_bound,
    tv_exact,
)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def enumerable_instances():
    """Ising ensembles and sample sizes small enough for joint enumeration."""
    for p in (2, 3, 4):
        for lam in (0.3, 0.8, 1.5):
            e = ising_single_edge_ensemble(p, lam)
            for n in range(1, JOINT_ENUM_CAP // p + 1):
                if p * n <= 12:
                    yield e, n
    for d, p in ((1, 2), (2, 3), (2, 6), (3, 4)):
        for lam in (0.5, 1.0):
            e = ising_clique_ensemble(p, d, lam)
            for n in range(1, JOINT_ENUM_CAP // p + 1):
                if p * n <= 12:
                    yield e, n


def lemma1_chain() -> list[Check]:
    out = []
    for e, n in enumerable_instances():
        c2 = chi2_exact(e, n)
        tv = tv_exact(e, n)
        ok = 1 - tv >= risk_lower_bound(c2) - 1e-10 and tv <= 0.5 * math.sqrt(max(c2 - 1, 0)) + 1e-10
        out.append(Check(f"{e.kind} p={e.p} lam={e.params['lambda']} n={n}", ok,
                         f"1-TV={1 - tv:.6g} bound={risk_lower_bound(c2):.6g}"))
    return out


def lemma2() -> list[Check]:
    out = []
    for d in range(4, 15):
        for mult in (1.0, 1.25, 1.5, 2.0):
            lam = math.log(d) / (d - 3) * mult
            v, b = lemma2_exact_V(d, lam), lemma2_bound(d, lam)
            out.append(Check(f"d={d} lam={lam:.4f}", v <= b, f"V={v:.10g} bound={b:.10g}"))
    for d in range(1, 15):
        v = lemma2_exact_V(d, 0.0)
        out.append(Check(f"d={d} lam=0", v == 1.0, f"V={v!r}"))
    return out


def appendix_sandwich() -> list[Check]:
    out = []
    for d in range(4, 15):
        lam0 = math.log(d + 1) / (d - 2)
        for mult in (1.0, 1.25, 1.5, 2.0, 3.0):
            lam = lam0 * mult
            ratio, upper = clique_partition_ratio(d, lam), clique_sandwich_upper(d, lam)
            out.append(Check(f"Z sandwich d={d} lam={lam:.4f}", 1.0 <= ratio <= upper,
                             f"ratio={ratio:.12g} upper={upper:.12g}"))
    for d in range(1, 15):
        for lam in np.round(np.arange(0.0, 3.0001, 0.1), 10):
            gap = clipped_clique_log_partition(d, lam) - (clique_log_partition(d, lam) - lam)
            out.append(Check(f"Z' >= e^-lam Z d={d} lam={lam:.1f}", gap >= -1e-12, f"log gap={gap:.3g}"))
    for d in range(1, 11):
        for lam in (0.1, 0.5, 1.0, 2.0):
            full = IsingModel.complete(d + 1, lam)
            clipped = IsingModel(d + 1, tuple(e for e in full.edges if e[:2] != (0, 1)))
            err = max(abs(clique_log_partition(d, lam) - ising_log_partition(full)),
                      abs(clipped_clique_log_partition(d, lam) - ising_log_partition(clipped)))
            out.append(Check(f"series vs enumeration d={d} lam={lam}", err <= 1e-12, f"err={err:.3g}"))
    return out


def det_identities() -> list[Check]:
    out = []
    for p in range(4, 9):
        pairs = list(combinations(range(p), 2))
        for lam in (0.05, 0.1, 0.2, 0.35):
            worst = 0.0
            for a in pairs:
                for b in pairs:
                    m = np.eye(p) + delta_matrix(p, a, lam) + delta_matrix(p, b, lam)
                    worst = max(worst, abs(pairwise_delta_det(p, a, b, lam) - np.linalg.det(m)))
            out.append(Check(f"p={p} lam={lam}", worst <= 1e-12, f"max err={worst:.3g}"))
    return out


def chi2_oracles() -> list[Check]:
    out = []
    for p in (2, 3, 4):
        for n in (1, 2, 3):
            for lam in (0.3, 0.8, 1.5):
                e = ising_single_edge_ensemble(p, lam)
                err = abs(chi2_exact(e, n) - chi2_ising_single_edge(n, p, lam))
                out.append(Check(f"single-edge p={p} n={n} lam={lam}", err <= 1e-10, f"err={err:.3g}"))
    for d, p, n in ((2, 3, 2), (2, 6, 1), (3, 4, 2), (2, 6, 2)):
        for lam in (0.5, 1.0):
            e = ising_clique_ensemble(p, d, lam)
            closed = chi2_lift(chi2_ising_clique_exact(n, d, lam), p, d)
            err = abs(chi2_exact(e, n) - closed)
            out.append(Check(f"clique d={d} p={p} n={n} lam={lam}", err <= 1e-10, f"err={err:.3g}"))
    for p in (2, 3, 4, 8):
        for lam in (0.1, 0.2, 0.35, 0.45):
            for n in (0, 1, 5, 20):
                ex, bd = chi2_gaussian_single_edge_exact(n, p, lam), chi2_gaussian_single_edge_bound(n, p, lam)
                out.append(Check(f"gaussian exact <= bound p={p} lam={lam} n={n}", ex <= bd * (1 + 1e-12),
                                 f"exact={ex:.6g} bound={bd:.6g}"))
    return out


def footnote_039() -> list[Check]:
    lam = np.arange(0, 391) / 1000.0
    gap = np.log1p(-lam**2) - 0.5 * np.log1p(-4 * lam**2) - 2 * lam**2
    worst = float(gap.max())
    return [Check("ln(1-l^2) - ln(1-4l^2)/2 <= 2 l^2 on [0, 0.39]", worst <= 0.0, f"max gap={worst:.3g}")]


SUITES = {
    "lemma1-chain": lemma1_chain,
    "lemma2": lemma2,
    "appendix-sandwich": appendix_sandwich,
    "det-identities": det_identities,
    "chi2-oracles": chi2_oracles,
    "footnote-039": footnote_039,
}


def run_suites(names) -> dict[str, list[Check]]:
    if names == "all" or names == ["all"]:
        names = list(SUITES)
    return {name: SUITES[name]() for name in names}
