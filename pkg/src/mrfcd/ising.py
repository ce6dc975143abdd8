"""Zero-field Ising models: exact enumeration, sampling and clique partition series.

Nodes are 0-based in Python (``0 <= i < j < p``); the JSON form uses 1-based
indices. A spin state with index ``k`` in ``[0, 2**m)`` assigns
``x_b = 1 - 2 * bit_b(k)`` to the b-th node, so state 0 is all +1.

All partition-function arithmetic is done in log space.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln, logsumexp

from mrfcd._rng import make_rng
from mrfcd.errors import BoundNotApplicableError, EnumerationCapError, ValidationError
from mrfcd.samples import SPIN, SampleSet

MAX_ENUM_NODES = 25
LEMMA2_MAX_D = 20
_ENUM_CHUNK_BITS = 16
# theorem gates are compared with a little relative slack so that
# lambda = ln(d)/(d-3) itself passes despite rounding
_GATE_RTOL = 1e-12


@dataclass(frozen=True)
class IsingModel:
    """Pairwise Ising model ``P(x) ∝ exp(sum_{i<j} w_ij x_i x_j)`` on ``p`` nodes.

    ``edges`` is a sorted tuple of ``(i, j, w)`` with ``i < j`` and ``w != 0``.
    Build from a mapping with :meth:`from_edges`.
    """

    p: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValidationError(f"p must be a positive integer, got {self.p!r}")
        seen = set()
        clean = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise ValidationError(f"self-pair ({i}, {j})")
            if i > j:
                i, j = j, i
            if i < 0 or j >= self.p:
                raise ValidationError(f"pair ({i}, {j}) outside [0, {self.p})")
            if (i, j) in seen:
                raise ValidationError(f"duplicate pair ({i}, {j})")
            if not math.isfinite(w):
                raise ValidationError(f"non-finite weight on ({i}, {j})")
            seen.add((i, j))
            if w != 0.0:
                clean.append((i, j, w))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "edges", tuple(sorted(clean)))

    @classmethod
    def from_edges(cls, p: int, edges: Mapping[tuple[int, int], float] | None = None) -> "IsingModel":
        edges = edges or {}
        return cls(p, tuple((i, j, w) for (i, j), w in edges.items()))

    @classmethod
    def complete(cls, m: int, weight: float) -> "IsingModel":
        return cls(m, tuple((i, j, weight) for i in range(m) for j in range(i + 1, m)))

    def weight(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        for a, b, w in self.edges:
            if (a, b) == (i, j):
                return w
        return 0.0

    @property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for i, j, _ in self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.p, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.p else 0

    def components(self) -> list[tuple[int, ...]]:
        """Connected components of G(theta), ordered by smallest node."""
        if not self.edges:
            return [(v,) for v in range(self.p)]
        rows = [i for i, _, _ in self.edges]
        cols = [j for _, j, _ in self.edges]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.p, self.p))
        _, labels = connected_components(adj, directed=False)
        groups: dict[int, list[int]] = {}
        for v, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(v)
        return sorted(tuple(g) for g in groups.values())

    def subsystem(self, nodes: Iterable[int]) -> "IsingModel":
        """Restriction to ``nodes`` (relabelled 0..len-1 in the given order)."""
        nodes = list(nodes)
        pos = {v: k for k, v in enumerate(nodes)}
        sub = [(pos[i], pos[j], w) for i, j, w in self.edges if i in pos and j in pos]
        return IsingModel(len(nodes), tuple(sub))

    def energy(self, x: np.ndarray) -> np.ndarray:
        """``sum_{i<j} w_ij x_i x_j`` for one state or a stack of states."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape[:-1])
        for i, j, w in self.edges:
            out = out + w * x[..., i] * x[..., j]
        return out

    def to_dict(self) -> dict:
        return {"p": self.p, "edges": [[i + 1, j + 1, w] for i, j, w in self.edges]}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "IsingModel":
        return cls(int(obj["p"]), tuple((int(i) - 1, int(j) - 1, float(w)) for i, j, w in obj["edges"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "IsingModel":
        return cls.from_dict(json.loads(text))

    @cached_property
    def model_id(self) -> str:
        digest = hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()
        return "ising-" + digest[:16]


def spin_states(m: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Spin states with indices ``start..stop-1`` as an int8 array ``(count, m)``."""
    stop = 2**m if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(m, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _check_cap(m: int, cap: int):
    if m > cap:
        raise EnumerationCapError(f"{m} nodes exceed the enumeration cap of {cap}")


def log_weight_table(model: IsingModel, cap: int = MAX_ENUM_NODES) -> np.ndarray:
    """Unnormalised log weights of all ``2**p`` states (index order as above)."""
    _check_cap(model.p, cap)
    return model.energy(spin_states(model.p))


def _enumerated_log_partition(model: IsingModel) -> float:
    m = model.p
    chunk = 2 ** min(m, _ENUM_CHUNK_BITS)
    parts = [
        logsumexp(model.energy(spin_states(m, lo, min(lo + chunk, 2**m))))
        for lo in range(0, 2**m, chunk)
    ]
    return float(logsumexp(parts))


def ising_log_partition(model: IsingModel, cap: int = MAX_ENUM_NODES) -> float:
    """log Z by enumeration, factorised over connected components.

    The cap applies to the largest connected component, so block models
    with many small components stay computable.
    """
    total = 0.0
    for comp in model.components():
        if len(comp) == 1:
            total += math.log(2.0)
            continue
        _check_cap(len(comp), cap)
        total += _enumerated_log_partition(model.subsystem(comp))
    return total


def ising_log_prob(model: IsingModel, x, cap: int = MAX_ENUM_NODES) -> float:
    x = np.asarray(x)
    if x.shape != (model.p,):
        raise ValidationError(f"state of shape {x.shape} does not match p={model.p}")
    if not np.all(np.abs(x) == 1):
        raise ValidationError("spin states must contain only -1 and +1")
    return float(model.energy(x)) - ising_log_partition(model, cap)


def log_prob_table(model: IsingModel, cap: int = MAX_ENUM_NODES) -> np.ndarray:
    """Normalised log probabilities of all ``2**p`` states."""
    lw = log_weight_table(model, cap)
    return lw - logsumexp(lw)


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def clique_log_partition(d: int, lam: float) -> float:
    """log Z of K_{d+1} with uniform weight ``lam``, from the spin-count series.

    With j nodes at -1 the energy is (lam/2)((d+1-2j)^2 - (d+1)).
    """
    if int(d) != d or d < 1:
        raise ValidationError(f"d must be an integer >= 1, got {d!r}")
    m = d + 1
    j = np.arange(m + 1)
    return float(logsumexp(_log_binom(m, j) + 0.5 * lam * ((m - 2 * j) ** 2 - m)))


def _clipped_series(d: int, lam: float) -> float:
    # spins 3..d+1 summarised by sigma = (d-1) - 2j
    m = d + 1
    j = np.arange(d)
    sigma = (d - 1) - 2 * j
    terms = []
    for x1 in (1, -1):
        for x2 in (1, -1):
            s = sigma + x1 + x2
            terms.append(_log_binom(d - 1, j) + 0.5 * lam * (s**2 - 2 * x1 * x2 - m))
    return float(logsumexp(np.concatenate(terms)))


def clipped_clique_log_partition(d: int, lam: float) -> float:
    """log Z' of K_{d+1} with the edge between the first two nodes removed."""
    if int(d) != d or d < 1:
        raise ValidationError(f"d must be an integer >= 1, got {d!r}")
    return _clipped_series(d, lam)


def clique_partition_ratio(d: int, lam: float) -> float:
    """``Z / (2 exp((lam/2)((d+1)^2 - (d+1))))``, the normalised clique partition function."""
    m = d + 1
    return math.exp(clique_log_partition(d, lam) - math.log(2.0) - 0.5 * lam * (m * m - m))


def clique_sandwich_upper(d: int, lam: float) -> float:
    """Upper end ``1 + 3d e^{-2 lam d}`` of the clique partition sandwich.

    Only proven for ``lam (d-2) >= ln(d+1)``.
    """
    if d < 3 or lam * (d - 2) < math.log(d + 1) * (1 - _GATE_RTOL):
        raise BoundNotApplicableError(f"sandwich needs lam(d-2) >= ln(d+1); got d={d}, lam={lam}")
    return 1.0 + 3.0 * d * math.exp(-2.0 * lam * d)


class _Sampler:
    """Exact sampler over the product of a model's connected components."""

    def __init__(self, model: IsingModel, cap: int):
        self.p = model.p
        self.free: list[int] = []
        self.blocks: list[tuple[np.ndarray, np.ndarray]] = []
        for comp in model.components():
            if len(comp) == 1:
                self.free.append(comp[0])
                continue
            _check_cap(len(comp), cap)
            lw = log_weight_table(model.subsystem(comp), cap)
            cdf = np.cumsum(np.exp(lw - lw.max()))
            self.blocks.append((np.asarray(comp), cdf / cdf[-1]))
        self.free_idx = np.asarray(self.free, dtype=int)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty((n, self.p), dtype=np.int8)
        if len(self.free_idx):
            out[:, self.free_idx] = 1 - 2 * rng.integers(0, 2, size=(n, len(self.free_idx)), dtype=np.int8)
        for nodes, cdf in self.blocks:
            u = rng.random(n)
            k = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
            bits = (k[:, None] >> np.arange(len(nodes))) & 1
            out[:, nodes] = (1 - 2 * bits).astype(np.int8)
        return out


@lru_cache(maxsize=512)
def sampler_for(model: IsingModel, cap: int = MAX_ENUM_NODES) -> _Sampler:
    return _Sampler(model, cap)


def ising_sample(model: IsingModel, n: int, seed, cap: int = MAX_ENUM_NODES) -> SampleSet:
    """``n`` i.i.d. exact samples by inverse-CDF lookup in the enumerated state table.

    Each connected component is sampled from its own table; ``seed`` fixes the
    output bit for bit.
    """
    if n < 0:
        raise ValidationError("n must be non-negative")
    sampler = sampler_for(model, cap)
    data = sampler.sample(int(n), make_rng(seed))
    return SampleSet(data, kind=SPIN, seed=None if isinstance(seed, np.random.Generator) else int(seed),
                     model_id=model.model_id)


def lemma2_exact_V(d: int, lam: float) -> float:
    """Exact ``(Z/Z')^2 E_P[exp(-2 lam X1 X2)]`` for the K_{d+1} clique, by enumeration."""
    if int(d) != d or d < 1:
        raise ValidationError(f"d must be an integer >= 1, got {d!r}")
    if d > LEMMA2_MAX_D:
        raise EnumerationCapError(f"d={d} exceeds the enumeration cap {LEMMA2_MAX_D}")
    m = d + 1
    full = IsingModel.complete(m, lam)
    clipped = IsingModel(m, tuple(e for e in full.edges if e[:2] != (0, 1)))
    states = spin_states(m)
    lw = full.energy(states)
    log_z = logsumexp(lw)
    log_z_clipped = logsumexp(clipped.energy(states))
    x1x2 = states[:, 0].astype(np.float64) * states[:, 1]
    log_moment = logsumexp(lw - log_z - 2.0 * lam * x1x2)
    return float(np.exp(2.0 * (log_z - log_z_clipped) + log_moment))


def lemma2_gate(d: int, lam: float) -> bool:
    return d >= 4 and lam * (d - 3) >= math.log(d) * (1 - _GATE_RTOL)


def lemma2_bound(d: int, lam: float) -> float:
    """``1 + 8 (e^{4 lam} + d) e^{-2 lam d}``; valid for ``d >= 4`` and ``lam (d-3) >= ln d``."""
    if not lemma2_gate(d, lam):
        raise BoundNotApplicableError(f"bound not applicable: need d >= 4 and lam(d-3) >= ln d (d={d}, lam={lam})")
    return 1.0 + 8.0 * (math.exp(4.0 * lam) + d) * math.exp(-2.0 * lam * d)


def class_membership(model: IsingModel, p: int, d: int, alpha: float, beta: float) -> bool:
    """Is ``model`` in the class of p-node, degree <= d models with alpha <= |w| <= beta?"""
    if not 0 < alpha <= beta:
        raise ValidationError("need 0 < alpha <= beta")
    if model.p != p or model.max_degree > d:
        return False
    return all(alpha <= abs(w) <= beta for _, _, w in model.edges)
