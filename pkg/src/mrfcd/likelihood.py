"""Mixture likelihood ratio of P versus a uniform choice from Q, and the NP test.

Every function returns the natural log of

    L_n(X^n) = (1/|Q|) sum_Q prod_t dQ/dP(X^(t)).

Sample input may be a SampleSet, an ``(n, p)`` array, or a batch of datasets
shaped ``(trials, n, p)``; batches give one value per dataset.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from mrfcd.ensembles import GAUSSIAN_SINGLE_EDGE, ISING_CLIQUE, ISING_SINGLE_EDGE, ChangeEnsemble
from mrfcd.errors import ValidationError
from mrfcd.ising import clique_log_partition, clipped_clique_log_partition, ising_log_partition
from mrfcd.samples import REAL, SPIN, as_array


def _stack(xs, p: int | None, kind: str | None) -> tuple[np.ndarray, bool]:
    x = as_array(xs, kind)
    if x.ndim == 2:
        x, batched = x[None], False
    elif x.ndim == 3:
        batched = True
    else:
        raise ValidationError(f"samples must be (n, p) or (trials, n, p), got shape {x.shape}")
    if p is not None and x.shape[2] != p and x.shape[1] > 0:
        raise ValidationError(f"samples have {x.shape[2]} columns, expected p={p}")
    return x, batched


def _gram(x: np.ndarray) -> np.ndarray:
    """``sum_t x_t x_t'`` for each dataset in the batch."""
    x = x.astype(np.float64, copy=False)
    return np.matmul(x.transpose(0, 2, 1), x)


def _out(values: np.ndarray, batched: bool):
    return values if batched else float(values[0])


class _GenericLR:
    """Per-ensemble cache: log dQ/dP summed over samples is linear in the Gram matrix.

    score_k = <C_k, G> + n c_k, with C_k the parameter difference and c_k the
    log-normaliser difference between alternative k and the null.
    """

    def __init__(self, e: ChangeEnsemble):
        p = e.p
        rows, cols, vals = [], [], []
        offsets = []
        if e.is_ising:
            log_z0 = ising_log_partition(e.null_model)
            w0 = _ising_weights(e.null_model)
            for k, q in enumerate(e.alternatives):
                diff = _ising_weights(q) - w0
                nz = np.flatnonzero(diff)
                rows += [k] * len(nz)
                cols += nz.tolist()
                vals += diff[nz].tolist()
                offsets.append(-(ising_log_partition(q) - log_z0))
        else:
            a0 = e.null_model.precision
            for k, q in enumerate(e.alternatives):
                diff = (-0.5 * (q.precision - a0)).ravel()
                nz = np.flatnonzero(diff)
                rows += [k] * len(nz)
                cols += nz.tolist()
                vals += diff[nz].tolist()
                offsets.append(0.5 * (q.logdet - e.null_model.logdet))
        self.p = p
        self.kind = SPIN if e.is_ising else REAL
        self.coef = sparse.csr_matrix((vals, (rows, cols)), shape=(len(e), p * p))
        self.offsets = np.asarray(offsets)

    def __call__(self, xs):
        x, batched = _stack(xs, self.p, self.kind)
        n = x.shape[1]
        g = _gram(x).reshape(x.shape[0], -1)
        scores = (self.coef @ g.T).T + n * self.offsets
        return _out(logsumexp(scores, axis=1) - math.log(len(self.offsets)), batched)


def _ising_weights(model) -> np.ndarray:
    """Upper-triangular weight matrix, flattened."""
    w = np.zeros((model.p, model.p))
    for i, j, v in model.edges:
        w[i, j] = v
    return w.ravel()


@lru_cache(maxsize=64)
def _generic_for(e: ChangeEnsemble) -> _GenericLR:
    return _GenericLR(e)


def log_lr_generic(e: ChangeEnsemble, xs):
    """log L_n for any ensemble, from the models' parameters and normalisers."""
    return _generic_for(e)(xs)


def log_lr_ising_single_edge(p: int, lam: float, xs):
    """Closed form for the empty-vs-one-edge Ising ensemble.

    Each sample contributes ``2 eta`` or ``2 (1 - eta)`` per pair depending on
    whether the two spins agree, with ``1 - 2 eta = tanh(lam)``.
    """
    x, batched = _stack(xs, p, SPIN)
    n = x.shape[1]
    t = math.tanh(lam)
    if t == 0.0:
        return _out(np.zeros(x.shape[0]), batched)
    iu = np.triu_indices(p, 1)
    agree = 0.5 * (n + _gram(x)[:, iu[0], iu[1]])
    terms = agree * math.log1p(t) + (n - agree) * math.log1p(-t)
    return _out(logsumexp(terms, axis=1) - math.log(math.comb(p, 2)), batched)


def log_lr_ising_clique(e: ChangeEnsemble, xs):
    """Closed form for the lifted clique ensemble.

    Alternative mu contributes ``n (log Z - log Z') - lam sum_t X_a X_b`` for
    its clipped pair (a, b); only those coordinates are read.
    """
    if e.kind != ISING_CLIQUE:
        raise ValidationError(f"expected an {ISING_CLIQUE} ensemble, got {e.kind}")
    d, lam = e.params["d"], e.params["lambda"]
    x, batched = _stack(xs, e.p, SPIN)
    n = x.shape[1]
    pairs = np.asarray(e.params["clipped_pairs"])
    log_ratio = clique_log_partition(d, lam) - clipped_clique_log_partition(d, lam)
    prods = np.sum(x[:, :, pairs[:, 0]].astype(np.float64) * x[:, :, pairs[:, 1]], axis=1)
    terms = n * log_ratio - lam * prods
    return _out(logsumexp(terms, axis=1) - math.log(len(pairs)), batched)


def log_lr_gaussian_single_edge(p: int, lam: float, xs):
    """Closed form for ``I_p`` versus ``I_p + Delta_ij``: ``(n/2) log(1 - lam^2)`` plus the pair mixture."""
    if abs(lam) >= 1:
        raise ValidationError(f"need |lam| < 1, got {lam}")
    x, batched = _stack(xs, p, REAL)
    n = x.shape[1]
    iu = np.triu_indices(p, 1)
    terms = -lam * _gram(x)[:, iu[0], iu[1]]
    base = 0.5 * n * math.log1p(-lam * lam) - math.log(math.comb(p, 2))
    return _out(base + logsumexp(terms, axis=1), batched)


def log_lr(e: ChangeEnsemble, xs):
    """Closed form for the built-in kinds, generic path otherwise."""
    lam = e.params.get("lambda")
    if e.kind == ISING_SINGLE_EDGE:
        return log_lr_ising_single_edge(e.p, lam, xs)
    if e.kind == ISING_CLIQUE:
        return log_lr_ising_clique(e, xs)
    if e.kind == GAUSSIAN_SINGLE_EDGE:
        return log_lr_gaussian_single_edge(e.p, lam, xs)
    return log_lr_generic(e, xs)


def np_test(lr: float, log_tau: float) -> int:
    """Neyman-Pearson decision: 1 (change) iff ``log L >= log tau``."""
    return int(lr >= log_tau)
