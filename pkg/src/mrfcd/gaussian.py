"""Zero-mean Gaussian MRFs parameterised by their precision matrix."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy.linalg import solve_triangular

from mrfcd._rng import make_rng
from mrfcd.errors import NotPositiveDefiniteError, ValidationError
from mrfcd.samples import REAL, SampleSet

SYM_TOL = 1e-12
PIVOT_TOL = 1e-12
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """Gaussian MRF with density ``sqrt(det A / (2 pi)^p) exp(-x'Ax/2)``.

    Construction verifies symmetry, a positive diagonal and positive
    definiteness (Cholesky pivots above ``PIVOT_TOL``).
    """

    precision: np.ndarray

    def __post_init__(self):
        a = np.array(self.precision, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValidationError(f"precision must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("precision has non-finite entries")
        if np.max(np.abs(a - a.T)) > SYM_TOL:
            raise ValidationError("precision matrix is not symmetric")
        if np.any(np.diag(a) <= 0):
            raise NotPositiveDefiniteError("diagonal entries must be strictly positive")
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("precision matrix is not positive definite") from exc
        if np.any(np.diag(chol) ** 2 <= PIVOT_TOL):
            raise NotPositiveDefiniteError("precision matrix is numerically singular")
        a.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "precision", a)
        object.__setattr__(self, "_chol", chol)

    @property
    def p(self) -> int:
        return self.precision.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        """Lower factor ``L`` with ``A = L L'``."""
        return self._chol

    @cached_property
    def logdet(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self._chol))))

    @property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.precision, 1))
        return frozenset(zip(i.tolist(), j.tolist()))

    def to_dict(self) -> dict:
        return {"p": self.p, "precision": self.precision.ravel().tolist()}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "GaussianModel":
        p = int(obj["p"])
        return cls(np.asarray(obj["precision"], dtype=np.float64).reshape(p, p))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GaussianModel":
        return cls.from_dict(json.loads(text))

    @cached_property
    def model_id(self) -> str:
        digest = hashlib.sha256(self.precision.tobytes()).hexdigest()
        return "gauss-" + digest[:16]


def gaussian_log_density(model: GaussianModel, x):
    """Log density at ``x``; a stack of points gives an array."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (model.p,):
        raise ValidationError(f"point of shape {x.shape} does not match p={model.p}")
    quad = np.einsum("...i,ij,...j->...", x, model.precision, x)
    out = 0.5 * model.logdet - 0.5 * model.p * LOG_2PI - 0.5 * quad
    return float(out) if out.ndim == 0 else out


def draw(model: GaussianModel, n: int, rng: np.random.Generator) -> np.ndarray:
    # x = L^{-T} z has covariance (L L')^{-1} = A^{-1}
    z = rng.standard_normal((model.p, n))
    return solve_triangular(model.cholesky, z, lower=True, trans="T").T


def gaussian_sample(model: GaussianModel, n: int, seed) -> SampleSet:
    if n < 0:
        raise ValidationError("n must be non-negative")
    data = draw(model, int(n), make_rng(seed))
    return SampleSet(data, kind=REAL, seed=None if isinstance(seed, np.random.Generator) else int(seed),
                     model_id=model.model_id)


def gamma_of(model: GaussianModel) -> float | None:
    """Smallest ``|A_ij| / sqrt(A_ii A_jj)`` over edges; None when there are no edges."""
    a = model.precision
    d = np.sqrt(np.diag(a))
    ratio = np.abs(a) / np.outer(d, d)
    off = np.triu(a, 1) != 0
    if not off.any():
        return None
    return float(ratio[off].min())


def _check_pair(p: int, pair) -> tuple[int, int]:
    i, j = sorted((int(pair[0]), int(pair[1])))
    if i == j or i < 0 or j >= p:
        raise ValidationError(f"invalid node pair {pair} for p={p}")
    return i, j


def delta_matrix(p: int, pair, lam: float) -> np.ndarray:
    """The matrix with ``lam`` at ``(i, j)`` and ``(j, i)``, zero elsewhere."""
    i, j = _check_pair(p, pair)
    out = np.zeros((p, p))
    out[i, j] = out[j, i] = lam
    return out


def single_edge_precision(p: int, i: int, j: int, lam: float) -> GaussianModel:
    if abs(lam) >= 1:
        raise NotPositiveDefiniteError(f"|lam| must be < 1 for I + Delta to be PD, got {lam}")
    return GaussianModel(np.eye(p) + delta_matrix(p, (i, j), lam))


def pairwise_delta_det(p: int, pair1, pair2, lam: float) -> float:
    """Closed-form ``det(I_p + Delta_pair1 + Delta_pair2)``.

    Identical pairs give ``det(I + 2 Delta) = 1 - 4 lam^2``, disjoint pairs
    ``(1 - lam^2)^2`` and pairs sharing one node ``1 - 2 lam^2``.
    """
    a = set(_check_pair(p, pair1))
    b = set(_check_pair(p, pair2))
    overlap = len(a & b)
    if overlap == 2:
        det = 1.0 - 4.0 * lam * lam
    elif overlap == 1:
        det = 1.0 - 2.0 * lam * lam
    else:
        det = (1.0 - lam * lam) ** 2 if abs(lam) < 1 else 0.0
    if det <= 0:
        raise NotPositiveDefiniteError(f"I + Delta + Delta is not PD for lam={lam} (overlap {overlap})")
    return det
