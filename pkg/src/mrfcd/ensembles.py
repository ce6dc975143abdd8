"""Change-detection ensembles: a null model P and alternatives Q (equiprobable)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Any, Mapping

import numpy as np

from mrfcd.errors import ValidationError
from mrfcd.gaussian import GaussianModel, single_edge_precision
from mrfcd.ising import IsingModel

ISING_SINGLE_EDGE = "ising-single-edge"
ISING_CLIQUE = "ising-clique"
GAUSSIAN_SINGLE_EDGE = "gaussian-single-edge"
KINDS = (ISING_SINGLE_EDGE, ISING_CLIQUE, GAUSSIAN_SINGLE_EDGE)


@dataclass(frozen=True, eq=False)
class ChangeEnsemble:
    """Null model plus an ordered tuple of alternatives of the same family.

    ``params`` holds ``p``, ``lambda`` and, for cliques, ``d``, ``r`` and the
    0-based ``clipped_pairs``. For single-edge kinds ``pairs`` lists each
    alternative's edge. ``kind`` may be any string for hand-built ensembles.
    """

    kind: str
    null_model: IsingModel | GaussianModel
    alternatives: tuple
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        if not self.alternatives:
            raise ValidationError("an ensemble needs at least one alternative")
        family = type(self.null_model)
        for q in self.alternatives:
            if type(q) is not family:
                raise ValidationError("alternatives must share the null model's family")
            if q.p != self.null_model.p:
                raise ValidationError("alternatives must share the null model's node count")
        object.__setattr__(self, "params", dict(self.params))

    @property
    def p(self) -> int:
        return self.null_model.p

    @property
    def is_ising(self) -> bool:
        return isinstance(self.null_model, IsingModel)

    def __len__(self) -> int:
        return len(self.alternatives)

    def to_dict(self) -> dict:
        params = {k: ([list(map(int, pr)) for pr in v] if k in ("pairs", "clipped_pairs") else v)
                  for k, v in self.params.items()}
        return {
            "kind": self.kind,
            "family": "ising" if self.is_ising else "gaussian",
            "params": params,
            "null_model": self.null_model.to_dict(),
            "alternatives": [q.to_dict() for q in self.alternatives],
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ChangeEnsemble":
        model_cls = IsingModel if obj.get("family", "ising") == "ising" else GaussianModel
        params = dict(obj.get("params", {}))
        for key in ("pairs", "clipped_pairs"):
            if key in params:
                params[key] = tuple(tuple(pr) for pr in params[key])
        return cls(
            obj["kind"],
            model_cls.from_dict(obj["null_model"]),
            tuple(model_cls.from_dict(q) for q in obj["alternatives"]),
            params,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ChangeEnsemble":
        return cls.from_dict(json.loads(text))


def ising_single_edge_ensemble(p: int, lam: float) -> ChangeEnsemble:
    """Empty graph versus every single-edge model with weight ``lam``."""
    if p < 2:
        raise ValidationError("need p >= 2")
    if lam == 0:
        raise ValidationError("lam must be nonzero")
    pairs = tuple(combinations(range(p), 2))
    alts = tuple(IsingModel(p, ((i, j, lam),)) for i, j in pairs)
    return ChangeEnsemble(ISING_SINGLE_EDGE, IsingModel(p), alts, {"p": p, "lambda": lam, "pairs": pairs})


def ising_clique_ensemble(p: int, d: int, lam: float) -> ChangeEnsemble:
    """``r = p // (d+1)`` disjoint K_{d+1} blocks; alternative mu drops the first edge of block mu.

    Nodes past ``r (d+1)`` stay isolated.
    """
    if d < 1:
        raise ValidationError("need d >= 1")
    if p < d + 1:
        raise ValidationError(f"need p >= d+1, got p={p}, d={d}")
    m = d + 1
    r = p // m
    blocks = [range(mu * m, (mu + 1) * m) for mu in range(r)]
    edges = [(i, j, lam) for blk in blocks for i, j in combinations(blk, 2)]
    clipped = tuple((mu * m, mu * m + 1) for mu in range(r))
    null = IsingModel(p, tuple(edges))
    alts = tuple(IsingModel(p, tuple(e for e in edges if e[:2] != pr)) for pr in clipped)
    params = {"p": p, "d": d, "lambda": lam, "r": r, "clipped_pairs": clipped}
    return ChangeEnsemble(ISING_CLIQUE, null, alts, params)


def gaussian_single_edge_ensemble(p: int, lam: float) -> ChangeEnsemble:
    """``I_p`` versus ``I_p + Delta_ij`` over all pairs; needs ``0 < |lam| < 1/2``."""
    if p < 2:
        raise ValidationError("need p >= 2")
    if not 0 < abs(lam) < 0.5:
        raise ValidationError(f"need 0 < |lam| < 1/2 so that det(I + 2 Delta) > 0, got {lam}")
    pairs = tuple(combinations(range(p), 2))
    alts = tuple(single_edge_precision(p, i, j, lam) for i, j in pairs)
    return ChangeEnsemble(GAUSSIAN_SINGLE_EDGE, GaussianModel(np.eye(p)), alts,
                          {"p": p, "lambda": lam, "pairs": pairs})


def verify_structural_difference(e: ChangeEnsemble) -> bool:
    """True iff no alternative has the null model's graph."""
    g0 = e.null_model.edge_set
    return all(q.edge_set != g0 for q in e.alternatives)


def n_alternatives(kind: str, p: int, d: int | None = None) -> int:
    if kind == ISING_CLIQUE:
        return p // (d + 1)
    return comb(p, 2)
