"""Sample matrices with generation provenance, and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from mrfcd.errors import ValidationError

SPIN = "spin"
REAL = "real"


@dataclass(frozen=True, eq=False)
class SampleSet:
    """An ``n x p`` matrix of observations.

    ``kind`` is ``"spin"`` (entries in {-1, +1}, stored as int8) or ``"real"``.
    ``seed`` and ``model_id`` record where the data came from; either may be
    None for hand-made data.
    """

    data: np.ndarray
    kind: str = SPIN
    seed: int | None = None
    model_id: str | None = None

    def __post_init__(self):
        if self.kind not in (SPIN, REAL):
            raise ValidationError(f"unknown sample kind {self.kind!r}")
        dtype = np.int8 if self.kind == SPIN else np.float64
        data = np.array(self.data, dtype=dtype, copy=True)
        if data.ndim == 1 and data.size == 0:
            data = data.reshape(0, 0)
        if data.ndim != 2:
            raise ValidationError(f"sample data must be 2-D, got shape {data.shape}")
        if self.kind == SPIN and data.size and not np.all(np.abs(data) == 1):
            raise ValidationError("spin samples must contain only -1 and +1")
        if self.kind == SPIN and not np.array_equal(data, np.asarray(self.data)):
            raise ValidationError("spin samples must be integers -1/+1")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.seed == other.seed
            and self.model_id == other.model_id
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def to_csv(self) -> str:
        """One row per sample; spins as integers, reals with 17 significant digits."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x{j + 1}" for j in range(self.p)])
        if self.kind == SPIN:
            for row in self.data:
                writer.writerow([int(v) for v in row])
        else:
            for row in self.data:
                writer.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str = SPIN, seed=None, model_id=None) -> "SampleSet":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValidationError("empty CSV")
        header, body = rows[0], rows[1:]
        conv = int if kind == SPIN else float
        data = np.array([[conv(v) for v in r] for r in body]).reshape(len(body), len(header))
        return cls(data, kind=kind, seed=seed, model_id=model_id)


def as_array(xs, kind: str | None = None) -> np.ndarray:
    """Data matrix of a SampleSet or array-like, checked against ``kind``."""
    if isinstance(xs, SampleSet):
        if kind is not None and xs.kind != kind:
            raise ValidationError(f"expected {kind} samples, got {xs.kind}")
        return xs.data
    arr = np.asarray(xs)
    if kind == SPIN and arr.size and not np.all(np.abs(arr) == 1):
        raise ValidationError("spin samples must contain only -1 and +1")
    return arr
