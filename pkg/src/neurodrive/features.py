"""Named feature vectors passed between extraction and learning stages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Ordered real-valued features, optionally named.

    ``names`` is None for large anonymous blocks (e.g. deep embeddings);
    when present it must align 1:1 with ``values``.
    """

    values: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise DataError("feature vector contains NaN or Inf")
        if self.names is not None and len(self.names) != v.size:
            raise DataError(f"{len(self.names)} names for {v.size} values")
        object.__setattr__(self, "values", v)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))

    def __len__(self) -> int:
        return self.values.size


def concat(vectors: list[FeatureVector]) -> FeatureVector:
    """Concatenate feature vectors; names survive only if every part has them."""
    if not vectors:
        raise DataError("nothing to concatenate")
    values = np.concatenate([v.values for v in vectors])
    if all(v.names is not None for v in vectors):
        names = tuple(n for v in vectors for n in v.names)
        return FeatureVector(values, names)
    return FeatureVector(values)
