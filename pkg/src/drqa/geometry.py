"""Coordinate configurations, pairwise proximities, and neighbor rank structures.

A configuration is an ``n x m`` matrix of item coordinates; source data and
embeddings share the representation.  Proximities derived from a configuration
are stored as full dense matrices, and a rank structure holds, for every item,
the ascending distance rank of each other item together with the inverse
neighbor ordering.  Rank structures are the only input the agreement metrics
need, which makes them the natural cache boundary for pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

#: Largest item count stored as a dense proximity matrix.
DENSE_CAP = 20_000

PROXIMITY_KINDS = ("distance", "similarity")


def _readonly(a: np.ndarray, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Configuration:
    """``n`` items with ``m`` real coordinates.

    Parameters
    ----------
    items : ndarray of shape (n, m)
        Item coordinates, one row per item.
    labels : tuple of str, optional
        Unique item labels; ``None`` means unlabeled.
    mask : ndarray of bool of shape (n, m), optional
        Presence mask; ``True`` marks an observed cell.  ``None`` means fully
        observed.  Every observed cell must be finite.
    provenance : tuple of str
        Free-form notes on how the configuration was produced (generator,
        imputation, reduction method).
    """

    items: np.ndarray
    labels: tuple[str, ...] | None = None
    mask: np.ndarray | None = None
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        items = np.asarray(self.items, dtype=float)
        if items.ndim != 2:
            raise ValueError(f"items must be 2-d, got shape {items.shape}")
        n, m = items.shape
        if n < 2:
            raise ValueError(f"need at least 2 items, got {n}")
        if m < 1:
            raise ValueError("need at least 1 dimension")
        mask = self.mask
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != items.shape:
                raise ValueError(
                    f"mask shape {mask.shape} does not match items {items.shape}"
                )
            if bool(mask.all()):
                mask = None
        observed = items if mask is None else np.where(mask, items, 0.0)
        bad = ~np.isfinite(observed)
        if bad.any():
            i, l = np.argwhere(bad)[0]
            raise ValueError(f"non-finite value at item {i}, dimension {l}")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != n:
                raise ValueError(f"{len(labels)} labels for {n} items")
            if len(set(labels)) != n:
                raise ValueError("labels must be unique")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "items", _readonly(items, float))
        if mask is not None:
            mask = _readonly(mask, bool)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def n(self) -> int:
        return self.items.shape[0]

    @property
    def m(self) -> int:
        return self.items.shape[1]

    @property
    def fully_observed(self) -> bool:
        return self.mask is None


@dataclass(frozen=True, eq=False)
class ProximityMatrix:
    """Dense symmetric ``n x n`` proximity values between items.

    ``kind`` is ``"distance"`` (zero diagonal, non-negative entries) or
    ``"similarity"`` (unit diagonal, entries in ``[-1, 1]``).  ``metric_tag``
    records how the values were produced.  Tiny numerical violations of the
    range invariants are clamped; anything beyond tolerance is rejected.
    """

    values: np.ndarray
    kind: str
    metric_tag: dict = field(default_factory=dict)

    _SYM_TOL = 1e-9

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"proximity matrix must be square, got {v.shape}")
        if v.shape[0] < 2:
            raise ValueError("need at least 2 items")
        if self.kind not in PROXIMITY_KINDS:
            raise ValueError(f"kind must be one of {PROXIMITY_KINDS}, got {self.kind!r}")
        if not np.isfinite(v).all():
            raise ValueError("proximity values must be finite")
        if np.abs(v - v.T).max() > self._SYM_TOL:
            raise ValueError("proximity matrix is not symmetric")
        v = (v + v.T) / 2.0
        if self.kind == "distance":
            if np.abs(np.diag(v)).max() > self._SYM_TOL:
                raise ValueError("distance diagonal must be zero")
            if v.min() < -self._SYM_TOL:
                raise ValueError("distances must be non-negative")
            v = np.maximum(v, 0.0)
            np.fill_diagonal(v, 0.0)
        else:
            if np.abs(np.diag(v) - 1.0).max() > self._SYM_TOL:
                raise ValueError("similarity diagonal must be one")
            if np.abs(v).max() > 1.0 + self._SYM_TOL:
                raise ValueError("similarities must lie in [-1, 1]")
            v = np.clip(v, -1.0, 1.0)
            np.fill_diagonal(v, 1.0)
        object.__setattr__(self, "values", _readonly(v, float))
        object.__setattr__(self, "metric_tag", dict(self.metric_tag))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class RankStructure:
    """Per-item neighbor ranks and the inverse neighbor ordering.

    ``ranks[i, j]`` is the ascending rank (1 .. n-1) of item ``j`` among the
    neighbors of item ``i``; the unused diagonal is zero.  ``neighbors[i, r-1]``
    is the item holding rank ``r``, so the two arrays are mutually inverse
    row by row.  ``tie_policy`` records how ties were broken and where the
    underlying proximities came from.
    """

    ranks: np.ndarray
    neighbors: np.ndarray
    tie_policy: dict = field(default_factory=dict)

    def __post_init__(self):
        ranks = np.asarray(self.ranks)
        nbrs = np.asarray(self.neighbors)
        n = ranks.shape[0]
        if ranks.shape != (n, n) or n < 2:
            raise ValueError(f"ranks must be square n >= 2, got {ranks.shape}")
        if nbrs.shape != (n, n - 1):
            raise ValueError(f"neighbors must have shape ({n}, {n - 1}), got {nbrs.shape}")
        if np.diag(ranks).any():
            raise ValueError("rank diagonal must be zero")
        expect = np.arange(1, n, dtype=ranks.dtype)
        taken = np.take_along_axis(ranks, nbrs, axis=1)
        if not (taken == expect).all():
            raise ValueError("ranks and neighbors are not mutually inverse")
        object.__setattr__(self, "ranks", _readonly(ranks, np.int64))
        object.__setattr__(self, "neighbors", _readonly(nbrs, np.int64))
        object.__setattr__(self, "tie_policy", dict(self.tie_policy))

    @property
    def n(self) -> int:
        return self.ranks.shape[0]


def _check_cap(n: int, cap: int):
    if n > cap:
        raise ValueError(f"n = {n} exceeds the dense proximity cap of {cap}")


def euclidean_distances(config: Configuration, p: float = 2.0,
                        cap: int = DENSE_CAP) -> ProximityMatrix:
    """Minkowski distances between all item pairs of a configuration.

    Parameters
    ----------
    config : Configuration
    p : float
        Minkowski exponent, ``p >= 1``; ``p = 2`` is the Euclidean default.
    cap : int
        Largest accepted item count for dense storage.

    Returns
    -------
    ProximityMatrix of kind ``"distance"``.

    Notes
    -----
    Partially observed configurations are handled by summing over the columns
    a pair of rows both observe (no rescaling); every pair must share at least
    one observed column.  Core paths expect fully observed input and pipelines
    impute first.
    """
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"Minkowski exponent must be >= 1, got {p}")
    _check_cap(config.n, cap)
    x = config.items
    if config.fully_observed:
        d = cdist(x, x, "minkowski", p=p)
    else:
        d = _masked_minkowski(x, config.mask, p)
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    tag = {"metric": "minkowski", "p": p, "masked": not config.fully_observed}
    return ProximityMatrix(d, "distance", tag)


def _masked_minkowski(x: np.ndarray, mask: np.ndarray, p: float) -> np.ndarray:
    n = x.shape[0]
    d = np.zeros((n, n))
    filled = np.where(mask, x, 0.0)
    for i in range(n):
        shared = mask[i] & mask
        ok = shared.any(axis=1)
        ok[i] = True
        if not ok.all():
            j = int(np.argmin(ok))
            raise ValueError(f"items {i} and {j} share no observed dimension")
        diff = np.where(shared, np.abs(filled[i] - filled), 0.0)
        d[i] = np.power(np.power(diff, p).sum(axis=1), 1.0 / p)
    return d


def correlation_similarities(config: Configuration) -> ProximityMatrix:
    """Row-wise Pearson correlations between all item pairs.

    Each item's coordinate vector is centered by its own mean; the similarity
    of two items is the cosine of the centered vectors.  Requires ``m >= 2``
    and rejects any item whose observed coordinates have zero variance.
    Partially observed pairs correlate over their shared columns.
    """
    if config.m < 2:
        raise ValueError("correlation needs at least 2 dimensions")
    _check_cap(config.n, DENSE_CAP)
    x = config.items
    if config.fully_observed:
        centered = x - x.mean(axis=1, keepdims=True)
        norms = np.linalg.norm(centered, axis=1)
        if (norms == 0).any():
            i = int(np.argmin(norms))
            who = config.labels[i] if config.labels else str(i)
            raise ValueError(f"item {who} has zero variance")
        s = (centered @ centered.T) / np.outer(norms, norms)
    else:
        s = _masked_correlation(x, config.mask)
    s = np.clip((s + s.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(s, 1.0)
    tag = {"metric": "correlation", "masked": not config.fully_observed}
    return ProximityMatrix(s, "similarity", tag)


def _masked_correlation(x: np.ndarray, mask: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    s = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            shared = mask[i] & mask[j]
            if shared.sum() < 2:
                raise ValueError(f"items {i} and {j} share fewer than 2 observed dimensions")
            a = x[i, shared]
            b = x[j, shared]
            a = a - a.mean()
            b = b - b.mean()
            na, nb = np.linalg.norm(a), np.linalg.norm(b)
            if na == 0 or nb == 0:
                raise ValueError(f"zero variance on the shared dimensions of items {i} and {j}")
            s[i, j] = s[j, i] = float(a @ b) / (na * nb)
    return s


def rank_structure(prox: ProximityMatrix) -> RankStructure:
    """Neighbor ranks of every item under a proximity matrix.

    Similarities are first converted through ``distance = 1 - similarity``.
    Ties are broken by ascending item index (stable order), so the result is
    deterministic for any input.
    """
    d = prox.values
    converted = prox.kind == "similarity"
    if converted:
        d = 1.0 - d
    n = prox.n
    work = d.copy()
    np.fill_diagonal(work, np.inf)
    order = np.argsort(work, axis=1, kind="stable")
    neighbors = order[:, : n - 1]
    ranks = np.empty((n, n), dtype=np.int64)
    rows = np.arange(n)[:, None]
    ranks[rows, order] = np.arange(1, n + 1)[None, :]
    np.fill_diagonal(ranks, 0)
    policy = {
        "ties": "ascending-index",
        "converted_from_similarity": converted,
        "metric_tag": dict(prox.metric_tag),
    }
    return RankStructure(ranks, neighbors, policy)


def ranks_from_config(config: Configuration, p: float = 2.0) -> RankStructure:
    """Convenience composition ``rank_structure(euclidean_distances(config, p))``."""
    return rank_structure(euclidean_distances(config, p=p))
