"""Rank-order neighborhood agreement between two configurations of the same items.

The central quantity is, for every item ``i`` and neighborhood size ``k``, the
overlap ``a_ik`` between the first ``k`` neighbors of ``i`` in configuration A
and in configuration B.  Averaging the overlap fraction over items gives the
agreement rate ``AR_k``; subtracting the overlap a random k-subset would
achieve (``k / (n - 1)``, the hypergeometric expectation) gives the adjusted
rate.  Summing adjusted rates over all ``k`` and dividing by the sum a perfect
recovery would achieve yields a single score in ``(-inf, 1]``: the fraction of
the maximum possible area above the random baseline that the comparison
attains.  A weight function over ``k`` restricts or tapers the neighborhood
sizes that count.

Everything here consumes :class:`~drqa.geometry.RankStructure` values, so the
metrics apply to any proximity source, coordinates or not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import RankStructure, _readonly


@dataclass(frozen=True, eq=False)
class AgreementProfile:
    """Agreement rates for every neighborhood size ``k = 1 .. n-1``.

    Attributes
    ----------
    n : int
        Item count of the compared configurations.
    ar : ndarray of shape (n - 1,)
        ``ar[k - 1]`` is ``AR_k``, the mean over items of ``a_ik / k``.
        ``AR_{n-1}`` is always 1 because the full neighbor sets coincide.
    ar_adjusted : ndarray of shape (n - 1,)
        ``AR_k - k / (n - 1)``, the rate in excess of random overlap.
    per_item : ndarray of shape (n, n - 1), optional
        Unadjusted per-item rates ``a_ik / k``; ``None`` unless requested.
    """

    n: int
    ar: np.ndarray
    ar_adjusted: np.ndarray
    per_item: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.n)
        ar = np.asarray(self.ar, dtype=float)
        adj = np.asarray(self.ar_adjusted, dtype=float)
        if n < 2:
            raise ValueError("need at least 2 items")
        if ar.shape != (n - 1,) or adj.shape != (n - 1,):
            raise ValueError(f"profile arrays must have shape ({n - 1},)")
        if ar.min() < -1e-12 or ar.max() > 1 + 1e-12:
            raise ValueError("agreement rates must lie in [0, 1]")
        if abs(ar[-1] - 1.0) > 1e-12:
            raise ValueError("AR at k = n-1 must be 1")
        k = np.arange(1, n, dtype=float)
        if np.abs(adj - (ar - k / (n - 1))).max() > 1e-9:
            raise ValueError("ar_adjusted is inconsistent with ar")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "ar", _readonly(ar, float))
        object.__setattr__(self, "ar_adjusted", _readonly(adj, float))
        if self.per_item is not None:
            pi = np.asarray(self.per_item, dtype=float)
            if pi.shape != (n, n - 1):
                raise ValueError(f"per_item must have shape ({n}, {n - 1})")
            if np.abs(pi.mean(axis=0) - ar).max() > 1e-9:
                raise ValueError("per_item means are inconsistent with ar")
            object.__setattr__(self, "per_item", _readonly(pi, float))


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Non-negative weights over neighborhood sizes ``k = 1 .. n-1``.

    ``values[k - 1]`` is ``f(k)``.  At least one weight must be positive.
    """

    kind: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] < 1:
            raise ValueError("weight table must be a non-empty vector")
        if not np.isfinite(v).all() or v.min() < 0:
            raise ValueError("weights must be finite and non-negative")
        if v.max() <= 0:
            raise ValueError("at least one weight must be positive")
        object.__setattr__(self, "values", _readonly(v, float))

    @property
    def n(self) -> int:
        return self.values.shape[0] + 1

    @classmethod
    def uniform(cls, n: int) -> "WeightFunction":
        """``f(k) = 1`` everywhere; recovers the unweighted aggregate."""
        return cls("uniform", np.ones(n - 1))

    @classmethod
    def indicator(cls, n: int, k_lo: int, k_hi: int) -> "WeightFunction":
        """``f(k) = 1`` on ``k_lo <= k <= k_hi`` and 0 elsewhere."""
        if not 1 <= k_lo <= k_hi <= n - 1:
            raise ValueError(f"need 1 <= k_lo <= k_hi <= {n - 1}, got [{k_lo}, {k_hi}]")
        v = np.zeros(n - 1)
        v[k_lo - 1 : k_hi] = 1.0
        return cls("indicator", v)

    @classmethod
    def linear_taper(cls, n: int) -> "WeightFunction":
        """Full weight on local neighborhoods, linear fade, zero tail.

        ``f(k) = 1`` for ``k < floor((n-1)/3)``, falls linearly via
        ``1 - (k - n/3) / (n/3)`` up to ``k < floor(2(n-1)/3)``, and is 0 from
        there on.  Values are clamped into ``[0, 1]``; for ``n <= 3`` every
        weight would be zero, which is rejected.
        """
        k = np.arange(1, n, dtype=float)
        lo = math.floor((n - 1) / 3)
        hi = math.floor(2 * (n - 1) / 3)
        v = np.zeros(n - 1)
        v[k < lo] = 1.0
        mid = (k >= lo) & (k < hi)
        v[mid] = 1.0 - (k[mid] - n / 3.0) / (n / 3.0)
        return cls("linear_taper", np.clip(v, 0.0, 1.0))

    @classmethod
    def from_table(cls, values) -> "WeightFunction":
        return cls("custom", np.asarray(values, dtype=float))


@dataclass(frozen=True, eq=False)
class CoRankingMatrix:
    """Joint rank histogram of two configurations.

    ``omega[r - 1, s - 1]`` counts the ordered item pairs ``(i, j)`` whose
    neighbor rank is ``r`` in configuration A and ``s`` in configuration B.
    Every row and every column sums to ``n``, and the sum of the leading
    ``k x k`` block equals ``k * n * AR_k``.
    """

    omega: np.ndarray
    n: int

    def __post_init__(self):
        n = int(self.n)
        om = np.asarray(self.omega)
        if om.shape != (n - 1, n - 1):
            raise ValueError(f"omega must have shape ({n - 1}, {n - 1})")
        if (om < 0).any():
            raise ValueError("counts must be non-negative")
        if not (om.sum(axis=0) == n).all() or not (om.sum(axis=1) == n).all():
            raise ValueError("every row and column must sum to n")
        object.__setattr__(self, "omega", _readonly(om, np.int64))
        object.__setattr__(self, "n", n)

    def block_sum(self, k: int) -> int:
        """Sum of the leading ``k x k`` block."""
        if not 1 <= k <= self.n - 1:
            raise ValueError(f"k must lie in 1 .. {self.n - 1}")
        return int(self.omega[:k, :k].sum())


@dataclass(frozen=True)
class RankMovementTally:
    """Counts of rank movements relative to a neighborhood boundary ``k``.

    Over all ordered pairs ``(i, j)`` with A-rank ``a`` and B-rank ``b``:

    - hard intrusion:  ``b <= k < a``  (j entered the k-neighborhood)
    - soft intrusion:  ``b < a <= k``  (j moved up within it)
    - hard extrusion:  ``a <= k < b``  (j left it)
    - soft extrusion:  ``a < b <= k``  (j moved down within it)
    - unchanged:       ``a = b <= k``
    - outside:         ``a > k`` and ``b > k``

    The six classes partition the ``n * (n - 1)`` ordered pairs.
    """

    k: int
    n: int
    hard_intrusions: int
    soft_intrusions: int
    hard_extrusions: int
    soft_extrusions: int
    unchanged: int
    outside: int

    def __post_init__(self):
        total = (self.hard_intrusions + self.soft_intrusions + self.hard_extrusions
                 + self.soft_extrusions + self.unchanged + self.outside)
        if total != self.n * (self.n - 1):
            raise ValueError("movement classes must partition all ordered pairs")
        if self.hard_intrusions != self.hard_extrusions:
            raise ValueError("hard intrusions and extrusions must balance")


def _check_pair(rank_a: RankStructure, rank_b: RankStructure) -> int:
    if rank_a.n != rank_b.n:
        raise ValueError(f"item counts differ: {rank_a.n} vs {rank_b.n}")
    return rank_a.n


def agreement_profile(rank_a: RankStructure, rank_b: RankStructure,
                      with_per_item: bool = False) -> AgreementProfile:
    """Agreement rates between two rank structures for every ``k``.

    Parameters
    ----------
    rank_a, rank_b : RankStructure
        Rank structures over the same items (usually source vs. embedding).
    with_per_item : bool
        Also keep the full ``n x (n - 1)`` matrix of per-item rates, needed
        for item-level maps and heatmaps.

    Returns
    -------
    AgreementProfile

    Notes
    -----
    Item ``j`` is in both k-neighborhoods of item ``i`` exactly when
    ``max(rank_a[i, j], rank_b[i, j]) <= k``, so a row-wise cumulative
    histogram of that maximum yields all overlaps ``a_ik`` in one O(n^2) pass
    instead of comparing neighbor sets k by k.
    """
    n = _check_pair(rank_a, rank_b)
    worst = np.maximum(rank_a.ranks, rank_b.ranks)
    offsets = np.arange(n)[:, None] * n
    flat = (worst + offsets).ravel()
    hist = np.bincount(flat, minlength=n * n).reshape(n, n)
    # column 0 holds only the self-pair; overlaps accumulate over ranks 1..n-1
    a_ik = np.cumsum(hist[:, 1:], axis=1)
    k = np.arange(1, n)
    ar = a_ik.sum(axis=0) / (k * n)
    ar_adjusted = ar - k / (n - 1)
    per_item = a_ik / k if with_per_item else None
    return AgreementProfile(n, ar, ar_adjusted, per_item)


def psi(profile: AgreementProfile) -> float:
    """Aggregate agreement: attained share of the maximum adjusted area.

    Sums the adjusted rates over every ``k`` and divides by the value a
    perfect recovery would attain, ``sum_k (n - k - 1) / (n - 1)``.  Equals 1
    for identical rank structures, is close to 0 for unrelated ones, and can
    be negative when agreement is below random.  Undefined for ``n = 2``
    (the denominator vanishes).
    """
    n = profile.n
    if n < 3:
        raise ValueError("aggregate agreement is undefined for n < 3")
    k = np.arange(1, n)
    denom = ((n - k - 1) / (n - 1)).sum()
    return float(profile.ar_adjusted.sum() / denom)


def weighted_psi(profile: AgreementProfile, f: WeightFunction) -> float:
    """Aggregate agreement with neighborhood sizes weighted by ``f``.

    ``sum_k f(k) (AR_k - k/(n-1)) / sum_k f(k) (n - k - 1)/(n - 1)``.
    The weight table must match the profile and must put weight somewhere
    below ``k = n - 1``, otherwise the normalizer is zero.
    """
    n = profile.n
    if f.n != n:
        raise ValueError(f"weight table is for n = {f.n}, profile has n = {n}")
    k = np.arange(1, n)
    denom = (f.values * (n - k - 1) / (n - 1)).sum()
    if denom <= 0:
        raise ValueError("weight function has zero mass below k = n - 1")
    return float((f.values * profile.ar_adjusted).sum() / denom)


def item_agreement(profile: AgreementProfile, range_k, adjusted: bool = False) -> np.ndarray:
    """Per-item agreement averaged over a set of neighborhood sizes.

    Parameters
    ----------
    profile : AgreementProfile
        Must carry ``per_item`` rates.
    range_k : iterable of int
        Neighborhood sizes to average, each in ``1 .. n-1``.
    adjusted : bool
        Subtract the random expectation ``k / (n - 1)`` from each term.

    Returns
    -------
    ndarray of shape (n,)
    """
    if profile.per_item is None:
        raise ValueError("profile was computed without per-item rates")
    ks = np.asarray(list(range_k), dtype=int)
    if ks.size == 0:
        raise ValueError("range_k must not be empty")
    n = profile.n
    if ks.min() < 1 or ks.max() > n - 1:
        raise ValueError(f"range_k entries must lie in 1 .. {n - 1}")
    terms = profile.per_item[:, ks - 1]
    if adjusted:
        terms = terms - ks / (n - 1)
    return terms.mean(axis=1)


def partial_agreement(ab: float, az: float, bz: float) -> float:
    """Agreement between A and B with the contribution of Z partialed out.

    Takes three aggregate agreement values on a common scale (A vs B, A vs Z,
    B vs Z) and returns ``(ab - az*bz) / sqrt((1 - az^2)(1 - bz^2))``, the
    partial-correlation form.  ``|az|`` and ``|bz|`` must be < 1.
    """
    for name, v in (("ab", ab), ("az", az), ("bz", bz)):
        if not -1.0 <= v <= 1.0:
            raise ValueError(f"{name} = {v} lies outside [-1, 1]")
    if abs(az) >= 1.0 or abs(bz) >= 1.0:
        raise ValueError("partial agreement is undefined when |az| or |bz| is 1")
    return float((ab - az * bz) / math.sqrt((1.0 - az * az) * (1.0 - bz * bz)))


def co_ranking(rank_a: RankStructure, rank_b: RankStructure) -> CoRankingMatrix:
    """Joint histogram of A-ranks against B-ranks over all ordered pairs."""
    n = _check_pair(rank_a, rank_b)
    off = ~np.eye(n, dtype=bool)
    ra = rank_a.ranks[off] - 1
    rb = rank_b.ranks[off] - 1
    flat = ra * (n - 1) + rb
    omega = np.bincount(flat, minlength=(n - 1) * (n - 1)).reshape(n - 1, n - 1)
    return CoRankingMatrix(omega, n)


def classify_rank_movements(rank_a: RankStructure, rank_b: RankStructure,
                            k: int) -> RankMovementTally:
    """Tally hard/soft intrusions and extrusions at neighborhood boundary ``k``."""
    n = _check_pair(rank_a, rank_b)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in 1 .. {n - 1}")
    off = ~np.eye(n, dtype=bool)
    a = rank_a.ranks[off]
    b = rank_b.ranks[off]
    return RankMovementTally(
        k=k,
        n=n,
        hard_intrusions=int(((b <= k) & (k < a)).sum()),
        soft_intrusions=int(((b < a) & (a <= k)).sum()),
        hard_extrusions=int(((a <= k) & (k < b)).sum()),
        soft_extrusions=int(((a < b) & (b <= k)).sum()),
        unchanged=int(((a == b) & (a <= k)).sum()),
        outside=int(((a > k) & (b > k)).sum()),
    )
