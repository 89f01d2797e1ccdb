"""Multivariate dynamic time warping.

Symmetric step pattern (diagonal, vertical, horizontal; unit weights) with a
Euclidean point cost. The accumulated cost is kept in two rolling rows, so
memory is O(min(n, m)); no warping path is materialised, only its length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DimensionMismatch, InfeasibleBand, SeriesTooLong
from .preprocess import FeatureSeries

ORACLE_MAX_LEN = 7


@dataclass(frozen=True)
class DtwConfig:
    band_radius: int | None = None
    normalize_by_length: bool = True

    def __post_init__(self):
        if self.band_radius is not None:
            if int(self.band_radius) != self.band_radius or self.band_radius < 0:
                raise ValueError(f"band_radius must be a non-negative integer, got {self.band_radius}")
            object.__setattr__(self, "band_radius", int(self.band_radius))

    def to_dict(self) -> dict:
        return {"band_radius": self.band_radius, "normalize_by_length": self.normalize_by_length}

    @classmethod
    def from_dict(cls, d: dict) -> "DtwConfig":
        return cls(**d)


@dataclass(frozen=True)
class DtwResult:
    raw_distance: float
    normalized_distance: float
    path_length: int

    @property
    def distance(self) -> float:
        """The distance the rest of the pipeline consumes."""
        return self.normalized_distance


def local_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"vectors of dimension {a.size} and {b.size}")
    # same summation order as the compiled kernel
    acc = 0.0
    for ac, bc in zip(a.tolist(), b.tolist()):
        d = ac - bc
        acc += d * d
    return math.sqrt(acc)


@numba.njit(cache=True)
def _dtw_kernel(a, b, radius):
    # radius < 0 means unconstrained. Cell (i, j) lies in the band when its
    # offset from the stretched diagonal, measured along the longer series,
    # is at most radius: |i*(m-1) - j*(n-1)| <= radius * max(n-1, m-1).
    n, m, dim = a.shape[0], b.shape[0], a.shape[1]
    inf = np.inf
    span = max(n - 1, m - 1)
    prev = np.full(m, inf)
    cur = np.full(m, inf)
    prev_len = np.zeros(m, dtype=np.int64)
    cur_len = np.zeros(m, dtype=np.int64)
    for i in range(n):
        for j in range(m):
            if radius >= 0 and abs(i * (m - 1) - j * (n - 1)) > radius * span:
                cur[j] = inf
                cur_len[j] = 0
                continue
            acc = 0.0
            for c in range(dim):
                d = a[i, c] - b[j, c]
                acc += d * d
            cost = math.sqrt(acc)
            if i == 0 and j == 0:
                cur[j] = cost
                cur_len[j] = 1
                continue
            # predecessor preference on exact ties: diagonal, vertical, horizontal
            best = inf
            blen = 0
            if i > 0 and j > 0 and prev[j - 1] < best:
                best = prev[j - 1]
                blen = prev_len[j - 1]
            if i > 0 and prev[j] < best:
                best = prev[j]
                blen = prev_len[j]
            if j > 0 and cur[j - 1] < best:
                best = cur[j - 1]
                blen = cur_len[j - 1]
            cur[j] = cost + best
            cur_len[j] = blen + 1 if best < inf else 0
        prev, cur = cur, prev
        prev_len, cur_len = cur_len, prev_len
    return prev[m - 1], prev_len[m - 1]


def _as_matrix(series) -> np.ndarray:
    if isinstance(series, FeatureSeries):
        return series.points
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"series must be non-empty with shape (n, d), got {arr.shape}")
    return arr


def dtw_distance(A, B, cfg: DtwConfig | None = None) -> DtwResult:
    """DTW between two series (``FeatureSeries`` or array-likes of shape (n, d))."""
    cfg = cfg or DtwConfig()
    a, b = _as_matrix(A), _as_matrix(B)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"series dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    # iterate over the longer series so the rolling rows span the shorter one
    if b.shape[0] > a.shape[0]:
        a, b = b, a
    radius = -1 if cfg.band_radius is None else cfg.band_radius
    raw, path_len = _dtw_kernel(np.ascontiguousarray(a), np.ascontiguousarray(b), radius)
    if not math.isfinite(raw):
        raise InfeasibleBand(
            f"band radius {cfg.band_radius} admits no path for lengths {a.shape[0]}, {b.shape[0]}"
        )
    raw = float(raw)
    norm = raw / (a.shape[0] + b.shape[0]) if cfg.normalize_by_length else raw
    return DtwResult(raw, norm, int(path_len))


def dtw_bruteforce_oracle(A, B) -> float:
    """Minimum summed cost over every monotone alignment path, by enumeration."""
    a, b = _as_matrix(A), _as_matrix(B)
    n, m = a.shape[0], b.shape[0]
    if n > ORACLE_MAX_LEN or m > ORACLE_MAX_LEN:
        raise SeriesTooLong(f"oracle supports lengths <= {ORACLE_MAX_LEN}, got {n} and {m}")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"series dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    cost = [[local_distance(a[i], b[j]) for j in range(m)] for i in range(n)]
    best = math.inf

    def walk(i, j, acc):
        nonlocal best
        acc = acc + cost[i][j]
        if i == n - 1 and j == m - 1:
            best = min(best, acc)
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)

    walk(0, 0, 0.0)
    return best
