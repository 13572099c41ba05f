"""Box-counting dimension estimates from point clouds.

Cell keys are computed once at the finest level; coarser levels reuse them
by right-shifting, since ``floor(x 2^n) >> j == floor(x 2^(n-j))``.
"""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import linregress

from .dyadic_cover import PointCloud, _count_unique_rows
from .errors import DomainError, FitError, FitWindowError, ResourceError

MAX_LEVEL = 4096


@dataclass(frozen=True)
class ScaleTable:
    levels: tuple[int, ...]
    counts: tuple[int, ...]
    dim: int

    @property
    def eps(self) -> tuple[float, ...]:
        return tuple(2.0**-n for n in self.levels)

    def count(self, level: int) -> int:
        return self.counts[self.levels.index(level)]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("level,eps,count\n")
        for n, c in zip(self.levels, self.counts):
            out.write(f"{n},{2.0**-n!r},{c}\n")
        return out.getvalue()


def scale_table(cloud: PointCloud, n_min: int, n_max: int, max_level: int = MAX_LEVEL) -> ScaleTable:
    """Occupied dyadic-cell counts at every level ``n_min..n_max``."""
    if not 0 <= n_min < n_max:
        raise DomainError(f"need 0 <= n_min < n_max, got {n_min}, {n_max}")
    if n_max > max_level:
        raise ResourceError(f"level {n_max} exceeds the key budget (max level {max_level})", n_max)
    if len(cloud) == 0:
        raise DomainError("covering number of the empty set is undefined")
    keys = cloud.cell_indices(n_max)
    if keys.dtype == object and n_max <= 61:
        keys = keys.astype(np.int64)  # keys are at most 2**n_max even when numerators are huge
    counts = []
    for n in range(n_min, n_max + 1):
        shifted = keys >> (n_max - n)
        counts.append(_count_unique_rows(shifted, n))
    return ScaleTable(tuple(range(n_min, n_max + 1)), tuple(counts), cloud.dim)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    levels_used: tuple[int, int]  # inclusive
    stderr: float

    def to_json(self) -> dict:
        out = asdict(self)
        out["levels_used"] = list(self.levels_used)
        return out


def fit_dimension(table: ScaleTable, window: tuple[int, int] | None = None) -> SlopeFit:
    """OLS of ``log count`` on ``n log 2`` over the inclusive level window."""
    lo, hi = window if window is not None else (table.levels[0], table.levels[-1])
    rows = [(n, c) for n, c in zip(table.levels, table.counts) if lo <= n <= hi]
    if len(rows) < 3:
        raise FitError(f"window {lo}..{hi} has {len(rows)} levels; need at least 3")
    n = np.array([r[0] for r in rows], dtype=float)
    c = np.array([r[1] for r in rows], dtype=float)
    if (c < 1).any():
        raise FitError("counts must be >= 1")
    x = n * math.log(2)
    y = np.log(c)
    if np.ptp(y) == 0:
        # a constant line: the slope is exactly zero and the fit is perfect
        return SlopeFit(0.0, float(y[0]), 1.0, (int(n[0]), int(n[-1])), 0.0)
    res = linregress(x, y)
    return SlopeFit(float(res.slope), float(res.intercept), float(res.rvalue**2),
                    (int(n[0]), int(n[-1])), float(res.stderr))


def saturation_window(table: ScaleTable, cloud_size: int) -> tuple[int, int]:
    """Longest run of consecutive levels with ``2 < count < cloud_size**0.9``."""
    best: tuple[int, int] | None = None
    start = None
    for i, (n, c) in enumerate(zip(table.levels, table.counts)):
        ok = c > 2 and c**10 < cloud_size**9  # c < N^0.9, exactly
        if ok and start is None:
            start = i
        if start is not None and (not ok or i == len(table.levels) - 1):
            end = i if ok else i - 1
            if best is None or end - start > best[1] - best[0]:
                best = (start, end)
            start = None
    if best is None or best[1] - best[0] + 1 < 3:
        raise FitWindowError("no window of 3 unsaturated levels; sample the set more deeply")
    return table.levels[best[0]], table.levels[best[1]]


def estimate_dimension(cloud: PointCloud, n_max: int | None = None) -> tuple[ScaleTable, SlopeFit]:
    """Scale table up to ``n_max`` (default: enough levels to saturate) and the windowed fit."""
    if n_max is None:
        n_max = max(8, min(MAX_LEVEL, 2 * max(1, len(cloud)).bit_length() + 4))
    table = scale_table(cloud, 0, n_max)
    return table, fit_dimension(table, saturation_window(table, len(cloud)))
