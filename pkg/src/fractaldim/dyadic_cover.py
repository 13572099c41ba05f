"""Dyadic-cube covering counts for finite point sets in [0, 1]^k.

Points are stored exactly as integer numerators over one common
denominator, so assigning a point to a cell of side ``2**-n`` is a floor
division and never misclassifies a point that sits on a cell boundary.
Cells are half-open, ``prod_i [m_i 2^-n, (m_i + 1) 2^-n)``, which makes
them tile space: every point lies in exactly one cell per level.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, UnsupportedDimensionError

# numerators * 2**level must stay below this to use int64 arithmetic
_INT64_BITS = 62


def to_fraction(value) -> Fraction:
    """Convert an int, float, Fraction or literal (``"0.3"``, ``"3/16"``) exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"non-finite coordinate {value!r}")
        return Fraction(value)
    return Fraction(value)


@dataclass(frozen=True)
class CubeKey:
    """A half-open dyadic cell of side ``2**-level``."""

    level: int
    coords: tuple[int, ...]

    def bounds(self) -> list[tuple[Fraction, Fraction]]:
        side = Fraction(1, 2**self.level) if self.level >= 0 else Fraction(2 ** (-self.level))
        return [(m * side, (m + 1) * side) for m in self.coords]

    def contains(self, point: Sequence) -> bool:
        return all(lo <= to_fraction(x) < hi for x, (lo, hi) in zip(point, self.bounds()))


class PointCloud:
    """An immutable finite set of points in [0, 1]^k with exact coordinates.

    ``nums`` has shape ``(N, k)`` and holds integer numerators over the
    common denominator ``den``. Duplicate points are kept; they never
    change a cell count.
    """

    __slots__ = ("_nums", "_den")

    def __init__(self, nums: np.ndarray, den: int):
        nums = np.asarray(nums)
        if nums.ndim != 2 or nums.shape[1] < 1:
            raise DomainError("point array must have shape (N, k) with k >= 1")
        den = int(den)
        if den <= 0:
            raise DomainError("denominator must be positive")
        if nums.size and (nums.min() < 0 or nums.max() > den):
            raise DomainError("coordinates must lie in [0, 1]")
        if nums.dtype != object and den.bit_length() >= _INT64_BITS:
            nums = nums.astype(object)
        nums.setflags(write=False)
        self._nums = nums
        self._den = den

    @classmethod
    def from_points(cls, points: Iterable[Sequence], dim: int | None = None) -> "PointCloud":
        rows = [tuple(to_fraction(x) for x in p) for p in points]
        if not rows:
            if dim is None:
                raise DomainError("cannot infer the dimension of an empty cloud")
            return cls(np.zeros((0, dim), dtype=np.int64), 1)
        k = len(rows[0])
        if any(len(r) != k for r in rows):
            raise DomainError("all points must have the same dimension")
        den = reduce(math.lcm, (x.denominator for r in rows for x in r), 1)
        flat = [x.numerator * (den // x.denominator) for r in rows for x in r]
        if den.bit_length() < _INT64_BITS:
            nums = np.array(flat, dtype=np.int64).reshape(len(rows), k)
        else:
            nums = np.empty(len(flat), dtype=object)
            nums[:] = flat
            nums = nums.reshape(len(rows), k)
        return cls(nums, den)

    @property
    def nums(self) -> np.ndarray:
        return self._nums

    @property
    def den(self) -> int:
        return self._den

    @property
    def dim(self) -> int:
        return self._nums.shape[1]

    def __len__(self) -> int:
        return self._nums.shape[0]

    def points(self) -> list[tuple[Fraction, ...]]:
        return [tuple(Fraction(int(v), self._den) for v in row) for row in self._nums]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return sorted(self.points()) == sorted(other.points())

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)}, dim={self.dim}, den={self._den})"

    def cell_indices(self, level: int) -> np.ndarray:
        """Integer cell coordinates of every point at ``level`` (floor(x * 2**level))."""
        nums, den = self._nums, self._den
        if level >= 0:
            if nums.dtype != object and den.bit_length() + level < _INT64_BITS:
                return (nums << level) // den
            return (nums.astype(object) * (1 << level)) // den
        return nums // (den << (-level))


def level_for_epsilon(eps) -> int:
    """The unique integer n with ``2**-(n+1) < eps <= 2**-n``."""
    eps = to_fraction(eps)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    p, q = eps.numerator, eps.denominator
    n = q.bit_length() - p.bit_length()

    def fits(k: int) -> bool:  # eps <= 2**-k  <=>  p * 2**k <= q
        return (p << k) <= q if k >= 0 else p <= (q << -k)

    while not fits(n):
        n -= 1
    while fits(n + 1):
        n += 1
    return n


def _count_unique_rows(cells: np.ndarray, level: int) -> int:
    if cells.shape[0] == 0:
        return 0
    k = cells.shape[1]
    if cells.dtype != object:
        if k == 1:
            return int(np.unique(cells[:, 0]).size)
        lo = int(cells.min())
        span = int(cells.max()) - lo + 1
        if span ** k < 2**62:
            shifted = cells - lo
            keys = shifted[:, 0].copy()
            for j in range(1, k):
                keys = keys * span + shifted[:, j]
            return int(np.unique(keys).size)
        return int(np.unique(cells, axis=0).shape[0])
    return len({tuple(int(v) for v in row) for row in cells})


def occupied_cells(cloud: PointCloud, level: int) -> set[CubeKey]:
    """Every CubeKey at ``level`` holding at least one point of ``cloud``."""
    return {CubeKey(level, tuple(int(v) for v in row)) for row in cloud.cell_indices(level)}


def count_at_level(cloud: PointCloud, level: int) -> int:
    """Number of occupied half-open dyadic cells of side ``2**-level``."""
    if len(cloud) == 0:
        raise DomainError("covering number of the empty set is undefined")
    return _count_unique_rows(cloud.cell_indices(level), level)


def dyadic_count(cloud: PointCloud, eps) -> int:
    """S_A(eps): the minimal number of level-n dyadic cells covering the cloud."""
    return count_at_level(cloud, level_for_epsilon(eps))


def grid_count(cloud: PointCloud, base: int, level: int) -> int:
    """Occupied cells of the base-``base`` grid with side ``base**-level``."""
    if len(cloud) == 0:
        raise DomainError("covering number of the empty set is undefined")
    nums = cloud.nums.astype(object)
    cells = (nums * base**level) // cloud.den
    return len({tuple(int(v) for v in row) for row in cells})


def _greedy_cover_1d(cloud: PointCloud, length: Fraction) -> int:
    if cloud.dim != 1:
        raise UnsupportedDimensionError(f"exact interval covers need k = 1, got k = {cloud.dim}")
    if len(cloud) == 0:
        raise DomainError("covering number of the empty set is undefined")
    xs = sorted(set(int(v) for v in cloud.nums[:, 0]))
    # x_j is covered by [x_s, x_s + length]  <=>  (x_j - x_s) * q <= p * den
    p, q = length.numerator, length.denominator
    reach = p * cloud.den
    count = 0
    i = 0
    while i < len(xs):
        start = xs[i]
        count += 1
        while i < len(xs) and (xs[i] - start) * q <= reach:
            i += 1
    return count


def ball_cover_1d(cloud: PointCloud, eps) -> int:
    """Minimal number of closed radius-``eps`` balls (intervals of length 2 eps) covering the cloud.

    The greedy sweep is optimal on the line: anchor an interval at the
    leftmost uncovered point and repeat.
    """
    eps = to_fraction(eps)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return _greedy_cover_1d(cloud, 2 * eps)


def cube_cover_1d(cloud: PointCloud, eps) -> int:
    """Minimal number of closed intervals of side ``eps`` covering the cloud."""
    eps = to_fraction(eps)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return _greedy_cover_1d(cloud, eps)


@dataclass(frozen=True)
class SandwichReport:
    eps: Fraction
    level: int
    cube_count: int  # N_A(eps): side-eps intervals
    ball_count: int  # radius-eps balls
    dyadic: int  # S_A(eps)
    constant: int  # 2**k
    passed: bool


def sandwich_check(cloud: PointCloud, eps) -> SandwichReport:
    """Check ``N(eps) <= S(eps) <= 2**k N(eps)`` with N the side-eps cube cover.

    The bound is guaranteed at dyadic eps; off the dyadic grid the lower
    inequality can fail and the report says so.
    """
    eps = to_fraction(eps)
    n_cube = cube_cover_1d(cloud, eps)
    n_ball = ball_cover_1d(cloud, eps)
    s = dyadic_count(cloud, eps)
    constant = 2**cloud.dim
    return SandwichReport(
        eps=eps,
        level=level_for_epsilon(eps),
        cube_count=n_cube,
        ball_count=n_ball,
        dyadic=s,
        constant=constant,
        passed=n_cube <= s <= constant * n_cube,
    )


def product_cloud(a: PointCloud, b: PointCloud) -> PointCloud:
    """Cartesian product; the result lives in dimension ``a.dim + b.dim``."""
    if len(a) == 0 or len(b) == 0:
        raise DomainError("product factors must be non-empty")
    den = math.lcm(a.den, b.den)
    use_obj = den.bit_length() >= _INT64_BITS or a.nums.dtype == object or b.nums.dtype == object
    an = a.nums.astype(object) if use_obj else a.nums
    bn = b.nums.astype(object) if use_obj else b.nums
    an = an * (den // a.den)
    bn = bn * (den // b.den)
    left = np.repeat(an, len(b), axis=0)
    right = np.tile(bn, (len(a), 1))
    return PointCloud(np.hstack([left, right]), den)


def _format_coord(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def write_csv(cloud: PointCloud, comments: Sequence[str] = ()) -> str:
    """Serialize as CSV with header ``x1,...,xk`` and exact ``p/q`` entries."""
    out = io.StringIO()
    for line in comments:
        out.write(f"# {line}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(cloud.dim)])
    for row in cloud.points():
        writer.writerow([_format_coord(x) for x in row])
    return out.getvalue()


def read_csv(text: str) -> PointCloud:
    """Parse a point-cloud CSV; ``#`` lines are comments, decimals are read exactly."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DomainError("point-cloud CSV has no header")
    reader = csv.reader(lines)
    header = next(reader)
    k = len(header)
    if [h.strip() for h in header] != [f"x{i + 1}" for i in range(k)]:
        raise DomainError(f"bad header {header!r}; expected x1,...,x{k}")
    rows = []
    for row in reader:
        if len(row) != k:
            raise DomainError(f"row {row!r} has {len(row)} columns, expected {k}")
        try:
            rows.append([Fraction(v.strip()) for v in row])
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"bad coordinate in row {row!r}: {exc}") from None
    return PointCloud.from_points(rows, dim=k)


def random_cloud(rng: np.random.Generator, n_points: int, dim: int = 1,
                 den: int | None = None) -> PointCloud:
    """Seeded random cloud on a rational grid; small grids make cell-boundary hits common."""
    if n_points < 1 or dim < 1:
        raise DomainError("need at least one point and one coordinate")
    if den is None:
        den = int(rng.choice([2**14, 3 * 2**10, 1000, 7**5, 2**20 + 1, 96]))
    nums = rng.integers(0, den + 1, size=(n_points, dim), dtype=np.int64)
    return PointCloud(nums, den)
