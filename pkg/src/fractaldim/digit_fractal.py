"""Digit-restricted subsets of [0, 1] with exact covering numbers.

A schedule describes which base-``d`` digits may appear at each position
of an expansion ``x = sum_i a_i d^-i``. At scale ``d^-(m+1) < eps <= d^-m``
the covering number is the number of distinct admissible length-``m``
digit prefixes. Every schedule reports that count symbolically, as a list
of ``(factor, multiplicity)`` pairs whose product is the count, so counts
of astronomically deep levels never have to be materialized.

Schedule kinds:

* :class:`Constant`: ``f`` admissible digits at every position.
* :class:`Blocks`: digits taken in blocks of length ``s``, with an explicit
  list of admissible block strings or a positionwise digit pattern.
* :class:`Partition`: the digit positions are split into alternating blocks
  ``A_1, B_1, A_2, B_2, ...``; role ``A`` frees the digits on the ``A``
  blocks and forces ``0`` on the ``B`` blocks (role ``B`` is the mirror).
* :class:`ExplicitPrefix`: explicit per-position freedoms, then a constant tail.
* :class:`Product`: the Cartesian product of schedules over one base.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import math
import threading
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .dyadic_cover import PointCloud, product_cloud
from .errors import DomainError, ResourceError, ScheduleTypeError

DEFAULT_PREC = 53 + 64
_MAX_COUNT_BITS = 1 << 24


def dlog(x: int, d: int) -> int | None:
    """Return j with ``x == d**j``, or None."""
    if x < 1:
        return None
    j = 0
    while x % d == 0:
        x //= d
        j += 1
    return j if x == 1 else None


def _log(x: int, prec: int = DEFAULT_PREC) -> float:
    with mpmath.workprec(prec):
        return float(mpmath.log(x))


def _check_base(base: int) -> int:
    if not isinstance(base, (int, np.integer)) or base < 2:
        raise DomainError(f"base must be an integer >= 2, got {base!r}")
    return int(base)


class PartitionSchedule:
    """Alternating block lengths ``|A_1|, |B_1|, |A_2|, |B_2|, ...`` partitioning 1, 2, 3, ...

    Blocks are generated lazily and memoized. Extension happens under a lock,
    so concurrent readers always see a consistent, append-only prefix.

    ``generator="ngrowth"`` follows ``|A_{n+1}| = n T_n`` and
    ``|B_{n+1}| = n (T_n + |A_{n+1}|)`` with ``T_n`` the number of positions in
    the first ``n`` block pairs. ``generator="explicit"`` cycles through the
    given list of lengths forever.
    """

    def __init__(self, generator: str = "ngrowth", seed_a: int = 1, seed_b: int = 1,
                 lengths: Sequence[int] | None = None):
        if generator == "ngrowth":
            if seed_a < 1 or seed_b < 1:
                raise DomainError("ngrowth seeds must be >= 1")
            self._seed = (int(seed_a), int(seed_b))
            self._pattern: tuple[int, ...] | None = None
        elif generator == "explicit":
            if not lengths or any(int(x) < 1 for x in lengths):
                raise DomainError("explicit block lengths must be a non-empty list of positive integers")
            self._seed = None
            self._pattern = tuple(int(x) for x in lengths)
        else:
            raise DomainError(f"unknown partition generator {generator!r}")
        self.generator = generator
        self._lengths: list[int] = []
        self._ends: list[int] = []  # last position of each block
        self._a_cum: list[int] = []  # A positions within blocks 0..j
        self._lock = threading.Lock()

    @property
    def seeds(self) -> tuple[int, int] | None:
        return self._seed

    @property
    def pattern(self) -> tuple[int, ...] | None:
        return self._pattern

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionSchedule):
            return NotImplemented
        return (self.generator, self._seed, self._pattern) == (other.generator, other._seed, other._pattern)

    def __hash__(self) -> int:
        return hash((self.generator, self._seed, self._pattern))

    def __repr__(self) -> str:
        if self.generator == "ngrowth":
            return f"PartitionSchedule(ngrowth, seeds={self._seed})"
        return f"PartitionSchedule(explicit, lengths={list(self._pattern)})"

    def _next_length(self, j: int) -> int:
        if self._pattern is not None:
            return self._pattern[j % len(self._pattern)]
        if j < 2:
            return self._seed[j]
        n = j // 2  # completed pairs
        total = self._ends[2 * n - 1]
        if j % 2 == 0:
            return n * total
        return n * (total + self._lengths[j - 1])

    def _append(self, count: int) -> None:
        with self._lock:
            for _ in range(count):
                j = len(self._lengths)
                length = self._next_length(j)
                prev_end = self._ends[-1] if self._ends else 0
                prev_a = self._a_cum[-1] if self._a_cum else 0
                self._lengths.append(length)
                self._ends.append(prev_end + length)
                self._a_cum.append(prev_a + (length if j % 2 == 0 else 0))

    def ensure_blocks(self, n_blocks: int) -> None:
        missing = n_blocks - len(self._lengths)
        if missing > 0:
            self._append(missing)

    def ensure_level(self, m: int) -> None:
        while not self._ends or self._ends[-1] < m:
            self._append(1)

    def block_length(self, j: int) -> int:
        """Length of block ``j`` in the order A_1, B_1, A_2, ... (0-based)."""
        self.ensure_blocks(j + 1)
        return self._lengths[j]

    def block_end(self, j: int) -> int:
        self.ensure_blocks(j + 1)
        return self._ends[j]

    def a_lengths(self, n: int) -> list[int]:
        self.ensure_blocks(2 * n)
        return self._lengths[0:2 * n:2]

    def b_lengths(self, n: int) -> list[int]:
        self.ensure_blocks(2 * n)
        return self._lengths[1:2 * n:2]

    def role_ends(self, role: str, n: int) -> list[int]:
        """Last positions of the first ``n`` blocks of ``role``."""
        off = _role_offset(role)
        self.ensure_blocks(2 * n)
        return self._ends[off:2 * n:2]

    def ends_upto(self, m: int) -> list[int]:
        """All block ends ``<= m``, in order."""
        self.ensure_level(m)
        return self._ends[:bisect.bisect_right(self._ends, m)]

    def role_of(self, i: int) -> str:
        """Which family (``"A"`` or ``"B"``) position ``i >= 1`` belongs to."""
        if i < 1:
            raise DomainError("positions start at 1")
        self.ensure_level(i)
        return "A" if bisect.bisect_left(self._ends, i) % 2 == 0 else "B"

    def freedom(self, role: str, m: int) -> int:
        """``f_role(m)``: number of positions of ``role`` blocks within 1..m."""
        off = _role_offset(role)
        if m < 0:
            raise DomainError("m must be >= 0")
        if m == 0:
            return 0
        self.ensure_level(m)
        j = bisect.bisect_left(self._ends, m)
        prev_end = self._ends[j - 1] if j else 0
        f_a = (self._a_cum[j - 1] if j else 0) + (m - prev_end if j % 2 == 0 else 0)
        return f_a if off == 0 else m - f_a

    def freedom_array(self, role: str, ms: np.ndarray) -> np.ndarray:
        ms = np.asarray(ms)
        if ms.size == 0:
            return np.zeros(0, dtype=np.int64)
        top = int(ms.max())
        self.ensure_level(top)
        if ms.dtype == object or top >= 2**62:
            return np.array([self.freedom(role, int(m)) for m in ms.ravel()], dtype=object).reshape(ms.shape)
        # blocks past the first end >= top are never consulted; clip so int64 suffices
        k = bisect.bisect_left(self._ends, top) + 1
        ends = np.array([min(e, 2**62) for e in self._ends[:k]], dtype=np.int64)
        a_cum = np.array([min(a, 2**62) for a in self._a_cum[:k]], dtype=np.int64)
        j = np.searchsorted(ends, ms, side="left")
        prev_end = np.where(j > 0, ends[np.maximum(j - 1, 0)], 0)
        prev_a = np.where(j > 0, a_cum[np.maximum(j - 1, 0)], 0)
        f_a = prev_a + np.where(j % 2 == 0, ms - prev_end, 0)
        f_a = np.where(ms <= 0, 0, f_a)
        return f_a if _role_offset(role) == 0 else ms - f_a

    def limit_fraction(self, role: str) -> Fraction | None:
        """Limiting share of ``role`` positions, when the partition is periodic."""
        if self._pattern is None:
            return None
        cycle = self._pattern * (2 if len(self._pattern) % 2 else 1)
        a = sum(cycle[0::2])
        frac = Fraction(a, sum(cycle))
        return frac if _role_offset(role) == 0 else 1 - frac


def _role_offset(role: str) -> int:
    if role == "A":
        return 0
    if role == "B":
        return 1
    raise DomainError(f"role must be 'A' or 'B', got {role!r}")


def make_ngrowth(seed_a: int = 1, seed_b: int = 1) -> PartitionSchedule:
    return PartitionSchedule("ngrowth", seed_a, seed_b)


class DigitSchedule:
    """Common interface of all schedule kinds."""

    base: int
    ambient_dim: int = 1
    kind: str = ""

    def count_terms(self, m: int) -> list[tuple[int, int]]:
        raise NotImplementedError

    def allowed_digits(self, i: int) -> tuple[int, ...]:
        raise ScheduleTypeError(f"{self.kind} schedules have no positionwise digit sets")

    def freedom(self, i: int) -> int:
        """Number of admissible digits at position ``i >= 1``."""
        return len(self.allowed_digits(i))

    def exponent_array(self, ms: np.ndarray) -> np.ndarray | None:
        """Exact ``log_d count(m)`` for each m, or None if counts are not powers of d."""
        return None

    def log_count_array(self, ms: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def analytic_dimension(self) -> float | None:
        """The Minkowski dimension when the schedule structure guarantees it exists."""
        return None

    def to_json(self) -> dict:
        raise NotImplementedError

    @property
    def positionwise(self) -> bool:
        return True

    def partitions(self) -> list[tuple[PartitionSchedule, str]]:
        return []


@dataclass(frozen=True, eq=True)
class Constant(DigitSchedule):
    base: int
    f: int
    digits: tuple[int, ...] | None = None
    kind = "constant"

    def __post_init__(self):
        _check_base(self.base)
        if not 1 <= self.f <= self.base:
            raise DomainError(f"need 1 <= f <= base, got f={self.f}, base={self.base}")
        if self.digits is not None:
            digits = tuple(sorted(set(int(x) for x in self.digits)))
            if len(digits) != self.f or digits[0] < 0 or digits[-1] >= self.base:
                raise DomainError(f"digits {self.digits} do not give {self.f} distinct base-{self.base} digits")
            object.__setattr__(self, "digits", digits)

    def count_terms(self, m):
        return [(self.f, m)]

    def allowed_digits(self, i):
        return self.digits if self.digits is not None else tuple(range(self.f))

    def exponent_array(self, ms):
        j = dlog(self.f, self.base)
        return None if j is None else j * np.asarray(ms)

    def log_count_array(self, ms):
        return np.asarray(ms, dtype=float) * _log(self.f)

    def analytic_dimension(self):
        return ratio_log(self, 1)

    def to_json(self):
        out = {"base": self.base, "kind": "constant", "f": self.f}
        if self.digits is not None:
            out["digits"] = list(self.digits)
        return out


@dataclass(frozen=True, eq=True)
class Blocks(DigitSchedule):
    """Digits in blocks of ``block_len``; ``strings`` or ``positions`` says which blocks are allowed.

    ``strings`` lists admissible block strings explicitly. ``positions`` gives
    the admissible digits of each position within the block (the
    positionwise encoding); exactly one of the two is set.
    """

    base: int
    block_len: int
    strings: tuple[tuple[int, ...], ...] | None = None
    positions: tuple[tuple[int, ...], ...] | None = None
    kind = "blocks"

    def __post_init__(self):
        _check_base(self.base)
        s = self.block_len
        if s < 1:
            raise DomainError("block_len must be >= 1")
        if (self.strings is None) == (self.positions is None):
            raise DomainError("give exactly one of strings or positions")
        if self.strings is not None:
            strings = tuple(sorted(set(tuple(int(c) for c in st) for st in self.strings)))
            if not strings:
                raise DomainError("need at least one allowed block string")
            for st in strings:
                if len(st) != s or any(not 0 <= c < self.base for c in st):
                    raise DomainError(f"block string {st} is not a length-{s} base-{self.base} string")
            object.__setattr__(self, "strings", strings)
            prefixes = tuple(len({st[:p] for st in strings}) for p in range(s + 1))
        else:
            pos = tuple(tuple(sorted(set(int(c) for c in p))) for p in self.positions)
            if len(pos) != s or any(not p or p[0] < 0 or p[-1] >= self.base for p in pos):
                raise DomainError(f"positions must list {s} non-empty base-{self.base} digit sets")
            object.__setattr__(self, "positions", pos)
            prefixes = tuple(math.prod(len(p) for p in pos[:q]) for q in range(s + 1))
        object.__setattr__(self, "_prefix_counts", prefixes)

    @property
    def n_strings(self) -> int:
        return self._prefix_counts[-1]

    @property
    def positionwise(self) -> bool:
        return self.positions is not None

    def prefix_count(self, p: int) -> int:
        return self._prefix_counts[p]

    def count_terms(self, m):
        q, p = divmod(m, self.block_len)
        return [(self.n_strings, q), (self._prefix_counts[p], 1)]

    def allowed_digits(self, i):
        if self.positions is None:
            raise ScheduleTypeError("explicit block strings have no positionwise digit sets")
        return self.positions[(i - 1) % self.block_len]

    def exponent_array(self, ms):
        ex = [dlog(c, self.base) for c in self._prefix_counts]
        if any(e is None for e in ex):
            return None
        ms = np.asarray(ms)
        q, p = np.divmod(ms, self.block_len)
        return q * ex[-1] + np.asarray(ex, dtype=np.int64)[p]

    def log_count_array(self, ms):
        ms = np.asarray(ms)
        logs = np.array([_log(c) for c in self._prefix_counts])
        q, p = np.divmod(ms, self.block_len)
        return q * logs[-1] + logs[p]

    def analytic_dimension(self):
        with mpmath.workprec(DEFAULT_PREC):
            return float(mpmath.log(self.n_strings) / (self.block_len * mpmath.log(self.base)))

    def to_json(self):
        out = {"base": self.base, "kind": "blocks", "block_len": self.block_len}
        if self.strings is not None:
            out["allowed_strings"] = [list(st) for st in self.strings]
        else:
            out["position_digits"] = [list(p) for p in self.positions]
        return out


@dataclass(frozen=True, eq=True)
class Partition(DigitSchedule):
    """Digits free (any of ``base`` values) on the blocks of ``role``, forced to 0 elsewhere."""

    partition: PartitionSchedule
    role: str
    base: int = 2
    preview_blocks: int | None = None
    kind = "partition"

    def __post_init__(self):
        _check_base(self.base)
        _role_offset(self.role)

    def f(self, m: int) -> int:
        return self.partition.freedom(self.role, m)

    def count_terms(self, m):
        return [(self.base, self.f(m))]

    def allowed_digits(self, i):
        return tuple(range(self.base)) if self.partition.role_of(i) == self.role else (0,)

    def exponent_array(self, ms):
        return self.partition.freedom_array(self.role, ms)

    def log_count_array(self, ms):
        return self.exponent_array(ms).astype(float) * _log(self.base)

    def analytic_dimension(self):
        frac = self.partition.limit_fraction(self.role)
        return None if frac is None else float(frac)

    def partitions(self):
        return [(self.partition, self.role)]

    def to_json(self):
        p = self.partition
        out = {"base": self.base, "kind": "partition", "role": self.role}
        if p.generator == "ngrowth":
            out.update(generator="ngrowth", seed_a=p.seeds[0], seed_b=p.seeds[1])
        else:
            out.update(generator="explicit", lengths=list(p.pattern))
        if self.preview_blocks is not None:
            out["preview_blocks"] = self.preview_blocks
            out["a_lengths"] = p.a_lengths(self.preview_blocks)
            out["b_lengths"] = p.b_lengths(self.preview_blocks)
        return out


@dataclass(frozen=True, eq=True)
class ExplicitPrefix(DigitSchedule):
    """Freedoms ``prefix[0], prefix[1], ...`` at positions 1, 2, ..., then ``tail_f`` forever."""

    base: int
    prefix: tuple[int, ...]
    tail_f: int
    kind = "explicit"

    def __post_init__(self):
        _check_base(self.base)
        object.__setattr__(self, "prefix", tuple(int(x) for x in self.prefix))
        for f in self.prefix + (self.tail_f,):
            if not 1 <= f <= self.base:
                raise DomainError(f"freedom {f} outside 1..{self.base}")

    def freedom(self, i):
        return self.prefix[i - 1] if i <= len(self.prefix) else self.tail_f

    def allowed_digits(self, i):
        return tuple(range(self.freedom(i)))

    def count_terms(self, m):
        head = Counter(self.prefix[:m])
        if m > len(self.prefix):
            head[self.tail_f] += m - len(self.prefix)
        return sorted(head.items())

    def exponent_array(self, ms):
        ex = [dlog(f, self.base) for f in self.prefix + (self.tail_f,)]
        if any(e is None for e in ex):
            return None
        cum = np.concatenate([[0], np.cumsum(ex[:-1], dtype=np.int64)])
        ms = np.asarray(ms)
        n = len(self.prefix)
        return np.where(ms <= n, cum[np.minimum(ms, n)], cum[n] + (ms - n) * ex[-1])

    def log_count_array(self, ms):
        logs = [_log(f) for f in self.prefix]
        cum = np.concatenate([[0.0], np.cumsum(logs)])
        ms = np.asarray(ms)
        n = len(self.prefix)
        return np.where(ms <= n, cum[np.minimum(ms, n)], cum[n] + (ms - n) * _log(self.tail_f))

    def analytic_dimension(self):
        return ratio_log(Constant(self.base, self.tail_f), 1)

    def to_json(self):
        return {"base": self.base, "kind": "explicit", "prefix": list(self.prefix), "tail_f": self.tail_f}


@dataclass(frozen=True, eq=True)
class Product(DigitSchedule):
    """Cartesian product of schedules sharing one base; lives in ``R^k`` with k the factor count."""

    factors: tuple[DigitSchedule, ...]
    kind = "product"

    def __post_init__(self):
        flat: list[DigitSchedule] = []
        for f in self.factors:
            flat.extend(f.factors if isinstance(f, Product) else [f])
        if not flat:
            raise DomainError("a product needs at least one factor")
        bases = {f.base for f in flat}
        if len(bases) != 1:
            raise DomainError(f"product factors use different bases {sorted(bases)}; no common grid")
        object.__setattr__(self, "factors", tuple(flat))

    @property
    def base(self) -> int:
        return self.factors[0].base

    @property
    def ambient_dim(self) -> int:
        return sum(f.ambient_dim for f in self.factors)

    @property
    def positionwise(self) -> bool:
        return False

    def count_terms(self, m):
        return [t for f in self.factors for t in f.count_terms(m)]

    def exponent_array(self, ms):
        parts = [f.exponent_array(ms) for f in self.factors]
        if any(p is None for p in parts):
            return None
        return sum(parts[1:], parts[0])

    def log_count_array(self, ms):
        return sum(f.log_count_array(ms) for f in self.factors)

    def analytic_dimension(self):
        dims = [f.analytic_dimension() for f in self.factors]
        return None if any(d is None for d in dims) else math.fsum(dims)

    def partitions(self):
        return [p for f in self.factors for p in f.partitions()]

    def to_json(self):
        return {"base": self.base, "kind": "product", "factors": [f.to_json() for f in self.factors]}


def cantor() -> Constant:
    """The middle-thirds Cantor set: base 3, digits {0, 2}."""
    return Constant(3, 2, digits=(0, 2))


def point_schedule(base: int) -> Constant:
    """The single point 0."""
    return Constant(base, 1)


def product_schedule(a: DigitSchedule, b: DigitSchedule) -> Product:
    if a.base != b.base:
        raise DomainError(f"cannot multiply schedules over bases {a.base} and {b.base}")
    return Product((a, b))


def _check_m(m: int) -> int:
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    return int(m)


def covering_count(sched: DigitSchedule, m: int) -> int:
    """Exact covering count at scale ``d^-m``: the product of the count terms."""
    m = _check_m(m)
    terms = sched.count_terms(m)
    bits = sum(mult * max(f, 1).bit_length() for f, mult in terms)
    if bits > _MAX_COUNT_BITS:
        raise ResourceError(f"count at m={m} has about {bits} bits; use covering_exponent or ratio_log", bits)
    return math.prod(f**mult for f, mult in terms)


def covering_exponent(sched: DigitSchedule, m: int) -> int:
    """The exponent e with covering count ``d**e``.

    Raises ScheduleTypeError when the count is not a power of the base
    (for example the Cantor set, whose count is ``2**m`` in base 3).
    """
    m = _check_m(m)
    total = 0
    for f, mult in sched.count_terms(m):
        j = dlog(f, sched.base)
        if j is None:
            raise ScheduleTypeError(f"count factor {f} is not a power of base {sched.base}; use covering_count")
        total += j * mult
    return total


@dataclass(frozen=True)
class FreedomCount:
    prefix_len: int
    count: int


def freedom_count(sched: Partition, m: int) -> FreedomCount:
    if not isinstance(sched, Partition):
        raise ScheduleTypeError("freedom counts are defined for partition schedules")
    return FreedomCount(m, sched.f(m))


def ratio(sched: DigitSchedule, m: int) -> Fraction:
    """Exact ``log N / log(1/eps) = e / m`` at scale ``d^-m`` when ``N = d**e``."""
    m = _check_m(m)
    return Fraction(covering_exponent(sched, m), m)


def ratio_log(sched: DigitSchedule, m: int, prec: int = DEFAULT_PREC) -> float:
    """``log count(m) / log(d**m)``, exact when counts are powers of d, else mpmath at ``prec`` bits."""
    m = _check_m(m)
    terms = sched.count_terms(m)
    d = sched.base
    exps = [dlog(f, d) for f, _ in terms]
    if all(e is not None for e in exps):
        return sum(e * mult for e, (_, mult) in zip(exps, terms)) / m
    with mpmath.workprec(prec):
        total = mpmath.fsum(mult * mpmath.log(f) for f, mult in terms if f > 1)
        return float(total / (m * mpmath.log(d)))


def ratio_log_array(sched: DigitSchedule, ms) -> np.ndarray:
    """Vectorized :func:`ratio_log` in float64 over an array of levels."""
    ms = np.asarray(ms)
    if ms.dtype == object:
        return np.array([ratio_log(sched, int(m)) for m in ms], dtype=float)
    if ms.size and ms.min() < 1:
        raise DomainError("levels must be >= 1")
    ex = sched.exponent_array(ms)
    if ex is not None:
        if np.asarray(ex).dtype == object:
            return np.array([int(e) / int(m) for e, m in zip(ex, ms)], dtype=float)
        return ex / ms
    return sched.log_count_array(ms) / (ms * _log(sched.base))


def make_rational_dim(d: int, r: int, s: int) -> Blocks:
    """A base-``d`` set of exact dimension r/s.

    In every block of ``s`` digits the first ``s - r`` are forced to 0 and the
    last ``r`` are free, i.e. the ``d**r`` lexicographically first strings.
    """
    _check_base(d)
    if r < 1 or s < 1:
        raise DomainError("r and s must be positive")
    if r > s:
        raise DomainError(f"r/s = {r}/{s} exceeds 1")
    free = tuple(range(d))
    return Blocks(d, s, positions=((0,),) * (s - r) + (free,) * r)


def integer_root_floor(x: int, s: int) -> int:
    """``floor(x ** (1/s))`` in exact integer arithmetic."""
    if x < 0 or s < 1:
        raise DomainError("need x >= 0 and s >= 1")
    lo, hi = 0, 1
    while hi**s <= x:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid**s <= x:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class FloorPower:
    schedule: Constant
    dimension: float  # log_d floor(d^(r/s))
    target: Fraction
    gap: float
    stated_bound: float  # (r/s) |log_d(1 - 1/d)|
    bound: float  # |log_d(1 - d^(-r/s))|, valid because floor(y) > y - 1


def make_floor_power(d: int, r: int, s: int) -> FloorPower:
    """Constant schedule with ``F = floor(d**(r/s))`` free digits per position."""
    _check_base(d)
    if r < 1 or s < 1 or r > s:
        raise DomainError(f"need 1 <= r <= s, got r={r}, s={s}")
    f = integer_root_floor(d**r, s)
    sched = Constant(d, f)
    with mpmath.workprec(DEFAULT_PREC):
        q = mpmath.mpf(r) / s
        ld = mpmath.log(d)
        dim = mpmath.log(f) / ld
        gap = abs(dim - q)
        stated = q * abs(mpmath.log(1 - mpmath.mpf(1) / d) / ld)
        bound = abs(mpmath.log(1 - mpmath.power(d, -q)) / ld)
        return FloorPower(sched, float(dim), Fraction(r, s), float(gap), float(stated), float(bound))


def sample_points(sched: DigitSchedule, depth: int, cap: int = 1_000_000) -> PointCloud:
    """Every point ``sum_{i <= depth} a_i d^-i`` with admissible digits.

    Raises ResourceError (with the required count) when the sample would
    hold more than ``cap`` points.
    """
    depth = _check_m(depth)
    if isinstance(sched, Product):
        total = 1
        for f in sched.factors:
            total *= _sample_size(f, depth)
            if total > cap:
                raise ResourceError(f"product sample at depth {depth} needs more than {cap} points", total)
        clouds = [sample_points(f, depth, cap) for f in sched.factors]
        out = clouds[0]
        for c in clouds[1:]:
            out = product_cloud(out, c)
        return out
    size = _sample_size(sched, depth)
    if size > cap:
        raise ResourceError(f"sample at depth {depth} needs {size} points (cap {cap})", size)
    d = sched.base
    den = d**depth
    use_obj = den.bit_length() >= 62
    vals = np.zeros(1, dtype=object if use_obj else np.int64)
    if sched.positionwise:
        for i in range(1, depth + 1):
            digits = np.asarray(sched.allowed_digits(i), dtype=vals.dtype)
            vals = (vals[:, None] * d + digits[None, :]).ravel()
    else:  # explicit block strings
        s = sched.block_len
        q, p = divmod(depth, s)
        def encode(strings):
            out = np.array([sum(c * d ** (len(st) - 1 - k) for k, c in enumerate(st)) for st in strings],
                           dtype=vals.dtype)
            return out
        full = encode(sched.strings)
        for _ in range(q):
            vals = (vals[:, None] * d**s + full[None, :]).ravel()
        if p:
            part = encode(sorted({st[:p] for st in sched.strings}))
            vals = (vals[:, None] * d**p + part[None, :]).ravel()
    return PointCloud(vals.reshape(-1, 1), den)


def _sample_size(sched: DigitSchedule, depth: int) -> int:
    terms = sched.count_terms(depth)
    bits = sum(mult * f.bit_length() for f, mult in terms)
    if bits > 4096:
        return 1 << 4096  # far beyond any cap; the exact value is not needed
    return math.prod(f**mult for f, mult in terms)


# -- JSON -----------------------------------------------------------------

def schedule_to_json(sched: DigitSchedule) -> dict:
    return sched.to_json()


def schedule_from_json(obj: dict) -> DigitSchedule:
    if not isinstance(obj, dict):
        raise DomainError("schedule JSON must be an object")
    try:
        kind = obj["kind"]
        if kind == "product":
            factors = tuple(schedule_from_json(f) for f in obj["factors"])
            out = Product(factors)
            if "base" in obj and obj["base"] != out.base:
                raise DomainError("product base does not match its factors")
            return out
        base = _check_base(obj["base"])
        if kind == "constant":
            digits = obj.get("digits")
            return Constant(base, int(obj["f"]), tuple(digits) if digits is not None else None)
        if kind == "blocks":
            s = int(obj["block_len"])
            if "allowed_strings" in obj:
                strings = tuple(_parse_block_string(st, base) for st in obj["allowed_strings"])
                return Blocks(base, s, strings=strings)
            return Blocks(base, s, positions=tuple(tuple(p) for p in obj["position_digits"]))
        if kind == "partition":
            if "lengths" in obj:
                if obj.get("generator", "explicit") != "explicit":
                    raise DomainError("'lengths' requires generator 'explicit'")
                part = PartitionSchedule("explicit", lengths=obj["lengths"])
            elif obj.get("generator") == "ngrowth":
                part = make_ngrowth(int(obj.get("seed_a", 1)), int(obj.get("seed_b", 1)))
            else:
                raise DomainError("partition needs generator 'ngrowth' or explicit 'lengths'")
            preview = obj.get("preview_blocks")
            sched = Partition(part, obj["role"], base, preview)
            if preview is not None:
                for key, got in (("a_lengths", part.a_lengths(preview)), ("b_lengths", part.b_lengths(preview))):
                    if key in obj and list(obj[key]) != got:
                        raise DomainError(f"{key} {obj[key]} disagrees with the generator ({got})")
            return sched
        if kind == "explicit":
            return ExplicitPrefix(base, tuple(obj["prefix"]), int(obj["tail_f"]))
    except KeyError as exc:
        raise DomainError(f"schedule JSON is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"bad schedule JSON: {exc}") from None
    raise DomainError(f"unknown schedule kind {obj.get('kind')!r}")


def _parse_block_string(st, base: int) -> tuple[int, ...]:
    if isinstance(st, str):
        return tuple(int(c, base) if base <= 36 else int(c) for c in st)
    return tuple(int(c) for c in st)


def dumps_schedule(sched: DigitSchedule) -> str:
    """Canonical JSON text; parsing and re-dumping reproduces it byte for byte."""
    return json.dumps(schedule_to_json(sched), sort_keys=True, indent=2) + "\n"


def loads_schedule(text: str) -> DigitSchedule:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"invalid schedule JSON: {exc}") from None
    return schedule_from_json(obj)


def schedule_hash(sched: DigitSchedule) -> str:
    canon = json.dumps(schedule_to_json(sched), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
