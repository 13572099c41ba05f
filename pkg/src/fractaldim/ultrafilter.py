"""Lazy non-principal ultrafilter oracles on N and Q-limits of bounded sequences.

A genuine non-principal ultrafilter cannot be written down, but any finite
computation only ever asks it finitely many questions. The oracle here keeps
a *ledger*: a decreasing chain of committed index sets ``L_0 ⊇ L_1 ⊇ ...``.
A queried set is large when it contains the tail of the deepest ledger set,
small when its complement does, and otherwise the oracle commits a refinement
``L_{j+1} = L_j ∩ u`` (or ``L_j - u``), after which the answer is fixed.
Answers given this way are consistent with every ultrafilter extending the
ledger, so the finite observations are faithful.

"Tail" is certified up to a horizon ``H``: the oracle tracks the window
``W_j``, the upper half (by count) of ``L_j ∩ [0, H]``. ``u`` is large iff it
contains all of ``W_j``, small iff it misses all of it. Sets known to be
finite are small, provided their largest element lies below the window;
otherwise the horizon is too short and :class:`InconsistentHorizonError` is
raised.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, InconsistentHorizonError

DEFAULT_HORIZON = 10**6
DEFAULT_TOL = 2.0**-40
GOLDEN_SPLIT = 0.3819660112501051  # 2 - golden ratio


def default_horizon() -> int:
    env = os.environ.get("FRACTALDIM_HORIZON")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise DomainError(f"FRACTALDIM_HORIZON must be an integer, got {env!r}") from None
        if value < 2:
            raise DomainError("FRACTALDIM_HORIZON must be >= 2")
        return value
    return DEFAULT_HORIZON


class BoundedSequence:
    """A sequence ``n -> a_n`` (n = 0, 1, 2, ...) with every term strictly inside ``(lower, upper)``.

    ``vector`` evaluates many indices at once; when omitted, ``term`` is mapped
    over the indices. Values up to a horizon are cached. ``limit`` records the
    classical limit when one is known.
    """

    def __init__(self, term: Callable[[int], float], lower: float, upper: float,
                 name: str | None = None, vector: Callable[[np.ndarray], np.ndarray] | None = None,
                 limit: float | None = None):
        if not lower < upper:
            raise DomainError(f"bounds must satisfy lower < upper, got ({lower}, {upper})")
        self.term = term
        self.lower = float(lower)
        self.upper = float(upper)
        self.name = name or f"seq@{id(self):x}"
        self._vector = vector
        self.limit = limit
        self._cache = np.zeros(0)

    def __repr__(self) -> str:
        return f"BoundedSequence({self.name!r}, ({self.lower}, {self.upper}))"

    def values(self, horizon: int) -> np.ndarray:
        """Terms ``a_0 .. a_horizon`` as a read-only float array."""
        if self._cache.size <= horizon:
            idx = np.arange(horizon + 1)
            if self._vector is not None:
                vals = np.asarray(self._vector(idx), dtype=float)
            else:
                vals = np.fromiter((self.term(int(n)) for n in idx), dtype=float, count=idx.size)
            bad = ~((vals > self.lower) & (vals < self.upper))
            if bad.any():
                n = int(np.flatnonzero(bad)[0])
                raise DomainError(f"{self.name}: a_{n} = {vals[n]} escapes ({self.lower}, {self.upper})")
            vals.setflags(write=False)
            self._cache = vals
        return self._cache[:horizon + 1]

    def _combine(self, other: "BoundedSequence", op, bound_fn, symbol: str) -> "BoundedSequence":
        lo, hi = bound_fn(self, other)
        vec = None
        if self._vector is not None and other._vector is not None:
            a, b = self._vector, other._vector
            vec = lambda idx: op(a(idx), b(idx))  # noqa: E731
        limit = None
        if self.limit is not None and other.limit is not None:
            limit = float(op(self.limit, other.limit))
        return BoundedSequence(lambda n: op(self.term(n), other.term(n)), lo, hi,
                               name=f"({self.name}{symbol}{other.name})", vector=vec, limit=limit)

    def __add__(self, other: "BoundedSequence") -> "BoundedSequence":
        return self._combine(other, np.add, lambda a, b: (a.lower + b.lower, a.upper + b.upper), "+")

    def __sub__(self, other: "BoundedSequence") -> "BoundedSequence":
        return self._combine(other, np.subtract, lambda a, b: (a.lower - b.upper, a.upper - b.lower), "-")

    def __neg__(self) -> "BoundedSequence":
        vec = None if self._vector is None else (lambda idx: -self._vector(idx))
        limit = None if self.limit is None else -self.limit
        return BoundedSequence(lambda n: -self.term(n), -self.upper, -self.lower,
                               name=f"-{self.name}", vector=vec, limit=limit)


# -- index sets -------------------------------------------------------------

class IndexSet:
    """A decidable subset of N = {0, 1, 2, ...} with vectorized membership."""

    def contains(self, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bound(self) -> int | None:
        """Largest element when the set is known to be finite (-1 if empty); else None."""
        return None

    def describe(self) -> dict:
        raise NotImplementedError

    def __contains__(self, n: int) -> bool:
        return bool(self.contains(np.array([n]))[0])

    def __and__(self, other: "IndexSet") -> "IndexSet":
        return Intersection((self, other))

    def __or__(self, other: "IndexSet") -> "IndexSet":
        return Union((self, other))

    def __invert__(self) -> "IndexSet":
        return self.inner if isinstance(self, Complement) else Complement(self)

    def __sub__(self, other: "IndexSet") -> "IndexSet":
        return Intersection((self, Complement(other)))

    def __repr__(self) -> str:
        return f"IndexSet({self.describe()})"


class Everything(IndexSet):
    def contains(self, idx):
        return np.ones(np.shape(idx), dtype=bool)

    def describe(self):
        return {"kind": "all"}


class Empty(IndexSet):
    def contains(self, idx):
        return np.zeros(np.shape(idx), dtype=bool)

    def bound(self):
        return -1

    def describe(self):
        return {"kind": "empty"}


class Finite(IndexSet):
    def __init__(self, members: Iterable[int]):
        self.members = np.unique(np.asarray(list(members), dtype=np.int64))

    def contains(self, idx):
        return np.isin(idx, self.members)

    def bound(self):
        return int(self.members[-1]) if self.members.size else -1

    def describe(self):
        return {"kind": "finite", "members": self.members.tolist()}


class Range(IndexSet):
    """The finite interval ``lo <= n <= hi``."""

    def __init__(self, lo: int, hi: int):
        self.lo, self.hi = int(lo), int(hi)

    def contains(self, idx):
        idx = np.asarray(idx)
        return (idx >= self.lo) & (idx <= self.hi)

    def bound(self):
        return self.hi if self.hi >= self.lo else -1

    def describe(self):
        return {"kind": "range", "lo": self.lo, "hi": self.hi}


class Residue(IndexSet):
    """``{n : n ≡ r (mod modulus)}``."""

    def __init__(self, modulus: int, r: int = 0):
        if modulus < 1:
            raise DomainError("modulus must be >= 1")
        self.modulus, self.r = int(modulus), int(r) % int(modulus)

    def contains(self, idx):
        return np.asarray(idx) % self.modulus == self.r

    def describe(self):
        return {"kind": "residue", "modulus": self.modulus, "r": self.r}


class Members(IndexSet):
    """An infinite set known through its elements up to ``horizon``."""

    def __init__(self, label: str, members: Iterable[int], horizon: int):
        self.label = label
        self.members = np.unique(np.asarray(list(members), dtype=np.int64))
        self.horizon = int(horizon)

    def contains(self, idx):
        idx = np.asarray(idx)
        if idx.size and idx.max() > self.horizon:
            raise InconsistentHorizonError(f"{self.label} is only enumerated up to {self.horizon}")
        return np.isin(idx, self.members)

    def describe(self):
        return {"kind": "members", "label": self.label, "horizon": self.horizon,
                "members": self.members.tolist()}


class Preimage(IndexSet):
    """``{n : lo <= a_n < hi}`` for a bounded sequence ``a``."""

    def __init__(self, seq: BoundedSequence, lo: float, hi: float):
        self.seq, self.lo, self.hi = seq, float(lo), float(hi)

    def contains(self, idx):
        idx = np.asarray(idx)
        if idx.size == 0:
            return np.zeros(0, dtype=bool)
        vals = self.seq.values(int(idx.max()))[idx]
        return (vals >= self.lo) & (vals < self.hi)

    def describe(self):
        return {"kind": "preimage", "seq": self.seq.name, "lo": self.lo.hex(), "hi": self.hi.hex()}


class Intersection(IndexSet):
    def __init__(self, parts: Sequence[IndexSet]):
        self.parts = tuple(parts)

    def contains(self, idx):
        out = np.ones(np.shape(idx), dtype=bool)
        for p in self.parts:
            out &= p.contains(idx)
        return out

    def bound(self):
        bounds = [b for b in (p.bound() for p in self.parts) if b is not None]
        return min(bounds) if bounds else None

    def describe(self):
        return {"kind": "and", "parts": [p.describe() for p in self.parts]}


class Union(IndexSet):
    def __init__(self, parts: Sequence[IndexSet]):
        self.parts = tuple(parts)

    def contains(self, idx):
        out = np.zeros(np.shape(idx), dtype=bool)
        for p in self.parts:
            out |= p.contains(idx)
        return out

    def bound(self):
        bounds = [p.bound() for p in self.parts]
        return None if any(b is None for b in bounds) else max(bounds)

    def describe(self):
        return {"kind": "or", "parts": [p.describe() for p in self.parts]}


class Complement(IndexSet):
    def __init__(self, inner: IndexSet):
        self.inner = inner

    def contains(self, idx):
        return ~self.inner.contains(idx)

    def describe(self):
        return {"kind": "not", "inner": self.inner.describe()}


def index_set_from_json(obj: dict, sequences: Mapping[str, BoundedSequence] | None = None) -> IndexSet:
    """Rebuild an index set from :meth:`IndexSet.describe` output."""
    kind = obj["kind"]
    if kind == "all":
        return Everything()
    if kind == "empty":
        return Empty()
    if kind == "finite":
        return Finite(obj["members"])
    if kind == "range":
        return Range(obj["lo"], obj["hi"])
    if kind == "residue":
        return Residue(obj["modulus"], obj["r"])
    if kind == "members":
        return Members(obj["label"], obj["members"], obj["horizon"])
    if kind == "preimage":
        if not sequences or obj["seq"] not in sequences:
            raise DomainError(f"ledger refers to unknown sequence {obj['seq']!r}")
        return Preimage(sequences[obj["seq"]], float.fromhex(obj["lo"]), float.fromhex(obj["hi"]))
    if kind == "and":
        return Intersection([index_set_from_json(p, sequences) for p in obj["parts"]])
    if kind == "or":
        return Union([index_set_from_json(p, sequences) for p in obj["parts"]])
    if kind == "not":
        return Complement(index_set_from_json(obj["inner"], sequences))
    raise DomainError(f"unknown index-set kind {kind!r}")


# -- oracle -------------------------------------------------------------------

POLICIES = ("lazy", "frechet", "tail")


@dataclass
class QueryRecord:
    query: IndexSet
    large: bool
    committed: bool


class UltrafilterOracle:
    """Consistent lazy chooser of "large" index sets, with a replayable ledger.

    ``policy`` decides undetermined queries:

    * ``"lazy"``: commit the queried set (so bisection always keeps the lower half);
    * ``"frechet"`` / ``"tail"``: commit whichever of ``u`` and its complement
      holds the largest index of the window, i.e. follow the sequence out to
      the horizon. ``frechet`` starts from all of N, ``tail`` from ``generator``.
    """

    def __init__(self, policy: str = "lazy", generator: IndexSet | None = None,
                 horizon: int | None = None, label: str | None = None):
        if policy not in POLICIES:
            raise DomainError(f"unknown oracle policy {policy!r}")
        self.policy = policy
        self.generator = generator if generator is not None else Everything()
        self.horizon = int(horizon) if horizon is not None else default_horizon()
        if self.horizon < 2:
            raise DomainError("horizon must be >= 2")
        self.label = label or policy
        members = np.flatnonzero(self.generator.contains(np.arange(self.horizon + 1)))
        if members.size == 0:
            raise InconsistentHorizonError(f"generator of {self.label} has no element up to {self.horizon}")
        self._base_window = members[members.size // 2:]
        self._window = self._base_window
        self.ledger: list[IndexSet] = []
        self.log: list[QueryRecord] = []

    def __repr__(self) -> str:
        return (f"UltrafilterOracle({self.label!r}, horizon={self.horizon}, "
                f"commits={len(self.ledger)}, window={self._window.size})")

    @property
    def cutoff(self) -> int:
        """Smallest index the window inspects; finite sets must lie below it."""
        return int(self._base_window[0])

    @property
    def window(self) -> np.ndarray:
        return self._window

    def ledger_set(self) -> IndexSet:
        """The deepest committed set ``L_j`` (generator intersected with all commits)."""
        return Intersection((self.generator, *self.ledger)) if self.ledger else self.generator

    def is_large(self, u: IndexSet) -> bool:
        b = u.bound()
        if b is not None:
            if b >= self.cutoff:
                raise InconsistentHorizonError(
                    f"finite set with maximum {b} reaches the window starting at {self.cutoff}; grow the horizon")
            self.log.append(QueryRecord(u, False, False))
            return False
        mask = u.contains(self._window)
        if mask.all():
            large, committed = True, False
        elif not mask.any():
            large, committed = False, False
        else:
            large = True if self.policy == "lazy" else bool(mask[-1])
            keep = mask if large else ~mask
            self.ledger.append(u if large else Complement(u))
            self._window = self._window[keep]
            committed = True
        self.log.append(QueryRecord(u, large, committed))
        return large

    def snapshot(self) -> "UltrafilterOracle":
        """Independent copy sharing no mutable state with this oracle."""
        twin = copy.copy(self)
        twin.ledger = list(self.ledger)
        twin.log = list(self.log)
        return twin

    def replay(self) -> "UltrafilterOracle":
        """Fresh oracle with the same commits applied (query log empty)."""
        fresh = UltrafilterOracle(self.policy, self.generator, self.horizon, self.label)
        for s in self.ledger:
            fresh._commit(s)
        return fresh

    def _commit(self, s: IndexSet) -> None:
        keep = s.contains(self._window)
        if not keep.any():
            raise InconsistentHorizonError("replayed commit empties the window")
        self.ledger.append(s)
        self._window = self._window[keep]

    def ledger_json(self) -> dict:
        return {
            "policy": self.policy,
            "label": self.label,
            "horizon": self.horizon,
            "generator": self.generator.describe(),
            "commits": [s.describe() for s in self.ledger],
        }

    @classmethod
    def from_ledger(cls, obj: dict, sequences: Mapping[str, BoundedSequence] | None = None) -> "UltrafilterOracle":
        oracle = cls(obj["policy"], index_set_from_json(obj["generator"], sequences),
                     obj["horizon"], obj.get("label"))
        for desc in obj["commits"]:
            oracle._commit(index_set_from_json(desc, sequences))
        return oracle


def make_oracle(spec: str, horizon: int | None = None,
                blockends: Mapping[str, IndexSet] | None = None) -> UltrafilterOracle:
    """Build an oracle from a CLI spec string.

    ``"frechet" | "lazy" | "tail:even" | "tail:odd" | "tail:blockends-A" | "tail:blockends-B"``.
    Block-end tails need the index sets of A- and B-block ends for the scale
    sequence in use, passed as ``blockends``.
    """
    if spec == "lazy":
        return UltrafilterOracle("lazy", horizon=horizon, label=spec)
    if spec == "frechet":
        return UltrafilterOracle("frechet", horizon=horizon, label=spec)
    if spec in ("tail:even", "tail:odd"):
        return UltrafilterOracle("tail", Residue(2, 0 if spec == "tail:even" else 1), horizon, spec)
    if spec in ("tail:blockends-A", "tail:blockends-B"):
        role = spec[-1]
        if not blockends or role not in blockends:
            raise DomainError(f"{spec} needs a partition schedule to locate block ends")
        return UltrafilterOracle("tail", blockends[role], horizon, spec)
    raise DomainError(f"unknown oracle spec {spec!r}")


# -- Q-limits -------------------------------------------------------------------

def _bisect(seq: BoundedSequence, oracle: UltrafilterOracle, tol: float, pivot: str) -> tuple[float, float]:
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if pivot == "mid":
        frac = 0.5
    elif pivot == "golden":
        frac = GOLDEN_SPLIT
    else:
        raise DomainError(f"unknown pivot policy {pivot!r}")
    lo, hi = seq.lower, seq.upper
    while hi - lo >= tol:
        y = lo + (hi - lo) * frac
        if not lo < y < hi:
            break  # float resolution reached
        # the pivot itself belongs to the upper half-open interval
        if oracle.is_large(Preimage(seq, lo, y)):
            hi = y
        else:
            lo = y
    return lo, hi


def qlim_interval(seq: BoundedSequence, oracle: UltrafilterOracle, tol: float = DEFAULT_TOL,
                  pivot: str = "mid") -> tuple[float, float]:
    """Final nested interval ``[lo, hi)`` whose preimage is large, width < tol."""
    return _bisect(seq, oracle, tol, pivot)


def qlim(seq: BoundedSequence, oracle: UltrafilterOracle, tol: float = DEFAULT_TOL,
         pivot: str = "mid") -> float:
    """Q-limit of ``seq`` by nested-interval bisection against ``oracle``.

    Each step asks whether the indices landing in the lower half of the
    current interval form a large set and descends into the large half.
    The midpoint of the final interval is returned.
    """
    lo, hi = _bisect(seq, oracle, tol, pivot)
    return (lo + hi) / 2


def qlim_joint(seqs: Sequence[BoundedSequence], oracle: UltrafilterOracle,
               tol: float = DEFAULT_TOL) -> list[float]:
    """Q-limits of several sequences against one shared ledger.

    Later refinements only shrink the ledger set, so every earlier final
    interval stays large; all sequences are pinned down on a common large set.
    """
    return [qlim(s, oracle, tol) for s in seqs]


def uniqueness_check(seq: BoundedSequence, oracle: UltrafilterOracle, tol: float = DEFAULT_TOL) -> bool:
    """Run midpoint and golden-ratio bisection from the same ledger snapshot; compare."""
    first = qlim(seq, oracle.snapshot(), tol, pivot="mid")
    second = qlim(seq, oracle.snapshot(), tol, pivot="golden")
    return abs(first - second) <= 2 * tol


def random_sequences(rng: np.random.Generator, count: int, horizon: int) -> list[BoundedSequence]:
    """Seeded bounded sequences of mixed character: convergent, periodic, noisy, i.i.d."""
    out = []
    idx = np.arange(horizon + 1)
    for j in range(count):
        kind = j % 4
        limit = None
        if kind == 0:
            limit, amp, rate = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 0.99)
            vals = limit + amp * rate**idx
            limit = float(limit)
        elif kind == 1:
            period = int(rng.integers(2, 7))
            levels = rng.uniform(-1, 1, size=period)
            vals = levels[idx % period]
        elif kind == 2:
            theta = rng.uniform(0.1, 3.0)
            vals = np.sin(theta * idx) + 0.1 * rng.uniform(-1, 1, size=idx.size)
        else:
            vals = rng.uniform(-1, 1, size=idx.size)
        vals = np.asarray(vals, dtype=float)
        vals.setflags(write=False)
        out.append(BoundedSequence(lambda n, v=vals: float(v[n]), -3.0, 3.0, name=f"rand{j}",
                                   vector=lambda i, v=vals: v[i], limit=limit))
    return out


def random_queries(oracle: UltrafilterOracle, sequences: Sequence[BoundedSequence], n_queries: int,
                   rng: np.random.Generator) -> list[bool]:
    """Ask ``n_queries`` random interval-preimage questions; returns the answers."""
    answers = []
    for _ in range(n_queries):
        seq = sequences[int(rng.integers(len(sequences)))]
        a, b = np.sort(rng.uniform(seq.lower, seq.upper, size=2))
        answers.append(oracle.is_large(Preimage(seq, float(a), float(b))))
    return answers


# -- audit --------------------------------------------------------------------

@dataclass
class AuditReport:
    checks: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations

    def expect(self, ok: bool, message: str) -> None:
        self.checks += 1
        if not ok:
            self.violations.append(message)


def axiom_audit(oracle: UltrafilterOracle, seed: int = 0, max_pairs: int = 2000) -> AuditReport:
    """Replay the query log and check the ultrafilter axioms on the queried family.

    Checks: ledger chain, replay determinism, dichotomy, properness,
    finite-set rejection, closure under finite subtraction, intersection
    closure, monotonicity (unions and widened preimages) and splitting of
    Large unions. The oracle itself is not modified.
    """
    if not oracle.log and not oracle.ledger:
        raise DomainError("nothing to audit: the oracle has not been queried")
    report = AuditReport()
    rng = np.random.default_rng(seed)

    window = oracle._base_window
    for j, s in enumerate(oracle.ledger):
        keep = s.contains(window)
        report.expect(bool(keep.any()), f"commit {j} leaves the ledger set empty below the horizon")
        window = window[keep]
    report.expect(np.array_equal(window, oracle.window), "ledger replay does not reproduce the window")

    replayed = oracle.replay()
    n_commits = len(replayed.ledger)
    for i, rec in enumerate(oracle.log):
        report.expect(replayed.is_large(rec.query) == rec.large, f"query {i} answers differently on replay")
    report.expect(len(replayed.ledger) == n_commits, "replaying logged queries forced new commits")

    probe = oracle.snapshot()
    report.expect(not probe.is_large(Empty()), "empty set answered large")
    report.expect(probe.is_large(Everything()), "N answered small")
    below = probe.cutoff - 1
    if below >= 0:
        report.expect(not probe.is_large(Range(0, below)), f"finite set [0, {below}] answered large")
        report.expect(not probe.is_large(Finite(range(0, below + 1, max(1, below // 7 or 1)))),
                      "finite set answered large")

    records = [r for r in oracle.log if r.query.bound() is None]
    finite_cut = Finite(range(0, min(below, 64) + 1)) if below >= 0 else Empty()
    for i, rec in enumerate(records):
        u = rec.query
        report.expect(probe.is_large(~u) != probe.is_large(u), f"dichotomy fails for query {i}")
        if below >= 0:
            report.expect(not probe.is_large(u & Range(0, below)), f"finite part of query {i} answered large")
        if rec.large:
            report.expect(probe.is_large(u - finite_cut), f"query {i} loses largeness after removing a finite set")
            if isinstance(u, Preimage):
                wider = Preimage(u.seq, u.lo - abs(u.lo) - 1.0, u.hi + abs(u.hi) + 1.0)
                report.expect(probe.is_large(wider), f"superset of query {i} answered small")

    if len(records) >= 2:
        n_pairs = min(max_pairs, len(records) * (len(records) - 1) // 2)
        for _ in range(n_pairs):
            i, j = rng.choice(len(records), size=2, replace=False)
            a, b = records[i], records[j]
            if a.large and b.large:
                report.expect(probe.is_large(a.query & b.query), f"intersection of large queries {i}, {j} is small")
            if a.large:
                report.expect(probe.is_large(a.query | b.query), f"superset {i} ∪ {j} of a large query is small")
            if probe.is_large(a.query | b.query):
                report.expect(probe.is_large(a.query) or probe.is_large(b.query),
                              f"union of queries {i}, {j} is large but neither part is")
    return report
