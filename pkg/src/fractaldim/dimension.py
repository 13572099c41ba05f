"""Dimension reports for digit schedules.

Classical (windowed limsup/liminf) Minkowski dimension, the Q-dimension along
a scale sequence, product summability in both senses, the content-dimension
transition and a Hausdorff upper-bound check.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .digit_fractal import (
    Blocks,
    Constant,
    DigitSchedule,
    ExplicitPrefix,
    Partition,
    PartitionSchedule,
    Product,
    _log,
    product_schedule,
    ratio_log_array,
    schedule_hash,
)
from .errors import DomainError, InconsistentHorizonError
from .ultrafilter import (
    DEFAULT_TOL,
    BoundedSequence,
    IndexSet,
    Members,
    Residue,
    UltrafilterOracle,
    default_horizon,
    make_oracle,
    qlim,
    qlim_joint,
)

EXISTENCE_TOL = 1e-4
DENSE_CAP = 1_000_000
DEFAULT_BLOCKS = 64


# -- scale sequences ------------------------------------------------------------

@dataclass(frozen=True)
class ScaleSequence:
    """Index ``n = 0, 1, ...`` mapped to a level ``m_n``, i.e. ``eps_n = d^-m_n``.

    ``every-m``: ``m_n = n + 1``. ``block-ends``: ``m_n`` is the last position
    of the n-th block of ``partition`` (A_1, B_1, A_2, ...), only the first
    ``n_blocks`` are available. ``explicit``: the given strictly increasing levels.
    """

    kind: str = "every-m"
    levels: tuple[int, ...] | None = None
    partition: PartitionSchedule | None = None
    n_blocks: int = DEFAULT_BLOCKS

    def __post_init__(self):
        if self.kind == "every-m":
            return
        if self.kind == "block-ends":
            if self.partition is None:
                raise DomainError("block-end scales need a partition schedule")
            if self.n_blocks < 3:
                raise DomainError("block-end scales need at least 3 blocks")
            return
        if self.kind == "explicit":
            lv = self.levels
            if not lv or any(int(x) < 1 for x in lv) or any(b <= a for a, b in zip(lv, lv[1:])):
                raise DomainError("explicit levels must be positive and strictly increasing")
            return
        raise DomainError(f"unknown scale kind {self.kind!r}")

    @property
    def max_index(self) -> int | None:
        if self.kind == "block-ends":
            return self.n_blocks - 1
        if self.kind == "explicit":
            return len(self.levels) - 1
        return None

    def horizon(self) -> int:
        mx = self.max_index
        return default_horizon() if mx is None else mx

    def levels_array(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx)
        mx = self.max_index
        if mx is not None and idx.size and int(idx.max()) > mx:
            raise InconsistentHorizonError(f"scale sequence {self.describe()} ends at index {mx}")
        if self.kind == "every-m":
            return idx + 1
        if self.kind == "explicit":
            return np.array([self.levels[int(n)] for n in idx.ravel()], dtype=object).reshape(idx.shape)
        self.partition.ensure_blocks(self.n_blocks)
        return np.array([self.partition.block_end(int(n)) for n in idx.ravel()], dtype=object).reshape(idx.shape)

    def epsilon(self, n: int, base: int) -> Fraction:
        return Fraction(1, base ** int(self.levels_array(np.array([n]))[0]))

    def blockend_sets(self, partition: PartitionSchedule | None = None,
                      horizon: int | None = None) -> dict[str, IndexSet]:
        """Indices n whose level ``m_n`` ends an A-block, resp. a B-block."""
        part = partition or self.partition
        if part is None:
            raise DomainError("block-end index sets need a partition schedule")
        if self.kind == "block-ends" and part == self.partition:
            return {"A": Residue(2, 0), "B": Residue(2, 1)}
        h = self.horizon() if horizon is None else int(horizon)
        levels = self.levels_array(np.arange(h + 1))
        top = int(levels[-1])
        ends = part.ends_upto(top)
        a_ends, b_ends = set(ends[0::2]), set(ends[1::2])
        out = {}
        for role, wanted in (("A", a_ends), ("B", b_ends)):
            members = [n for n, m in enumerate(levels) if int(m) in wanted]
            out[role] = Members(f"blockends-{role}:{self.describe()}", members, h)
        return out

    def describe(self) -> str:
        if self.kind == "block-ends":
            return f"block-ends:{self.n_blocks}"
        if self.kind == "explicit":
            return "explicit:" + ",".join(str(x) for x in self.levels)
        return "every-m"


def parse_scales(text: str, base: int, partition: PartitionSchedule | None = None) -> ScaleSequence:
    """``every-m`` | ``block-ends[:N]`` | ``explicit:e1,e2,...`` with each e a power of 1/base."""
    if text == "every-m":
        return ScaleSequence("every-m")
    if text.startswith("block-ends"):
        n = int(text.split(":", 1)[1]) if ":" in text else DEFAULT_BLOCKS
        return ScaleSequence("block-ends", partition=partition, n_blocks=n)
    if text.startswith("explicit:"):
        levels = []
        for tok in text.split(":", 1)[1].split(","):
            eps = Fraction(tok.strip())
            if eps <= 0 or eps.numerator != 1:
                raise DomainError(f"explicit scale {tok!r} is not of the form base**-m")
            m = round(math.log(eps.denominator, base))
            if base**m != eps.denominator or m < 1:
                raise DomainError(f"explicit scale {tok!r} is not of the form {base}**-m with m >= 1")
            levels.append(m)
        return ScaleSequence("explicit", levels=tuple(levels))
    raise DomainError(f"unknown scale sequence {text!r}")


def _partition_of(sched: DigitSchedule) -> PartitionSchedule | None:
    parts = {p for p, _ in sched.partitions()}
    return next(iter(parts)) if len(parts) == 1 else None


def oracle_for(spec: str, sched: DigitSchedule, scales: ScaleSequence,
               horizon: int | None = None) -> UltrafilterOracle:
    """Oracle from a spec string, with horizon and block-end sets matched to ``scales``."""
    h = scales.horizon() if horizon is None else int(horizon)
    if scales.max_index is not None:
        h = min(h, scales.max_index)
    blockends = None
    if spec.startswith("tail:blockends"):
        part = scales.partition if scales.kind == "block-ends" else _partition_of(sched)
        if part is None:
            raise DomainError(f"{spec} needs a schedule built on one partition")
        blockends = scales.blockend_sets(part, h)
    return make_oracle(spec, h, blockends)


def ratio_sequence(sched: DigitSchedule, scales: ScaleSequence) -> BoundedSequence:
    """``n -> log S(eps_n) / log(1/eps_n)`` as a bounded sequence in ``(-1, k + 1)``."""
    k = sched.ambient_dim

    def vector(idx):
        return ratio_log_array(sched, scales.levels_array(idx))

    name = f"ratio:{schedule_hash(sched)[:16]}:{scales.describe()}"
    return BoundedSequence(lambda n: float(vector(np.array([n]))[0]), -1.0, k + 1.0, name=name, vector=vector)


# -- reports --------------------------------------------------------------------

def _hash_config(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


@dataclass
class DimensionReport:
    liminf_est: float
    limsup_est: float
    classical_exists: str  # "yes" | "no" | "undetermined"
    depth_used: int
    method: str  # "exact-schedule" | "qlim" | "boxcount-regression" | "content"
    dimension: float | None = None  # value implied by the schedule structure, when known
    qdim: float | None = None
    oracle: str | None = None
    tol: float | None = None
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["report_hash"] = _hash_config({k: v for k, v in out.items()})
        return out


def _structural_existence(sched: DigitSchedule) -> bool | None:
    """True when the schedule structure forces the ratio to converge, False when it forces oscillation."""
    if isinstance(sched, (Constant, Blocks, ExplicitPrefix)):
        return True
    if isinstance(sched, Partition):
        return sched.partition.generator == "explicit"
    if isinstance(sched, Product):
        parts = [_structural_existence(f) for f in sched.factors]
        if all(p is True for p in parts):
            return True
        return None
    return None


def _sample_levels(sched: DigitSchedule, depth: int) -> tuple[np.ndarray, np.ndarray]:
    dense = np.arange(1, min(depth, DENSE_CAP) + 1, dtype=np.int64)
    extra: set[int] = set()
    for part, _ in sched.partitions():
        extra.update(e for e in part.ends_upto(depth) if e > DENSE_CAP)
    if depth > DENSE_CAP:
        extra.add(depth)
    return dense, np.array(sorted(extra), dtype=object)


def classical_dims(sched: DigitSchedule, depth: int) -> DimensionReport:
    """Windowed limsup and liminf of the ratio ``log count / log d^m``.

    Samples every level up to ``min(depth, 10**6)`` plus, for partition
    schedules, every block end up to ``depth``; the ratio is monotone inside
    each block, so its extremes sit at block ends. The window is the later
    half of the samples.
    """
    if int(depth) != depth or depth < 10:
        raise DomainError(f"depth must be an integer >= 10, got {depth!r}")
    depth = int(depth)
    dense, sparse = _sample_levels(sched, depth)
    vals = ratio_log_array(sched, dense)
    if sparse.size:
        vals = np.concatenate([vals, ratio_log_array(sched, sparse)])
    start = len(vals) // 2
    start_level = int(dense[start]) if start < dense.size else int(sparse[start - dense.size])
    window = vals[start:]
    hi, lo = float(window.max()), float(window.min())
    structural = _structural_existence(sched)
    if structural is True:
        exists = "yes" if hi - lo < EXISTENCE_TOL else "undetermined"
    elif structural is False:
        exists = "no"
    else:
        exists = "undetermined"
    return DimensionReport(
        liminf_est=lo, limsup_est=hi, classical_exists=exists, depth_used=depth,
        method="exact-schedule", dimension=sched.analytic_dimension(),
        provenance={"schedule_hash": schedule_hash(sched), "samples": int(len(vals)),
                    "window_start_level": start_level},
    )


def default_depth(sched: DigitSchedule, n_blocks: int = 16) -> int:
    """``10**4`` levels, or the end of block ``n_blocks`` for schedules built on a growing partition."""
    ngrowth = [p for p, _ in sched.partitions() if p.generator == "ngrowth"]
    if ngrowth:
        return max(p.block_end(n_blocks - 1) for p in ngrowth)
    return 10**4


def qdim(sched: DigitSchedule, scales: ScaleSequence, oracle: UltrafilterOracle,
         tol: float = DEFAULT_TOL) -> float:
    """Q-limit of the ratio sequence along ``scales``, clamped to ``[0, k]``."""
    mx = scales.max_index
    if mx is not None and oracle.horizon > mx:
        raise InconsistentHorizonError(f"oracle horizon {oracle.horizon} exceeds the {mx + 1} available scales")
    value = qlim(ratio_sequence(sched, scales), oracle, tol)
    return min(max(value, 0.0), float(sched.ambient_dim))


@dataclass
class ProductReport:
    qdim_a: float
    qdim_b: float
    qdim_product: float
    discrepancy: float
    tol: float
    passed: bool
    classical_a: DimensionReport
    classical_b: DimensionReport
    classical_product: DimensionReport
    classical_discrepancy: float | None  # only when both factor dimensions exist
    limsup_sum: float
    limsup_product: float
    oracle: str
    scales: str

    def to_json(self) -> dict:
        out = asdict(self)
        for key in ("classical_a", "classical_b", "classical_product"):
            out[key] = getattr(self, key).to_json()
        return out


def product_summability_check(a: DigitSchedule, b: DigitSchedule, scales: ScaleSequence,
                              oracle: UltrafilterOracle, tol: float = DEFAULT_TOL,
                              depth: int | None = None) -> ProductReport:
    """Q-dimensions of a, b and a×b on one shared ledger, next to the classical picture."""
    ab = product_schedule(a, b)
    mx = scales.max_index
    if mx is not None and oracle.horizon > mx:
        raise InconsistentHorizonError(f"oracle horizon {oracle.horizon} exceeds the {mx + 1} available scales")
    seqs = [ratio_sequence(s, scales) for s in (a, b, ab)]
    va, vb, vab = qlim_joint(seqs, oracle, tol)
    da = depth or default_depth(a)
    db = depth or default_depth(b)
    ca, cb = classical_dims(a, da), classical_dims(b, db)
    cab = classical_dims(ab, depth or max(da, db))
    classical = None
    if ca.classical_exists == "yes" and cb.classical_exists == "yes":
        classical = abs(cab.limsup_est - ca.limsup_est - cb.limsup_est)
    disc = abs(vab - va - vb)
    return ProductReport(
        qdim_a=va, qdim_b=vb, qdim_product=vab, discrepancy=disc, tol=tol, passed=disc <= 2 * tol,
        classical_a=ca, classical_b=cb, classical_product=cab, classical_discrepancy=classical,
        limsup_sum=ca.limsup_est + cb.limsup_est, limsup_product=cab.limsup_est,
        oracle=oracle.label, scales=scales.describe(),
    )


def analytic_limsup(sched: DigitSchedule) -> float | None:
    """Exact upper Minkowski dimension implied by the structure, when known.

    For the growing partition the A-share at the end of ``A_{n+1}`` is at least
    ``n / (n + 1)`` (and symmetrically for B), so each role has limsup 1.
    """
    if isinstance(sched, Partition) and sched.partition.generator == "ngrowth":
        return 1.0
    return sched.analytic_dimension()


# -- content dimension ----------------------------------------------------------

@dataclass
class ContentRow:
    s: float
    slope: float
    threshold: float
    verdict: str  # "vanishing" | "bounded" | "divergent"


@dataclass
class ContentReport:
    rows: list[ContentRow]
    bracket: tuple[float, float]
    monotone: bool
    limsup_est: float
    contains_limsup: bool
    depth: int

    def contains(self, value: float) -> bool:
        return self.bracket[0] <= value <= self.bracket[1]

    def to_json(self) -> dict:
        return asdict(self)


def content_dimension_check(sched: DigitSchedule, s_grid: Sequence[float], depth: int = 1000) -> ContentReport:
    """Locate the zero/infinity transition of ``M^s_eps = count(m) (2 d^-m)^s``.

    For each s, the tail trend of ``log M^s`` over the later half of
    ``m = 1..depth`` is fitted by least squares. A slope below minus the
    threshold means the content vanishes, above it means divergence; the
    threshold is twice the largest per-step change divided by the window
    length, so bounded oscillation reads as bounded. The bracket runs from
    the largest divergent s to the smallest vanishing s.
    """
    grid = [float(s) for s in s_grid]
    k = sched.ambient_dim
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 0 or grid[-1] > k:
        raise DomainError(f"s_grid must be strictly increasing inside [0, {k}]")
    if int(depth) != depth or depth < 10:
        raise DomainError("depth must be an integer >= 10")
    depth = int(depth)
    ms = np.arange(1, depth + 1, dtype=np.int64)
    log_count = sched.log_count_array(ms).astype(float)
    log_eps = math.log(2) - ms * _log(sched.base)
    tail = slice(depth // 2, depth)
    x = ms[tail].astype(float)
    xc = x - x.mean()
    rows = []
    for s in grid:
        y = log_count[tail] + s * log_eps[tail]
        slope = float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
        step = float(np.abs(np.diff(y)).max()) if y.size > 1 else 0.0
        thr = max(2.0 * step / y.size, 1e-9)
        verdict = "vanishing" if slope < -thr else "divergent" if slope > thr else "bounded"
        rows.append(ContentRow(s, slope, thr, verdict))
    div = [r.s for r in rows if r.verdict == "divergent"]
    van = [r.s for r in rows if r.verdict == "vanishing"]
    lo = max(div) if div else 0.0
    hi = min(van) if van else float(k)
    monotone = not div or not van or max(div) < min(van)
    limsup = classical_dims(sched, depth).limsup_est
    return ContentReport(rows, (lo, hi), monotone, limsup, lo <= limsup <= hi, depth)


# -- Hausdorff bound --------------------------------------------------------------

@dataclass
class HausdorffReport:
    upper_bound: float
    known: float | None
    consistent: bool
    slack: float


def hausdorff_bound_check(sched: DigitSchedule, depth: int, known: float | None = None,
                          slack: float = 1e-6) -> HausdorffReport:
    """The windowed limsup bounds the Hausdorff dimension from above; check a supplied value against it."""
    up = classical_dims(sched, depth).limsup_est
    ok = known is None or known <= up + slack
    return HausdorffReport(up, known, ok, slack)
