import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractaldim.errors import DomainError, InconsistentHorizonError
from fractaldim.ultrafilter import (
    BoundedSequence,
    Empty,
    Everything,
    Finite,
    Members,
    Preimage,
    Range,
    Residue,
    UltrafilterOracle,
    axiom_audit,
    default_horizon,
    index_set_from_json,
    make_oracle,
    qlim,
    qlim_interval,
    qlim_joint,
    random_queries,
    random_sequences,
    uniqueness_check,
)

H = 10_000
TOL = 2.0**-30


def seq_from(fn, lo=-2.0, hi=2.0, name=None):
    return BoundedSequence(lambda n: float(fn(np.array([n]))[0]), lo, hi, name=name, vector=fn)


ALT = seq_from(lambda n: np.where(n % 2 == 0, 1.0, -1.0), name="alt")
HARMONIC = seq_from(lambda n: 1.0 / (n + 1), name="harmonic")


def cluster_values(seq, oracle):
    """Terms of seq on the final ledger set inside the window, recomputed from the commits."""
    idx = np.arange(oracle.horizon + 1)
    members = idx[oracle.ledger_set().contains(idx)]
    members = members[members >= oracle.cutoff]
    return seq.values(oracle.horizon)[members]


class TestIndexSets:
    def test_algebra(self):
        idx = np.arange(50)
        ev, m3 = Residue(2), Residue(3)
        assert ((ev & m3).contains(idx) == (idx % 6 == 0)).all()
        assert ((ev | m3).contains(idx) == ((idx % 2 == 0) | (idx % 3 == 0))).all()
        assert ((~ev).contains(idx) == (idx % 2 == 1)).all()
        assert ((ev - Finite([0, 2])).contains(idx) == ((idx % 2 == 0) & (idx > 2))).all()
        assert ~~ev is ev

    def test_bounds(self):
        assert Finite([3, 9]).bound() == 9
        assert Range(4, 7).bound() == 7
        assert Empty().bound() == -1
        assert (Residue(2) & Range(0, 10)).bound() == 10
        assert (Finite([1]) | Residue(2)).bound() is None
        assert Everything().bound() is None

    def test_preimage(self):
        u = Preimage(ALT, 0.0, 2.0)
        assert (u.contains(np.arange(6)) == [True, False] * 3).all()

    def test_members_horizon(self):
        s = Members("x", [1, 5], horizon=10)
        assert 5 in s
        with pytest.raises(InconsistentHorizonError):
            s.contains(np.arange(12))

    def test_json_roundtrip(self):
        u = (Preimage(ALT, -0.1, 1.0 / 3) | Finite([2])) & ~Residue(5, 1) & Members("m", [2, 4], 9) & Range(0, 8)
        back = index_set_from_json(json.loads(json.dumps(u.describe())), {"alt": ALT})
        idx = np.arange(9)
        assert (back.contains(idx) == u.contains(idx)).all()
        assert back.describe() == u.describe()

    def test_json_unknown_sequence(self):
        with pytest.raises(DomainError):
            index_set_from_json(Preimage(ALT, 0, 1).describe(), {})


class TestSequence:
    def test_bounds_enforced(self):
        bad = BoundedSequence(lambda n: float(n), 0.0, 5.0)
        with pytest.raises(DomainError):
            bad.values(10)
        with pytest.raises(DomainError):
            BoundedSequence(lambda n: 0.0, 1.0, 1.0)

    def test_scalar_path_and_sum(self):
        a = BoundedSequence(lambda n: (-1.0) ** n, -2, 2, name="a")
        b = BoundedSequence(lambda n: 0.5, 0, 1, name="b")
        s = a + b
        assert s.values(3).tolist() == [1.5, -0.5, 1.5, -0.5]
        assert (s.lower, s.upper) == (-2, 3)
        assert (a - b).values(1).tolist() == [0.5, -1.5]
        assert (-a).values(1).tolist() == [-1.0, 1.0]


class TestOracle:
    def test_tail_evens(self):
        o = make_oracle("tail:even", H)
        assert o.is_large(Residue(2))
        assert not o.ledger

    def test_finite_small(self):
        for spec in ("lazy", "frechet", "tail:odd"):
            o = make_oracle(spec, H)
            assert not o.is_large(Range(0, 100))
            assert not o.is_large(Finite([0, 1, 17]))
            assert not o.is_large(Empty())
            assert o.is_large(Everything())

    def test_finite_past_window(self):
        o = make_oracle("lazy", H)
        with pytest.raises(InconsistentHorizonError):
            o.is_large(Range(0, H))

    def test_lazy_chain(self):
        o = make_oracle("lazy", H)
        assert o.is_large(Residue(2))
        assert o.is_large(Residue(4))
        assert [s.describe() for s in o.ledger] == [Residue(2).describe(), Residue(4).describe()]
        assert (o.window % 4 == 0).all()
        assert o.is_large(Residue(2))  # answered from the ledger
        assert not o.is_large(Residue(2, 1))
        assert len(o.ledger) == 2

    def test_tail_policy_follows_max(self):
        o = make_oracle("frechet", 101)
        # the window is 50..101; the largest index is odd
        assert not o.is_large(Residue(2))
        assert o.window.max() == 101

    def test_empty_generator(self):
        with pytest.raises(InconsistentHorizonError):
            UltrafilterOracle("tail", Finite([]), 100)

    def test_unknown(self):
        with pytest.raises(DomainError):
            make_oracle("tail:prime")
        with pytest.raises(DomainError):
            make_oracle("tail:blockends-A")
        with pytest.raises(DomainError):
            UltrafilterOracle("greedy")

    def test_env_horizon(self, monkeypatch):
        monkeypatch.setenv("FRACTALDIM_HORIZON", "5000")
        assert default_horizon() == 5000
        assert make_oracle("lazy").horizon == 5000
        monkeypatch.setenv("FRACTALDIM_HORIZON", "lots")
        with pytest.raises(DomainError):
            default_horizon()

    def test_snapshot_independent(self):
        o = make_oracle("lazy", H)
        o.is_large(Residue(2))
        snap = o.snapshot()
        snap.is_large(Residue(3))
        assert len(o.ledger) == 1 and len(snap.ledger) == 2

    def test_ledger_json_replay(self):
        rng = np.random.default_rng(5)
        o = make_oracle("lazy", H)
        seqs = random_sequences(rng, 4, H)
        random_queries(o, seqs, 60, rng)
        blob = json.loads(json.dumps(o.ledger_json()))
        again = UltrafilterOracle.from_ledger(blob, {s.name: s for s in seqs})
        assert np.array_equal(again.window, o.window)
        for rec in o.log:
            assert again.is_large(rec.query) == rec.large
        assert len(again.ledger) == len(o.ledger)


class TestQlim:
    def test_constant(self):
        c = seq_from(lambda n: np.full(n.shape, 0.375), name="c")
        for spec in ("lazy", "frechet", "tail:odd"):
            assert abs(qlim(c, make_oracle(spec, H), TOL) - 0.375) <= TOL

    def test_alternating_even_tail(self):
        assert abs(qlim(ALT, make_oracle("tail:even", H), TOL) - 1) <= TOL
        assert abs(qlim(ALT, make_oracle("tail:odd", H), TOL) + 1) <= TOL

    def test_harmonic(self):
        for spec in ("lazy", "frechet", "tail:even"):
            o = make_oracle(spec, H)
            lo, hi = qlim_interval(HARMONIC, o, 1e-3)
            assert hi - lo < 1e-3 and lo <= 1 / (o.cutoff + 1)
            assert abs(qlim(HARMONIC, make_oracle(spec, H), 1e-3)) <= 1e-3

    def test_bad_tol(self):
        with pytest.raises(DomainError):
            qlim(ALT, make_oracle("lazy", H), 0)
        with pytest.raises(DomainError):
            qlim(ALT, make_oracle("lazy", H), 1e-3, pivot="random")

    def test_float_resolution(self):
        # tol far below float spacing terminates instead of looping
        c = seq_from(lambda n: np.full(n.shape, 0.1), name="c")
        assert qlim(c, make_oracle("lazy", H), 1e-300) == pytest.approx(0.1, abs=1e-15)

    @given(st.integers(0, 2**32 - 1), st.sampled_from(["lazy", "frechet", "tail:even"]))
    @settings(max_examples=25, deadline=None)
    def test_cluster_point(self, seed, spec):
        rng = np.random.default_rng(seed)
        seq = random_sequences(rng, 4, 2000)[int(rng.integers(4))]
        o = make_oracle(spec, 2000)
        v = qlim(seq, o, TOL)
        assert np.abs(cluster_values(seq, o) - v).min() <= TOL

    def test_joint_additivity(self):
        a = seq_from(lambda n: (-1.0) ** n, name="a")
        b = seq_from(lambda n: -((-1.0) ** n), name="b")
        o = make_oracle("lazy", H)
        va, vb, vab = qlim_joint([a, b, a + b], o, TOL)
        assert abs(vab - va - vb) <= 2 * TOL and abs(vab) <= TOL

    def test_joint_even_tail(self):
        a = seq_from(lambda n: (-1.0) ** n, name="a")
        va, vb, vab = qlim_joint([a, a, a + a], make_oracle("tail:even", H), TOL)
        assert abs(va - 1) <= TOL and abs(vb - 1) <= TOL and abs(vab - 2) <= 2 * TOL

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_joint_random(self, seed):
        rng = np.random.default_rng(seed)
        seqs = random_sequences(rng, 6, 3000)
        o = make_oracle("lazy", 3000)
        pairs = [(seqs[i], seqs[j]) for i in range(6) for j in range(i + 1, 6)]
        for a, b in pairs:
            va, vb, vab = qlim_joint([a, b, a + b], o, TOL)
            assert abs(vab - va - vb) <= 2 * TOL

    def test_uniqueness(self):
        assert uniqueness_check(HARMONIC, make_oracle("lazy", H), 1e-3)
        assert uniqueness_check(ALT, make_oracle("tail:even", H), TOL)
        o = make_oracle("lazy", H)
        o.is_large(Residue(2))
        assert uniqueness_check(ALT, o, TOL)

    def test_uniqueness_leaves_oracle(self):
        o = make_oracle("lazy", H)
        uniqueness_check(ALT, o, TOL)
        assert not o.ledger and not o.log


class TestAudit:
    @pytest.mark.parametrize("spec", ["lazy", "frechet", "tail:even", "tail:odd"])
    def test_clean(self, spec):
        rng = np.random.default_rng(11)
        o = make_oracle(spec, H)
        random_queries(o, random_sequences(rng, 6, H), 100, rng)
        rep = axiom_audit(o)
        assert rep.clean, rep.violations[:5]
        assert rep.checks > 100

    def test_needs_queries(self):
        with pytest.raises(DomainError):
            axiom_audit(make_oracle("lazy", H))

    def test_does_not_mutate(self):
        rng = np.random.default_rng(2)
        o = make_oracle("lazy", H)
        random_queries(o, random_sequences(rng, 3, H), 30, rng)
        before = (len(o.ledger), len(o.log), o.window.copy())
        axiom_audit(o)
        assert (len(o.ledger), len(o.log)) == before[:2] and np.array_equal(o.window, before[2])

    def test_detects_tampering(self):
        o = make_oracle("lazy", H)
        o.is_large(Residue(2))
        o.log[-1].large = False  # corrupt the record
        rep = axiom_audit(o)
        assert not rep.clean
