import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seniority_cascades import dynamics, netgen

from oracles import sequential_cascade


class TestBalanceSheet:
    def test_equity_identity(self):
        bs = dynamics.BalanceSheet(external_assets=10.0, external_liabilities=4.0,
                                   loans=(3, 2), borrowings=(1, 4))
        assert bs.equity == 10.0 - 4.0 + 5 - 5


class TestClassifyDefaultLevel:
    def test_solvent_when_buffer_absorbs(self):
        assert dynamics.classify_default_level(3.0, (3, 2), 2) == 0

    def test_junior_default(self):
        # losses exceed equity but junior borrowings absorb the rest
        assert dynamics.classify_default_level(1.0, (3,), 2) == 1

    def test_senior_default(self):
        assert dynamics.classify_default_level(1.0, (3,), 5) == 2

    def test_interior_level(self):
        # w + b1 < m <= w + b1 + b2
        assert dynamics.classify_default_level(1.0, (2, 3, 4), 4) == 2

    def test_complete_default_beyond_all_borrowings(self):
        assert dynamics.classify_default_level(1.0, (2, 3), 7) == 3

    def test_boundary_is_inclusive_on_the_left(self):
        # m_total exactly equal to w is still solvent
        assert dynamics.classify_default_level(2.0, (1,), 2) == 0
        # m_total exactly equal to w + b1 is level 1, not level 2
        assert dynamics.classify_default_level(2.0, (1,), 3) == 1

    def test_rejects_negative_borrowings(self):
        with pytest.raises(ValueError):
            dynamics.classify_default_level(1.0, (-1,), 2)

    @settings(deadline=None, max_examples=100)
    @given(st.floats(0, 20), st.lists(st.integers(0, 6), min_size=1, max_size=4),
           st.integers(0, 40))
    def test_monotone_in_losses(self, w, b, m):
        lo = dynamics.classify_default_level(w, b, m)
        hi = dynamics.classify_default_level(w, b, m + 1)
        assert hi >= lo


class TestResponse:
    def test_no_losses_never_fires(self):
        for i in (1, 2):
            assert not dynamics.response(i, (3, 4), (2,), (0, 0), 0.18)

    def test_junior_fires(self):
        assert dynamics.response(1, (3, 4), (3,), (1, 1), 0.18)

    def test_senior_shielded_by_junior_borrowings(self):
        assert not dynamics.response(2, (3, 4), (3,), (1, 1), 0.18)

    def test_strict_inequality_at_boundary(self):
        # losses exactly equal to the threshold do not fire
        assert not dynamics.response(1, (4,), (), (2,), 0.5)
        assert dynamics.response(1, (4,), (), (3,), 0.5)

    def test_rejects_isolated_lender(self):
        with pytest.raises(ValueError):
            dynamics.response(1, (0, 0), (), (0, 0), 0.18)

    @settings(deadline=None, max_examples=200)
    @given(st.integers(1, 3), st.lists(st.integers(0, 8), min_size=3, max_size=3),
           st.lists(st.integers(0, 8), min_size=2, max_size=2),
           st.integers(0, 24),
           st.floats(0.01, 0.99))
    def test_agrees_with_classification(self, i, loans, borrowings, m_total, r1):
        # response(i) fires exactly when the classified level reaches i,
        # with equity r1 * total lending
        if sum(loans) < 1:
            return
        m_total = min(m_total, sum(loans))
        w = r1 * sum(loans)
        level = dynamics.classify_default_level(w, borrowings, m_total)
        level = min(level, 3)  # complete default spreads like the last level
        fired = dynamics.response(i, loans, borrowings, (m_total,), r1)
        assert fired == (level >= i)

    def test_monotone_in_level(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            loans = rng.integers(0, 6, size=2)
            if loans.sum() < 1:
                continue
            borrowings = rng.integers(0, 6, size=1)
            m = (int(rng.integers(0, loans.sum() + 1)),)
            fires = [dynamics.response(i, loans, borrowings, m, 0.3)
                     for i in (1, 2)]
            assert fires[0] or not fires[1]


class TestSeedSpec:
    def test_requires_exactly_one_mode(self):
        with pytest.raises(ValueError):
            dynamics.SeedSpec()
        with pytest.raises(ValueError):
            dynamics.SeedSpec(counts=(1,), probabilities=(0.1,))

    def test_probabilities_must_be_cumulative(self):
        with pytest.raises(ValueError):
            dynamics.SeedSpec(probabilities=(0.1, 0.5))

    def test_count_draw_places_exact_counts(self):
        spec = dynamics.SeedSpec(counts=(3, 2))
        levels = spec.draw_levels(100, np.random.default_rng(0))
        assert (levels == 1).sum() == 3 and (levels == 2).sum() == 2

    def test_senior_count_helper(self):
        spec = dynamics.SeedSpec.senior_count(5, 3)
        assert spec.counts == (0, 0, 5)

    def test_probability_draw_is_nested(self):
        spec = dynamics.SeedSpec(probabilities=(0.5, 0.2))
        levels = spec.draw_levels(20_000, np.random.default_rng(1))
        frac1 = (levels >= 1).mean()
        frac2 = (levels >= 2).mean()
        assert abs(frac1 - 0.5) < 0.02 and abs(frac2 - 0.2) < 0.02


def _small_net(seed=0, n=80, zj=2.0, zs=2.0):
    return netgen.generate_multiplex(
        n, [netgen.ErdosRenyiLayer(zj), netgen.ErdosRenyiLayer(zs)], seed)


class TestRunCascade:
    def test_no_seeds_one_round(self):
        net = _small_net()
        res = dynamics.run_cascade(
            net, 0.18, dynamics.SeedSpec(counts=(0, 0)), 1)
        assert res.rounds == 1
        assert (res.fractions == 0).all()

    def test_edgeless_network_no_spread(self):
        net = netgen.MultiplexNetwork.from_layers(
            50, [np.empty((0, 2), int), np.empty((0, 2), int)])
        res = dynamics.run_cascade(
            net, 0.18, dynamics.SeedSpec.senior_count(5, 2), 1)
        assert (res.levels >= 1).sum() == 5
        assert (res.levels == 2).sum() == 5

    def test_levels_monotone_and_senior_below_junior_each_round(self):
        net = _small_net(3, n=200, zj=3.0, zs=3.0)
        res = dynamics.run_cascade(
            net, 0.18, dynamics.SeedSpec.senior_count(8, 2), 7,
            record_history=True)
        hist = np.array(res.history)
        # cumulative fractions never decrease round over round
        assert (np.diff(hist, axis=0) >= -1e-15).all()
        # senior fraction never exceeds junior fraction
        assert (hist[:, 1] <= hist[:, 0] + 1e-15).all()

    def test_conservation(self):
        net = _small_net(4)
        res = dynamics.run_cascade(
            net, 0.18, dynamics.SeedSpec.senior_count(5, 2), 2)
        assert res.level_fractions.sum() == pytest.approx(1.0)
        assert res.level_fractions[0] == pytest.approx(
            1.0 - res.fractions[0])

    def test_termination_bound(self):
        net = _small_net(5, n=150)
        res = dynamics.run_cascade(
            net, 0.05, dynamics.SeedSpec.senior_count(3, 2), 3)
        assert res.rounds <= net.n * net.num_layers

    def test_order_independence(self):
        for seed in range(5):
            net = _small_net(seed, n=60, zj=2.5, zs=2.5)
            rng = np.random.default_rng(100 + seed)
            sync = dynamics.run_cascade(
                net, 0.15, dynamics.SeedSpec.senior_count(4, 2), seed)
            # rerun sequentially from the very same seed assignment
            start = np.zeros(net.n, dtype=np.int64)
            start[sync.seed_nodes] = 2
            seq = sequential_cascade(net, 0.15, start, rng)
            assert np.array_equal(seq, sync.levels)

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            dynamics.run_cascade(_small_net(), 0.0,
                                 dynamics.SeedSpec(counts=(0, 0)), 1)


class TestEnsembleRun:
    def test_single_replica_matches_run_cascade(self):
        spec = dynamics.EnsembleSpec(
            n=120, r1=0.18, seeds=dynamics.SeedSpec.senior_count(3, 2),
            replicas=1, master_seed=9,
            layers=(netgen.ErdosRenyiLayer(2.0), netgen.ErdosRenyiLayer(2.0)))
        result = dynamics.ensemble_run(spec)
        child = np.random.SeedSequence(9).spawn(1)[0]
        net_seq, cascade_seq = child.spawn(2)
        net = netgen.generate_multiplex(120, spec.layers, net_seq)
        single = dynamics.run_cascade(net, 0.18, spec.seeds, cascade_seq)
        assert np.array_equal(result.fractions[0], single.fractions)

    def test_deterministic_given_master_seed(self):
        spec = dynamics.EnsembleSpec(
            n=100, r1=0.18, seeds=dynamics.SeedSpec.senior_count(3, 2),
            replicas=3, master_seed=21,
            layers=(netgen.ErdosRenyiLayer(2.0), netgen.ErdosRenyiLayer(2.0)))
        a = dynamics.ensemble_run(spec)
        b = dynamics.ensemble_run(spec)
        assert np.array_equal(a.fractions, b.fractions)
        assert a.to_csv() == b.to_csv()

    def test_split_protocol(self):
        spec = dynamics.EnsembleSpec(
            n=400, r1=0.18, seeds=dynamics.SeedSpec.senior_count(5, 2),
            replicas=2, master_seed=4,
            split_base=netgen.StaticModelLayer(2.83, 8.5),
            junior_fraction=0.3)
        result = dynamics.ensemble_run(spec)
        assert result.fractions.shape == (2, 2)
        assert (result.fractions >= 0).all() and (result.fractions <= 1).all()

    def test_requires_exactly_one_protocol(self):
        with pytest.raises(ValueError):
            dynamics.EnsembleSpec(
                n=10, r1=0.1, seeds=dynamics.SeedSpec(counts=(1, 0)),
                replicas=1, master_seed=0)

    def test_csv_shape(self):
        spec = dynamics.EnsembleSpec(
            n=60, r1=0.18, seeds=dynamics.SeedSpec.senior_count(2, 2),
            replicas=2, master_seed=0,
            layers=(netgen.ErdosRenyiLayer(1.0), netgen.ErdosRenyiLayer(1.0)))
        lines = dynamics.ensemble_run(spec).to_csv().strip().splitlines()
        assert lines[0] == "replica,level,final_fraction,rounds"
        assert len(lines) == 1 + 2 * 2
