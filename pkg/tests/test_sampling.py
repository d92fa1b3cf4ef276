"""Tests for the increment sampler, skeleton simulation and ensembles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import betaincinv

from stable_passage.config import ExperimentConfig
from stable_passage.model import StableParams, characteristic_exponent
from stable_passage.sampling import (
    CHUNK_RECORDS,
    PassageEnsemble,
    RngStream,
    SimulationError,
    detect_first_passage,
    derive_seed,
    generate_passage_ensemble,
    generate_supremum_ensemble,
    merge_ensembles,
    sample_increment,
    sample_increments,
    sample_inverse_beta,
    simulate_skeleton,
)

P_SYM = StableParams(1.5, 0.5, 1.0)


def ks_two_sample(a, b):
    a, b = np.sort(a), np.sort(b)
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.abs(fa - fb).max())


class TestStreams:
    def test_same_stream_reproduces(self):
        s = RngStream(42, 3)
        x1 = s.generator().random(16)
        x2 = s.generator().random(16)
        assert np.array_equal(x1, x2)

    def test_distinct_indices_differ(self):
        a = RngStream(42, 0).generator().random(16)
        b = RngStream(42, 1).generator().random(16)
        assert not np.array_equal(a, b)

    def test_derive_seed_is_deterministic(self):
        assert derive_seed(7, 1) == derive_seed(7, 1)
        assert derive_seed(7, 1) != derive_seed(7, 2)

    def test_rejects_bad_seeds(self):
        with pytest.raises(ValueError):
            RngStream(-1, 0)
        with pytest.raises(ValueError):
            RngStream(2**64, 0)


class TestIncrements:
    def test_scalar_draw_deterministic(self):
        s = RngStream(1, 0)
        assert sample_increment(s, P_SYM, 1.0) == sample_increment(s, P_SYM, 1.0)

    def test_positivity_parameter(self):
        # P(X_1 > 0) should match rho for strongly skewed and symmetric cases
        for a, r in [(1.5, 0.5), (1.3, 0.6), (1.5, 1.0 / 3.0)]:
            draws = sample_increments(RngStream(11, 0), StableParams(a, r), 1.0, 200_000)
            rho_hat = float(np.mean(draws > 0))
            assert rho_hat == pytest.approx(r, abs=0.01)

    def test_scaling_property(self):
        # draws at dt=16 should match 16^(1/alpha) * draws at dt=1 in law
        d16 = sample_increments(RngStream(5, 0), P_SYM, 16.0, 100_000)
        d1 = sample_increments(RngStream(5, 1), P_SYM, 1.0, 100_000)
        assert ks_two_sample(d16, 16 ** (1 / 1.5) * d1) < 0.01

    def test_characteristic_function(self):
        # empirical E[cos(lam X_1)] ~ exp(-psi(lam)) in the symmetric case
        lam = 1.0
        draws = sample_increments(RngStream(17, 0), P_SYM, 1.0, 200_000)
        target = np.exp(-characteristic_exponent(P_SYM, lam)).real
        est = float(np.mean(np.cos(lam * draws)))
        se = float(np.std(np.cos(lam * draws)) / np.sqrt(len(draws)))
        assert abs(est - target) < 3 * se

    def test_skewed_characteristic_function(self):
        p = StableParams(1.3, 0.6, 1.0)
        lam = 0.7
        draws = sample_increments(RngStream(23, 0), p, 1.0, 200_000)
        target = np.exp(-characteristic_exponent(p, lam))
        z = np.exp(1j * lam * draws)
        est = complex(np.mean(z))
        se = float(np.std(z.real) + np.std(z.imag)) / np.sqrt(len(draws))
        assert abs(est - target) < 4 * se


class TestInverseBeta:
    def test_all_outputs_exceed_one(self):
        v = sample_inverse_beta(RngStream(3, 0), 0.75, 0.25, 50_000)
        assert np.all(v > 1.0)

    def test_symmetric_mean(self):
        v = 1.0 / sample_inverse_beta(RngStream(4, 0), 0.5, 0.5, 100_000)
        se = float(np.std(v) / np.sqrt(len(v)))
        assert abs(float(np.mean(v)) - 0.5) < 3 * se

    def test_against_quantile_oracle(self):
        n = 100_000
        v = 1.0 / sample_inverse_beta(RngStream(6, 0), 0.75, 0.25, n)
        # one-sample KS against the regularized incomplete beta quantiles
        v.sort()
        u = (np.arange(n) + 0.5) / n
        q = betaincinv(0.75, 0.25, u)
        d = ks_two_sample(v, q)
        assert d < 0.01

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            sample_inverse_beta(RngStream(1, 0), 0.0, 0.5, 10)


class TestSkeleton:
    def test_stub_generator(self):
        stub = lambda gen, size: np.full(size, 0.1)
        sk = simulate_skeleton(RngStream(1, 0), P_SYM, 1.0, 5.0, increments=stub)
        assert np.allclose(sk, [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])

    def test_deterministic(self):
        a = simulate_skeleton(RngStream(9, 2), P_SYM, 0.01, 1.0)
        b = simulate_skeleton(RngStream(9, 2), P_SYM, 0.01, 1.0)
        assert np.array_equal(a, b)

    def test_length(self):
        sk = simulate_skeleton(RngStream(1, 0), P_SYM, 0.01, 1.0)
        assert len(sk) == 101
        assert sk[0] == 0.0

    def test_step_cap(self):
        with pytest.raises(SimulationError):
            simulate_skeleton(RngStream(1, 0), P_SYM, 1e-9, 1.0, step_cap=1000)


class TestDetectFirstPassage:
    def test_direct_scan(self):
        rec = detect_first_passage(np.array([0.0, 0.5, 1.2, 0.9]), 1.0, 1.0, [1.0])
        assert rec.passage_time == 2.0
        assert rec.overshoot == pytest.approx(0.2)
        assert rec.position_at == {1.0: 0.5}
        assert rec.sup_horizon == pytest.approx(1.2)
        assert not rec.censored

    def test_censored(self):
        rec = detect_first_passage(np.array([0.0, 0.5, 0.7]), 1.0, 1.0)
        assert rec.censored
        assert rec.passage_time is None and rec.overshoot is None
        assert rec.sup_horizon == pytest.approx(0.7)

    def test_checkpoint_at_passage_not_recorded(self):
        rec = detect_first_passage(np.array([0.0, 0.5, 1.2, 0.9]), 1.0, 1.0, [2.0])
        assert rec.position_at == {}

    def test_rejects_nonpositive_level(self):
        with pytest.raises(ValueError):
            detect_first_passage(np.array([0.0, 1.0]), 0.0, 1.0)

    @given(st.integers(0, 2**32), st.floats(0.3, 3.0))
    @settings(max_examples=25, deadline=None)
    def test_refinement_bias_direction(self, seed, x):
        # coarse grid = every second point of the fine grid: refinement can
        # only raise the supremum and lower (or keep) the passage time
        fine = simulate_skeleton(RngStream(seed, 0), P_SYM, 0.01, 2.0)
        coarse = fine[::2]
        rf = detect_first_passage(fine, x, 0.01)
        rc = detect_first_passage(coarse, x, 0.02)
        assert rf.sup_horizon >= rc.sup_horizon
        if rc.passage_time is not None:
            assert rf.passage_time is not None
            assert rf.passage_time <= rc.passage_time + 1e-12


def small_cfg(**kw):
    base = dict(
        params=P_SYM,
        x=1.0,
        n_samples=2000,
        dt=0.01,
        horizon=10.0,
        checkpoints=(0.25, 0.5),
        master_seed=2024,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestPassageEnsemble:
    def test_engine_matches_scalar_detection_with_stub(self):
        # a deterministic drifting stub makes every record identical, so the
        # blockwise engine must agree with the scalar scan exactly
        stub = lambda gen, size: np.full(size, 0.021)
        cfg = small_cfg(n_samples=5, dt=1.0, horizon=60.0, checkpoints=(10.0, 50.0))
        ens = generate_passage_ensemble(cfg, increments=stub)
        sk = simulate_skeleton(RngStream(0, 0), P_SYM, 1.0, 60.0, increments=stub)
        ref = detect_first_passage(sk, 1.0, 1.0, [10.0, 50.0])
        for i in range(5):
            rec = ens.record(i)
            assert rec.passage_time == ref.passage_time
            assert rec.overshoot == pytest.approx(ref.overshoot)
            assert rec.position_at == pytest.approx(ref.position_at)

    def test_deterministic_and_thread_invariant(self):
        cfg = small_cfg(n_samples=CHUNK_RECORDS + 513)
        a = generate_passage_ensemble(cfg, threads=1)
        b = generate_passage_ensemble(cfg, threads=4)
        assert np.array_equal(a.passage_time, b.passage_time, equal_nan=True)
        assert np.array_equal(a.overshoot, b.overshoot, equal_nan=True)
        assert np.array_equal(a.sup_horizon, b.sup_horizon)
        assert np.array_equal(a.positions, b.positions, equal_nan=True)

    def test_record_invariants(self):
        ens = generate_passage_ensemble(small_cfg())
        cen = ens.censored_mask
        assert ens.censored_count == cen.sum()
        # no censored record carries an overshoot
        assert np.all(np.isnan(ens.overshoot[cen]))
        assert np.all(ens.overshoot[~cen] >= 0)
        # recorded positions lie strictly below the level
        with np.errstate(invalid="ignore"):
            assert not np.any(ens.positions >= ens.config.x)
        # sup_horizon dominates every recorded position
        sup = np.nan_to_num(ens.positions, nan=-np.inf).max(axis=1)
        assert np.all(ens.sup_horizon >= sup - 1e-12)

    def test_positions_present_iff_alive_at_checkpoint(self):
        ens = generate_passage_ensemble(small_cfg())
        t = np.nan_to_num(ens.passage_time, nan=np.inf)
        for j, cp in enumerate(ens.config.checkpoints):
            expected = t > cp
            assert np.array_equal(~np.isnan(ens.positions[:, j]), expected)

    def test_merge(self):
        a = generate_passage_ensemble(small_cfg(n_samples=1500, master_seed=1))
        b = generate_passage_ensemble(small_cfg(n_samples=700, master_seed=2))
        m = merge_ensembles(a, b)
        assert len(m) == 2200
        assert m.censored_count == a.censored_count + b.censored_count
        assert np.array_equal(
            m.passage_time[:1500], a.passage_time, equal_nan=True
        )

    def test_merge_rejects_mismatched_config(self):
        a = generate_passage_ensemble(small_cfg(n_samples=500))
        b = generate_passage_ensemble(small_cfg(n_samples=500, x=2.0))
        with pytest.raises(ValueError):
            merge_ensembles(a, b)

    def test_censored_fraction_follows_tail_asymptote(self):
        # P(T_1 > horizon) ~ k0 * horizon^(-rho)
        cfg = small_cfg(n_samples=20_000, dt=5e-3, horizon=20.0, master_seed=77)
        ens = generate_passage_ensemble(cfg, threads=2)
        frac = ens.censored_count / len(ens)
        target = 0.613875 * 20.0**-0.5
        assert frac == pytest.approx(target, abs=0.012)

    def test_overshoot_law_ks_shrinks_with_dt(self):
        # x + overshoot converges in law to x / Beta(a*r, 1-a*r) as dt -> 0;
        # the KS gap is dominated by overshoots below the grid blur scale
        # dt^(1/alpha), so it decays like dt^((1-a*r)/alpha)
        ib = sample_inverse_beta(RngStream(99, 0), 0.75, 0.25, 50_000)
        gaps = []
        for dt in (1e-2, 1e-3):
            cfg = small_cfg(
                n_samples=6000, dt=dt, horizon=5.0, checkpoints=(), master_seed=5
            )
            ens = generate_passage_ensemble(cfg, threads=2)
            gaps.append(ks_two_sample(1.0 + ens.uncensored_overshoots, ib))
        assert gaps[1] < gaps[0]
        assert gaps[0] < 0.3

    def test_supremum_ensemble_nonnegative_and_deterministic(self):
        cfg = small_cfg(n_samples=3000)
        s1 = generate_supremum_ensemble(cfg, 1.0)
        s2 = generate_supremum_ensemble(cfg, 1.0, threads=3)
        assert np.array_equal(s1, s2)
        assert np.all(s1 >= 0.0)
        assert len(s1) == 3000
