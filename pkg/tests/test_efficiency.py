import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowq_cavity.efficiency import (
    LossBudget,
    SuccessStats,
    closed_form_stats,
    expected_time,
    monte_carlo_time,
    success_probability,
)

TWO_ATOM = LossBudget(0.02, 2, 1e-4, 0.06, 1e4)


class TestSuccessProbability:
    def test_two_atom_budget(self):
        assert success_probability(TWO_ATOM) == pytest.approx(9.02776e-5, rel=1e-12)
        assert round(success_probability(TWO_ATOM) * 100, 3) == 0.009

    def test_defaults_are_two_atom_budget(self):
        assert LossBudget() == TWO_ATOM

    def test_lossless(self):
        assert success_probability(LossBudget(0.0, 5, 1.0, 0.0, 1.0)) == 1.0

    def test_three_atoms(self):
        p = success_probability(LossBudget(0.02, 3, 1e-4, 0.06, 1e4))
        assert p == pytest.approx(0.98**3 * 1e-4 * 0.94, rel=1e-12)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"atom_decay_fraction": 1.0},
            {"atom_decay_fraction": -0.1},
            {"optical_loss_fraction": 1.0},
            {"detector_factor": 0.0},
            {"detector_factor": 1.5},
            {"n_atoms": 0},
            {"n_atoms": 1.5},
            {"photon_rate": 0.0},
            {"photon_rate": math.inf},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            LossBudget(**kwargs)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0, 0.99), st.floats(0, 0.99), st.floats(1e-6, 1), st.integers(1, 8),
        st.floats(0, 0.5), st.sampled_from(["atom_decay_fraction", "optical_loss_fraction", "n_atoms"]),
    )
    def test_monotone_in_losses(self, decay, optical, detector, n, bump, which):
        base = LossBudget(decay, n, detector, optical, 1.0)
        worse = dict(atom_decay_fraction=decay, n_atoms=n, detector_factor=detector, optical_loss_fraction=optical)
        if which == "n_atoms":
            worse["n_atoms"] = n + 1
        else:
            worse[which] = min(0.999, worse[which] + bump)
        assert success_probability(LossBudget(photon_rate=1.0, **worse)) <= success_probability(base)


class TestExpectedTime:
    def test_two_atom_budget(self):
        # 1 / (1e4 * 9.02776e-5)
        assert expected_time(TWO_ATOM) == pytest.approx(1.1076944889983784, rel=1e-12)
        assert expected_time(TWO_ATOM) < 2

    def test_unit(self):
        assert expected_time(LossBudget(0.0, 1, 1.0, 0.0, 1.0)) == 1.0

    def test_rate_scaling(self):
        doubled = LossBudget(0.02, 2, 1e-4, 0.06, 2e4)
        assert expected_time(doubled) == pytest.approx(expected_time(TWO_ATOM) / 2, rel=1e-15)

    def test_stats_invariants(self):
        s = closed_form_stats(TWO_ATOM)
        assert s.expected_attempts == pytest.approx(1 / s.p_success)
        assert s.expected_time_s == pytest.approx(s.expected_attempts / TWO_ATOM.photon_rate)


class TestMonteCarlo:
    def test_two_atom_budget_converges(self):
        s = monte_carlo_time(TWO_ATOM, seed=11, n_trials=1_000_000)
        assert abs(s.mc_mean_s - s.expected_time_s) < 3 * s.mc_standard_error_s
        assert abs(s.mc_mean_s / s.expected_time_s - 1) < 0.01

    def test_certain_success(self):
        s = monte_carlo_time(LossBudget(0.0, 1, 1.0, 0.0, 4.0), seed=1, n_trials=1000)
        assert s.mc_mean_s == 0.25
        assert s.mc_stddev_s == 0.0

    def test_single_trial(self):
        s = monte_carlo_time(TWO_ATOM, seed=3, n_trials=1)
        assert s.n_trials == 1 and s.mc_stddev_s == 0.0

    def test_deterministic(self):
        a = monte_carlo_time(TWO_ATOM, seed=42, n_trials=300_000)
        b = monte_carlo_time(TWO_ATOM, seed=42, n_trials=300_000)
        assert a == b

    def test_seed_changes_sample(self):
        assert monte_carlo_time(TWO_ATOM, 1, 10_000).mc_mean_s != monte_carlo_time(TWO_ATOM, 2, 10_000).mc_mean_s

    def test_independent_of_worker_count(self):
        serial = monte_carlo_time(TWO_ATOM, seed=8, n_trials=600_000, workers=1)
        threaded = monte_carlo_time(TWO_ATOM, seed=8, n_trials=600_000, workers=4)
        assert serial == threaded

    @pytest.mark.parametrize("n", [0, -5, 2.5])
    def test_rejects_bad_trials(self, n):
        with pytest.raises(ValueError, match="n_trials"):
            monte_carlo_time(TWO_ATOM, 0, n)

    def test_json_keys(self):
        data = json.loads(monte_carlo_time(TWO_ATOM, 0, 100).to_json())
        assert set(data) == {"p_success", "expected_attempts", "expected_time_s",
                             "mc_mean_s", "mc_stddev_s", "n_trials", "seed"}

    def test_closed_form_has_no_sample(self):
        s = closed_form_stats(TWO_ATOM)
        assert isinstance(s, SuccessStats) and s.mc_mean_s is None and s.mc_standard_error_s is None
