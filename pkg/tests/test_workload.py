import math

import numpy as np
import pytest
from scipy import stats

from aircomp.sim_core import derive_stream
from aircomp.workload import (AppProfile, Leg, User, judge_task, next_task_time,
                              per_user_demand, position_at, rwp_next_leg)
from helpers import make_spec

ENT = AppProfile("entertainment", 10.0, 100.0, 0.3, 500e3)
REND = AppProfile("rendering", 20.0, 200.0, 1.0, 500e3)


class TestAppProfile:
    def test_fields_must_be_positive(self):
        with pytest.raises(ValueError):
            AppProfile("x", 0.0, 100.0, 0.3, 500e3)
        with pytest.raises(ValueError):
            AppProfile("x", 10.0, 100.0, -1.0, 500e3)

    def test_table_demand_identity(self):
        spec = make_spec()
        assert per_user_demand(spec.apps) == pytest.approx(60.0)


class TestJudge:
    def test_fast_edge_task_succeeds(self):
        assert judge_task(0.007, 0.0, 0.1, 0.3)

    def test_boundary_is_inclusive(self):
        assert judge_task(0.25, 0.25, 0.5, 1.0)

    def test_cloud_only_suits_the_long_tolerance_class(self):
        assert judge_task(1.505, 0.0, 0.005, 3.0)        # multimedia
        assert not judge_task(1.505, 0.0, 0.01, 1.0)     # rendering


class TestArrivals:
    def test_draws_are_strictly_in_the_future(self):
        rng = derive_stream(3, "t")
        assert all(next_task_time(ENT, rng, 5.0) > 5.0 for _ in range(1000))

    def test_sample_mean_matches_profile(self):
        rng = derive_stream(4, "mean")
        gaps = [next_task_time(ENT, rng, 0.0) for _ in range(100_000)]
        assert abs(np.mean(gaps) - 10.0) < 0.1

    def test_slower_profile_makes_half_as_many_tasks(self):
        horizon = 50_000.0
        counts = []
        for app in (ENT, REND):
            rng = derive_stream(5, "ratio", app.name)
            t, n = 0.0, 0
            while True:
                t = next_task_time(app, rng, t)
                if t > horizon:
                    break
                n += 1
            counts.append(n)
        assert counts[1] / counts[0] == pytest.approx(0.5, rel=0.05)

    def test_rate_multiplier_compresses_gaps(self):
        rng = derive_stream(6, "surge")
        gaps = [next_task_time(ENT, rng, 0.0, rate_multiplier=2.0) for _ in range(50_000)]
        assert np.mean(gaps) == pytest.approx(5.0, rel=0.02)

    def test_counts_are_poisson(self):
        # 50-stream aggregate of window counts against the Poisson law
        horizon, mean_gap = 200.0, 10.0
        counts = []
        for i in range(50):
            rng = derive_stream(7, "poisson", i)
            t, n = 0.0, 0
            while True:
                t += rng.exponential(mean_gap)
                if t > horizon:
                    break
                n += 1
            counts.append(n)
        lam = horizon / mean_gap
        edges = [0, 14, 17, 20, 23, 26, np.inf]
        observed, _ = np.histogram(counts, bins=edges)
        cdf = stats.poisson(lam).cdf
        probs = np.diff([cdf(e - 0.5) if np.isfinite(e) else 1.0 for e in edges])
        _, p = stats.chisquare(observed, probs * len(counts), ddof=0)
        assert p > 0.01


class TestMobility:
    def spec_users(self):
        return make_spec().users

    def test_legs_stay_in_bounds(self):
        user = User(0, 200.0, 200.0)
        rng = derive_stream(8, "legs")
        for _ in range(10_000):
            leg = rwp_next_leg(user, 400.0, 400.0, rng, leg_now(user), 1.0, 2.0)
            assert 0.0 <= leg.x1 <= 400.0 and 0.0 <= leg.y1 <= 400.0
            assert 1.0 <= leg.speed <= 2.0
            user.leg = leg

    def test_destinations_uniform_per_dimension(self):
        user = User(0, 200.0, 200.0)
        rng = derive_stream(9, "ks")
        xs, ys = [], []
        for _ in range(100_000):
            leg = rwp_next_leg(user, 400.0, 400.0, rng, leg_now(user), 1.0, 2.0)
            xs.append(leg.x1 / 400.0)
            ys.append(leg.y1 / 400.0)
            user.leg = leg
        assert stats.kstest(xs, "uniform").pvalue > 0.01
        assert stats.kstest(ys, "uniform").pvalue > 0.01

    def test_interpolation_midpoint(self):
        user = User(0, 0.0, 0.0)
        user.leg = Leg(0.0, 0.0, 100.0, 0.0, 10.0, depart=2.0, arrive=12.0)
        assert position_at(user, 7.0) == (50.0, 0.0)

    def test_clamped_at_destination(self):
        user = User(0, 0.0, 0.0)
        user.leg = Leg(0.0, 0.0, 100.0, 0.0, 10.0, 2.0, 12.0)
        assert position_at(user, 99.0) == (100.0, 0.0)

    def test_departure_point(self):
        user = User(0, 0.0, 0.0)
        user.leg = Leg(0.0, 0.0, 100.0, 0.0, 10.0, 2.0, 12.0)
        assert position_at(user, 2.0) == (0.0, 0.0)

    def test_nomadic_user_stays_put(self):
        user = User(0, 30.0, 40.0, mobile=False)
        assert position_at(user, 123.0) == (30.0, 40.0)

    def test_pause_holds_the_origin(self):
        user = User(0, 10.0, 10.0)
        rng = derive_stream(10, "pause")
        leg = rwp_next_leg(user, 400.0, 400.0, rng, 0.0, 1.0, 2.0, pause_max=5.0)
        assert leg.depart > 0.0
        assert position_at(user, leg.depart / 2) == (10.0, 10.0)


def leg_now(user):
    return user.leg.arrive if user.leg else 0.0
