"""Frame-process model: latency, geometric tail, frame budget, P_c, oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percsafe.collision import (
    FrameBudget,
    PerceptionProfile,
    ZeroSpeed,
    collision_probability,
    frame_budget,
    frame_process_oracle,
    geometric_tail,
    total_latency,
)
from percsafe.geometry import EncounterState, SafetyMargins, alpha_critical

MARGINS = SafetyMargins(0.05, 0.05)

E6_BASELINE = PerceptionProfile(t_p=0.040599, t_r=0.1, recall=0.89869, iou=0.750)
E6_ATTENTIVE = PerceptionProfile(t_p=0.030882, t_r=0.1, recall=0.88670, iou=0.738)


def encounter(r, u, alpha, margins=MARGINS):
    return EncounterState(r=r, u=u, alpha=alpha, margins=margins)


class TestTotalLatency:
    def test_reference_baseline(self):
        assert total_latency(E6_BASELINE) == pytest.approx(0.140599, abs=1e-12)

    def test_reference_attentive(self):
        assert total_latency(E6_ATTENTIVE) == pytest.approx(0.130882, abs=1e-12)

    def test_zero_frame_time_rejected(self):
        with pytest.raises(ValueError):
            PerceptionProfile(t_p=0.0, t_r=0.0, recall=0.5, iou=0.5)


class TestGeometricTail:
    def test_direct_substitution(self):
        assert geometric_tail(0.9, FrameBudget(2)) == pytest.approx(0.01, rel=1e-12)

    def test_perfect_recall(self):
        assert geometric_tail(1.0, FrameBudget(5)) == 0.0

    def test_empty_product(self):
        assert geometric_tail(0.37, FrameBudget(0)) == 1.0
        assert geometric_tail(1.0, FrameBudget(0)) == 1.0

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            geometric_tail(1.5, FrameBudget(1))

    @given(st.floats(0.0, 1.0), st.integers(0, 200))
    def test_within_unit_interval_and_monotone(self, p_d, m):
        tail = geometric_tail(p_d, m)
        assert 0.0 <= tail <= 1.0
        assert geometric_tail(p_d, m + 1) <= tail


class TestFrameBudget:
    def test_exact_quotient(self):
        assert frame_budget(0.4, 1.0, 0.04).m == 10

    def test_e6_effective_distance(self):
        assert frame_budget(0.294755, 1.0, 0.040599).m == 7

    def test_zero_distance(self):
        assert frame_budget(0.0, 1.0, 0.04).m == 0

    def test_zero_speed(self):
        with pytest.raises(ZeroSpeed):
            frame_budget(0.4, 0.0, 0.04)

    def test_negative_budget_rejected(self):
        with pytest.raises(ValueError):
            FrameBudget(-1)

    @given(
        st.floats(0.001, 2.0),
        st.floats(0.01, 2.0),
        st.floats(0.005, 0.2),
        st.floats(0.1, 10.0),
    )
    def test_scaling_invariance(self, l_s, u, t_p, factor):
        # Scaling the distance and the per-frame travel together keeps the
        # floor argument unchanged.
        base = frame_budget(l_s, u, t_p).m
        scaled = frame_budget(l_s * factor, u * factor, t_p).m
        assert abs(scaled - base) <= 1  # float dust may cross a plateau edge

    def test_scaling_invariance_exact_powers_of_two(self):
        for factor in (2.0, 4.0, 8.0):
            assert (
                frame_budget(0.37 * factor, 1.0 * factor, 0.04).m
                == frame_budget(0.37, 1.0, 0.04).m
            )


class TestCollisionProbability:
    def test_e6_frozen_case(self):
        e = encounter(0.5, 1.0, 0.0)
        value = collision_probability(e, E6_BASELINE)
        assert value == pytest.approx((1.0 - 0.89869) ** 7, rel=1e-12)
        assert value == pytest.approx(1.095e-7, rel=1e-3)

    def test_receding(self):
        assert collision_probability(encounter(0.5, 1.0, math.pi), E6_BASELINE) == 0.0

    def test_already_in_contact(self):
        assert collision_probability(encounter(0.05, 1.0, 0.0), E6_BASELINE) == 1.0

    def test_zero_speed(self):
        assert collision_probability(encounter(0.5, 0.0, 0.0), E6_BASELINE) == 0.0

    def test_discrete_value_set(self):
        # Every output is a power of the per-frame miss probability (or 0/1).
        rng = np.random.default_rng(5)
        for _ in range(100):
            e = encounter(
                float(rng.uniform(0.15, 1.5)),
                float(rng.uniform(0.02, 1.0)),
                float(rng.uniform(-math.pi, math.pi)),
            )
            value = collision_probability(e, E6_BASELINE)
            if value in (0.0, 1.0):
                continue
            m = math.log(value) / math.log(1.0 - E6_BASELINE.recall)
            assert m == pytest.approx(round(m), abs=1e-9)

    def test_monotone_in_profile(self):
        e = encounter(0.5, 0.8, 0.05)
        base = collision_probability(e, E6_BASELINE)
        better_recall = PerceptionProfile(0.040599, 0.1, 0.95, 0.750)
        worse_recall = PerceptionProfile(0.040599, 0.1, 0.80, 0.750)
        assert collision_probability(e, better_recall) <= base
        assert collision_probability(e, worse_recall) >= base
        slower = PerceptionProfile(0.060, 0.1, 0.89869, 0.750)
        assert collision_probability(e, slower) >= base
        lazier = PerceptionProfile(0.040599, 0.2, 0.89869, 0.750)
        assert collision_probability(e, lazier) >= base
        sharper = PerceptionProfile(0.040599, 0.1, 0.89869, 0.9)
        assert collision_probability(e, sharper) <= base


class TestFrameProcessOracle:
    def test_perfect_recall_never_collides(self):
        e = encounter(0.5, 1.0, 0.0)
        p = PerceptionProfile(t_p=0.04, t_r=0.0, recall=1.0, iou=1.0)
        assert frame_process_oracle(e, p, trials=1000, seed=0) == 0.0

    def test_zero_recall_always_collides(self):
        e = encounter(0.5, 1.0, 0.0)
        p = PerceptionProfile(t_p=0.04, t_r=0.0, recall=0.0, iou=1.0)
        assert frame_process_oracle(e, p, trials=1000, seed=0) == 1.0

    def test_half_recall_three_frames(self):
        # L_s = 0.4 and t_p = 0.11 give a three-frame budget, so the
        # collision probability is 0.5^3 = 0.125.
        e = encounter(0.5, 1.0, 0.0)
        p = PerceptionProfile(t_p=0.11, t_r=0.0, recall=0.5, iou=1.0)
        assert collision_probability(e, p) == pytest.approx(0.125, rel=1e-12)
        trials = 1_000_000
        estimate = frame_process_oracle(e, p, trials=trials, seed=42)
        sigma = math.sqrt(0.125 * 0.875 / trials)
        assert abs(estimate - 0.125) <= 3.0 * sigma

    def test_deterministic_per_seed(self):
        e = encounter(0.5, 1.0, 0.05)
        p = PerceptionProfile(t_p=0.05, t_r=0.05, recall=0.6, iou=0.8)
        a = frame_process_oracle(e, p, trials=20000, seed=9)
        b = frame_process_oracle(e, p, trials=20000, seed=9)
        assert a == b
        c = frame_process_oracle(e, p, trials=20000, seed=10)
        assert a != c  # overwhelmingly likely for distinct streams

    def test_agreement_with_closed_form(self):
        rng = np.random.default_rng(123)
        trials = 20000
        agree = 0
        total = 40
        for i in range(total):
            margins = SafetyMargins.from_total(float(rng.uniform(0.04, 0.16)))
            r = float(rng.uniform(margins.total + 0.02, 1.2))
            a_c = alpha_critical(r, margins)
            e = encounter(
                r,
                float(rng.uniform(0.05, 1.2)),
                float(rng.uniform(-a_c, a_c)),
                margins,
            )
            p = PerceptionProfile(
                t_p=float(rng.uniform(0.01, 0.12)),
                t_r=float(rng.uniform(0.0, 0.25)),
                recall=float(rng.uniform(0.3, 0.995)),
                iou=float(rng.uniform(0.4, 1.0)),
            )
            closed = collision_probability(e, p)
            sim = frame_process_oracle(e, p, trials, seed=1000 + i)
            sigma = math.sqrt(closed * (1.0 - closed) / trials)
            agree += abs(sim - closed) <= 3.0 * sigma
        assert agree / total >= 0.95

    def test_rejects_no_trials(self):
        e = encounter(0.5, 1.0, 0.0)
        with pytest.raises(ValueError):
            frame_process_oracle(e, E6_BASELINE, trials=0, seed=0)
