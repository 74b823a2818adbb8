import math

import mpmath
import numpy as np
import pytest

from fowlerlab import (
    BLOW_UP,
    BOTH_SINGULAR,
    ENTIRE,
    SIGN_CHANGING,
    FowlerState,
    IntegratorSettings,
    bubble_fowler,
    classify,
    cylinder_state,
    decay_rate,
    integrate,
    make_params,
    monitor,
    proportionality_probe,
    sharp_constants,
)
from fowlerlab.errors import InsufficientWindow, WrongVerdict

mpmath.mp.dps = 50

#: K of the symmetric N=3 cylinder: 4*pi * (-(1/12)/sqrt(2)) = -pi/(3 sqrt 2).
CYL_K_N3 = float(-mpmath.pi / (3 * mpmath.sqrt(2)))


class TestClassify:
    def test_bubble_is_entire(self, p3, bubble_traj):
        result = classify(p3, bubble_traj, monitor(p3, bubble_traj))
        assert result.verdict == ENTIRE
        assert abs(result.K_value) < 1e-8
        assert result.evidence["anomaly"] is False

    def test_cylinder_is_both_singular(self, p3, cylinder_traj):
        result = classify(p3, cylinder_traj)
        assert result.verdict == BOTH_SINGULAR
        assert result.K_value == pytest.approx(CYL_K_N3, rel=1e-12)

    def test_positive_energy_changes_sign(self, p3):
        state = FowlerState(0.0, 0.5, 0.5, 0.3, -0.3)
        traj = integrate(p3, state, IntegratorSettings(t_span=(-50.0, 50.0)), mode="signed")
        result = classify(p3, traj)
        assert result.verdict == SIGN_CHANGING
        assert result.K_value > 0

    def test_positivity_loss_counts_as_sign_changing(self, p3):
        state = FowlerState(0.0, 0.5, 0.5, 0.3, -0.3)
        traj = integrate(p3, state, IntegratorSettings(t_span=(-50.0, 50.0)))
        result = classify(p3, traj)
        assert result.verdict == SIGN_CHANGING
        assert result.evidence.get("positivity_loss")

    def test_blowup_verdict(self, p3):
        traj = integrate(p3, FowlerState(0.0, 2000.0, 2000.0, 0.0, 0.0))
        assert classify(p3, traj).verdict == BLOW_UP

    def test_perturbed_cylinder_both_singular(self, p3, perturbed_traj):
        result = classify(p3, perturbed_traj, monitor(p3, perturbed_traj))
        assert result.verdict == BOTH_SINGULAR
        assert result.K_value < 0

    def test_no_positive_energy_orbit_survives_full_window(self, p3):
        # Negative direction of the invariant-sign theorem at monitor level:
        # positive data with positive energy never yields a certified
        # positive full-window orbit; in positivity-constrained mode every
        # such run terminates at the floor.
        rng = np.random.default_rng(414)
        checked = 0
        while checked < 20:
            a = rng.uniform(0.1, 1.0, size=2)
            b = rng.uniform(-1.0, 1.0, size=2)
            state = FowlerState(0.0, a[0], a[1], b[0], b[1])
            p = make_params(3, 1, 1, 1)
            from fowlerlab import psi as psi_fn

            if psi_fn(p, state) <= 1e-3:
                continue
            traj = integrate(p, state, IntegratorSettings(t_span=(-50.0, 50.0)))
            assert traj.terminated
            assert classify(p, traj).verdict == SIGN_CHANGING
            checked += 1

    def test_verdict_stability(self, p3):
        # Closed-form orbits keep their verdicts under halved tolerances and
        # a doubled window.
        base = IntegratorSettings(t_span=(-10.0, 10.0))
        refined = IntegratorSettings(
            rel_tol=0.5e-10, abs_tol=0.5e-12, t_span=(-20.0, 20.0)
        )
        for state, expected in (
            (bubble_fowler(p3, 1.0, 0.0), ENTIRE),
            (cylinder_state(p3)[0], BOTH_SINGULAR),
        ):
            for settings in (base, refined):
                traj = integrate(p3, state, settings)
                assert classify(p3, traj).verdict == expected


class TestDecayRate:
    def test_bubble_rate_both_sides(self, bubble_traj, p3):
        for comp in (1, 2):
            for end in ("+", "-"):
                rate = decay_rate(bubble_traj, comp, end)
                assert rate == pytest.approx(p3.delta, rel=0.01)

    def test_cylinder_rate_is_zero(self, cylinder_traj):
        assert abs(decay_rate(cylinder_traj, 1, "+")) < 1e-6
        assert abs(decay_rate(cylinder_traj, 2, "-")) < 1e-6

    def test_perturbed_cylinder_rate_small(self, perturbed_traj):
        # Oracle: the dense range of log w is bounded, so the fitted slope
        # cannot exceed range/length of the fit region.
        ts = np.linspace(perturbed_traj.t_min, perturbed_traj.t_max, 10000)
        w1 = perturbed_traj.sample(ts)[0]
        spread = np.ptp(np.log(w1))
        assert spread < 0.02
        assert abs(decay_rate(perturbed_traj, 1, "+")) < 5e-2

    def test_insufficient_window(self, p3):
        state, _ = cylinder_state(p3)
        short = integrate(p3, state, IntegratorSettings(t_span=(-4.0, 4.0)))
        with pytest.raises(InsufficientWindow):
            decay_rate(short, 1, "+")

    def test_truncated_side_rejected(self, p3):
        state = FowlerState(0.0, 0.5, 0.5, 0.3, -0.3)
        traj = integrate(p3, state, IntegratorSettings(t_span=(-50.0, 50.0)))
        assert traj.terminated
        with pytest.raises(InsufficientWindow):
            decay_rate(traj, 1, "+")


class TestSharpConstants:
    def test_cylinder_degenerate_band(self, p3, cylinder_traj):
        est = sharp_constants(cylinder_traj)
        c = (1.0 / 8.0) ** 0.25
        assert est.C1 == pytest.approx(c, abs=1e-9)
        assert est.C2 == pytest.approx(c, abs=1e-9)
        assert est.ratio == pytest.approx(1.0, abs=1e-9)

    def test_perturbed_cylinder_band(self, p3, perturbed_traj):
        est = sharp_constants(perturbed_traj)
        assert 0 < est.C1 < est.C2
        assert est.ratio > 1.0
        assert est.C2 <= max(p3.lam) + 1e-6
        # Oracle: direct min/max over a dense sample grid.
        ts = np.linspace(perturbed_traj.t_min, perturbed_traj.t_max, 2000)
        w1, w2 = perturbed_traj.sample(ts)[:2]
        assert est.C1 == pytest.approx(min(w1.min(), w2.min()), rel=1e-12)
        assert est.C2 == pytest.approx(max(w1.max(), w2.max()), rel=1e-12)
        assert np.all(w1 >= est.C1) and np.all(w2 >= est.C1)
        assert np.all(w1 <= est.C2) and np.all(w2 <= est.C2)

    def test_bubble_wrong_verdict(self, bubble_traj):
        with pytest.raises(WrongVerdict):
            sharp_constants(bubble_traj)


class TestProportionality:
    def test_bubble_exactly_proportional(self, bubble_traj):
        assert proportionality_probe(bubble_traj) < 1e-9

    def test_symmetric_cylinder_proportional(self, cylinder_traj):
        assert proportionality_probe(cylinder_traj) < 1e-9

    def test_one_sided_perturbation_detected(self, perturbed_traj):
        assert proportionality_probe(perturbed_traj) > 1e-4

    def test_asymmetric_equilibrium_still_proportional(self):
        # Different component amplitudes, but constant ratio.
        p = make_params(5, 1.0, 2.0, 1.0)
        state, _ = cylinder_state(p)
        traj = integrate(p, state, IntegratorSettings(t_span=(-10.0, 10.0)))
        assert proportionality_probe(traj) < 1e-9
