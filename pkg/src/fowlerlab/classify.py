"""Evidence-based classification of integrated orbits.

The sign of the conserved invariant K = sphere_area * Psi splits orbits:
entire candidates sit on K = 0 and decay at rate delta at both window ends;
K < 0 with both components bounded below is both-singular behaviour; K < 0
with exactly one component decaying is semi-singular behaviour, which cannot
occur for N >= 4 and is therefore flagged as an anomaly there.  Finite
windows prove nothing, so every verdict is a candidate backed by a
quantitative evidence record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory
from .errors import InsufficientWindow, WrongVerdict
from .invariants import InvariantReport, psi_arrays
from .params import SystemParams

#: Verdict labels.
ENTIRE = "EntireCandidate"
BOTH_SINGULAR = "BothSingularCandidate"
SEMI_SINGULAR = "SemiSingularCandidate"
SIGN_CHANGING = "SignChanging"
BLOW_UP = "BlowUp"
INCONCLUSIVE = "Inconclusive"

VERDICTS = (ENTIRE, BOTH_SINGULAR, SEMI_SINGULAR, SIGN_CHANGING, BLOW_UP, INCONCLUSIVE)

#: |K| below 1e-8 * max(1, scale of the energy terms) counts as zero.
K_TOL_FACTOR = 1e-8
#: Fitted decay rate must sit within 5% of delta.
DECAY_RTOL = 0.05
#: Minimum one-sided coverage (in t) required for a decay fit.
MIN_SIDE_COVER = 10.0
#: Samples drawn from the dense interpolant for fits and extrema scans.
_FIT_SAMPLES = 400
_WINDOW_SAMPLES = 2000
#: Order-of-magnitude separation used by the semi-singular detector.
_SEMI_SEPARATION = 10.0


@dataclass(frozen=True)
class Classification:
    """Verdict plus the quantitative evidence it was drawn from."""

    verdict: str
    K_value: float
    evidence: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EstimateReport:
    """Best two-sided amplitude constants over the trajectory window."""

    C1: float
    C2: float
    ratio: float
    window: tuple[float, float]


def _side_region(traj: Trajectory, end: str) -> tuple[float, float]:
    span = traj.t_max - traj.t_min
    third = span / 3.0
    if end == "+":
        return traj.t_max - third, traj.t_max
    return traj.t_min, traj.t_min + third


def _decay_fit(traj: Trajectory, component: int, end: str) -> tuple[float, float]:
    """Least-squares decay fit of one component on the outer third.

    Returns (rate, amplitude) with w ~ amplitude * exp(-rate * |t|) toward
    the requested end.  Raises InsufficientWindow when the side covers less
    than MIN_SIDE_COVER units, is cut by a terminal event, or the component
    is not positive on the fit region.
    """
    if end not in ("+", "-"):
        raise ValueError(f"end must be '+' or '-', got {end!r}")
    if component not in (1, 2):
        raise ValueError(f"component must be 1 or 2, got {component!r}")
    cover = (traj.t_max - traj.t_initial) if end == "+" else (traj.t_initial - traj.t_min)
    if cover < MIN_SIDE_COVER:
        raise InsufficientWindow(
            f"side {end} covers {cover:.3g} < {MIN_SIDE_COVER} units of t"
        )
    for ev in traj.events:
        if ev.kind in ("BlowUp", "PositivityLoss"):
            if (end == "+" and ev.t > traj.t_initial) or (
                end == "-" and ev.t < traj.t_initial
            ):
                raise InsufficientWindow(f"side {end} truncated by {ev.kind}")
    lo, hi = _side_region(traj, end)
    ts = np.linspace(lo, hi, _FIT_SAMPLES)
    w = traj.sample(ts)[component - 1]
    if np.any(w <= 0.0):
        raise InsufficientWindow("component not positive on the fit region")
    slope, intercept = np.polyfit(ts, np.log(w), 1)
    rate = -slope if end == "+" else slope
    amplitude = math.exp(intercept)
    return float(rate), float(amplitude)


def decay_rate(traj: Trajectory, component: int, end: str) -> float:
    """Fitted exponential decay rate toward one end of the window.

    end is "+" for t -> +inf (r -> 0) or "-" for t -> -inf.
    """
    return _decay_fit(traj, component, end)[0]


def _k_tolerance(params: SystemParams, traj: Trajectory) -> float:
    # Scale from the magnitudes of the individual energy terms at the
    # initial state, so the zero test is meaningful for large orbits too.
    s = traj.sample(traj.t_initial)
    w1, w2, dw1, dw2 = (float(v) for v in s[:, 0])
    p = params.p
    kin = 0.5 * (dw1 * dw1 + dw2 * dw2)
    lin = 0.5 * params.delta**2 * (w1 * w1 + w2 * w2)
    pot = (
        params.mu1 * abs(w1) ** (2 * p)
        + 2 * params.beta * abs(w1) ** p * abs(w2) ** p
        + params.mu2 * abs(w2) ** (2 * p)
    ) / (2 * p)
    scale = params.sphere_area * (kin + lin + pot)
    return K_TOL_FACTOR * max(1.0, scale)


def classify(
    params: SystemParams, traj: Trajectory, report: InvariantReport | None = None
) -> Classification:
    """Classify an orbit by its invariant value, events, and decay fits."""
    k_value = params.sphere_area * traj.psi0
    k_tol = _k_tolerance(params, traj)
    evidence: dict = {
        "k_tol": k_tol,
        "decay_rtol": DECAY_RTOL,
        "semi_separation": _SEMI_SEPARATION,
        "psi0": traj.psi0,
        "drift": traj.drift,
        "certified": traj.certified,
        "window": [traj.t_min, traj.t_max],
        "events": [[e.kind, e.t, e.component] for e in traj.events],
        "anomaly": False,
    }
    if report is not None:
        evidence["monitors"] = {
            "f_margin": list(report.f_margin),
            "lambda_margin": list(report.lambda_margin),
            "gradient_margin": list(report.gradient_margin),
            "pohozaev_match": report.pohozaev_match,
        }
    if traj.failure is not None:
        evidence["failure"] = traj.failure

    kinds = [e.kind for e in traj.events]
    if "SignChange" in kinds:
        return Classification(SIGN_CHANGING, k_value, evidence)
    if "BlowUp" in kinds:
        return Classification(BLOW_UP, k_value, evidence)
    if "PositivityLoss" in kinds:
        evidence["positivity_loss"] = True
        return Classification(SIGN_CHANGING, k_value, evidence)

    ts = np.linspace(traj.t_min, traj.t_max, _WINDOW_SAMPLES)
    w1, w2 = traj.sample(ts)[:2]
    inf_w = (float(np.min(w1)), float(np.min(w2)))
    sup_w = (float(np.max(w1)), float(np.max(w2)))
    evidence["inf_w"] = list(inf_w)
    evidence["sup_w"] = list(sup_w)

    fits: dict = {}
    for end in ("+", "-"):
        for comp in (1, 2):
            try:
                fits[(end, comp)] = _decay_fit(traj, comp, end)
            except InsufficientWindow as exc:
                fits[(end, comp)] = None
                evidence.setdefault("fit_errors", []).append(
                    [end, comp, str(exc)]
                )
    evidence["decay"] = {
        f"{end}{comp}": (None if fits[(end, comp)] is None else list(fits[(end, comp)]))
        for end in ("+", "-")
        for comp in (1, 2)
    }

    def decays(end: str, comp: int) -> bool:
        fit = fits[(end, comp)]
        return fit is not None and abs(fit[0] - params.delta) <= DECAY_RTOL * params.delta

    if abs(k_value) < k_tol:
        if all(decays(end, comp) for end in ("+", "-") for comp in (1, 2)):
            return Classification(ENTIRE, k_value, evidence)
        return Classification(INCONCLUSIVE, k_value, evidence)

    if k_value < -k_tol:
        # Semi-singular test at the r -> 0 end: exactly one component decays
        # at rate ~delta while the other stays an order of magnitude above
        # the decaying tail.
        span = traj.t_max - traj.t_min
        for comp, other in ((1, 2), (2, 1)):
            fit = fits[("+", comp)]
            if fit is None or not decays("+", comp):
                continue
            tail = fit[1] * math.exp(-params.delta * span / 3.0)
            if not decays("+", other) and inf_w[other - 1] > _SEMI_SEPARATION * tail:
                evidence["anomaly"] = params.N >= 4
                evidence["semi_decaying_component"] = comp
                return Classification(SEMI_SINGULAR, k_value, evidence)
        positivity_floor = traj.settings.positivity_floor
        if (
            not traj.terminated
            and inf_w[0] > _SEMI_SEPARATION * positivity_floor
            and inf_w[1] > _SEMI_SEPARATION * positivity_floor
            and not decays("+", 1)
            and not decays("+", 2)
        ):
            return Classification(BOTH_SINGULAR, k_value, evidence)
        return Classification(INCONCLUSIVE, k_value, evidence)

    # Positive K on a full positive window contradicts the theory; report
    # inconclusively and let the caller's expectation checks flag it.
    evidence["positive_K_without_events"] = True
    return Classification(INCONCLUSIVE, k_value, evidence)


def sharp_constants(
    traj: Trajectory, classification: Classification | None = None
) -> EstimateReport:
    """Two-sided amplitude constants of a both-singular candidate orbit.

    C1 and C2 are the window minimum and maximum of min/max(w1, w2); the
    orbit must carry (or be given) a BothSingularCandidate verdict.
    """
    if classification is None:
        classification = classify(traj.params, traj)
    if classification.verdict != BOTH_SINGULAR:
        raise WrongVerdict(
            f"sharp_constants requires {BOTH_SINGULAR}, got {classification.verdict}"
        )
    ts = np.linspace(traj.t_min, traj.t_max, _WINDOW_SAMPLES)
    w1, w2 = traj.sample(ts)[:2]
    c1 = float(min(np.min(w1), np.min(w2)))
    c2 = float(max(np.max(w1), np.max(w2)))
    return EstimateReport(C1=c1, C2=c2, ratio=c2 / c1, window=(traj.t_min, traj.t_max))


def proportionality_probe(traj: Trajectory) -> float:
    """Worst relative deviation of w1/w2 from its median over the window.

    Zero (to roundoff) exactly when the orbit is a constant multiple of a
    shared profile; strictly positive otherwise.
    """
    ts = np.linspace(traj.t_min, traj.t_max, _WINDOW_SAMPLES)
    w1, w2 = traj.sample(ts)[:2]
    ratio = w1 / w2
    m = float(np.median(ratio))
    return float(np.max(np.abs(ratio - m)) / abs(m))
