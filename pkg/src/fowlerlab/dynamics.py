"""Transform to logarithmic radial variables, the vector field, and the
adaptive integrator with dense output and event detection.

Integration uses an embedded Runge-Kutta 5(4) pair (Dormand-Prince via
scipy) in both time directions from the initial point.  Dense output is a
per-step quintic Hermite built from node values, derivatives, and
accelerations from the vector field, so sampling is reproducible after a
serialization round trip.  The field is the signed continuous extension
|w|^(q-1) w of the positive-cone powers; on the positive cone both forms
agree, and positivity-constrained runs terminate at a small floor instead of
crossing zero (the field is not Lipschitz at w = 0 when N >= 5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError
from .invariants import psi_arrays
from .params import SystemParams
from .state import FowlerState

#: Certification bound: max |Psi - Psi(0)| <= factor * max(1, |Psi(0)|).
DRIFT_CERT_FACTOR = 1e-8
#: Extrema scanning ignores intervals where |w'| never exceeds this floor
#: (suppresses spurious crossings on constant orbits).
_EXTREMA_DW_FLOOR_FACTOR = 1e3
#: Critical points with |w''| below 10 * abs_tol cannot be classified.
_DEGENERATE_FACTOR = 10.0

_EVENT_ORDER = {
    "SignChange": 0,
    "PositivityLoss": 1,
    "BlowUp": 2,
    "LocalMin": 3,
    "LocalMax": 4,
    "DegenerateCritical": 5,
}


@dataclass(frozen=True)
class IntegratorSettings:
    """Tolerances, window, and event thresholds for a single integration.

    max_step defaults to 1 so near-equilibrium orbits keep a dense node
    grid (sub-1e-13 node accuracy at the constant orbit) instead of taking
    window-sized steps whose stage arithmetic amplifies rounding.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    t_span: tuple[float, float] = (-30.0, 30.0)
    max_step: float = 1.0
    blowup_threshold: float = 1e3
    positivity_floor: float = 1e-14
    event_refinement_tol: float = 1e-12

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise DomainError("tolerances must be positive")
        if not self.t_span[0] < self.t_span[1]:
            raise DomainError(f"degenerate t_span {self.t_span!r}")
        if not (self.blowup_threshold > 0.0 and self.positivity_floor > 0.0):
            raise DomainError("thresholds must be positive")
        if not self.event_refinement_tol > 0.0:
            raise DomainError("event_refinement_tol must be positive")


@dataclass(frozen=True)
class Event:
    """A located orbit event, refined in t to the event tolerance."""

    kind: str
    t: float
    state: FowlerState
    component: int | None = None

    def sort_key(self):
        return (self.t, self.component or 0, _EVENT_ORDER.get(self.kind, 9))


def _accelerations(params: SystemParams, w1, w2):
    """Second derivatives (w1'', w2'') of the signed-extension field."""
    p = params.p
    d2 = params.delta**2
    a1 = np.abs(w1)
    a2 = np.abs(w2)
    s1 = np.sign(w1)
    s2 = np.sign(w2)
    dd1 = d2 * w1 - params.mu1 * s1 * a1 ** (2.0 * p - 1.0) - params.beta * a2**p * s1 * a1 ** (p - 1.0)
    dd2 = d2 * w2 - params.mu2 * s2 * a2 ** (2.0 * p - 1.0) - params.beta * a1**p * s2 * a2 ** (p - 1.0)
    return dd1, dd2


def rhs(params: SystemParams, state: FowlerState) -> tuple[float, float, float, float]:
    """First-order vector field (w1', w2', w1'', w2'') at a phase point.

    Total on finite inputs: the power |w|^(p-2) w is continuously extended
    by 0 at w = 0, which matters for N >= 5 where p < 2.
    """
    dd1, dd2 = _accelerations(params, state.w1, state.w2)
    return (state.dw1, state.dw2, float(dd1), float(dd2))


def _make_ode(params: SystemParams) -> Callable:
    p = params.p
    d2 = params.delta**2
    mu1, mu2, beta = params.mu1, params.mu2, params.beta
    p1 = p - 1.0
    q1 = 2.0 * p - 1.0

    def fun(t, y):
        w1, w2, v1, v2 = y
        a1 = abs(w1)
        a2 = abs(w2)
        dd1 = d2 * w1 - mu1 * math.copysign(a1**q1, w1) - beta * a2**p * math.copysign(a1**p1, w1)
        dd2 = d2 * w2 - mu2 * math.copysign(a2**q1, w2) - beta * a1**p * math.copysign(a2**p1, w2)
        return (v1, v2, dd1, dd2)

    return fun


def to_fowler(
    params: SystemParams, r: float, u: float, v: float, du: float, dv: float
) -> FowlerState:
    """Map radial data (r, u, v, u', v') to the logarithmic phase point.

    Inverse of to_radial; the derivative map follows from
    u'(r) = -r^(-delta-1) (w1'(t) + delta w1(t)).
    """
    if r <= 0.0:
        raise DomainError(f"radius must be positive, got {r!r}")
    delta = params.delta
    t = -math.log(r)
    w1 = r**delta * u
    w2 = r**delta * v
    dw1 = -(r ** (delta + 1.0)) * du - delta * w1
    dw2 = -(r ** (delta + 1.0)) * dv - delta * w2
    return FowlerState(t=t, w1=w1, w2=w2, dw1=dw1, dw2=dw2)


def to_radial(params: SystemParams, state: FowlerState) -> tuple[float, float, float, float, float]:
    """Map a phase point back to radial data (r, u, v, u', v')."""
    delta = params.delta
    r = math.exp(-state.t)
    u = r ** (-delta) * state.w1
    v = r ** (-delta) * state.w2
    du = -(r ** (-delta - 1.0)) * (state.dw1 + delta * state.w1)
    dv = -(r ** (-delta - 1.0)) * (state.dw2 + delta * state.w2)
    return r, u, v, du, dv


def _quintic_coeffs(t: np.ndarray, y: np.ndarray, d: np.ndarray, a: np.ndarray):
    """Per-interval quintic Hermite coefficients for one component.

    Matches value, first, and second derivative at both interval ends;
    coefficients are in the normalized variable s = (tau - t_i) / h_i.
    """
    h = np.diff(t)
    y0, y1 = y[:-1], y[1:]
    d0, d1 = d[:-1] * h, d[1:] * h
    a0, a1 = a[:-1] * h * h, a[1:] * h * h
    r1 = y1 - y0 - d0 - 0.5 * a0
    r2 = d1 - d0 - a0
    r3 = a1 - a0
    c = np.empty((len(h), 6))
    c[:, 0] = y0
    c[:, 1] = d0
    c[:, 2] = 0.5 * a0
    c[:, 3] = 10.0 * r1 - 4.0 * r2 + 0.5 * r3
    c[:, 4] = -15.0 * r1 + 7.0 * r2 - r3
    c[:, 5] = 6.0 * r1 - 3.0 * r2 + 0.5 * r3
    return c


@dataclass
class Trajectory:
    """Dense-output integration result with events and invariant logs.

    Nodes are the accepted integrator steps, strictly increasing in t, each
    carrying the conserved energy; drift is max |psi - psi0| over nodes.
    """

    params: SystemParams
    settings: IntegratorSettings
    mode: str
    t: np.ndarray
    y: np.ndarray  # shape (4, n): w1, w2, w1', w2'
    psi: np.ndarray
    events: tuple[Event, ...]
    psi0: float
    drift: float
    t_initial: float
    failure: str | None = None
    _coeffs: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def t_min(self) -> float:
        return float(self.t[0])

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    @property
    def nodes(self) -> tuple[FowlerState, ...]:
        return tuple(
            FowlerState.from_array(ti, self.y[:, i]) for i, ti in enumerate(self.t)
        )

    @property
    def certified(self) -> bool:
        """Completed without step failure and drift within the energy budget."""
        return self.failure is None and self.drift <= DRIFT_CERT_FACTOR * max(
            1.0, abs(self.psi0)
        )

    @property
    def terminated(self) -> bool:
        return any(e.kind in ("BlowUp", "PositivityLoss") for e in self.events)

    @property
    def positive(self) -> bool:
        """No node or event indicates a component at or below zero."""
        if any(e.kind in ("PositivityLoss", "SignChange") for e in self.events):
            return False
        return bool(np.min(self.y[0]) > 0.0 and np.min(self.y[1]) > 0.0)

    def _interpolant(self):
        if self._coeffs is None:
            dd1, dd2 = _accelerations(self.params, self.y[0], self.y[1])
            c1 = _quintic_coeffs(self.t, self.y[0], self.y[2], dd1)
            c2 = _quintic_coeffs(self.t, self.y[1], self.y[3], dd2)
            self._coeffs = (c1, c2, np.diff(self.t))
        return self._coeffs

    def sample(self, tq) -> np.ndarray:
        """Dense state arrays (w1, w2, w1', w2') at query times within cover."""
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        if len(self.t) < 2:
            # Degenerate single-node trajectory (e.g. immediate blow-up).
            return np.tile(self.y[:, :1], (1, len(tq)))
        c1, c2, h = self._interpolant()
        idx = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(h) - 1)
        s = (tq - self.t[idx]) / h[idx]
        out = np.empty((4, len(tq)))
        for row, c in ((0, c1), (1, c2)):
            cc = c[idx]
            val = cc[:, 5]
            for k in (4, 3, 2, 1, 0):
                val = val * s + cc[:, k]
            out[row] = val
            dv = 5.0 * cc[:, 5]
            for k, m in ((4, 4.0), (3, 3.0), (2, 2.0), (1, 1.0)):
                dv = dv * s + m * cc[:, k]
            out[row + 2] = dv / h[idx]
        return out

    def sample_state(self, t: float) -> FowlerState:
        return FowlerState.from_array(t, self.sample(t)[:, 0])


def _refine_crossing(
    fun: Callable[[float], float], ta: float, tb: float, tol: float
) -> float:
    # Refine a bracketed zero by bisection; the interval is shrunk a factor
    # 16 below tol so the function value at the result is well inside tol
    # even for unit-scale slopes.
    fa = fun(ta)
    if fa == 0.0:
        return ta
    target = tol / 16.0
    while tb - ta > target:
        tm = 0.5 * (ta + tb)
        if tm == ta or tm == tb:
            break
        fm = fun(tm)
        if fm == 0.0:
            return tm
        if fa * fm < 0.0:
            tb = tm
        else:
            ta, fa = tm, fm
    return 0.5 * (ta + tb)


def _segment(params, fun, t0, y0, t_end, settings, mode):
    events = []

    def ev_blowup(t, y):
        return max(abs(y[0]), abs(y[1])) - settings.blowup_threshold

    # Event-function sign changes are tracked along the computed sequence,
    # so the crossing directions below hold for backward segments too.
    ev_blowup.terminal = True
    ev_blowup.direction = 1.0
    events.append(("BlowUp", None, ev_blowup))

    if mode == "positive":
        for comp in (1, 2):
            def ev_floor(t, y, comp=comp):
                return y[comp - 1] - settings.positivity_floor

            ev_floor.terminal = True
            ev_floor.direction = -1.0
            events.append(("PositivityLoss", comp, ev_floor))

    sol = solve_ivp(
        fun,
        (t0, t_end),
        y0,
        method="RK45",
        rtol=settings.rel_tol,
        atol=settings.abs_tol,
        max_step=settings.max_step,
        dense_output=False,
        events=[e[2] for e in events],
    )
    terminal = []
    for (kind, comp, _), t_ev, y_ev in zip(events, sol.t_events, sol.y_events):
        for te, ye in zip(t_ev, y_ev):
            terminal.append(
                Event(kind=kind, t=float(te), state=FowlerState.from_array(te, ye), component=comp)
            )
    failure = "StepSizeUnderflow" if sol.status == -1 else None
    return sol.t, sol.y, terminal, failure


def integrate(
    params: SystemParams,
    initial: FowlerState,
    settings: IntegratorSettings | None = None,
    mode: str = "positive",
) -> Trajectory:
    """Integrate forward and backward from the initial point over t_span.

    Terminal events: BlowUp always (a component magnitude crosses the
    threshold), PositivityLoss only in positivity-constrained mode.  In
    signed mode zero crossings of each component are recorded as
    non-terminal SignChange events, refined by bisection on the dense
    interpolant.  Step-size underflow is reported on the trajectory (flagged
    uncertified), never raised.
    """
    if settings is None:
        settings = IntegratorSettings()
    if mode not in ("positive", "signed"):
        raise DomainError(f"unknown integration mode {mode!r}")
    if mode == "positive" and not (
        initial.w1 > settings.positivity_floor and initial.w2 > settings.positivity_floor
    ):
        raise DomainError(
            "positivity-constrained integration requires strictly positive data"
        )

    fun = _make_ode(params)
    t0 = initial.t
    y0 = initial.as_array()
    t_lo, t_hi = settings.t_span

    psi0 = float(psi_arrays(params, initial.w1, initial.w2, initial.dw1, initial.dw2))
    if max(abs(initial.w1), abs(initial.w2)) >= settings.blowup_threshold:
        # Data already outside the certified box: immediate terminal event.
        event = Event(kind="BlowUp", t=t0, state=initial, component=None)
        return Trajectory(
            params=params,
            settings=settings,
            mode=mode,
            t=np.array([t0]),
            y=y0.reshape(4, 1),
            psi=np.array([psi0]),
            events=(event,),
            psi0=psi0,
            drift=0.0,
            t_initial=t0,
        )

    ts_parts = [np.array([t0])]
    ys_parts = [y0.reshape(4, 1)]
    terminal_events: list[Event] = []
    failure = None

    if t_hi > t0:
        tf, yf, ev, fail = _segment(params, fun, t0, y0, t_hi, settings, mode)
        ts_parts.append(tf[1:])
        ys_parts.append(yf[:, 1:])
        terminal_events.extend(ev)
        failure = failure or fail
    if t_lo < t0:
        tb, yb, ev, fail = _segment(params, fun, t0, y0, t_lo, settings, mode)
        ts_parts.insert(0, tb[1:][::-1])
        ys_parts.insert(0, yb[:, 1:][:, ::-1])
        terminal_events.extend(ev)
        failure = failure or fail

    t = np.concatenate(ts_parts)
    y = np.concatenate(ys_parts, axis=1)
    order = np.argsort(t, kind="stable")
    t = t[order]
    y = y[:, order]

    psi_nodes = np.asarray(psi_arrays(params, y[0], y[1], y[2], y[3]), dtype=float)
    drift = float(np.max(np.abs(psi_nodes - psi0))) if psi_nodes.size else 0.0

    traj = Trajectory(
        params=params,
        settings=settings,
        mode=mode,
        t=t,
        y=y,
        psi=psi_nodes,
        events=(),
        psi0=psi0,
        drift=drift,
        t_initial=t0,
        failure=failure,
    )

    all_events = list(terminal_events)
    if mode == "signed" and len(t) >= 2:
        all_events.extend(_sign_change_events(traj))
    traj.events = tuple(sorted(all_events, key=Event.sort_key))
    return traj


#: Sub-samples per accepted step when scanning the interpolant for events.
_SCAN_PER_STEP = 6


def _scan_grid(traj: Trajectory) -> np.ndarray:
    """Dense event-scan grid: _SCAN_PER_STEP points per step, shared ends."""
    t0s = traj.t[:-1]
    h = np.diff(traj.t)
    frac = np.linspace(0.0, 1.0, _SCAN_PER_STEP)
    grid = t0s[:, None] + h[:, None] * frac[None, :]
    # Collapse duplicated interval endpoints into one strictly sorted axis.
    flat = grid.ravel()
    keep = np.ones(len(flat), dtype=bool)
    keep[1:] = flat[1:] > flat[:-1]
    return flat[keep]


def _dedupe(candidates: list[float], tol: float) -> list[float]:
    candidates.sort()
    kept: list[float] = []
    for te in candidates:
        if not kept or te - kept[-1] > max(10.0 * tol, 1e-10):
            kept.append(te)
    return kept


def _bracketed_zeros(traj: Trajectory, row: int, tt: np.ndarray, vv: np.ndarray) -> list[float]:
    """Zero crossings of one sampled row, bisection-refined.

    Exact zeros at grid points count only when the surrounding nonzero
    values straddle the axis (a tangential touch is not a crossing).
    """
    tol = traj.settings.event_refinement_tol
    f = lambda x: float(traj.sample(x)[row, 0])
    nz = vv != 0.0
    t_nz = tt[nz]
    v_nz = vv[nz]
    crossings = np.nonzero(v_nz[:-1] * v_nz[1:] < 0.0)[0]
    return [
        _refine_crossing(f, float(t_nz[i]), float(t_nz[i + 1]), tol)
        for i in crossings
    ]


def _sign_change_events(traj: Trajectory) -> list[Event]:
    tt = _scan_grid(traj)
    sampled = traj.sample(tt)
    tol = traj.settings.event_refinement_tol
    found = []
    for comp in (1, 2):
        for te in _dedupe(_bracketed_zeros(traj, comp - 1, tt, sampled[comp - 1]), tol):
            found.append(
                Event(kind="SignChange", t=te, state=traj.sample_state(te), component=comp)
            )
    return found


def detect_extrema(traj: Trajectory) -> tuple[Event, ...]:
    """Local extrema of each component from zero crossings of w_i'.

    Crossings are located on the dense interpolant and classified by the
    sign of w_i'' from the vector field; critical points with |w_i''| below
    10 * abs_tol are flagged DegenerateCritical (no classification).
    Intervals where |w_i'| stays below a noise floor are skipped, so exact
    equilibria yield no events.
    """
    if len(traj.t) < 2:
        return ()
    floor = _EXTREMA_DW_FLOOR_FACTOR * traj.settings.abs_tol
    tol = traj.settings.event_refinement_tol
    tt = _scan_grid(traj)
    sampled = traj.sample(tt)
    step_idx = np.clip(np.searchsorted(traj.t, tt, side="right") - 1, 0, len(traj.t) - 2)
    events: list[Event] = []
    for comp in (1, 2):
        row = comp + 1
        dv = sampled[row]
        # Per-step derivative scale: a crossing only counts when the
        # derivative is resolvable somewhere in its step, so exact
        # equilibria (derivative at noise level) yield no events.
        step_max = np.zeros(len(traj.t) - 1)
        np.maximum.at(step_max, step_idx, np.abs(dv))
        for te in _dedupe(_bracketed_zeros(traj, row, tt, dv), tol):
            k = int(np.clip(np.searchsorted(traj.t, te, side="right") - 1,
                            0, len(traj.t) - 2))
            if step_max[k] <= floor:
                continue
            state = traj.sample_state(te)
            acc = rhs(traj.params, state)[comp + 1]
            if abs(acc) < _DEGENERATE_FACTOR * traj.settings.abs_tol:
                kind = "DegenerateCritical"
            elif acc > 0.0:
                kind = "LocalMin"
            else:
                kind = "LocalMax"
            events.append(Event(kind=kind, t=te, state=state, component=comp))
    return tuple(sorted(events, key=Event.sort_key))
