"""Dormand-Prince 5(4) integrator with PI step control and event bisection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NonFiniteState, StepSizeUnderflow

# Butcher tableau (Dormand & Prince 1980)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
# fifth-order weights minus embedded fourth-order weights
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

EVENT_TIME_TOL = 1e-9


@dataclass
class Event:
    """Zero crossing of ``fn(t, y)``.

    ``direction`` +1 fires on rising crossings, -1 on falling ones, 0 on both.
    """

    name: str
    fn: Callable[[float, np.ndarray], float]
    direction: int = 0

    def crossed(self, g0: float, g1: float) -> bool:
        if self.direction >= 0 and g0 < 0.0 <= g1:
            return True
        if self.direction <= 0 and g0 > 0.0 >= g1:
            return True
        return False


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0


class DormandPrince:
    """Adaptive explicit RK integrator.

    The instance keeps its proposed step size and error history between calls
    to :meth:`advance`, so a driver can integrate piecewise over control ticks
    without the controller restarting from scratch at every boundary.
    """

    order = 5

    def __init__(self, rtol: float = 1e-6, atol: float = 1e-8, h_init: float = 1e-4,
                 h_min: float = 1e-12, safety: float = 0.9):
        self.rtol = rtol
        self.atol = atol
        self.h = h_init
        self.h_min = h_min
        self.safety = safety
        self._err_prev = 1e-4
        self.stats = StepStats()

    def _step(self, fun, t, y, h, k1):
        attempt = getattr(fun, "dp_attempt", None)
        if attempt is not None:
            # right-hand sides that ship a compiled stepper (autonomous systems)
            self.stats.evaluations += 6
            return attempt(y, h, k1)
        ks = [k1]
        for i in range(1, 7):
            a = _A[i]
            yi = y.copy()
            for j, aij in enumerate(a):
                if aij:
                    yi += (h * aij) * ks[j]
            ks.append(fun(t + _C[i] * h, yi))
        self.stats.evaluations += 6
        y_new = y.copy()
        for j, bj in enumerate(_B):
            if bj:
                y_new += (h * bj) * ks[j]
        err = np.zeros_like(y)
        for j, ej in enumerate(_E):
            if ej:
                err += (h * ej) * ks[j]
        return y_new, err, ks[6]

    def _norm(self, err, y, y_new):
        scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
        return math.sqrt(float(np.mean((err / scale) ** 2)))

    def single_step(self, fun, t, y, h):
        """One fixed step without error control (used for event bisection)."""
        k1 = fun(t, y)
        self.stats.evaluations += 1
        return self._step(fun, t, y, h, k1)[0]

    def advance(self, fun: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray,
                t_end: float, events: Sequence[Event] = ()):
        """Integrate from ``t`` towards ``t_end``.

        Returns ``(t, y, event)`` where ``event`` is the first event that fired
        (the state is then located just past the crossing, within
        ``EVENT_TIME_TOL``) or None when ``t_end`` was reached.
        """
        y = np.array(y, dtype=float)
        k1 = fun(t, y)
        self.stats.evaluations += 1
        g_prev = [ev.fn(t, y) for ev in events]
        while t < t_end:
            remaining = t_end - t
            h = min(self.h, remaining)
            if h < self.h_min:
                if remaining < self.h_min:
                    return t_end, y, None
                raise StepSizeUnderflow(f"step size {h:.3e} below minimum at t={t:.6f}")
            y_new, err_vec, k_last = self._step(fun, t, y, h, k1)
            if not np.all(np.isfinite(y_new)):
                err = math.inf
            else:
                err = self._norm(err_vec, y, y_new)
            if err <= 1.0:
                # PI controller on the accepted step
                err = max(err, 1e-10)
                fac = self.safety * err ** (-0.7 / self.order) * self._err_prev ** (0.4 / self.order)
                fac = min(5.0, max(0.2, fac))
                self._err_prev = err
                # a step shortened to hit t_end must not shrink the proposal
                self.h = h * fac if h >= self.h else max(self.h, h * fac)
                self.stats.accepted += 1
                t_new = t + h if h < remaining else t_end
                if events:
                    g_new = [ev.fn(t_new, y_new) for ev in events]
                    for i, ev in enumerate(events):
                        if ev.crossed(g_prev[i], g_new[i]):
                            t_ev, y_ev = self._locate(fun, t, y, t_new, ev, g_prev[i])
                            return t_ev, y_ev, ev
                    g_prev = g_new
                t, y, k1 = t_new, y_new, k_last
            else:
                self.stats.rejected += 1
                if not math.isfinite(err):
                    self.h = 0.2 * h
                    if self.h < self.h_min:
                        raise NonFiniteState(f"non-finite state at t={t:.6f}")
                else:
                    self.h = h * max(0.2, self.safety * err ** (-1.0 / self.order))
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"non-finite state at t={t:.6f}")
        return t, y, None

    def _locate(self, fun, t0, y0, t1, event, g0):
        lo, hi = 0.0, t1 - t0
        y_hi = None
        while hi - lo > EVENT_TIME_TOL:
            mid = 0.5 * (lo + hi)
            y_mid = self.single_step(fun, t0, y0, mid)
            if event.crossed(g0, event.fn(t0 + mid, y_mid)):
                hi, y_hi = mid, y_mid
            else:
                lo = mid
        if y_hi is None:
            y_hi = self.single_step(fun, t0, y0, hi)
        return t0 + hi, y_hi


def integrate(fun, t0: float, y0, t_end: float, rtol: float = 1e-6, atol: float = 1e-8,
              events: Sequence[Event] = (), terminal: bool = True):
    """Convenience driver: integrate ``fun`` once and collect events.

    Returns ``(ts, ys, hits)`` with the accepted boundary states and a list of
    ``(name, t, y)`` for each event. With ``terminal`` the first event stops the
    run.
    """
    solver = DormandPrince(rtol, atol)
    t, y = t0, np.array(y0, dtype=float)
    ts, ys, hits = [t], [y.copy()], []
    active = list(events)
    while t < t_end:
        t, y, ev = solver.advance(fun, t, y, t_end, active)
        ts.append(t)
        ys.append(y.copy())
        if ev is None:
            break
        hits.append((ev.name, t, y.copy()))
        if terminal:
            break
        active.remove(ev)
    return np.array(ts), np.array(ys), hits
