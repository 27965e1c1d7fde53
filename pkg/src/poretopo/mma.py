"""Method of moving asymptotes for box-constrained minimization with one
inequality constraint.

Each update builds the separable convex approximation around the current
iterate and solves it through its dual: with a single constraint the dual
variable is a scalar, located by bisection on the constraint value of the
primal minimizer.  Asymptotes adapt to the iterate history (shrink after an
oscillation, expand after two aligned moves).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OptimizerError

ASY_INIT = 0.5
ASY_SHRINK = 0.7
ASY_GROW = 1.2
ALBEFA = 0.1
RAA0 = 1e-5
MOVE_LIMIT = 0.2
DUAL_TOL = 1e-12
# Gap clamps keep the subproblem well posed; the lower clamp is far below
# any physically meaningful move so persistent oscillations can keep
# tightening the asymptotes instead of stalling at a fixed amplitude.
ASY_GAP_MIN = 1e-12
ASY_GAP_MAX = 10.0


@dataclass
class MmaState:
    """Iterate history and asymptotes of one optimization run."""

    x: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    xold1: np.ndarray | None = None
    xold2: np.ndarray | None = None
    iteration: int = 0
    dual: float = 0.0
    subproblem_value: float = field(default=np.nan)

    @classmethod
    def initial(cls, x0: np.ndarray) -> "MmaState":
        x0 = np.asarray(x0, dtype=float)
        return cls(x=x0.copy(), lower=np.zeros_like(x0), upper=np.ones_like(x0))


@dataclass(frozen=True)
class MmaOptions:
    x_min: float = 0.0
    x_max: float = 1.0
    move: float = MOVE_LIMIT
    asy_init: float = ASY_INIT
    asy_shrink: float = ASY_SHRINK
    asy_grow: float = ASY_GROW


def _asymptotes(state: MmaState, opts: MmaOptions) -> tuple[np.ndarray, np.ndarray]:
    x = state.x
    xrange = opts.x_max - opts.x_min
    if state.iteration < 2 or state.xold1 is None or state.xold2 is None:
        low = x - opts.asy_init * xrange
        upp = x + opts.asy_init * xrange
        return low, upp
    trend = (x - state.xold1) * (state.xold1 - state.xold2)
    factor = np.ones_like(x)
    factor[trend > 0] = opts.asy_grow
    factor[trend < 0] = opts.asy_shrink
    low = x - factor * (state.xold1 - state.lower)
    upp = x + factor * (state.upper - state.xold1)
    low = np.clip(low, x - ASY_GAP_MAX * xrange, x - ASY_GAP_MIN * xrange)
    upp = np.clip(upp, x + ASY_GAP_MIN * xrange, x + ASY_GAP_MAX * xrange)
    return low, upp


def _pq(x, low, upp, grad, xrange):
    """Numerator coefficients of the rational approximation of one function."""
    gp = np.maximum(grad, 0.0)
    gm = np.maximum(-grad, 0.0)
    reg = 0.001 * (gp + gm) + RAA0 / xrange
    p = (upp - x) ** 2 * (gp + reg)
    q = (x - low) ** 2 * (gm + reg)
    return p, q


def _primal(lam, p0, q0, p1, q1, low, upp, alpha, beta):
    """Coordinate-wise minimizer of the Lagrangian for a given dual value."""
    p = p0 + lam * p1
    q = q0 + lam * q1
    sp_ = np.sqrt(p)
    sq = np.sqrt(q)
    x = (low * sp_ + upp * sq) / (sp_ + sq)
    return np.clip(x, alpha, beta)


def _eval_approx(x, p, q, low, upp):
    return np.sum(p / (upp - x) + q / (x - low))


def mma_update(
    state: MmaState,
    df0: np.ndarray,
    g: float,
    dg: np.ndarray,
    opts: MmaOptions = MmaOptions(),
) -> MmaState:
    """One MMA iteration; returns the updated state with the new iterate.

    ``g`` is the constraint value (feasible when <= 0) and ``dg`` its
    gradient at the current iterate.
    """
    x = state.x
    df0 = np.asarray(df0, dtype=float)
    dg = np.asarray(dg, dtype=float)
    if not (np.all(np.isfinite(df0)) and np.all(np.isfinite(dg)) and np.isfinite(g)):
        raise OptimizerError("non-finite objective or constraint data")

    xrange = opts.x_max - opts.x_min
    low, upp = _asymptotes(state, opts)
    alpha = np.maximum.reduce([
        np.full_like(x, opts.x_min),
        low + ALBEFA * (x - low),
        x - opts.move * xrange,
    ])
    beta = np.minimum.reduce([
        np.full_like(x, opts.x_max),
        upp - ALBEFA * (upp - x),
        x + opts.move * xrange,
    ])

    p0, q0 = _pq(x, low, upp, df0, xrange)
    p1, q1 = _pq(x, low, upp, dg, xrange)
    # constant of the constraint approximation: g_tilde(x_k) = g
    r1 = g - _eval_approx(x, p1, q1, low, upp)

    def g_tilde(xv):
        return _eval_approx(xv, p1, q1, low, upp) + r1

    x0 = _primal(0.0, p0, q0, p1, q1, low, upp, alpha, beta)
    lam = 0.0
    x_new = x0
    if g_tilde(x0) > 0.0:
        # expand a bracket, then bisect on the constraint value
        lo, hi = 0.0, 1.0
        for _ in range(200):
            if g_tilde(_primal(hi, p0, q0, p1, q1, low, upp, alpha, beta)) <= 0.0:
                break
            lo = hi
            hi *= 2.0
            if hi > 1e14:
                raise OptimizerError("dual bracketing failed; subproblem infeasible")
        for _ in range(200):
            lam = 0.5 * (lo + hi)
            x_new = _primal(lam, p0, q0, p1, q1, low, upp, alpha, beta)
            gt = g_tilde(x_new)
            if abs(gt) <= DUAL_TOL:
                break
            if gt > 0.0:
                lo = lam
            else:
                hi = lam
            if hi - lo <= 1e-16 * max(1.0, hi):
                break
        x_new = _primal(lam, p0, q0, p1, q1, low, upp, alpha, beta)

    new = MmaState(
        x=x_new,
        lower=low,
        upper=upp,
        xold1=x.copy(),
        xold2=None if state.xold1 is None else state.xold1.copy(),
        iteration=state.iteration + 1,
        dual=lam,
        subproblem_value=_eval_approx(x_new, p0, q0, low, upp),
    )
    return new


def subproblem_kkt_residual(
    state_prev: MmaState,
    state_new: MmaState,
    df0: np.ndarray,
    g: float,
    dg: np.ndarray,
    opts: MmaOptions = MmaOptions(),
) -> float:
    """Max KKT violation of the subproblem solution (for verification).

    Stationarity is checked coordinate-wise with bound multipliers implied
    by clipping; complementarity uses the approximate constraint value.
    """
    x_k = state_prev.x
    x = state_new.x
    low, upp = state_new.lower, state_new.upper
    lam = state_new.dual
    xrange = opts.x_max - opts.x_min

    alpha = np.maximum.reduce([
        np.full_like(x_k, opts.x_min),
        low + ALBEFA * (x_k - low),
        x_k - opts.move * xrange,
    ])
    beta = np.minimum.reduce([
        np.full_like(x_k, opts.x_max),
        upp - ALBEFA * (upp - x_k),
        x_k + opts.move * xrange,
    ])
    p0, q0 = _pq(x_k, low, upp, df0, xrange)
    p1, q1 = _pq(x_k, low, upp, dg, xrange)
    r1 = g - _eval_approx(x_k, p1, q1, low, upp)

    p = p0 + lam * p1
    q = q0 + lam * q1
    slope = p / (upp - x) ** 2 - q / (x - low) ** 2
    at_lower = np.isclose(x, alpha, rtol=0, atol=1e-13)
    at_upper = np.isclose(x, beta, rtol=0, atol=1e-13)
    interior = ~(at_lower | at_upper)
    res = 0.0
    if np.any(interior):
        res = max(res, float(np.max(np.abs(slope[interior]))))
    if np.any(at_lower):
        res = max(res, float(np.max(np.maximum(-slope[at_lower], 0.0))))
    if np.any(at_upper):
        res = max(res, float(np.max(np.maximum(slope[at_upper], 0.0))))
    gt = _eval_approx(x, p1, q1, low, upp) + r1
    res = max(res, abs(lam * gt))
    if lam == 0.0:
        res = max(res, max(gt, 0.0))
    return res
