"""Small unconstrained optimizers used by the eigen and solver modules.

``lbfgs`` is a limited-memory quasi-Newton method with Armijo backtracking.
The objective may return ``inf`` to mark infeasible points; the line search
simply backtracks past them.  Every accepted step strictly lowers ``f``, so
the recorded trace is monotone.

``newton`` minimizes a smooth convex objective given a sparse Hessian.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla


@dataclass
class OptResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    converged: bool
    reason: str
    trace: list = field(default_factory=list)
    evaluations: int = 0


def lbfgs(
    fun,
    x0,
    precond=None,
    memory=12,
    max_iters=2000,
    tol_grad=1e-8,
    tol_f=1e-9,
    stall_window=10,
    c1=1e-4,
    shrink=0.5,
    max_backtracks=60,
    max_rel_step=0.25,
    rescale=None,
    callback=None,
):
    """Minimize ``fun`` (returning ``(f, grad)``) from ``x0``.

    ``precond(g)`` applies an SPD approximation of the inverse Hessian and is
    also the metric for the gradient test ``sqrt(g . precond(g)) <= tol_grad``.
    The run also stops when ``f`` has dropped by less than ``tol_f`` over the
    last ``stall_window`` iterations.

    ``rescale(x)`` may return a factor ``c``; the iterate is then replaced by
    ``c * x``.  This is only valid for objectives that are invariant under
    scaling, and the stored pairs are transformed accordingly.
    """
    P = precond if precond is not None else (lambda g: g)
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    nfev = 1
    if not math.isfinite(f):
        raise ValueError("starting point is infeasible")
    S, Y, RHO = deque(maxlen=memory), deque(maxlen=memory), deque(maxlen=memory)
    trace = [(0, f, float("nan"))]
    history = deque([f], maxlen=stall_window + 1)
    reason = "max_iters"
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        Pg = P(g)
        gnorm = math.sqrt(max(float(g @ Pg), 0.0))
        if gnorm <= tol_grad:
            reason, converged = "gradient", True
            it -= 1
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(list(zip(S, Y, RHO))):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if S:
            y_last = Y[-1]
            Py = P(y_last)
            gamma = float(S[-1] @ y_last) / float(y_last @ Py)
            d = gamma * P(q)
        else:
            d = P(q)
        for (s, y, rho), a in zip(zip(S, Y, RHO), reversed(alphas)):
            b = rho * float(y @ d)
            d += (a - b) * s
        d = -d
        slope = float(g @ d)
        if slope >= 0:
            S.clear(), Y.clear(), RHO.clear()
            d = -Pg
            slope = -float(g @ Pg)
        step = 1.0
        xs = float(np.max(np.abs(x)))
        ds = float(np.max(np.abs(d)))
        if ds > max_rel_step * xs > 0:
            step = max_rel_step * xs / ds
        accepted = False
        for _ in range(max_backtracks):
            xn = x + step * d
            fn, gn = fun(xn)
            nfev += 1
            if math.isfinite(fn) and fn <= f + c1 * step * slope and fn < f:
                accepted = True
                break
            step *= shrink
        if not accepted:
            reason, converged = "line_search", abs(slope) < 1e-14 * max(1.0, abs(f))
            it -= 1
            break
        s = xn - x
        y = gn - g
        sy = float(s @ y)
        x, f, g = xn, fn, gn
        if sy > 1e-300:
            S.append(s)
            Y.append(y)
            RHO.append(1.0 / sy)
        if rescale is not None:
            c = rescale(x)
            if c is not None and c != 1.0:
                x = x * c
                g = g / c
                for i in range(len(S)):
                    S[i] = S[i] * c
                    Y[i] = Y[i] / c
        trace.append((it, f, step))
        history.append(f)
        if callback is not None:
            callback(it, x, f, step)
        if len(history) == history.maxlen and history[0] - f < tol_f * max(1.0, abs(f)):
            reason, converged = "stalled", True
            break
    return OptResult(x, f, g, it, converged, reason, trace, nfev)


def newton(fun, hess, x0, max_iters=200, tol=1e-13, c1=1e-4, reg=1e-12):
    """Damped Newton for a convex objective.

    ``fun(x)`` returns ``(f, g)``; ``hess(x)`` returns a sparse SPD matrix.
    Stops when half the squared Newton decrement falls below
    ``tol * max(1, |f|)``.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    trace = [(0, f, float("nan"))]
    reason, converged = "max_iters", False
    it = 0
    for it in range(1, max_iters + 1):
        H = hess(x).tocsc()
        diag = H.diagonal()
        shift = reg * float(np.max(diag)) if diag.size else 0.0
        if shift > 0:
            H = H + shift * _speye(H.shape[0])
        try:
            d = -spla.splu(H).solve(g)
        except RuntimeError:
            d = -g / np.maximum(diag, 1e-300)
        dec = -float(g @ d)
        if 0.5 * dec <= tol * max(1.0, abs(f)):
            reason, converged = "decrement", True
            it -= 1
            break
        step = 1.0
        ok = False
        for _ in range(60):
            xn = x + step * d
            fn, gn = fun(xn)
            if math.isfinite(fn) and fn <= f - c1 * step * dec:
                ok = True
                break
            step *= 0.5
        if not ok:
            reason, converged = "line_search", 0.5 * dec <= 1e3 * tol * max(1.0, abs(f))
            it -= 1
            break
        x, f, g = xn, fn, gn
        trace.append((it, f, step))
    return OptResult(x, f, g, it, converged, reason, trace)


def _speye(n):
    import scipy.sparse as sp

    return sp.identity(n, format="csc")
