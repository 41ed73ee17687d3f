"""Scale-invariant objectives on interior unknowns.

Both the Rayleigh quotient and the energy along the Nehari fibre are
homogeneous, so we minimise their logarithms, which are invariant under
``v -> c v``.  Iterates are rescaled whenever ``max |v|`` leaves
``[1/2, 2]``; the accumulated log-scale is tracked by the caller.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ZeroFieldError
from .functionals import evaluate_terms

INF = math.inf


@lru_cache(maxsize=8)
def _stiffness_lu(domain):
    idx = domain.interior_index
    K = domain.mesh.stiffness()[idx][:, idx].tocsc()
    return spla.splu(K)


class Interior:
    def __init__(self, domain):
        self.domain = domain
        self.idx = domain.interior_index
        self._lu = None

    def full(self, x):
        u = np.zeros(self.domain.n)
        u[self.idx] = x
        return u

    def restrict(self, u):
        return np.asarray(u, dtype=float)[self.idx]

    def precond(self, g):
        if self._lu is None:
            self._lu = _stiffness_lu(self.domain)
        return self._lu.solve(g)

    @staticmethod
    def rescale(x):
        m = float(np.max(np.abs(x)))
        if m == 0.0 or 0.5 <= m <= 2.0:
            return None
        return 1.0 / m


def rayleigh_objective(space, m, r):
    """``log ||grad v||_m^m - m log ||v||_r`` and its gradient."""
    dom = space.domain

    def fun(x):
        try:
            t = evaluate_terms(space.full(x), dom, m, m, r, with_grad=True)
        except ZeroFieldError:
            return INF, None
        f = t.log_Ap - m * t.log_norm
        g = t.dlog_Ap - m * t.dlog_norm
        return f, g[space.idx]

    return fun


def fibre_log_energy(t, p, q, log_lam, log_w=0.0):
    """Log of ``|I|`` at the Nehari point of the ray, or ``None`` if the ray has none.

    ``log_w`` is the log of the weight on the q-term.  Returns ``(log |I|, log t, log D, log(A_p / (lam ||v||^p)))``.  The common
    gradient scale ``g = max |grad v|`` is factored out: it cancels from the
    ratio and the energy, and enters ``log t`` only as ``-log g``.
    """
    load_s = log_lam + p * t.log_rel_norm
    ratio = t.log_sp - load_s
    if ratio >= 0.0:
        return None
    D_s = load_s + math.log1p(-math.exp(ratio))
    sq = t.log_sq + log_w
    x = (sq - D_s) / (p - q)
    return q * x + sq, x - t.log_gmax, D_s + p * t.log_gmax, ratio


def nehari_objective(space, params):
    """Signed log-energy of the Nehari point on the ray through ``v``.

    ``q < p``: minimise ``log I(t(v) v)`` (positive energies).
    ``p < q``: the same ``t(v)`` minimises ``I`` along the ray and ``I < 0``
    there, so minimise ``-log |I(t(v) v)|``.
    """
    dom = space.domain
    p, q, r = params.p, params.q, params.r
    s = 1.0 if q < p else -1.0
    log_lam = params.log_lam
    if not params.q_weight > 0:
        raise ValueError("the Nehari objective needs a positive q-term weight")
    log_w = math.log(params.q_weight)

    def fun(x):
        try:
            t = evaluate_terms(space.full(x), dom, p, q, r, with_grad=True)
        except ZeroFieldError:
            return INF, None
        fe = fibre_log_energy(t, p, q, log_lam, log_w)
        if fe is None:
            return INF, None
        val, _, _, ratio = fe
        e = math.exp(ratio)
        dlogD = (p * t.dlog_norm - e * t.dlog_Ap) / (1.0 - e)
        g = (p * t.dlog_Aq - q * dlogD) / (p - q)
        return s * val, s * g[space.idx]

    return fun
