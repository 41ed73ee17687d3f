"""Randomised check cases shared by the unit tests and the acceptance gate."""

import math

import numpy as np

from pqlimit import SUP, ProblemParams, ScalarField
from pqlimit.fields import sup_gateaux, sup_norm
from pqlimit.functionals import energy, evaluate_terms, grad_energy_I, nehari_residual
from pqlimit.solver import nehari_project


def random_field(d, rng, lo=0.0):
    """Smooth-ish random field: rho times a random trigonometric bump plus noise."""
    c = d.coords
    a, b = rng.uniform(0.5, 4.0, 2)
    ph = rng.uniform(0, 2 * np.pi, 2)
    base = d.rho * (1.5 + np.sin(a * c[:, 0] + ph[0]) * np.cos(b * c[:, 1] + ph[1]))
    noise = rng.uniform(lo, 1.0, d.n) * d.h
    return ScalarField(d, base + noise)


def unique_peak_pair(d, seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1, 1, d.n)
    k = rng.choice(np.flatnonzero(d.interior))
    u[k] = rng.choice([-1.5, 1.5]) * rng.uniform(1.0, 2.0)
    v = rng.choice([-1, 1], d.n) * rng.uniform(0.5, 1.0, d.n)
    return ScalarField(d, u), ScalarField(d, v)


def sup_gateaux_fd_error(d, seed, p=None, eps=1e-6):
    """Relative gap between sup_gateaux and the right difference quotient."""
    if p is None:
        p = float(np.random.default_rng(seed + 1).uniform(2.0, 12.0))
    u, v = unique_peak_pair(d, seed)
    exact = sup_gateaux(u, v, p)
    fd = (sup_norm(u + v * eps).max_value ** p - sup_norm(u).max_value ** p) / eps
    return abs(fd - exact) / abs(exact)


def grad_check_error(d, seed, eps=1e-6):
    """Relative gap between <grad I(u), v> and the central difference of I along v."""
    rng = np.random.default_rng(seed)
    p, q = rng.uniform(2.1, 6.0, 2)
    if abs(p - q) < 1e-3:
        q = p + 0.5
    r = float(rng.choice([2.0, 4.0]))
    u = random_field(d, rng, lo=-1.0)
    v = ScalarField(d, rng.uniform(-1, 1, d.n))
    lam = float(rng.uniform(0.5, 20.0))
    params = ProblemParams(p, q, r, lam)
    g = grad_energy_I(u, params).values
    exact = float(g @ v.values)
    fp = energy(u + v * eps, params).total
    fm = energy(u - v * eps, params).total
    fd = (fp - fm) / (2 * eps)
    return abs(fd - exact) / max(abs(exact), 1e-300), params


def nehari_case(d, seed):
    """Project a random field onto the Nehari set and measure the four properties.

    Returns ``(residual, idempotence_gap, scaling_gap, identity_gap, params)``.
    """
    rng = np.random.default_rng(seed)
    while True:
        p, q = rng.uniform(2.0, 16.0, 2)
        if p > 2 and q > 2 and abs(p - q) > 1e-3:
            break
    r = [2.0, 4.0, 16.0, SUP][int(rng.integers(4))]
    v = random_field(d, rng)
    t = evaluate_terms(v.values, d, p, q, r)
    # lam * ||v||^p = A_p * (1 + margin) keeps the ray projectable
    log_lam = t.log_Ap - p * t.log_norm + math.log1p(rng.uniform(0.1, 10.0))
    params = ProblemParams(p, q, r, math.exp(log_lam))
    tv, u = nehari_project(v, params)
    res = nehari_residual(u, params)
    t2, _ = nehari_project(u, params)
    s = float(10 ** rng.uniform(-3, 3))
    ts, _ = nehari_project(v * s, params)
    # compare I and (1/q - 1/p) A_q after dividing both by the largest term
    eb = energy(u, params)
    m = max(eb.log_term_p, eb.log_term_q, eb.log_term_load)
    e = math.exp(eb.log_term_p - m) + math.exp(eb.log_term_q - m) - math.exp(eb.log_term_load - m)
    ident = (1 - q / p) * math.exp(eb.log_term_q - m)
    return res, abs(t2 - 1.0), abs(ts * s / tv - 1.0), abs(e - ident) / abs(e), params
