"""Logarithmic entropy of a polygon relative to a discrete measure,

    Phi_P(gamma) = sum_k beta_k log(h_k - gamma . v_k),

and its unique maximizer over the interior of P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, OutsideDomain
from .geometry import DiscreteSphericalMeasure, Polygon

NEWTON_MAX_STEPS = 100
MAX_HALVINGS = 60
GRAD_TOL = 1e-10  # relative to the total mass


@dataclass(frozen=True)
class EntropyEvaluation:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def _check_aligned(P: Polygon, mu: DiscreteSphericalMeasure):
    if len(mu) != P.n_facets:
        raise ValueError("measure atoms and polygon normals must be aligned by index")


def slacks(P: Polygon, gamma):
    return P.supports - P.normals @ np.asarray(gamma, dtype=float)


def phi(P: Polygon, mu: DiscreteSphericalMeasure, gamma) -> EntropyEvaluation:
    _check_aligned(P, mu)
    s = slacks(P, gamma)
    if np.any(s <= 0.0):
        raise OutsideDomain(f"gamma={np.asarray(gamma).tolist()} is not interior (min slack {s.min():.3e})")
    beta, v = mu.weights, P.normals
    w = beta / s
    grad = -(w @ v)
    hess = -np.einsum("k,ki,kj->ij", w / s, v, v)
    return EntropyEvaluation(float(beta @ np.log(s)), grad, hess)


def _value(beta, P, gamma):
    s = slacks(P, gamma)
    if np.any(s <= 0.0):
        return -np.inf, 0.0
    terms = beta * np.log(s)
    # rounding noise of the sum, so steps near the optimum are not rejected
    noise = 64.0 * np.finfo(float).eps * float(np.abs(terms).sum())
    return float(terms.sum()), noise


def gamma_star(P: Polygon, mu: DiscreteSphericalMeasure, tol: float = GRAD_TOL, max_steps: int = NEWTON_MAX_STEPS):
    """Maximize ``Phi_P`` by damped Newton from the vertex centroid.

    Returns ``(gamma, iterations, gradient_norm)``.
    """
    _check_aligned(P, mu)
    beta = mu.weights
    target = tol * mu.total
    gamma = P.vertex_centroid.copy()
    ev = phi(P, mu, gamma)
    for it in range(max_steps + 1):
        gnorm = float(np.linalg.norm(ev.gradient))
        if gnorm <= target:
            return gamma, it, gnorm
        if it == max_steps:
            break
        step = np.linalg.solve(ev.hessian, -ev.gradient)
        _, noise = _value(beta, P, gamma)
        t = 1.0
        for _ in range(MAX_HALVINGS):
            trial = gamma + t * step
            if _value(beta, P, trial)[0] >= ev.value - noise:
                break
            t *= 0.5
        else:
            raise NoConvergence("Newton line search failed to find an ascent step")
        gamma = trial
        ev = phi(P, mu, gamma)
    raise NoConvergence(f"Newton stopped after {max_steps} steps with gradient norm {gnorm:.3e}")
