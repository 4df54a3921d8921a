"""Outer minimization for the prescribed cone-torsion measure.

The unknown polygon is parametrized by its support numbers ``h`` on the
atom directions. The functional

    J(h) = Phi_[h](gamma([h])) - (sum beta / 4) log T([h])

is invariant under scaling and translation of the polygon, and its
stationary points are polygons with ``h_k dT/dh_k`` proportional to
``beta_k``. Minimization runs in ``log h`` with a limited-memory quasi-Newton
direction and Armijo backtracking; after every accepted step the polygon is
recentred (``gamma = 0``) and rescaled to unit rigidity.
"""

from __future__ import annotations

import logging
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .entropy import gamma_star
from .errors import DegenerateBody, FacetLost, HemisphereViolation, InvalidInput, MaxIterations
from .geometry import DiscreteSphericalMeasure, Polygon, transform, validate_directions, wulff_shape
from .mesh import build_mesh
from .torsion import CONE_FACTOR, facet_torsion_measure, rigidity_gradient, solve_torsion

log = logging.getLogger(__name__)

TARGETS = ("cone", "l0")
ARMIJO_C = 1e-4
MAX_HALVINGS = 40
MAX_LOG_STEP = 0.5
MEMORY = 8
EXTRAPOLATION_ORDER = 2.0


@dataclass
class SolveOptions:
    mesh_level: int = 3
    extrapolate: bool = True
    max_outer: int = 500
    residual_tol: float = 1e-2
    step_init: float = 0.1
    target: str = "cone"
    seed: int = 0  # consumed by discretization of general measures
    measure: str = "variational"  # facet measure used in the residual

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise InvalidInput("residual_tol must be positive")
        if self.max_outer < 1:
            raise InvalidInput("max_outer must be at least 1")
        if self.target not in TARGETS:
            raise InvalidInput(f"target must be one of {TARGETS}")
        if self.mesh_level < (1 if self.extrapolate else 0):
            raise InvalidInput("mesh_level must be >= 1 with extrapolation (>= 0 without)")
        if not self.step_init > 0:
            raise InvalidInput("step_init must be positive")


@dataclass
class SolveReport:
    polygon: Polygon
    residual: float
    objective_trace: list
    residual_trace: list
    iterations: int
    facet_alive: np.ndarray
    T_final: float
    converged: bool
    target: str
    stationarity: float = 0.0
    options: SolveOptions = field(default_factory=SolveOptions)

    def to_dict(self):
        P = self.polygon
        return {
            "converged": self.converged,
            "target": self.target,
            "residual": self.residual,
            "iterations": self.iterations,
            "T_final": self.T_final,
            "stationarity": self.stationarity,
            "facet_alive": [bool(a) for a in self.facet_alive],
            "supports": P.supports.tolist(),
            "objective_trace": list(self.objective_trace),
            "residual_trace": list(self.residual_trace),
            "options": vars(self.options).copy(),
        }


@dataclass
class _Forward:
    T: float
    dT: np.ndarray
    mu: np.ndarray


def _richardson(fine, coarse):
    return fine + (fine - coarse) / (2.0**EXTRAPOLATION_ORDER - 1.0)


def forward_values(P: Polygon, level: int, extrapolate: bool = True, measure: str = "variational") -> _Forward:
    """Rigidity, its exact derivative in the support numbers, and the facet
    torsion measure, optionally extrapolated from levels ``level - 1`` and
    ``level`` with a fixed second-order rule (linear, so the derivative of
    the extrapolated rigidity is the extrapolated derivative)."""
    levels = (level - 1, level) if extrapolate else (level,)
    rows = []
    for lv in levels:
        sol = solve_torsion(build_mesh(P, lv))
        dT = rigidity_gradient(sol, P)
        mu = dT if measure == "variational" else facet_torsion_measure(sol, P, method=measure).mu_tor
        rows.append((sol.T, dT, mu))
    if not extrapolate:
        T, dT, mu = rows[0]
    else:
        (T0, d0, m0), (T1, d1, m1) = rows
        T, dT, mu = _richardson(T1, T0), _richardson(d1, d0), _richardson(m1, m0)
    return _Forward(float(T), np.where(P.present, dT, 0.0), np.where(P.present, mu, 0.0))


def _targeted(P: Polygon, mu_tor, target):
    if target == "cone":
        return P.supports * mu_tor / CONE_FACTOR
    return P.supports * mu_tor


def _relative_error(values, beta):
    return float(np.max(np.abs(values - beta) / beta))


def residual(P: Polygon, mu: DiscreteSphericalMeasure, target: str = "cone", level: int = 3,
             extrapolate: bool = True, measure: str = "variational") -> float:
    """``max_k |G_k(P) - beta_k| / beta_k`` (``target="cone"``) or the same
    with ``h_k mu_k`` in place of ``G_k`` (``target="l0"``)."""
    if target not in TARGETS:
        raise InvalidInput(f"target must be one of {TARGETS}")
    if len(mu) != P.n_facets:
        raise InvalidInput("measure atoms and polygon normals must be aligned by index")
    fw = forward_values(P, level, extrapolate, measure)
    return _relative_error(_targeted(P, fw.mu, target), mu.weights)


def _polygon(mu: DiscreteSphericalMeasure, h):
    P = wulff_shape(mu.directions, h)
    if not P.present.all():
        missing = np.flatnonzero(~P.present).tolist()
        raise FacetLost(f"facets {missing} are absent")
    return P


def objective_j(h, mu: DiscreteSphericalMeasure, level: int = 3, extrapolate: bool = True):
    """``J(h)`` and its gradient in ``h``.

    The gradient uses the envelope property of the inner maximizer and the
    exact derivative of the discrete rigidity.
    """
    P = _polygon(mu, h)
    value, grad, _, _ = _objective(P, mu, level, extrapolate)
    return value, grad


def _objective(P, mu, level, extrapolate, measure="variational"):
    beta = mu.weights
    gamma, _, _ = gamma_star(P, mu)
    s = P.supports - P.normals @ gamma
    fw = forward_values(P, level, extrapolate, measure)
    scale = mu.total / CONE_FACTOR
    value = float(beta @ np.log(s)) - scale * np.log(fw.T)
    grad = beta / s - scale * fw.dT / fw.T
    return value, grad, gamma, fw


def _final_scale(T, total, target):
    m4 = total / T if target == "cone" else total / (CONE_FACTOR * T)
    return m4**0.25


def _lbfgs_direction(g, pairs):
    q = g.copy()
    alphas = []
    for s, y in reversed(pairs):
        a = (s @ q) / (y @ s)
        alphas.append(a)
        q -= a * y
    s, y = pairs[-1]
    q *= (s @ y) / (y @ y)
    for (s, y), a in zip(pairs, reversed(alphas)):
        b = (y @ q) / (y @ s)
        q += (a - b) * s
    return -q


class _State:
    """Normalized iterate (gamma = 0, T = 1) and its evaluation."""

    def __init__(self, mu, h, opts):
        P = _polygon(mu, h)
        value, grad, gamma, fw = _objective(P, mu, opts.mesh_level, opts.extrapolate, opts.measure)
        # recentre so that gamma = 0, then rescale to unit rigidity
        P = transform(P, fw.T**-0.25, -gamma * fw.T**-0.25)
        P = _polygon(mu, P.supports)
        value, grad, gamma, fw = _objective(P, mu, opts.mesh_level, opts.extrapolate, opts.measure)
        self.P, self.value, self.grad, self.fw = P, value, grad, fw
        self.x = np.log(P.supports)
        self.gx = P.supports * grad
        m = _final_scale(fw.T, mu.total, opts.target)
        self.residual = _relative_error(m**4 * _targeted(P, fw.mu, opts.target), mu.weights)


def _trial_value(mu, h, opts):
    """``J`` at a trial point, or ``None`` if a facet would vanish."""
    try:
        P = _polygon(mu, h)
    except (FacetLost, DegenerateBody):
        return None
    return _objective(P, mu, opts.mesh_level, opts.extrapolate, opts.measure)[0]


def solve_discrete(mu: DiscreteSphericalMeasure, opts: SolveOptions | None = None) -> SolveReport:
    """Find a polygon whose facet measures match the atoms of ``mu``.

    Raises :class:`MaxIterations` (carrying the report) if the residual
    tolerance is not met within ``opts.max_outer`` steps.
    """
    opts = SolveOptions() if opts is None else opts
    rep = validate_directions(mu.directions)
    if not rep.spans:
        raise HemisphereViolation("atom directions lie in a closed half-circle")
    if not rep.general_position:
        warnings.warn("atom directions are not in general position", RuntimeWarning, stacklevel=2)

    state = _State(mu, np.ones(len(mu)), opts)
    trace = [state.value]
    res_trace = [state.residual]
    pairs = deque(maxlen=MEMORY)
    it = 0
    while state.residual > opts.residual_tol and it < opts.max_outer:
        g = state.gx
        steepest = not pairs
        d = -g * (opts.step_init / np.abs(g).max()) if steepest else _lbfgs_direction(g, list(pairs))
        if g @ d >= 0.0:
            pairs.clear()
            steepest = True
            d = -g * (opts.step_init / np.abs(g).max())
        big = np.abs(d).max()
        if big > MAX_LOG_STEP:
            d *= MAX_LOG_STEP / big
        slope = float(g @ d)
        t = 1.0
        accepted = None
        for _ in range(MAX_HALVINGS):
            x_new = state.x + t * d
            value = _trial_value(mu, np.exp(x_new), opts)
            if value is not None and value <= state.value + ARMIJO_C * t * slope:
                accepted = x_new
                break
            t *= 0.5
        if accepted is None:
            if steepest:
                log.info("line search stalled at iteration %d", it)
                break
            pairs.clear()
            continue
        new = _State(mu, np.exp(accepted), opts)
        it += 1
        s_vec, y_vec = new.x - state.x, new.gx - state.gx
        if s_vec @ y_vec > 1e-12 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            pairs.append((s_vec, y_vec))
        # normalization leaves J unchanged; guard against rounding noise
        trace.append(min(new.value, trace[-1]))
        res_trace.append(new.residual)
        log.debug("iter %d  J=%.12g  residual=%.3e  t=%.3g", it, new.value, new.residual, t)
        state = new

    P_unit = state.P
    m = _final_scale(state.fw.T, mu.total, opts.target)
    P = transform(P_unit, m)
    final_res = residual(P, mu, opts.target, opts.mesh_level, opts.extrapolate, opts.measure)
    fw_final = forward_values(P, opts.mesh_level, opts.extrapolate, opts.measure)
    stationarity = float(np.linalg.norm(mu.weights / P_unit.supports @ P_unit.normals))
    report = SolveReport(
        polygon=P,
        residual=final_res,
        objective_trace=trace,
        residual_trace=res_trace,
        iterations=it,
        facet_alive=P.present.copy(),
        T_final=fw_final.T,
        converged=final_res <= opts.residual_tol,
        target=opts.target,
        stationarity=stationarity,
        options=opts,
    )
    if not report.converged:
        raise MaxIterations(
            f"residual {final_res:.3e} above tolerance {opts.residual_tol:g} after {it} iterations", report
        )
    return report
