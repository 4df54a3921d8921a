"""General measures on the circle and their discrete approximations.

A general measure is a nonnegative density in the angle plus finitely many
atoms. It is approximated by one atom per arc of an equal partition of the
circle, with arc masses padded by ``1/N^2`` and renormalized to the original
total; the resulting discrete problems are solved along a schedule of
partition indices ``j``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import InvalidInput, MaxIterations, QuadratureFailure, SamplingFailure, TorlogError
from .geometry import (
    SEPARATION_TOL,
    TWO_PI,
    DiscreteSphericalMeasure,
    angles_of,
    direction,
    hausdorff_distance,
)
from .solver import SolveOptions, SolveReport, solve_discrete

log = logging.getLogger(__name__)

QUAD_RTOL = 1e-10
JITTER = 0.1
MAX_RETRIES = 1000
QUAD_LIMIT = 200


def _quad(f, a, b, points=None, epsabs=0.0, epsrel=QUAD_RTOL):
    pts = None
    if points is not None:
        pts = [p for p in points if a < p < b] or None
    out = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=QUAD_LIMIT, points=pts, full_output=1)
    if len(out) > 3:  # QUADPACK reported ier > 0
        raise QuadratureFailure(f"quadrature on [{a:.6g}, {b:.6g}] did not converge: {out[3]}")
    return float(out[0])


@dataclass(frozen=True, eq=False)
class GeneralMeasure:
    """``density(theta) d theta`` plus atoms ``(angle, mass)``.

    ``breakpoints`` lists angles where the density may have kinks or jumps;
    they are handed to the quadrature.
    """

    density: Callable | None = None
    atom_angles: np.ndarray = field(default_factory=lambda: np.zeros(0))
    atom_masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    breakpoints: tuple = ()
    label: str = ""
    total: float = field(init=False)

    def __post_init__(self):
        ang = np.mod(np.asarray(self.atom_angles, dtype=float).reshape(-1), TWO_PI)
        mass = np.asarray(self.atom_masses, dtype=float).reshape(-1)
        if len(ang) != len(mass):
            raise InvalidInput("one mass per atom angle is required")
        if np.any(mass <= 0.0) or not np.all(np.isfinite(mass)):
            raise InvalidInput("atom masses must be finite and positive")
        object.__setattr__(self, "atom_angles", ang)
        object.__setattr__(self, "atom_masses", mass)
        object.__setattr__(self, "breakpoints", tuple(sorted(float(b) % TWO_PI for b in self.breakpoints)))
        if self.density is not None:
            probe = self._density_values(np.linspace(0.0, TWO_PI, 1025))
            if np.any(probe < 0.0) or not np.all(np.isfinite(probe)):
                raise InvalidInput("density must be finite and nonnegative")
        total = float(mass.sum())
        if self.density is not None:
            total += _quad(self.density, 0.0, TWO_PI, self.breakpoints)
        if not total > 0.0:
            raise InvalidInput("measure has zero total mass")
        object.__setattr__(self, "total", total)

    def _density_values(self, theta):
        return np.array([self.density(t) for t in np.atleast_1d(theta)], dtype=float)

    def arc_mass(self, a: float, b: float, epsabs: float = 0.0) -> float:
        """Mass of the half-open arc ``[a, b)`` with ``0 <= a < b <= 2 pi``."""
        m = float(self.atom_masses[(self.atom_angles >= a) & (self.atom_angles < b)].sum())
        if self.density is not None:
            m += _quad(self.density, a, b, self.breakpoints, epsabs=epsabs)
        return m

    def integrate(self, f, epsabs: float = 1e-12) -> float:
        """Integral of ``f(u)`` (``u`` a unit vector) against the measure."""
        val = float(sum(m * f(direction(t)) for t, m in zip(self.atom_angles, self.atom_masses)))
        if self.density is not None:
            val += _quad(lambda t: f(direction(t)) * self.density(t), 0.0, TWO_PI, self.breakpoints, epsabs=epsabs)
        return val


def constant_density(c: float = 1.0) -> GeneralMeasure:
    if c <= 0:
        raise InvalidInput("constant density must be positive")
    return GeneralMeasure(density=lambda t: c, label=f"constant:{c!r}")


def cosine_density(a: float, b: float) -> GeneralMeasure:
    """Density ``a + b cos(theta)``."""
    if a < abs(b):
        raise InvalidInput("cosine density a + b cos(theta) needs a >= |b|")
    return GeneralMeasure(density=lambda t: a + b * math.cos(t), label=f"cosine:{a!r},{b!r}")


def tabulated_density(angles, values) -> GeneralMeasure:
    """Periodic piecewise-linear density through samples ``(angle, value)``."""
    ang = np.mod(np.asarray(angles, dtype=float), TWO_PI)
    val = np.asarray(values, dtype=float)
    if len(ang) < 2 or len(ang) != len(val):
        raise InvalidInput("tabulated density needs at least two (angle, value) samples")
    if np.any(val < 0):
        raise InvalidInput("tabulated density values must be nonnegative")
    order = np.argsort(ang)
    ang, val = ang[order], val[order]
    xp = np.concatenate([ang[-1:] - TWO_PI, ang, ang[:1] + TWO_PI])
    fp = np.concatenate([val[-1:], val, val[:1]])
    return GeneralMeasure(density=lambda t: float(np.interp(t, xp, fp)), breakpoints=tuple(ang), label="tabulated")


def atomic_measure(angles, masses) -> GeneralMeasure:
    return GeneralMeasure(atom_angles=angles, atom_masses=masses, label="atoms")


def parse_density_spec(spec: str, base: Path | None = None) -> GeneralMeasure:
    """``constant``, ``constant:c``, ``cosine:a,b`` or ``atoms:file.json``."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "constant":
        return constant_density(float(arg) if arg else 1.0)
    if name == "cosine":
        try:
            a, b = (float(x) for x in arg.split(","))
        except ValueError as exc:
            raise InvalidInput(f"cannot parse cosine parameters {arg!r}") from exc
        return cosine_density(a, b)
    if name == "atoms":
        path = Path(arg)
        if base is not None and not path.is_absolute():
            path = base / path
        from .io import read_measure

        mu = read_measure(path)
        return atomic_measure(angles_of(mu.directions), mu.weights)
    raise InvalidInput(f"unknown density spec {spec!r}")


def partition_circle(j: int) -> np.ndarray:
    """``N_j = ceil(2 pi j) + 1`` equal half-open arcs ``[a_i, b_i)`` as an
    ``(N_j, 2)`` array; each arc is shorter than ``1/j``."""
    if j < 1:
        raise InvalidInput("partition index j must be >= 1")
    n = math.ceil(TWO_PI * j) + 1
    edges = TWO_PI * np.arange(n + 1) / n
    edges[-1] = TWO_PI
    return np.stack([edges[:-1], edges[1:]], axis=1)


def _min_line_separation(theta):
    # angular distance between the lines spanned by the directions
    lines = np.sort(np.mod(theta, np.pi))
    gaps = np.diff(np.concatenate([lines, lines[:1] + np.pi]))
    return float(gaps.min())


def sample_general_position(arcs, seed: int = 0) -> np.ndarray:
    """One direction per arc (midpoint plus a seeded jitter of at most 10%
    of the arc length), redrawn until no two are parallel or antiparallel."""
    arcs = np.asarray(arcs, dtype=float)
    mid = arcs.mean(axis=1)
    width = arcs[:, 1] - arcs[:, 0]
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RETRIES):
        theta = mid + rng.uniform(-JITTER, JITTER, len(arcs)) * width
        if _min_line_separation(theta) > SEPARATION_TOL:
            return direction(theta)
    raise SamplingFailure(f"no general-position sample in {MAX_RETRIES} draws")


@dataclass(frozen=True, eq=False)
class DiscretizationResult:
    j: int
    arcs: np.ndarray
    dirs: np.ndarray
    raw: DiscreteSphericalMeasure
    normalized: DiscreteSphericalMeasure

    def to_dict(self):
        return {
            "j": self.j,
            "arcs": self.arcs.tolist(),
            "angles": angles_of(self.dirs).tolist(),
            "raw_weights": self.raw.weights.tolist(),
            "weights": self.normalized.weights.tolist(),
            "total": self.normalized.total,
        }


def discretize(mu: GeneralMeasure, j: int, seed: int = 0) -> DiscretizationResult:
    arcs = partition_circle(j)
    n = len(arcs)
    dirs = sample_general_position(arcs, seed)
    epsabs = 1e-12 * mu.total
    masses = np.array([mu.arc_mass(a, b, epsabs=epsabs) for a, b in arcs])
    raw = DiscreteSphericalMeasure(dirs, masses + 1.0 / n**2)
    normalized = raw.scaled(mu.total / raw.total)
    return DiscretizationResult(j, arcs, dirs, raw, normalized)


@dataclass(frozen=True)
class SubspaceMassResult:
    passed: bool
    worst_ratio: float
    witness: np.ndarray


def subspace_mass_check(mu) -> SubspaceMassResult:
    """Largest share of the total mass carried by one line through the
    origin; the inequality holds iff that share is below 1/2."""
    if isinstance(mu, GeneralMeasure):
        theta, w, total = mu.atom_angles, mu.atom_masses, mu.total
    else:
        theta, w, total = angles_of(mu.directions), mu.weights, mu.total
    if len(theta) == 0:
        return SubspaceMassResult(True, 0.0, direction(0.0))
    line = np.mod(theta, np.pi)
    d = np.abs(line[:, None] - line[None, :])
    same = np.minimum(d, np.pi - d) <= SEPARATION_TOL
    line_mass = same.astype(float) @ w
    k = int(np.argmax(line_mass))
    ratio = float(line_mass[k] / total)
    return SubspaceMassResult(ratio < 0.5, ratio, direction(theta[k]))


@dataclass
class StageRecord:
    j: int
    n_atoms: int
    residual: float
    converged: bool
    outer_radius: float
    iterations: int
    hausdorff_to_previous: float | None
    error: str | None = None


@dataclass
class ApproximationDiagnostics:
    smi_passed: bool
    smi_worst_ratio: float
    stages: list

    def rows(self):
        return [vars(s) for s in self.stages]


def approximate_solve(mu: GeneralMeasure, j_schedule, opts: SolveOptions | None = None):
    """Solve the discretized problems along ``j_schedule``.

    Returns ``(reports, diagnostics)``; ``reports[i]`` is ``None`` if stage
    ``i`` raised an error other than running out of iterations.
    """
    opts = SolveOptions() if opts is None else opts
    schedule = [int(j) for j in j_schedule]
    if not schedule:
        raise InvalidInput("empty j schedule")
    smi = subspace_mass_check(mu)
    if not smi.passed:
        warnings.warn(
            f"measure fails the subspace mass inequality (worst line share {smi.worst_ratio:.3f}); proceeding",
            RuntimeWarning,
            stacklevel=2,
        )
    reports: list[SolveReport | None] = []
    stages = []
    previous = None
    for j in schedule:
        disc = discretize(mu, j, opts.seed)
        err = None
        try:
            rep = solve_discrete(disc.normalized, opts)
        except MaxIterations as exc:
            rep, err = exc.report, f"{type(exc).__name__}: {exc}"
        except TorlogError as exc:
            rep, err = None, f"{type(exc).__name__}: {exc}"
        if err:
            log.warning("stage j=%d: %s", j, err)
        reports.append(rep)
        if rep is None:
            stages.append(StageRecord(j, len(disc.normalized), math.nan, False, math.nan, 0, None, err))
            continue
        P = rep.polygon
        dist = None if previous is None else hausdorff_distance(previous, P)
        stages.append(
            StageRecord(
                j,
                len(disc.normalized),
                rep.residual,
                rep.converged,
                float(np.hypot(*P.vertices.T).max()),
                rep.iterations,
                dist,
                err,
            )
        )
        previous = P
    return reports, ApproximationDiagnostics(smi.passed, smi.worst_ratio, stages)
