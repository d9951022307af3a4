"""Derivative-free search for consistent projection decompositions.

A ``ProjectorFamily`` maps a parameter vector to one decomposition per slice.
The search scans a coarse grid over the parameter box, refines every grid
local minimum by coordinate descent with a shrinking step, and keeps the
refined points whose consistency violation is within tolerance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ResourceError
from .histories import HISTORY_CAP, HistorySet, ProjectionDecomposition, check_consistency
from .operators import DensityMatrix, FactoredSpace, Projector, embed_system

DEDUP_RADIUS = 1e-2
# violations are maxima of entries bounded by 1; smaller differences are rounding
NOISE_FLOOR = 1e-15


@dataclass(frozen=True, eq=False)
class HistoryTemplate:
    """Everything of a history set except the decompositions."""

    rho: DensityMatrix
    hamiltonian: np.ndarray
    times: tuple


@dataclass(frozen=True, eq=False)
class ProjectorFamily:
    generator: Callable
    bounds: np.ndarray
    pointer_params: tuple = ()
    name: str = ""

    def __post_init__(self):
        b = np.array(self.bounds, dtype=float).reshape(-1, 2)
        if np.any(b[:, 0] > b[:, 1]):
            raise DomainError("each bound must be (low, high) with low <= high")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "pointer_params", tuple(np.asarray(p, dtype=float) for p in self.pointer_params))

    @property
    def n_params(self) -> int:
        return len(self.bounds)

    def decompositions(self, theta) -> list:
        return list(self.generator(np.asarray(theta, dtype=float)))

    def history_set(self, template: HistoryTemplate, theta) -> HistorySet:
        decs = self.decompositions(theta)
        return HistorySet(template.rho, template.hamiltonian, tuple(zip(template.times, decs)))

    def pointer_distance(self, theta) -> float | None:
        if not self.pointer_params:
            return None
        return float(min(np.linalg.norm(np.asarray(theta) - p) for p in self.pointer_params))


def rotation_basis(angle: float) -> tuple:
    """(cos a, sin a) and its orthogonal partner (-sin a, cos a)."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)


def rotation_family(
    space: FactoredSpace,
    slices: Sequence[tuple],
    bounds,
    pointer_params=(),
    name: str = "rotation",
) -> ProjectorFamily:
    """Rank-1 system-qubit bases rotated by ``offset + scale * theta[0]``,
    embedded as I_E (x) |v><v|. ``slices`` holds one (offset, scale) per slice.
    """
    if space.dim_sys != 2:
        raise DomainError("rotation families act on a system qubit")
    slices = [(float(o), float(s)) for o, s in slices]

    def generate(theta):
        decs = []
        for i, (offset, scale) in enumerate(slices):
            u, v = rotation_basis(offset + scale * theta[0])
            ps = tuple(
                Projector._trusted(embed_system(np.outer(w, w.conj()), space), f"s{i}[{j}]", space.dim_env)
                for j, w in enumerate((u, v))
            )
            decs.append(ProjectionDecomposition.checked(ps, f"slice{i}", tol=1e-9))
        return decs

    return ProjectorFamily(generate, bounds, pointer_params, name)


def violation_norm(template: HistoryTemplate, family: ProjectorFamily, theta, cap: int = HISTORY_CAP) -> float:
    """Largest |off-diagonal| of the decoherence functional at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    b = family.bounds
    if theta.shape != (family.n_params,) or np.any(theta < b[:, 0]) or np.any(theta > b[:, 1]):
        raise DomainError(f"theta {theta} outside the family bounds")
    return check_consistency(family.history_set(template, theta), cap=cap).max_off_diag


@dataclass(frozen=True)
class Minimum:
    theta: tuple
    violation: float
    pointer_distance: float | None
    start: tuple
    start_violation: float


@dataclass(frozen=True)
class SearchResult:
    minima: tuple
    evaluations: int
    seed: int
    tol: float
    grid_points: int
    candidates: int = 0


class _Budget:
    def __init__(self, template, family, budget):
        self.template, self.family, self.left, self.used = template, family, budget, 0
        self.cache = {}

    def __call__(self, theta) -> float:
        key = tuple(float(x) for x in theta)
        if key in self.cache:
            return self.cache[key]
        if self.left <= 0:
            return np.inf
        self.left -= 1
        self.used += 1
        val = violation_norm(self.template, self.family, np.array(key))
        self.cache[key] = val
        return val


def _coordinate_descent(f, x0, fx0, bounds, step0, min_step, rng) -> tuple:
    x, fx = np.array(x0, dtype=float), fx0
    step = np.array(step0, dtype=float)
    while np.any(step > min_step):
        improved = False
        for d in rng.permutation(len(x)):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[d] = np.clip(x[d] + sign * step[d], bounds[d, 0], bounds[d, 1])
                if y[d] == x[d]:
                    continue
                fy = f(y)
                if not np.isfinite(fy):
                    return x, fx
                if fy < fx - NOISE_FLOOR:
                    x, fx, improved = y, fy, True
                    break
        if not improved:
            step = step / 2
    return x, fx


def _grid_local_minima(values: np.ndarray) -> list:
    """Indices whose value is <= every axis neighbour."""
    out = []
    for idx in np.ndindex(values.shape):
        v = values[idx]
        ok = True
        for ax in range(values.ndim):
            for dlt in (-1, 1):
                j = list(idx)
                j[ax] += dlt
                if 0 <= j[ax] < values.shape[ax] and values[tuple(j)] < v - NOISE_FLOOR:
                    ok = False
        if ok:
            out.append(idx)
    return out


def search_consistent_sets(
    template: HistoryTemplate,
    family: ProjectorFamily,
    tol: float = 1e-6,
    budget: int = 20000,
    seed: int = 0,
    grid_points: int = 64,
    radius: float = DEDUP_RADIUS,
    min_step: float = 1e-10,
) -> SearchResult:
    """Coarse grid scan followed by coordinate-descent refinement.

    Returns every distinct refined point with violation <= ``tol``;
    points closer than ``radius`` keep the lower violation.
    """
    n = family.n_params
    if grid_points ** n > budget:
        raise ResourceError(f"coarse grid of {grid_points ** n} points exceeds the budget of {budget}")
    rng = np.random.default_rng(seed)
    f = _Budget(template, family, budget)
    axes = [np.linspace(lo, hi, grid_points) for lo, hi in family.bounds]
    values = np.empty((grid_points,) * n)
    for idx in itertools.product(range(grid_points), repeat=n):
        values[idx] = f([axes[d][idx[d]] for d in range(n)])
    starts = sorted(_grid_local_minima(values), key=lambda idx: (values[idx], idx))
    step0 = [(hi - lo) / max(grid_points - 1, 1) for lo, hi in family.bounds]
    refined = []
    for idx in starts:
        x0 = np.array([axes[d][idx[d]] for d in range(n)])
        x, fx = _coordinate_descent(f, x0, values[idx], family.bounds, step0, min_step, rng)
        if fx <= tol:
            refined.append(Minimum(tuple(map(float, x)), float(fx), family.pointer_distance(x), tuple(map(float, x0)), float(values[idx])))
    kept = []
    for m in sorted(refined, key=lambda m: (m.violation, m.theta)):
        if all(np.linalg.norm(np.subtract(m.theta, k.theta)) > radius for k in kept):
            kept.append(m)
    kept.sort(key=lambda m: m.theta)
    return SearchResult(tuple(kept), f.used, seed, tol, grid_points, len(starts))


def exhaustive_scan(template: HistoryTemplate, family: ProjectorFamily, n_points: int = 10_000) -> tuple:
    """Violation on a dense 1-parameter grid: (thetas, values)."""
    if family.n_params != 1:
        raise DomainError("exhaustive scan supports one-parameter families")
    lo, hi = family.bounds[0]
    thetas = np.linspace(lo, hi, n_points)
    return thetas, np.array([violation_norm(template, family, [t]) for t in thetas])
