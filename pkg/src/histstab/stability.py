"""Repetition probabilities and the stability timescale.

For a proposition P posed after a prefix history with chain C, the
repetition probability is

    p(t) = Tr(P_t P rho' P P_t),    rho' = C rho C^dagger,

with P_t the Heisenberg-evolved projector. From a sampled p(t) the module
computes the worst tail chord slope V(t, c), the chord ratio F(t), and the
stability timescale t_s = t* / (p(0) - p(t*)). All suprema are taken over
grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateContextError, DomainError, StructuralError
from .histories import TAU_NUM, HistorySet
from .operators import Projector, dagger

DEFAULT_LAMBDA = 0.1
DEFAULT_POINTS = 256
# relative slack when picking the smallest grid point that attains max F
TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("a time grid needs at least two points")
        if pts[0] != 0.0:
            raise DomainError("a time grid must start at t = 0")
        if not np.all(np.diff(pts) > 0):
            raise DomainError("grid times must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def linear(cls, t_d: float, n_points: int = DEFAULT_POINTS) -> "TimeGrid":
        if not t_d > 0:
            raise DomainError(f"t_d must be positive, got {t_d}")
        if n_points < 2:
            raise DomainError("a time grid needs at least two points")
        pts = np.linspace(0.0, t_d, n_points)
        pts[-1] = t_d
        return cls(pts)

    @property
    def t_d(self) -> float:
        return float(self.points[-1])

    def __len__(self) -> int:
        return self.points.size


@dataclass(frozen=True, eq=False)
class RepetitionCurve:
    grid: TimeGrid
    values: np.ndarray
    label: str = ""
    prefix: tuple = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.points.shape:
            raise StructuralError("curve values do not match the grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.grid.points

    @property
    def p0(self) -> float:
        return float(self.values[0])

    def scaled(self, alpha: float) -> "RepetitionCurve":
        return RepetitionCurve(self.grid, alpha * self.values, self.label, self.prefix)

    @cached_property
    def _pairs(self) -> tuple:
        # slope[i, j] = |p_j - p_i| / (t_j - t_i); only j > i is ever selected
        t, v = self.times, self.values
        gaps = t[None, :] - t[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            slopes = np.abs(v[None, :] - v[:, None]) / gaps
        return gaps, slopes


def repetition_curve(
    hs: HistorySet,
    prefix: Sequence[int],
    projector,
    grid: TimeGrid,
    label: str | None = None,
    tol: float = TAU_NUM,
) -> RepetitionCurve:
    """Sample p(t) on ``grid``.

    ``projector`` is used as given (already in the Heisenberg picture for the
    time at which it is posed); the prefix uses the slices of ``hs``.
    Raises ``DegenerateContextError`` when Tr(P rho' P) < ``tol``.
    """
    p = projector.matrix if isinstance(projector, Projector) else np.asarray(projector, complex)
    if label is None:
        label = projector.label if isinstance(projector, Projector) else ""
    if p.shape != (hs.dim, hs.dim):
        raise StructuralError(f"projector has shape {p.shape}, state has dimension {hs.dim}")
    prefix = hs.check_history(prefix, n_slices=len(prefix)) if prefix else ()
    c = hs.chain(prefix)
    rho_p = c @ hs.rho.matrix @ dagger(c)
    x = p @ rho_p @ p
    p0 = float(np.real(np.trace(x)))
    if p0 < tol:
        raise DegenerateContextError(
            f"proposition {label!r} has probability {p0:.3g} after prefix {prefix}"
        )
    # Tr(P_t X P_t) = Tr(P_t X) since P_t is idempotent; in the eigenbasis of H
    # this is phi(t)^T W conj(phi(t)) with W = P~ * X~^T and phi_k = exp(i E_k t)
    prop = hs.propagator
    w = prop.to_eigenbasis(p) * prop.to_eigenbasis(x).T
    phases = np.exp(1j * np.outer(grid.points, prop.energies))
    values = np.real(np.sum((phases @ w) * phases.conj(), axis=1))
    values[grid.points == 0] = p0
    return RepetitionCurve(grid, values, label, tuple(prefix))


def fluctuation_bound(curve: RepetitionCurve, t: float, c: float) -> float | None:
    """V(t, c): largest |p(t2) - p(t1)| / (t2 - t1) over grid pairs with
    t <= t1 < t2 <= t_d and t2 - t1 >= c.

    Returns ``None`` when no grid pair qualifies.
    """
    if not 0 < t <= curve.grid.t_d:
        raise DomainError(f"t = {t} outside (0, t_d]")
    if not c > 0:
        raise DomainError(f"window c = {c} must be positive")
    i0 = int(np.searchsorted(curve.times, t, side="left"))
    gaps, slopes = curve._pairs
    mask = gaps[i0:] >= c
    if not mask.any():
        return None
    return float(np.max(slopes[i0:][mask]))


def _grid_index(curve: RepetitionCurve, t: float) -> int:
    k = int(np.searchsorted(curve.times, t))
    for j in (k - 1, k):
        if 0 <= j < len(curve.times) and math.isclose(curve.times[j], t, rel_tol=1e-12, abs_tol=0.0):
            return j
    raise DomainError(f"t = {t} is not a grid point")


def _chord_ratio_at(curve: RepetitionCurve, k: int) -> float:
    t = float(curve.times[k])
    v = fluctuation_bound(curve, t, t)
    if k == 0 or t > curve.grid.t_d / 2 or v is None:
        raise DomainError(f"F(t) undefined at t = {t}")
    chord = (curve.p0 - float(curve.values[k])) / t
    if v == 0:
        return math.inf if chord > 0 else 0.0
    return chord / v


def chord_ratio(curve: RepetitionCurve, t: float) -> float:
    """F(t) = [(p(0) - p(t)) / t] / V(t, t) at a grid point 0 < t <= t_d / 2.

    When V(t, t) = 0 the ratio is +inf for a positive chord slope and 0
    otherwise.
    """
    return _chord_ratio_at(curve, _grid_index(curve, t))


def admissible_indices(curve: RepetitionCurve) -> list:
    t = curve.times
    half = curve.grid.t_d / 2
    return [k for k in range(1, len(t)) if t[k] <= half and fluctuation_bound(curve, t[k], t[k]) is not None]


@dataclass(frozen=True)
class Timescale:
    t_star: float
    f_star: float
    t_s: float


def stability_timescale(
    curve: RepetitionCurve, tol: float = TAU_NUM, tie_rtol: float = TIE_RTOL
) -> Timescale:
    """(t*, F*, t_s). t* is the smallest grid point whose F is within
    ``tie_rtol`` of the maximum; t_s is +inf when p(0) - p(t*) <= ``tol``.
    """
    ks = admissible_indices(curve)
    if len(ks) < 4:
        raise DomainError(f"only {len(ks)} admissible grid points in (0, t_d/2]; need 4")
    fs = [_chord_ratio_at(curve, k) for k in ks]
    f_star = max(fs)
    if math.isinf(f_star):
        pick = fs.index(f_star)
    else:
        floor = f_star - tie_rtol * abs(f_star)
        pick = next(n for n, f in enumerate(fs) if f >= floor)
    k = ks[pick]
    t_star = float(curve.times[k])
    drop = curve.p0 - float(curve.values[k])
    t_s = math.inf if drop <= tol else t_star / drop
    return Timescale(t_star, f_star, t_s)


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """Outcome of t_s > lambda * t_d for one projector or one slice.

    A slice report aggregates its projectors in ``per_projector`` and carries
    the timescale of its least stable (smallest t_s) projector.
    """

    label: str
    t_star: float | None
    f_star: float | None
    t_s: float | None
    lam: float
    t_d: float
    passed: bool
    skipped: bool = False
    slice_index: int | None = None
    prefix: tuple = ()
    per_projector: tuple = ()
    curve: RepetitionCurve | None = field(default=None, repr=False)


def check_stability(
    hs: HistorySet,
    lam: float = DEFAULT_LAMBDA,
    grid: TimeGrid | None = None,
    prefixes: Mapping[int, Sequence[int]] | None = None,
    tol: float = TAU_NUM,
) -> list:
    """One ``StabilityReport`` per slice.

    Each projector is posed at its slice time after the prefix named in
    ``prefixes`` (empty by default). A projector whose context has zero
    probability is reported as skipped; a slice passes when every
    non-skipped projector passes.
    """
    if not 0 < lam < 1:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    if grid is None:
        raise DomainError("a time grid is required")
    prefixes = dict(prefixes or {})
    t_d = grid.t_d
    reports = []
    for i, s in enumerate(hs.slices):
        prefix = tuple(prefixes.get(i, ()))
        if len(prefix) > i:
            raise DomainError(f"prefix {prefix} for slice {i} extends past the slice")
        items = []
        for j, p in enumerate(s.decomposition):
            label = p.label or f"{s.decomposition.label}[{j}]"
            try:
                curve = repetition_curve(hs, prefix, hs.heisenberg_projectors[i][j], grid, label, tol)
            except DegenerateContextError:
                items.append(StabilityReport(label, None, None, None, lam, t_d, True, True, i, prefix))
                continue
            ts = stability_timescale(curve, tol)
            passed = ts.t_s > lam * t_d
            items.append(
                StabilityReport(label, ts.t_star, ts.f_star, ts.t_s, lam, t_d, passed, False, i, prefix, (), curve)
            )
        active = [r for r in items if not r.skipped]
        worst = min(active, key=lambda r: r.t_s) if active else None
        reports.append(
            StabilityReport(
                s.decomposition.label or f"slice{i}",
                worst.t_star if worst else None,
                worst.f_star if worst else None,
                worst.t_s if worst else None,
                lam,
                t_d,
                all(r.passed for r in active),
                not active,
                i,
                prefix,
                tuple(items),
            )
        )
    return reports
