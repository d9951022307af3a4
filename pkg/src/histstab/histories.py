"""History sets, chained-projector probabilities and the decoherence functional.

Projectors are stored in the Schroedinger picture together with the time of
their slice; every computation uses the Heisenberg operator
exp(iHt) P exp(-iHt) at that time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ResourceError, StructuralError
from .operators import (
    TAU_STRUCT,
    DensityMatrix,
    Projector,
    Propagator,
    as_operator,
    dagger,
    max_abs,
    projector_from_vectors,
)

TAU_NUM = 1e-9
CONSISTENCY_TOL = 1e-8
HISTORY_CAP = 4096

History = tuple  # one projector index per slice


@dataclass(frozen=True, eq=False)
class ProjectionDecomposition:
    """Mutually orthogonal projectors that sum to the identity."""

    projectors: tuple
    label: str = ""

    def __post_init__(self, tol: float = TAU_STRUCT):
        ps = tuple(self.projectors)
        if not ps:
            raise StructuralError(f"decomposition {self.label!r} is empty")
        dim = ps[0].dim
        if any(p.dim != dim for p in ps):
            raise StructuralError(f"decomposition {self.label!r} mixes dimensions")
        for j, pj in enumerate(ps):
            for k in range(j + 1, len(ps)):
                if max_abs(pj.matrix @ ps[k].matrix) > tol:
                    raise StructuralError(
                        f"projectors {j} and {k} of {self.label!r} are not orthogonal"
                    )
        total = sum(p.matrix for p in ps)
        if max_abs(total - np.eye(dim)) > tol:
            raise StructuralError(f"projectors of {self.label!r} do not sum to the identity")
        object.__setattr__(self, "projectors", ps)

    @classmethod
    def checked(cls, projectors, label: str = "", tol: float = TAU_STRUCT):
        obj = cls.__new__(cls)
        object.__setattr__(obj, "projectors", projectors)
        object.__setattr__(obj, "label", label)
        obj.__post_init__(tol)
        return obj

    @classmethod
    def from_vectors(cls, groups, label: str = "", labels=None, complete: bool = False):
        """One projector per group of spanning vectors.

        With ``complete=True`` the projector onto the orthogonal complement of
        all groups is appended (if it is non-zero).
        """
        labels = labels or [f"{label}[{j}]" for j in range(len(groups))]
        ps = [projector_from_vectors(g, lab) for g, lab in zip(groups, labels)]
        if complete:
            dim = ps[0].dim
            rest = np.eye(dim) - sum(p.matrix for p in ps)
            rank = dim - sum(p.rank for p in ps)
            if rank > 0:
                ps.append(Projector(rest, f"{label}[rest]"))
        return cls(tuple(ps), label)

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    def __len__(self) -> int:
        return len(self.projectors)

    def __iter__(self):
        return iter(self.projectors)

    def __getitem__(self, j: int) -> Projector:
        return self.projectors[j]


@dataclass(frozen=True)
class Slice:
    time: float
    decomposition: ProjectionDecomposition


@dataclass(frozen=True, eq=False)
class HistorySet:
    rho: DensityMatrix
    hamiltonian: np.ndarray
    slices: tuple

    def __post_init__(self):
        h = as_operator(self.hamiltonian, "Hamiltonian")
        if h.shape != self.rho.matrix.shape:
            raise StructuralError(
                f"Hamiltonian has dimension {h.shape[0]}, state has {self.rho.dim}"
            )
        slices = tuple(s if isinstance(s, Slice) else Slice(float(s[0]), s[1]) for s in self.slices)
        prev = None
        for i, s in enumerate(slices):
            if s.decomposition.dim != self.rho.dim:
                raise StructuralError(
                    f"slice {i} acts on dimension {s.decomposition.dim}, state has {self.rho.dim}"
                )
            if s.time < 0 or not np.isfinite(s.time):
                raise StructuralError(f"slice {i} has invalid time {s.time}")
            if prev is not None and not s.time > prev:
                raise StructuralError("slice times must be strictly increasing")
            prev = s.time
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "slices", slices)

    @property
    def dim(self) -> int:
        return self.rho.dim

    @property
    def sizes(self) -> tuple:
        return tuple(len(s.decomposition) for s in self.slices)

    @cached_property
    def propagator(self) -> Propagator:
        return Propagator(self.hamiltonian)

    @cached_property
    def heisenberg_projectors(self) -> tuple:
        """Per slice, the Heisenberg-picture matrices at that slice's time."""
        out = []
        for s in self.slices:
            mats = []
            for p in s.decomposition:
                m = self.propagator.heisenberg(p.matrix, s.time)
                mats.append((m + dagger(m)) / 2 if s.time else m)
            out.append(tuple(mats))
        return tuple(out)

    def check_history(self, h: Sequence[int], n_slices: int | None = None) -> History:
        n = len(self.slices) if n_slices is None else n_slices
        h = tuple(int(j) for j in h)
        if len(h) != n:
            raise StructuralError(f"history {h} has {len(h)} entries, expected {n}")
        for i, j in enumerate(h):
            if not 0 <= j < len(self.slices[i].decomposition):
                raise StructuralError(f"history index {j} out of range at slice {i}")
        return h

    def chain(self, h: Sequence[int]) -> np.ndarray:
        """C = P_n ... P_1 for the (possibly partial) history ``h``."""
        hp = self.heisenberg_projectors
        c = np.eye(self.dim, dtype=complex)
        for i, j in enumerate(h):
            c = hp[i][j] @ c
        return c

    def replace_slice(self, index: int, decomposition: ProjectionDecomposition) -> "HistorySet":
        slices = list(self.slices)
        slices[index] = Slice(slices[index].time, decomposition)
        return HistorySet(self.rho, self.hamiltonian, tuple(slices))


def history_count(hs: HistorySet) -> int:
    return int(np.prod(hs.sizes, dtype=object)) if hs.slices else 1


def enumerate_histories(hs: HistorySet, cap: int = HISTORY_CAP) -> list:
    """All index tuples in lexicographic order."""
    n = history_count(hs)
    if n > cap:
        raise ResourceError(f"{n} histories exceed the cap of {cap}")
    return list(itertools.product(*(range(k) for k in hs.sizes)))


def history_probability(hs: HistorySet, h: Sequence[int]) -> float:
    """Tr(P_n...P_1 rho P_1...P_n), unclamped."""
    c = hs.chain(hs.check_history(h))
    return float(np.real(np.trace(c @ hs.rho.matrix @ dagger(c))))


def clamp_probability(p: float) -> float:
    return min(1.0, max(0.0, p))


@dataclass(frozen=True, eq=False)
class DecoherenceFunctional:
    """D[h, h'] = Tr(C_h rho C_h'^dagger) over histories in ``histories`` order."""

    matrix: np.ndarray
    histories: tuple

    @cached_property
    def _index(self) -> dict:
        return {h: k for k, h in enumerate(self.histories)}

    def index(self, h) -> int:
        return self._index[tuple(h)]

    def __getitem__(self, pair) -> complex:
        h, g = pair
        return complex(self.matrix[self.index(h), self.index(g)])

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def off_diagonal(self) -> np.ndarray:
        return self.matrix - np.diag(np.diag(self.matrix))


def decoherence_functional(hs: HistorySet, cap: int = HISTORY_CAP) -> DecoherenceFunctional:
    histories = enumerate_histories(hs, cap)
    chains = _all_chains(hs)
    m = len(histories)
    rho = hs.rho.matrix
    left = (chains @ rho).reshape(m, -1)
    right = chains.reshape(m, -1).conj()
    d = left @ right.T
    d = (d + dagger(d)) / 2
    d.setflags(write=False)
    return DecoherenceFunctional(d, tuple(histories))


def _all_chains(hs: HistorySet) -> np.ndarray:
    # builds chains slice by slice so shared prefixes are multiplied once
    chains = np.eye(hs.dim, dtype=complex)[None]
    for mats in hs.heisenberg_projectors:
        chains = np.stack([p @ c for c in chains for p in mats])
    return chains


@dataclass(frozen=True)
class ConsistencyReport:
    max_off_diag: float
    is_consistent: bool
    worst_pair: tuple | None
    tol: float


def check_consistency(
    hs: HistorySet,
    tol: float = CONSISTENCY_TOL,
    cap: int = HISTORY_CAP,
    functional: DecoherenceFunctional | None = None,
) -> ConsistencyReport:
    """Strong consistency: every off-diagonal |D(h, h')| must be at most ``tol``."""
    d = functional if functional is not None else decoherence_functional(hs, cap)
    off = np.abs(d.off_diagonal())
    if off.size <= 1:
        return ConsistencyReport(0.0, True, None, tol)
    k = int(np.argmax(off))
    i, j = divmod(k, off.shape[1])
    worst = float(off[i, j])
    pair = (d.histories[i], d.histories[j]) if worst > 0 else None
    return ConsistencyReport(worst, worst <= tol, pair, tol)


def _check_partition(grouping: Iterable[Iterable[int]], k: int) -> list:
    groups = [sorted(int(j) for j in g) for g in grouping]
    flat = [j for g in groups for j in g]
    if any(not g for g in groups) or sorted(flat) != list(range(k)):
        raise StructuralError(f"grouping {groups} is not a partition of range({k})")
    return groups


def coarse_grain(hs: HistorySet, slice_index: int, grouping) -> HistorySet:
    """Merge the projectors of one slice by summation within each group."""
    if not 0 <= slice_index < len(hs.slices):
        raise StructuralError(f"slice index {slice_index} out of range")
    dec = hs.slices[slice_index].decomposition
    groups = _check_partition(grouping, len(dec))
    ps = []
    for g in groups:
        if len(g) == 1:
            ps.append(dec[g[0]])
            continue
        m = sum(dec[j].matrix for j in g)
        ps.append(Projector(m, "+".join(dec[j].label for j in g)))
    return hs.replace_slice(slice_index, ProjectionDecomposition(tuple(ps), dec.label))
