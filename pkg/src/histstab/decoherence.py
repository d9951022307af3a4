"""System-environment models: pointer projectors, a dephasing spin bath and
the cat-state scenario.

The bath Hamiltonian is H = sum_k g_k Z_k (x) Z_S (environment first). With
each bath qubit in |+>, the system coherence between |0> and |1> is
multiplied by prod_k cos(2 g_k t), which gives every quantity here an exact
closed form to test against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateContextError, DegenerateInputError, ResourceError, StructuralError
from .histories import TAU_NUM, HistorySet, ProjectionDecomposition
from .operators import (
    TAU_STRUCT,
    DensityMatrix,
    FactoredSpace,
    Projector,
    Propagator,
    dagger,
    embed_system,
    partial_trace_env,
    projector_from_vectors,
    tensor,
)
from .stability import RepetitionCurve, TimeGrid, repetition_curve

MAX_BATH = 12
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


def build_pointer_projectors(space: FactoredSpace, subspaces, label: str = "pointer") -> ProjectionDecomposition:
    """I_E (x) Pi(V_k) for each system subspace V_k, given by spanning vectors."""
    ps = []
    for k, basis in enumerate(subspaces):
        basis = [np.asarray(v, dtype=complex).ravel() for v in basis]
        if any(v.size != space.dim_sys for v in basis):
            raise StructuralError(f"subspace {k} vectors must have length {space.dim_sys}")
        pi = projector_from_vectors(basis, f"{label}[{k}]")
        ps.append(Projector._trusted(embed_system(pi.matrix, space), pi.label, pi.rank * space.dim_env))
    return ProjectionDecomposition(tuple(ps), label)


@dataclass(frozen=True, eq=False)
class SpinBathModel:
    space: FactoredSpace
    couplings: np.ndarray
    hamiltonian: np.ndarray
    env_state: np.ndarray
    seed: int | None = None

    @property
    def n_bath(self) -> int:
        return len(self.couplings)

    @cached_property
    def propagator(self) -> Propagator:
        return Propagator(self.hamiltonian)

    def pointer_decomposition(self) -> ProjectionDecomposition:
        return build_pointer_projectors(self.space, [[[1, 0]], [[0, 1]]])


def _bath_z(n: int, k: int) -> np.ndarray:
    # diagonal of Z on bath qubit k; qubit 0 is the most significant bit
    bits = (np.arange(2 ** n) >> (n - 1 - k)) & 1
    return 1.0 - 2.0 * bits


def build_spin_bath(
    n: int,
    couplings=None,
    env_state="plus",
    seed: int | None = None,
    coupling_range=(0.5, 1.5),
) -> SpinBathModel:
    """Dephasing bath of ``n`` qubits.

    Couplings are drawn uniformly from ``coupling_range`` with ``seed`` when
    not given. ``env_state`` is ``"plus"`` (each bath qubit in |+>) or an
    explicit normalized vector of length 2**n.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise StructuralError(f"bath size must be a positive integer, got {n!r}")
    if n > MAX_BATH:
        raise ResourceError(f"a bath of {n} qubits exceeds dimension {2 ** (MAX_BATH + 1)}")
    drawn = couplings is None
    if drawn:
        lo, hi = coupling_range
        couplings = np.random.default_rng(seed).uniform(lo, hi, n)
    g = np.array(couplings, dtype=float)
    if g.shape != (n,):
        raise StructuralError(f"expected {n} couplings, got {g.size}")
    if np.any(g == 0) or not np.all(np.isfinite(g)):
        raise StructuralError("couplings must be finite and nonzero")
    env_diag = sum(gk * _bath_z(n, k) for k, gk in enumerate(g))
    h = tensor(np.diag(env_diag), SIGMA_Z)
    if isinstance(env_state, str):
        if env_state != "plus":
            raise StructuralError(f"unknown environment state {env_state!r}")
        env = np.ones(2 ** n, dtype=complex) / np.sqrt(2 ** n)
    else:
        env = np.asarray(env_state, dtype=complex).ravel()
        if env.size != 2 ** n or abs(np.linalg.norm(env) - 1) > TAU_STRUCT:
            raise StructuralError(f"environment state must be a unit vector of length {2 ** n}")
    g.setflags(write=False)
    env.setflags(write=False)
    return SpinBathModel(FactoredSpace(2 ** n, 2), g, h, env, seed if drawn else None)


@dataclass(frozen=True, eq=False)
class CatState:
    """|k> = a|e> + b|f> for orthonormal system states |e>, |f>."""

    a: complex
    b: complex
    e: np.ndarray = field(default_factory=lambda: np.array([1, 0], dtype=complex))
    f: np.ndarray = field(default_factory=lambda: np.array([0, 1], dtype=complex))

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        e = np.asarray(self.e, dtype=complex).ravel()
        f = np.asarray(self.f, dtype=complex).ravel()
        if abs(abs(self.a) ** 2 + abs(self.b) ** 2 - 1) > TAU_STRUCT:
            raise StructuralError(
                f"cat amplitudes a, b give |a|^2 + |b|^2 = {abs(self.a) ** 2 + abs(self.b) ** 2:.6g}, expected 1"
            )
        if e.shape != f.shape:
            raise StructuralError("pointer states |e>, |f> have different lengths")
        if abs(np.vdot(e, f)) > TAU_STRUCT or abs(np.linalg.norm(e) - 1) > TAU_STRUCT or abs(np.linalg.norm(f) - 1) > TAU_STRUCT:
            raise StructuralError("pointer states |e>, |f> must be orthonormal")
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "f", f)

    @property
    def vector(self) -> np.ndarray:
        return self.a * self.e + self.b * self.f

    @property
    def weights(self) -> tuple:
        return abs(self.a) ** 2, abs(self.b) ** 2

    def plateau_factor(self) -> float:
        """1 - 2|a|^2|b|^2 = |a|^4 + |b|^4."""
        wa, wb = self.weights
        return 1.0 - 2.0 * wa * wb


def initial_state(model: SpinBathModel, cat: CatState) -> DensityMatrix:
    """rho_E (x) |k><k| as a pure state."""
    if cat.vector.size != model.space.dim_sys:
        raise StructuralError("cat state does not live on the model's system space")
    return DensityMatrix.from_vector(np.kron(model.env_state, cat.vector))


def cat_projector(space: FactoredSpace, cat: CatState, label: str = "cat") -> Projector:
    """I_E (x) |k><k|."""
    k = cat.vector
    if k.size != space.dim_sys:
        raise StructuralError("cat state does not live on the system factor")
    return Projector._trusted(embed_system(np.outer(k, k.conj()), space), label, space.dim_env)


def cat_decomposition(space: FactoredSpace, cat: CatState, label: str = "cat") -> ProjectionDecomposition:
    """{I_E (x) |k><k|, I_E (x) |k_perp><k_perp|}."""
    p = cat_projector(space, cat, f"{label}[cat]")
    rest = Projector._trusted(np.eye(space.dim) - p.matrix, f"{label}[cat_perp]", p.rank)
    return ProjectionDecomposition((p, rest), label)


@dataclass(frozen=True, eq=False)
class DecayFit:
    """Off-diagonal system coherence c(t) = <e|rho_S(t)|f> and its decay time.

    ``epsilon`` holds |c(t)|. ``t_dc`` is ``None`` when |c| never falls to
    10% of its initial value on the grid.
    """

    times: np.ndarray
    coherence: np.ndarray
    t_dc: float | None
    fit_residual: float | None

    @property
    def epsilon(self) -> np.ndarray:
        return np.abs(self.coherence)


def system_states(model: SpinBathModel, cat: CatState, times) -> np.ndarray:
    """rho_S(t) for each time, shape (len(times), dim_S, dim_S)."""
    psi0 = np.kron(model.env_state, cat.vector)
    psi = model.propagator.evolve_vector(psi0, times)
    blocks = psi.reshape(len(psi), model.space.dim_env, model.space.dim_sys)
    return np.einsum("tei,tej->tij", blocks, blocks.conj())


def estimate_decay_time(times, epsilon) -> tuple:
    """Least-squares fit of log eps = -t/t_dc + b over the first fall from
    0.9 eps(0) to 0.1 eps(0). Returns (t_dc, rms log residual) or (None, None).
    """
    t = np.asarray(times, dtype=float)
    eps = np.asarray(epsilon, dtype=float)
    e0 = eps[0]
    below = np.nonzero(eps <= 0.1 * e0)[0]
    if e0 <= 0 or below.size == 0:
        return None, None
    k1 = int(below[0])
    above = np.nonzero(eps[:k1] >= 0.9 * e0)[0]
    k0 = int(above[-1]) if above.size else 0
    seg = slice(k0, k1 + 1)
    ts, ys = t[seg], np.log(np.maximum(eps[seg], np.finfo(float).tiny))
    a = np.column_stack([ts, np.ones_like(ts)])
    (slope, icpt), *_ = np.linalg.lstsq(a, ys, rcond=None)
    if not slope < 0:
        return None, None
    resid = ys - (slope * ts + icpt)
    return float(-1.0 / slope), float(np.sqrt(np.mean(resid ** 2)))


def off_diagonal_decay(model: SpinBathModel, cat: CatState, grid: TimeGrid) -> DecayFit:
    """Evolve rho_E (x) |k><k| unitarily and track <e|rho_S(t)|f>."""
    if cat.a * cat.b == 0:
        raise DegenerateInputError("a * b = 0: the cat state has no coherence to track")
    rs = system_states(model, cat, grid.points)
    coh = np.einsum("i,tij,j->t", cat.e.conj(), rs, cat.f)
    t_dc, resid = estimate_decay_time(grid.points, np.abs(coh))
    coh.setflags(write=False)
    return DecayFit(grid.points, coh, t_dc, resid)


def closed_form_epsilon(model: SpinBathModel, cat: CatState, times) -> np.ndarray:
    """|a conj(b)| prod_k |cos(2 g_k t)| for the |+> bath."""
    t = np.asarray(times, dtype=float)
    return abs(cat.a * np.conj(cat.b)) * np.prod(np.abs(np.cos(2 * np.outer(t, model.couplings))), axis=1)


def cat_scenario(model: SpinBathModel, cat: CatState, grid: TimeGrid) -> tuple:
    """Repetition curve of I_E (x) |k><k| from rho_E (x) |k><k| (empty prefix)
    and the predicted late-time value p(0)(1 - 2|a|^2|b|^2).
    """
    rho = initial_state(model, cat)
    decomposition = cat_decomposition(model.space, cat)
    hs = HistorySet(rho, model.hamiltonian, ((0.0, decomposition),))
    hs.__dict__["propagator"] = model.propagator  # reuse the model's eigensolve
    curve = repetition_curve(hs, (), decomposition[0], grid, "cat")
    return curve, curve.p0 * cat.plateau_factor()


def plateau_average(curve: RepetitionCurve, t_dc: float, start_factor: float = 5.0) -> float:
    """Mean of p(t)/p(0) over grid points in [start_factor * t_dc, t_d]."""
    mask = curve.times >= start_factor * t_dc
    if not mask.any():
        raise DegenerateInputError("late-time window is empty")
    return float(np.mean(curve.values[mask]) / curve.p0)


def predicted_repetition(cat: CatState, coherence, p0: float = 1.0) -> np.ndarray:
    """p(0) [a b] [[|a|^2, c], [conj c, |b|^2]] [conj a, conj b]^T evaluated as
    the quadratic form <k| rho_S |k> with the measured coherence c(t) and the
    stable diagonal.
    """
    wa, wb = cat.weights
    c = np.asarray(coherence, dtype=complex)
    a, b = cat.a, cat.b
    val = wa * wa + wb * wb + np.conj(a) * b * c + a * np.conj(b) * np.conj(c)
    return p0 * np.real(val)


def effective_system_state(rho_prime, projector, space: FactoredSpace, tol: float = TAU_NUM) -> DensityMatrix:
    """(P rho' P / p(0)) traced over the environment."""
    p = projector.matrix if isinstance(projector, Projector) else np.asarray(projector, dtype=complex)
    r = rho_prime.matrix if isinstance(rho_prime, DensityMatrix) else np.asarray(rho_prime, dtype=complex)
    x = p @ r @ p
    p0 = float(np.real(np.trace(x)))
    if p0 <= tol:
        raise DegenerateContextError(f"projector has probability {p0:.3g} in the given state")
    rs = partial_trace_env(x / p0, space)
    return DensityMatrix.checked((rs + dagger(rs)) / 2, tol=max(TAU_STRUCT, tol))
