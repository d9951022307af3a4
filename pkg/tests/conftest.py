import numpy as np
import pytest

from histstab import DensityMatrix, HistorySet, ProjectionDecomposition, Projector


def random_unitary(d, rng):
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d, rng, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def random_density(d, rng, rank=None):
    rank = rank or d
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = a @ a.conj().T
    return m / np.trace(m)


def random_decomposition(d, k, rng, label="s"):
    """k projectors from a random unitary, with random nonempty column blocks."""
    u = random_unitary(d, rng)
    cuts = np.sort(rng.choice(np.arange(1, d), size=k - 1, replace=False)) if k > 1 else []
    blocks = np.split(np.arange(d), cuts)
    ps = []
    for j, b in enumerate(blocks):
        v = u[:, b]
        m = v @ v.conj().T
        ps.append(Projector((m + m.conj().T) / 2, f"{label}[{j}]"))
    return ProjectionDecomposition(tuple(ps), label)


def random_history_set(rng, max_dim=16, max_slices=3, max_k=4):
    d = int(rng.integers(2, max_dim + 1))
    n = int(rng.integers(1, max_slices + 1))
    times = np.cumsum(rng.uniform(0.1, 2.0, n))
    slices = []
    for i in range(n):
        k = int(rng.integers(1, min(max_k, d) + 1))
        slices.append((float(times[i]), random_decomposition(d, k, rng, f"s{i}")))
    return HistorySet(DensityMatrix(random_density(d, rng)), random_hermitian(d, rng), tuple(slices))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KETP = np.array([1, 1], dtype=complex) / np.sqrt(2)
KETM = np.array([1, -1], dtype=complex) / np.sqrt(2)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1, -1]).astype(complex)


def ket_projector(v, label=""):
    v = np.asarray(v, dtype=complex)
    return Projector(np.outer(v, v.conj()), label)


def qubit_plusminus_set():
    """rho = |0><0|, zero H, {+,-} at t=0 then {0,1} at t=1."""
    s1 = ProjectionDecomposition((ket_projector(KETP, "+"), ket_projector(KETM, "-")), "x")
    s2 = ProjectionDecomposition((ket_projector(KET0, "0"), ket_projector(KET1, "1")), "z")
    return HistorySet(DensityMatrix.from_vector(KET0), np.zeros((2, 2)), ((0.0, s1), (1.0, s2)))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
