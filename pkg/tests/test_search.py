import math

import numpy as np
import pytest

from histstab import (
    DensityMatrix,
    FactoredSpace,
    HistoryTemplate,
    ProjectorFamily,
    build_spin_bath,
    check_consistency,
    rotation_family,
    search_consistent_sets,
    violation_norm,
)
from histstab.decoherence import CatState, initial_state
from histstab.errors import DomainError, ResourceError
from histstab.histories import ProjectionDecomposition

from conftest import KET0

QUBIT = FactoredSpace(1, 2)
BOUNDS = [[0.0, math.pi]]


def qubit_template(times=(0.0, 1.0)):
    return HistoryTemplate(DensityMatrix.from_vector(KET0), np.zeros((2, 2)), times)


def dk_family():
    return rotation_family(QUBIT, [(0.0, 1.0), (math.pi / 4, 0.0)], BOUNDS, [[0.0], [math.pi / 2], [math.pi]])


def dk_violation(theta):
    """Hand evaluation: zero H, rho = |0><0|, first basis at angle theta,
    second at pi/4. Off-diagonal terms pair different first-slice outcomes
    with the same second-slice outcome: <0|u_g><u_g|w><w|u_h><u_h|0>.
    """
    c, s = math.cos(theta), math.sin(theta)
    u = [(c, s), (-s, c)]
    q = math.pi / 4
    w = [(math.cos(q), math.sin(q)), (-math.sin(q), math.cos(q))]
    dot = lambda x, y: x[0] * y[0] + x[1] * y[1]
    best = 0.0
    for k in range(2):
        val = u[0][0] * dot(u[0], w[k]) * dot(w[k], u[1]) * u[1][0]
        best = max(best, abs(val))
    return best


def test_single_slice_family_is_consistent():
    fam = rotation_family(QUBIT, [(0.0, 1.0)], BOUNDS)
    tmpl = qubit_template((0.0,))
    for th in np.linspace(0, math.pi, 17):
        assert violation_norm(tmpl, fam, [th]) <= 1e-15
    res = search_consistent_sets(tmpl, fam, grid_points=16)
    # every grid cell is a minimum; each cell is wider than the de-dup radius
    assert len(res.minima) == 16


def test_pointer_family_on_spin_bath():
    m = build_spin_bath(6, seed=7)
    rho = initial_state(m, CatState(math.sqrt(0.5), math.sqrt(0.5)))
    tmpl = HistoryTemplate(rho, m.hamiltonian, (0.0, 8.0))
    fam = rotation_family(m.space, [(0.0, 1.0), (0.0, 1.0)], BOUNDS, [[0.0]])
    assert violation_norm(tmpl, fam, [0.0]) <= 1e-6


def test_qubit_plusminus_via_family():
    fam = rotation_family(QUBIT, [(math.pi / 4, 0.0), (0.0, 0.0)], BOUNDS)
    assert violation_norm(qubit_template(), fam, [0.3]) == pytest.approx(0.25, abs=1e-12)


def test_violation_equals_consistency_report():
    tmpl, fam = qubit_template(), dk_family()
    for th in np.linspace(0, math.pi, 11):
        hs = fam.history_set(tmpl, [th])
        assert violation_norm(tmpl, fam, [th]) == check_consistency(hs).max_off_diag
        assert violation_norm(tmpl, fam, [th]) == pytest.approx(dk_violation(th), abs=1e-14)


def test_family_outputs_are_decompositions():
    fam = dk_family()
    for th in np.random.default_rng(3).uniform(0, math.pi, 20):
        for dec in fam.decompositions([th]):
            ProjectionDecomposition(tuple(dec), dec.label)


def test_violation_domain():
    with pytest.raises(DomainError):
        violation_norm(qubit_template(), dk_family(), [4.0])
    with pytest.raises(DomainError):
        violation_norm(qubit_template(), dk_family(), [0.1, 0.2])
    with pytest.raises(DomainError):
        ProjectorFamily(lambda th: [], [[1.0, 0.0]])


def test_budget_must_cover_grid():
    with pytest.raises(ResourceError):
        search_consistent_sets(qubit_template(), dk_family(), budget=10, grid_points=64)


def test_search_finds_pointer_point_and_is_deterministic():
    tmpl, fam = qubit_template(), dk_family()
    a = search_consistent_sets(tmpl, fam, seed=4)
    b = search_consistent_sets(tmpl, fam, seed=4)
    assert a == b
    assert any(m.pointer_distance is not None and m.pointer_distance <= 1e-3 for m in a.minima)
    assert all(m.violation <= 1e-6 for m in a.minima)
    assert a.evaluations <= 20000


def test_refinement_never_worsens():
    res = search_consistent_sets(qubit_template(), dk_family(), tol=1.0)
    for m in res.minima:
        assert m.violation <= m.start_violation


def test_minima_match_fine_scan():
    tmpl, fam = qubit_template(), dk_family()
    res = search_consistent_sets(tmpl, fam)
    thetas = np.linspace(0, math.pi, 10_000)
    vals = np.array([dk_violation(t) for t in thetas])
    step = thetas[1] - thetas[0]
    interior = (vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])
    scan_min = thetas[1:-1][interior]
    scan_min = np.concatenate([thetas[:1], scan_min, thetas[-1:]])
    # slope of the violation is at most 1/2, so a true zero lies within a step
    scan_min = scan_min[[dk_violation(t) <= step for t in scan_min]]
    assert len(res.minima) >= 2
    found = np.array([m.theta[0] for m in res.minima])
    assert all(np.min(np.abs(scan_min - t)) <= step for t in found)
    assert all(np.min(np.abs(found - t)) <= step for t in scan_min)
