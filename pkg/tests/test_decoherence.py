import math

import numpy as np
import pytest
from scipy.linalg import expm

from histstab import (
    TAU_NUM,
    TAU_STRUCT,
    FactoredSpace,
    HistorySet,
    TimeGrid,
    build_pointer_projectors,
    build_spin_bath,
    check_stability,
    effective_system_state,
    off_diagonal_decay,
)
from histstab.decoherence import (
    CatState,
    cat_projector,
    cat_scenario,
    closed_form_epsilon,
    estimate_decay_time,
    initial_state,
    plateau_average,
    predicted_repetition,
)
from histstab.errors import DegenerateInputError, ResourceError, StructuralError


def test_pointer_projectors_dimension_count():
    dec = build_pointer_projectors(FactoredSpace(4, 2), [[[1, 0]], [[0, 1]]])
    assert [p.rank for p in dec] == [4, 4]
    assert np.allclose(sum(p.matrix for p in dec), np.eye(8))
    whole = build_pointer_projectors(FactoredSpace(4, 2), [[[1, 0], [0, 1]]])
    assert len(whole) == 1 and np.allclose(whole[0].matrix, np.eye(8))


def test_pointer_projectors_two_plus_one_split():
    dec = build_pointer_projectors(FactoredSpace(2, 3), [[[1, 0, 0], [0, 1, 0]], [[0, 0, 1]]])
    assert [p.rank for p in dec] == [4, 2]
    # entrywise oracle: env (x) sys ordering, so index = 3 * e + s
    p0 = np.zeros((6, 6))
    for e in range(2):
        for s in (0, 1):
            p0[3 * e + s, 3 * e + s] = 1
    assert np.array_equal(dec[0].matrix, p0)
    assert np.array_equal(dec[0].matrix @ dec[1].matrix, np.zeros((6, 6)))


def test_single_qubit_bath_hamiltonian():
    m = build_spin_bath(1, couplings=[1.0])
    # Z_E (x) Z_S in env (x) sys order is diag(1, -1, -1, 1)
    assert np.array_equal(m.hamiltonian, np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex))
    assert m.hamiltonian.shape == (4, 4)


def test_bath_hamiltonian_matches_kron_sum():
    g = [0.6, 1.2, 0.9]
    z, i2 = np.diag([1.0, -1.0]), np.eye(2)
    ref = np.zeros((16, 16))
    for k, gk in enumerate(g):
        ops = [i2] * 3
        ops[k] = z
        env = ops[0]
        for o in ops[1:]:
            env = np.kron(env, o)
        ref += gk * np.kron(env, z)
    m = build_spin_bath(3, couplings=g)
    assert np.allclose(m.hamiltonian, ref, atol=1e-15)
    for p in m.pointer_decomposition():
        assert np.array_equal(m.hamiltonian @ p.matrix, p.matrix @ m.hamiltonian)


def test_bath_validation():
    with pytest.raises(StructuralError):
        build_spin_bath(2, couplings=[1.0, 0.0])
    with pytest.raises(StructuralError):
        build_spin_bath(2, couplings=[1.0])
    with pytest.raises(StructuralError):
        build_spin_bath(0)
    with pytest.raises(ResourceError):
        build_spin_bath(13)
    a, b = build_spin_bath(6, seed=9), build_spin_bath(6, seed=9)
    assert np.array_equal(a.couplings, b.couplings) and a.seed == 9
    assert np.all((a.couplings >= 0.5) & (a.couplings <= 1.5))


def test_cat_validation():
    with pytest.raises(StructuralError):
        CatState(1.1, 0.0)
    with pytest.raises(StructuralError):
        CatState(0.6, 0.8, e=[1, 0], f=[1, 0])
    assert CatState(0.6, 0.8j).plateau_factor() == pytest.approx(1 - 2 * 0.36 * 0.64)


def test_epsilon_vanishes_at_quarter_period():
    m = build_spin_bath(1, couplings=[1.0])
    cat = CatState(math.sqrt(0.5), math.sqrt(0.5))
    g = TimeGrid(np.array([0.0, math.pi / 8, math.pi / 4, math.pi / 2]))
    fit = off_diagonal_decay(m, cat, g)
    assert fit.epsilon[0] == pytest.approx(0.5, abs=1e-15)
    assert fit.epsilon[2] <= 1e-15


def test_epsilon_rejects_pointer_state():
    with pytest.raises(DegenerateInputError):
        off_diagonal_decay(build_spin_bath(2, seed=0), CatState(1.0, 0.0), TimeGrid.linear(1.0, 8))


@pytest.mark.parametrize("n", [1, 4, 8])
def test_epsilon_matches_product_formula(n):
    m = build_spin_bath(n, seed=7)
    cat = CatState(0.6, 0.8)
    g = TimeGrid.linear(10.0, 256)
    fit = off_diagonal_decay(m, cat, g)
    t = g.points
    # independent oracle: product of per-qubit factors written out by hand
    oracle = np.full(t.size, 0.6 * 0.8)
    for gk in m.couplings:
        oracle *= np.abs(np.cos(2 * gk * t))
    assert np.max(np.abs(fit.epsilon - oracle)) <= 1e-8
    assert np.max(np.abs(closed_form_epsilon(m, cat, t) - oracle)) <= 1e-12


def test_epsilon_matches_expm_evolution():
    m = build_spin_bath(3, couplings=[0.8, 1.1, 1.4])
    cat = CatState(0.6, 0.8j)
    psi0 = np.kron(np.ones(8) / np.sqrt(8), cat.vector)
    g = TimeGrid.linear(2.0, 9)
    fit = off_diagonal_decay(m, cat, g)
    for k, t in enumerate(g.points):
        psi = expm(-1j * m.hamiltonian * t) @ psi0
        blocks = psi.reshape(8, 2)
        rs = blocks.T @ blocks.conj()
        assert fit.coherence[k] == pytest.approx(rs[0, 1], abs=1e-12)


def test_decay_time_estimator():
    t = np.linspace(0, 5, 501)
    t_dc, resid = estimate_decay_time(t, 0.5 * np.exp(-t / 0.4))
    assert t_dc == pytest.approx(0.4, rel=1e-10) and resid < 1e-10
    assert estimate_decay_time(t, np.full_like(t, 0.5)) == (None, None)


def test_plateau_predictions():
    g = TimeGrid.linear(4.0, 64)
    m = build_spin_bath(3, seed=1)
    curve, pred = cat_scenario(m, CatState(1.0, 0.0), g)
    assert np.allclose(curve.values, curve.p0, atol=1e-14)
    assert pred == pytest.approx(curve.p0)
    _, pred = cat_scenario(m, CatState(math.sqrt(0.5), math.sqrt(0.5)), g)
    assert pred == pytest.approx(0.5 * curve.p0)
    _, pred = cat_scenario(m, CatState(math.sqrt(0.9), math.sqrt(0.1)), g)
    assert pred == pytest.approx(0.82 * curve.p0)


def test_quadratic_form_reconstruction():
    m = build_spin_bath(6, seed=4)
    cat = CatState(math.sqrt(0.3), math.sqrt(0.7) * np.exp(0.4j))
    g = TimeGrid.linear(5.0, 200)
    curve, _ = cat_scenario(m, cat, g)
    fit = off_diagonal_decay(m, cat, g)
    pred = predicted_repetition(cat, fit.coherence, curve.p0)
    assert np.max(np.abs(curve.values - pred)) <= 1e-6


def test_plateau_average_spin_bath():
    m = build_spin_bath(8, seed=7)
    cat = CatState(math.sqrt(0.5), math.sqrt(0.5))
    g = TimeGrid.linear(10.0, 256)
    curve, _ = cat_scenario(m, cat, g)
    fit = off_diagonal_decay(m, cat, g)
    assert fit.t_dc / g.t_d <= 0.02
    assert plateau_average(curve, fit.t_dc) == pytest.approx(0.5, abs=0.05)


def test_effective_state_blocks():
    space = FactoredSpace(4, 2)
    m = build_spin_bath(2, seed=2)
    pure = CatState(1.0, 0.0)
    rs = effective_system_state(initial_state(m, pure), cat_projector(space, pure), space)
    assert np.allclose(rs.matrix, np.diag([1, 0]), atol=TAU_STRUCT)
    half = CatState(math.sqrt(0.5), math.sqrt(0.5))
    rs = effective_system_state(initial_state(m, half), cat_projector(space, half), space)
    assert abs(rs.matrix[0, 1]) == pytest.approx(0.5, abs=1e-14)
    assert abs(rs.matrix[1, 0]) == pytest.approx(0.5, abs=1e-14)


def test_effective_state_is_pure_for_random_cats():
    rng = np.random.default_rng(11)
    space = FactoredSpace(8, 2)
    m = build_spin_bath(3, seed=11)
    for _ in range(10):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        cat = CatState(v[0], v[1])
        rs = effective_system_state(initial_state(m, cat), cat_projector(space, cat), space).matrix
        assert np.trace(rs).real == pytest.approx(1.0, abs=TAU_NUM)
        assert np.max(np.abs(rs @ rs - rs)) <= TAU_NUM


def test_purity_preserved_under_evolution():
    m = build_spin_bath(4, seed=3)
    rho = initial_state(m, CatState(0.6, 0.8))
    for t in (0.0, 0.3, 2.7):
        rt = m.propagator.evolve(rho.matrix, t)
        assert np.trace(rt @ rt).real == pytest.approx(1.0, abs=TAU_NUM)


def test_pointer_projectors_are_frozen():
    m = build_spin_bath(4, couplings=[0.7, 1.1, 0.9, 1.3])
    hs = HistorySet(initial_state(m, CatState(0.8, 0.6)), m.hamiltonian, ((0.0, m.pointer_decomposition()),))
    rep = check_stability(hs, 0.1, TimeGrid.linear(10.0, 256))[0]
    assert rep.passed and all(r.t_s == math.inf for r in rep.per_projector)
