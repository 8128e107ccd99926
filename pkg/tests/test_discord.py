import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qdiscord.discord import (
    OptimizerConfig,
    basis_from_params,
    bloch_grid,
    discord,
    discord_grid_oracle,
    fixed_basis_discord,
    generator_from_params,
    params_from_generator,
)
from qdiscord.measure import Povm
from qdiscord.qmat import kron
from qdiscord.states import (
    bell,
    classical_classical,
    classical_quantum,
    named_family,
    random_density,
    random_unitary,
    werner,
)

from conftest import two_qubit_state

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
FAST = OptimizerConfig(starts=8)


def werner_discord_oracle(p):
    return (
        (1 - p) / 4 * np.log2(1 - p)
        - (1 + p) / 2 * np.log2(1 + p)
        + (1 + 3 * p) / 4 * np.log2(1 + 3 * p)
    )


def test_werner_oracle_reference_values():
    assert werner_discord_oracle(0.5) == pytest.approx(0.262483184, abs=1e-9)
    assert werner_discord_oracle(0.7) == pytest.approx(0.484030913, abs=1e-9)


def test_zero_params_give_computational_basis():
    povm = basis_from_params(np.zeros(4), 2)
    assert_allclose(povm.basis_vectors(), np.eye(2), atol=1e-12)


def test_params_against_scipy_expm():
    # H = (pi/4) Y lives in the imaginary part of the (0, 1) entry
    params = [0, 0, 0, -np.pi / 4]
    h = generator_from_params(params, 2)
    assert_allclose(h, np.pi / 4 * np.array([[0, -1j], [1j, 0]]), atol=1e-15)
    u = basis_from_params(params, 2).basis_vectors()
    expected = scipy.linalg.expm(1j * h)
    assert_allclose(np.abs(u.conj().T @ expected), np.eye(2), atol=1e-12)
    assert_allclose(np.abs(expected), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_params_round_trip_and_completeness(params):
    h = generator_from_params(params, 3)
    assert_allclose(params_from_generator(h), params, atol=1e-12)
    povm = basis_from_params(params, 3)
    assert_allclose(sum(povm.elements), np.eye(3), atol=1e-10)
    assert povm.is_orthogonal_basis()


def test_param_count_checked():
    with pytest.raises(ValueError):
        generator_from_params(np.zeros(3), 2)


def test_grid_points():
    theta, phi = bloch_grid((4, 8))
    assert len(theta) == 5 and len(phi) == 8
    assert theta[-1] == pytest.approx(np.pi / 2)
    t1, p1 = bloch_grid((8, 16))
    assert set(np.round(theta, 12)) <= set(np.round(t1, 12))
    assert set(np.round(phi, 12)) <= set(np.round(p1, 12))


def test_product_has_no_discord():
    r = discord(named_family("product", [0.1, 0.2, 0.3, 0.0, 0.5, -0.2]), cfg=FAST)
    assert abs(r.discord) < 1e-8
    assert abs(r.mutual_info) < 1e-12


def test_bell_discord_is_one():
    r = discord(bell(), cfg=FAST)
    assert r.discord == pytest.approx(1, abs=1e-8)
    assert r.classical_corr == pytest.approx(1, abs=1e-8)
    assert r.mutual_info == pytest.approx(2)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7, 0.95])
def test_werner_closed_form(p):
    assert discord(werner(p), cfg=FAST).discord == pytest.approx(werner_discord_oracle(p), abs=1e-7)


def test_werner_against_grid():
    rho = werner(0.7)
    d = discord(rho).discord
    g = discord_grid_oracle(rho, (400, 800))
    assert abs(d - g) < 1e-4
    assert g == pytest.approx(werner_discord_oracle(0.7), abs=1e-9)


@pytest.mark.parametrize("seed", [0, 1])
def test_grid_refinement_is_monotone(seed):
    rho = two_qubit_state(seed)
    coarse = discord_grid_oracle(rho, (100, 200))
    fine = discord_grid_oracle(rho, (400, 800))
    assert fine <= coarse + 1e-15
    assert coarse - fine < 1e-4
    assert discord(rho, cfg=FAST).discord <= fine + 1e-9


def test_classical_quantum_zero():
    # classical flag on B: measuring B in its flag basis costs nothing
    rho = classical_quantum([0.4, 0.6], [[0, 0, 0.9], [0.5, 0.5, 0]])
    assert abs(discord(rho, cfg=FAST).discord) < 1e-8


def test_fixed_basis_classical_classical():
    cc = classical_classical([0.5, 0.5])
    assert fixed_basis_discord(cc, Povm.computational(2, "B")) == pytest.approx(0, abs=1e-12)
    assert fixed_basis_discord(cc, Povm.from_basis(HADAMARD, "B")) == pytest.approx(1)


@pytest.mark.parametrize("seed", range(4))
def test_fixed_basis_bounds_optimum(seed):
    rho = two_qubit_state(seed)
    r = discord(rho, cfg=FAST)
    for k in range(5):
        basis = Povm.from_basis(random_unitary(2, 100 * seed + k), "B")
        assert fixed_basis_discord(rho, basis) >= r.discord - 1e-10
    assert fixed_basis_discord(rho, r.optimal_basis) == pytest.approx(r.discord, abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_local_unitary_invariance(seed):
    rho = two_qubit_state(seed)
    u = kron(random_unitary(2, seed + 50), random_unitary(2, seed + 60))
    d0 = discord(rho, cfg=FAST).discord
    d1 = discord(rho.conjugate_by(u), cfg=FAST).discord
    assert abs(d0 - d1) < 1e-5


@pytest.mark.parametrize("seed", range(3))
def test_discord_bounds(seed):
    rho = two_qubit_state(seed)
    r = discord(rho, cfg=FAST)
    assert -1e-9 <= r.discord <= r.mutual_info + 1e-9
    assert r.tilde_s_min >= r.cond_entropy - 1e-9
    assert r.discord == pytest.approx(r.tilde_s_min - r.cond_entropy, abs=1e-12)


def test_measuring_a_instead():
    rho = random_density(4, 2, 17, layout=[("A", 2), ("B", 2)])
    d_a = discord(rho, measured="A", cfg=FAST).discord
    assert d_a >= -1e-9
    with pytest.raises(KeyError):
        discord(rho, measured="C")


def test_neumark_matches_projective_for_qubits():
    rho = two_qubit_state(3)
    proj = discord(rho, cfg=FAST).discord
    neu = discord(rho, cfg=OptimizerConfig(starts=8, povm_mode="neumark"))
    assert neu.discord <= proj + 1e-8
    assert abs(neu.discord - proj) < 1e-5
    assert_allclose(sum(neu.optimal_basis.elements), np.eye(2), atol=1e-9)


def test_qutrit_measured_subsystem():
    rho = random_density(6, 6, 4, layout=[("A", 2), ("B", 3)])
    r = discord(rho, cfg=FAST)
    assert -1e-9 <= r.discord <= r.mutual_info + 1e-9
    with pytest.raises(ValueError):
        discord_grid_oracle(rho)


def test_determinism():
    rho = two_qubit_state(9)
    a = discord(rho, cfg=OptimizerConfig(starts=4, seed=5))
    b = discord(rho, cfg=OptimizerConfig(starts=4, seed=5))
    assert a.discord == b.discord
    assert a.best_start == b.best_start
    assert a.optimizer_trace.best_objective_history == b.optimizer_trace.best_objective_history


def test_trace_is_nonincreasing():
    r = discord(two_qubit_state(2), cfg=OptimizerConfig(starts=6))
    hist = r.optimizer_trace.best_objective_history
    assert len(hist) == 6
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert r.converged


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(starts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(povm_mode="magic")
