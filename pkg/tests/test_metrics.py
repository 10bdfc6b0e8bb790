import math

import numpy as np
import pytest

from conftest import random_state, random_unitary
from rabibell.analytic import BellLabel, bell_state, thermal_state
from rabibell.errors import InvalidArgumentError
from rabibell.hilbert import DensityMatrix, StateVector, product_density, product_state
from rabibell.metrics import (
    concurrence,
    ensemble_metrics,
    fidelity_to_bell,
    joint_probability,
    purity,
    record,
    trajectory_metrics,
)
from rabibell.numeric import Trajectory

YY = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])


def wootters_reference(rho):
    # Textbook form: sqrt of the eigenvalues of rho (yy) rho* (yy).
    ev = np.linalg.eigvals(rho @ YY @ rho.conj() @ YY)
    lam = np.sort(np.sqrt(np.abs(ev)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def random_mixed(rng, rank=4):
    w = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = w @ w.conj().T
    return rho / np.trace(rho)


def test_bell_states_are_maximally_entangled():
    for label in BellLabel:
        b = bell_state(label).amplitudes
        rho = np.outer(b, b.conj())
        assert math.isclose(concurrence(rho), 1.0, abs_tol=1e-12)
        assert math.isclose(fidelity_to_bell(rho, label), 1.0, abs_tol=1e-12)


def test_product_state_has_zero_concurrence():
    rng = np.random.default_rng(5)
    v = np.kron(random_state(rng, 2), random_state(rng, 2))
    assert concurrence(np.outer(v, v.conj())) <= 1e-12
    assert concurrence(np.eye(4) / 4) == 0.0


@pytest.mark.parametrize("theta", np.linspace(0, math.pi, 7))
def test_sin_two_theta(theta):
    v = np.array([math.cos(theta), 0, 0, 1j * math.sin(theta)])
    assert math.isclose(concurrence(np.outer(v, v.conj())), abs(math.sin(2 * theta)), abs_tol=1e-12)


def test_pure_state_formula():
    rng = np.random.default_rng(6)
    for _ in range(50):
        a, b, c, d = random_state(rng, 4)
        assert math.isclose(concurrence(np.outer([a, b, c, d], np.conj([a, b, c, d]))),
                            2 * abs(a * d - b * c), abs_tol=1e-10)


def test_matches_reference_on_full_rank_states():
    rng = np.random.default_rng(7)
    for _ in range(50):
        rho = random_mixed(rng)
        assert math.isclose(concurrence(rho), wootters_reference(rho), abs_tol=1e-9)


@pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.5, 0.9, 1.0])
def test_werner_states(p):
    b = bell_state("psi_plus").amplitudes
    rho = p * np.outer(b, b.conj()) + (1 - p) * np.eye(4) / 4
    assert math.isclose(concurrence(rho), max(0.0, (3 * p - 1) / 2), abs_tol=1e-12)
    assert math.isclose(purity(rho), (1 + 3 * p * p) / 4, abs_tol=1e-12)


def test_local_unitary_invariance():
    rng = np.random.default_rng(8)
    for _ in range(20):
        rho = random_mixed(rng, rank=2)
        u = np.kron(random_unitary(rng, 2), random_unitary(rng, 2))
        assert math.isclose(concurrence(u @ rho @ u.conj().T), concurrence(rho), abs_tol=1e-10)


def test_metric_inputs():
    with pytest.raises(InvalidArgumentError):
        concurrence(np.eye(3) / 3)
    v = bell_state("phi_plus")
    assert math.isclose(concurrence(v), 1.0, abs_tol=1e-12)


def test_record_of_bell_product():
    n = 4
    psi = product_state(bell_state("psi_minus"), np.eye(n)[0])
    rec = record(psi, t_delta=1.0)
    assert set(rec.joint_probs) == {("gg", 0), ("ee", 0)}
    assert math.isclose(rec.joint_probs[("gg", 0)], 0.5)
    assert math.isclose(rec.purity_q, 1.0)
    assert math.isclose(rec.fidelity[BellLabel.PSI_MINUS], 1.0)
    assert math.isclose(rec.parity_expectation, 1.0)
    rec_rho = record(DensityMatrix.from_state(psi))
    assert math.isclose(rec_rho.concurrence, rec.concurrence, abs_tol=1e-12)
    assert math.isclose(joint_probability(psi, "ee", 0), 0.5)
    with pytest.raises(InvalidArgumentError):
        joint_probability(StateVector([1.0, 0.0]), "gg", 0)


def test_ensemble_equals_density_metrics():
    n = 5
    rng = np.random.default_rng(9)
    kets = [product_state(random_state(rng, 4), random_state(rng, n)) for _ in range(3)]
    weights = [0.5, 0.3, 0.2]
    members = [(w, Trajectory([0.0], k.amplitudes[None, :], (2, 2, n))) for w, k in zip(weights, kets)]
    rho = sum(w * np.outer(k.amplitudes, k.amplitudes.conj()) for w, k in zip(weights, kets))
    dense = trajectory_metrics(Trajectory([0.0], rho[None], (2, 2, n)))
    mixed = ensemble_metrics(members)
    for key in dense:
        assert np.allclose(dense[key], mixed[key], atol=1e-12), key


def test_thermal_product_metrics():
    n = 30
    rho = product_density(np.diag([1.0, 0, 0, 0]), thermal_state(0.5, n))
    cols = trajectory_metrics(Trajectory([0.0], rho.entries[None], (2, 2, n)))
    assert math.isclose(cols["P_gg_0"][0], 1 / 1.5, rel_tol=1e-6)
    assert math.isclose(cols["purity_q"][0], 1.0)
