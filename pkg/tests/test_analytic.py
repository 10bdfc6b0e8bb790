import math

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import FIG2, random_state
from rabibell.analytic import (
    BellLabel,
    analytic_evolve,
    analytic_evolved_state,
    analytic_propagator,
    bell_state,
    boson_vacuum,
    cat_state,
    cat_superposition_state,
    coherent_state,
    design_gate,
    displace_rows,
    displacement_operator,
    fock_state,
    gate_map,
    gate_overlaps,
    mixed_boson_revival,
    peak_time,
    phases,
    phi_t,
    revival_state,
    thermal_state,
)
from rabibell.errors import ConvergenceError, DegenerateInputError, InvalidArgumentError
from rabibell.hilbert import StateVector, basis_state, partial_trace_qubits, product_state, unitarity_error
from rabibell.model import SIGMA_X, RabiParams, build_slow_qubit_hamiltonian
from rabibell.numeric import required_cutoff


def generator(alpha, n):
    a = np.diag(np.sqrt(np.arange(1, n)), 1)
    return alpha * a.T - np.conj(alpha) * a


def test_phi_t_and_phases():
    assert phi_t(0.0, 1.0) == 0.0
    assert math.isclose(phi_t(math.pi, 1.0), math.pi)
    ph = phases(peak_time(1, 1.0), FIG2)
    assert math.isclose(ph.phi_l, 65 * math.pi / 4, rel_tol=1e-14)
    assert math.isclose(ph.phi_g, 2 * math.pi * (4 + (65 / 32) ** 2), rel_tol=1e-14)
    with pytest.raises(InvalidArgumentError):
        phases(1.0, FIG2.with_(omega1=0.1))


@pytest.mark.parametrize("alpha", [0.3, 1.2 - 0.7j, 2.5j])
def test_displacement_equals_matrix_exponential(alpha):
    n = 60
    d = displacement_operator(alpha, n).entries
    assert np.allclose(d, expm(generator(alpha, n)), atol=1e-11)
    assert unitarity_error(d) < 1e-12


def test_displacement_inverse():
    d = displacement_operator(0.8 + 0.4j, 40).entries
    dm = displacement_operator(-0.8 - 0.4j, 40).entries
    assert np.allclose(d.conj().T, dm, atol=1e-12)


def test_displacement_of_vacuum_is_coherent():
    n = 60
    alpha = 1.5 - 0.5j
    d0 = displacement_operator(alpha, n).entries[:, 0]
    assert np.allclose(d0, coherent_state(alpha, n).amplitudes, atol=1e-10)


def test_displace_rows_broadcasts():
    n = 30
    rows = np.array([boson_vacuum(n).amplitudes, fock_state(2, n).amplitudes])
    out = displace_rows(np.array([0.5, -0.25j]), rows)
    assert np.allclose(out[0], displacement_operator(0.5, n).entries[:, 0])
    assert np.allclose(out[1], displacement_operator(-0.25j, n).entries[:, 2])


def test_displacement_cutoff_guard():
    with pytest.raises(ConvergenceError) as info:
        displacement_operator(5.0, 30)
    assert info.value.recommended == 85


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0 + 1.0j])
def test_coherent_state_statistics(alpha):
    n = 80
    c = coherent_state(alpha, n).amplitudes
    pops = np.abs(c) ** 2
    assert np.isclose(pops.sum(), 1.0, atol=1e-12)
    assert np.isclose(pops @ np.arange(n), abs(alpha) ** 2, atol=1e-10)
    # Poisson statistics: variance equals the mean.
    mean = pops @ np.arange(n)
    assert np.isclose(pops @ np.arange(n) ** 2 - mean**2, abs(alpha) ** 2, atol=1e-9)
    assert coherent_state(0, 5).amplitudes[0] == 1


@pytest.mark.parametrize("alpha", [0.2, 1.0, 1.7j])
def test_cat_states(alpha):
    n = 40
    even = cat_state(alpha, "even", n).amplitudes
    odd = cat_state(alpha, "odd", n).amplitudes
    assert np.isclose(np.linalg.norm(even), 1.0) and np.isclose(np.linalg.norm(odd), 1.0)
    assert np.allclose(even[1::2], 0) and np.allclose(odd[0::2], 0)
    # Unnormalized norm^2 of |a> + |-a> is 2 (1 + exp(-2|a|^2)).
    c = coherent_state(alpha, n).amplitudes + coherent_state(-alpha, n).amplitudes
    assert np.isclose(np.vdot(c, c).real, 2 * (1 + math.exp(-2 * abs(alpha) ** 2)), atol=1e-12)
    with pytest.raises(DegenerateInputError):
        cat_state(0.0, "odd", n)
    with pytest.raises(InvalidArgumentError):
        cat_state(1.0, "weird", n)


def test_fock_and_thermal_states():
    assert fock_state(3, 5).amplitudes[3] == 1
    with pytest.raises(InvalidArgumentError):
        fock_state(5, 5)
    th = thermal_state(0.5, 40).entries.real
    pops = np.diag(th)
    assert np.isclose(pops.sum(), 1.0)
    assert np.isclose(pops @ np.arange(40), 0.5, atol=1e-6)
    assert np.isclose(pops[1] / pops[0], 1 / 3)


def test_propagator_matches_dense_exponential():
    # Couplings small enough that the low-lying block is unaffected by truncation.
    p = RabiParams(omega=1.0, gamma1=0.3, gamma2=0.15)
    n = 50
    h = build_slow_qubit_hamiltonian(p, n).entries
    rng = np.random.default_rng(7)
    for t in (0.4, 1.7, 5.0):
        u_ref = expm(-1j * t * h)
        u = analytic_propagator(t, p, n).entries
        for _ in range(5):
            boson = np.zeros(n, dtype=complex)
            boson[:4] = random_state(rng, 4)
            psi = product_state(random_state(rng, 4), boson).amplitudes
            fid = abs(np.vdot(u_ref @ psi, u @ psi)) ** 2
            assert fid >= 1 - 1e-8


def test_propagator_unitarity_on_time_grid():
    n = required_cutoff(FIG2).n_max
    for t in np.linspace(0.0, 2 * math.pi, 100)[1::9]:
        assert unitarity_error(analytic_propagator(t, FIG2, n).entries) < 1e-10


def test_evolve_matches_propagator():
    n = 150
    times = np.linspace(0.0, 4 * math.pi, 7)
    rng = np.random.default_rng(3)
    boson = np.zeros(n, dtype=complex)
    boson[:3] = random_state(rng, 3)
    psi0 = product_state(random_state(rng, 4), boson)
    traj = analytic_evolve(psi0, times, FIG2)
    for t, state in zip(times, traj.states):
        ref = analytic_propagator(t, FIG2, n).entries @ psi0.amplitudes
        assert np.allclose(state, ref, atol=1e-11)
    assert np.allclose(traj.norms(), 1.0, atol=1e-12)


def test_entangling_gate_at_revival():
    # At t_n the boson returns and U = exp(i phi_G) exp(i phi_L XX).
    p = RabiParams(omega=1.0, gamma1=0.6, gamma2=0.35)
    n = 30
    for k in (1, 2):
        t = peak_time(k, 1.0)
        ph = phases(t, p)
        xx = np.kron(SIGMA_X, SIGMA_X)
        gate = np.exp(1j * ph.phi_g) * (math.cos(ph.phi_l) * np.eye(4) + 1j * math.sin(ph.phi_l) * xx)
        assert np.allclose(analytic_propagator(t, p, n).entries, np.kron(gate, np.eye(n)), atol=1e-11)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_revivals(k):
    n = 150
    psi = analytic_evolved_state(peak_time(k, 1.0), "gg", FIG2, n)
    expected = product_state(revival_state(k, FIG2), boson_vacuum(n))
    assert abs(expected.overlap(psi)) >= 1 - 1e-10


@pytest.mark.parametrize("n,atol", [(150, 1e-9), (200, 1e-13)])
def test_cat_form_matches_propagator(fig2_params, n, atol):
    # Near the largest displacement the truncation edge differs at ~1e-10
    # for 150 levels; a wider space removes it.
    for t in (0.37, 1.5, 3.0, 2 * math.pi):
        cat = cat_superposition_state(t, fig2_params, n).amplitudes
        ref = analytic_propagator(t, fig2_params, n).entries[:, 0]
        assert np.allclose(cat, ref, atol=atol)
        assert np.isclose(np.linalg.norm(cat), 1.0, atol=1e-12)


def test_small_cutoff_is_rejected():
    times = np.linspace(0.0, 8 * math.pi, 101)
    with pytest.raises(ConvergenceError) as info:
        analytic_evolve(basis_state("gg", 0, 16), times, FIG2)
    need = info.value.recommended
    assert need == required_cutoff(FIG2).n_max == 150
    traj = analytic_evolve(basis_state("gg", 0, need), times, FIG2)
    assert np.max(traj.boson_populations()[:, -15:].sum(axis=1)) < 1e-10


def test_bell_states():
    s = 1 / math.sqrt(2)
    assert np.allclose(bell_state("psi_plus").amplitudes, [s, 0, 0, 1j * s])
    assert np.allclose(bell_state(BellLabel.PHI_MINUS).amplitudes, [0, -1j * s, s, 0])
    gram = np.array([[np.vdot(bell_state(a).amplitudes, bell_state(b).amplitudes)
                      for b in BellLabel] for a in BellLabel])
    assert np.allclose(gram, np.eye(4))


def test_gate_map_parity():
    assert gate_map("gg", 32) is BellLabel.PSI_PLUS
    assert gate_map("gg", 31) is BellLabel.PSI_MINUS
    assert gate_map("eg", 0) is BellLabel.PHI_PLUS
    with pytest.raises(InvalidArgumentError):
        gate_map("xx", 0)


@pytest.mark.parametrize("n,m", [(1, 0), (1, 7), (2, 3), (3, 10)])
def test_designs_realize_their_map(n, m):
    d = design_gate(1.0, 1.0, n, m)
    assert min(gate_overlaps(d, 60).values()) >= 1 - 1e-10


def test_mixed_boson_revival():
    n = 60
    rho_b = thermal_state(0.5, n)
    rho = mixed_boson_revival(rho_b, 1, FIG2.with_(gamma1=0.5, gamma2=0.625), n)
    assert np.allclose(partial_trace_qubits(rho).entries, rho_b.entries, atol=1e-10)
    with pytest.raises(InvalidArgumentError):
        mixed_boson_revival(rho_b, 0, FIG2, n)


def test_state_vector_needs_composite_space():
    with pytest.raises(InvalidArgumentError):
        analytic_evolve(StateVector([1.0, 0.0]), [0.0], FIG2)
