import math

import numpy as np
import pytest

from biodqpt.dynamics import (
    ParamPath,
    adiabatic_phases,
    dynamical_phase_trapezoid,
    evolve,
    geometric_phase_from_trajectory,
    loschmidt_amplitude,
    loschmidt_echo,
    phase_decomposition,
    total_phase,
    trajectory,
)
from biodqpt.errors import DimensionMismatch
from biodqpt.kernel import eig_dense, expm_apply, spectral_apply
from biodqpt.ssh import SSHParams, build_hk
from biodqpt.state import make_state
from conftest import random_matrix, random_vector


def _state(rng, n):
    return make_state(random_vector(rng, n), random_vector(rng, n))


def associated_left(system, right, t):
    """Left vector built from conjugated coefficients: sum_n <~e_n| exp(i E_n* t) c_n*."""
    c = system.lefts @ right
    return (np.conj(c) * np.exp(1j * np.conj(system.energies) * t)) @ system.lefts


def test_evolution_matches_expm_on_both_halves(rng):
    for n in (2, 3, 5):
        h = random_matrix(rng, n, 0.5)
        s = _state(rng, n)
        sys = eig_dense(h)
        for t in (0.3, 1.7):
            st = evolve(s, sys, t)
            assert np.max(np.abs(st.right - expm_apply(h, 1j * t, s.right))) < 1e-9
            assert np.max(np.abs(st.left - expm_apply(h.T, -1j * t, s.left))) < 1e-9


def test_trace_is_preserved(rng):
    h = random_matrix(rng, 4, 0.5)
    s = _state(rng, 4)
    sys = eig_dense(h)
    for t in np.linspace(0, 3, 7):
        assert abs(evolve(s, sys, t).norm - 1) < 1e-9


def test_composition(rng):
    h = random_matrix(rng, 3, 0.5)
    sys = eig_dense(h)
    s = _state(rng, 3)
    a = evolve(evolve(s, sys, 0.4), sys, 0.9)
    b = evolve(s, sys, 1.3)
    assert np.allclose(a.right, b.right, atol=1e-10)
    assert np.allclose(a.left, b.left, atol=1e-10)


def test_left_vector_obeys_schrodinger_equation(rng):
    # d/dt <~psi(t)| = <~psi(t)| i H, checked by central differences
    h = random_matrix(rng, 2, 0.5)
    sys = eig_dense(h)
    s = _state(rng, 2)
    t, dt = 0.8, 1e-5
    deriv = (evolve(s, sys, t + dt).left - evolve(s, sys, t - dt).left) / (2 * dt)
    assert np.max(np.abs(deriv - evolve(s, sys, t).left @ (1j * h))) < 1e-8


def test_conjugated_coefficient_left_vector_breaks_schrodinger_equation():
    h = np.array([[0.3 + 0.5j, 1.0], [0.4, -0.2 - 0.3j]])
    sys = eig_dense(h)
    assert np.max(np.abs(sys.energies.imag)) > 0.1
    right = np.array([1.0, 0.5j])
    t = 1.0
    wrong = associated_left(sys, right, t)
    expected = associated_left(sys, right, 0) @ (sys.rights @ np.diag(np.exp(1j * sys.energies * t)) @ sys.lefts)
    assert np.max(np.abs(wrong - expected)) >= 1e-3


def test_amplitude_and_echo_consistency(rng):
    h = random_matrix(rng, 3, 0.5)
    sys = eig_dense(h)
    s = _state(rng, 3)
    t = 0.9
    st = evolve(s, sys, t)
    assert abs(loschmidt_amplitude(s, sys, t) - s.left @ st.right) < 1e-12
    assert abs(loschmidt_echo(s, sys, t) - (s.left @ st.right) * (st.left @ s.right)) < 1e-12
    with pytest.raises(DimensionMismatch):
        loschmidt_amplitude(_state(rng, 2), sys, t)


def test_eigenstate_has_no_geometric_phase(rng):
    h = random_matrix(rng, 3, 0.5)
    sys = eig_dense(h)
    s = make_state(sys.rights[:, 1], sys.lefts[1])
    recs = phase_decomposition(s, ParamPath.constant(h, np.linspace(0, 2, 41)))
    for r in recs:
        assert abs(r.phi_geo - round(r.phi_geo.real / (2 * math.pi)) * 2 * math.pi) < 1e-9


def test_constant_path_dynamical_phase_closed_form(rng):
    h = random_matrix(rng, 2, 0.5)
    s = _state(rng, 2)
    times = np.linspace(0, 1.5, 31)
    recs = phase_decomposition(s, ParamPath.constant(h, times))
    e = s.left @ h @ s.right
    assert max(abs(r.phi_dyn + r.t * e) for r in recs) < 1e-12
    assert all(r.valid for r in recs)


def test_total_phase_of_unit_amplitude():
    assert abs(total_phase(np.exp(-0.3j), 1.0) - (-0.3)) < 1e-15


def _driven(t):
    return np.array([[0.2j + 0.5 * np.cos(t), 1.0], [0.7 + 0.3 * t, -0.4j]])


def test_geometric_phase_gauge_invariance(rng):
    times = np.arange(0, 1.5 + 1e-12, 1e-3)
    path = ParamPath.from_function(_driven, times)
    s = _state(rng, 2)
    rights, lefts = trajectory(s, path)
    gauge = np.exp(0.4j * np.sin(2 * times) + 0.3 * times**2 + 0.2j)
    base = geometric_phase_from_trajectory(times, rights, lefts)
    moved = geometric_phase_from_trajectory(times, rights * gauge[:, None], lefts / gauge[:, None])
    assert np.max(np.abs(base[2] - moved[2])) < 1e-6
    assert np.max(np.abs(base[0] - moved[0])) > 0.1


def test_stepping_is_exact_for_commuting_linear_ramp(rng):
    # H(t) = (1 + t/2) H0 integrates to exp(-i H0 (t + t^2/4)); midpoint steps are exact here
    h0 = random_matrix(rng, 2, 0.5)
    times = np.linspace(0, 1, 101)
    s = _state(rng, 2)
    rights, lefts = trajectory(s, ParamPath.from_function(lambda t: (1 + 0.5 * t) * h0, times))
    sys = eig_dense(h0)
    for j in (50, 100):
        tau = times[j] + times[j] ** 2 / 4
        assert np.max(np.abs(rights[j] - spectral_apply(sys, 1j * tau, s.right))) < 1e-9
        assert np.max(np.abs(lefts[j] @ rights[j] - 1)) < 1e-12


def test_trajectory_preserves_trace_for_driven_path(rng):
    times = np.linspace(0, 2, 2001)
    path = ParamPath.from_function(_driven, times)
    rights, lefts = trajectory(_state(rng, 2), path)
    assert np.max(np.abs(np.einsum("ti,ti->t", lefts, rights) - 1)) < 1e-9


def _zak(q):
    ks = np.linspace(0, 2 * math.pi, 2001)
    path = ParamPath.from_function(lambda k: build_hk(SSHParams(q, 0.0), k), ks)
    return adiabatic_phases(0, path).gamma


@pytest.mark.parametrize("q, expected", [(0.5, 0.0), (2.0, math.pi)])
def test_zak_phase_hermitian_limit(q, expected):
    gamma = _zak(q)
    wrapped = (gamma.real - expected + math.pi) % (2 * math.pi) - math.pi
    assert abs(wrapped) < 2e-2
    assert abs(gamma.imag) < 2e-2


def test_adiabatic_dynamical_phase_of_constant_path(rng):
    h = random_matrix(rng, 2, 0.5)
    times = np.linspace(0, 2, 201)
    ph = adiabatic_phases(0, ParamPath.constant(h, times))
    assert abs(ph.phi - 2 * eig_dense(h).energies[0]) < 1e-10
    assert abs(ph.gamma) < 1e-10


def test_connection_phase_matches_hamiltonian_form(rng):
    times = np.arange(0, 1.0 + 1e-12, 1e-3)
    path = ParamPath.from_function(_driven, times)
    rights, lefts = trajectory(_state(rng, 2), path)
    from_connection = geometric_phase_from_trajectory(times, rights, lefts)[1]
    from_energy = dynamical_phase_trapezoid(times, rights, lefts, path.hamiltonians)
    # two second-order rules for the same integral; they differ at O(dt^2)
    assert np.max(np.abs(from_connection - from_energy)) < 1e-5
