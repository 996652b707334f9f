"""Non-unitary evolution of right and left vectors and the phases built on it.

Both halves of a state obey a Schrödinger equation::

    d/dt |psi(t)>  = -i H |psi(t)>
    d/dt <~psi(t)| =  i <~psi(t)| H

so ``<~psi(t)|psi(t)>`` stays equal to one even though ``exp(-iHt)`` is not
unitary. From the amplitude ``G(t) = <~psi(0)|psi(t)>`` and the echo
``L(t) = <~psi(0)|psi(t)><~psi(t)|psi(0)>`` we build the complex total phase,
the dynamical phase and their gauge-invariant difference (the Pancharatnam
phase).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EchoZero, NearDefective
from .kernel import BiorthEigensystem, as_matrix, eig_dense, expm_apply, principal_sqrt
from .state import BiorthState

ECHO_ZERO = 1e-14
DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class PhaseRecord:
    """Phases at one time sample.

    ``valid`` is False where the echo vanished; the phase fields are then
    ``None``.
    """

    t: float
    amplitude: complex
    reverse_amplitude: complex
    echo: complex
    phi_tot: complex | None
    phi_dyn: complex | None
    phi_geo: complex | None
    valid: bool = True


@dataclass(frozen=True)
class ParamPath:
    """Samples ``(t_j, H(t_j))`` of a time-dependent Hamiltonian on a uniform grid."""

    times: np.ndarray
    hamiltonians: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        h = np.array(self.hamiltonians, dtype=complex)
        if t.ndim != 1 or len(t) < 1:
            raise ValueError("times must be a non-empty 1-d array")
        if h.ndim != 3 or h.shape[0] != len(t) or h.shape[1] != h.shape[2]:
            raise DimensionMismatch(f"hamiltonians shape {h.shape} does not match {len(t)} times")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(h))):
            raise ValueError("path has non-finite entries")
        t.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "hamiltonians", h)

    @classmethod
    def constant(cls, h, times) -> "ParamPath":
        h = as_matrix(h)
        times = np.asarray(times, dtype=float)
        return cls(times, np.broadcast_to(h, (len(times),) + h.shape))

    @classmethod
    def from_function(cls, func, times) -> "ParamPath":
        times = np.asarray(times, dtype=float)
        return cls(times, np.array([as_matrix(func(t)) for t in times]))

    @property
    def dim(self) -> int:
        return self.hamiltonians.shape[1]

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.hamiltonians == self.hamiltonians[0]))

    @property
    def is_closed(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.hamiltonians[0]))))
        return bool(np.max(np.abs(self.hamiltonians[-1] - self.hamiltonians[0])) <= 1e-10 * scale)


def _check(state: BiorthState, n: int) -> None:
    if state.dim != n:
        raise DimensionMismatch(f"state of dimension {state.dim} against operator of dimension {n}")


def evolve(state: BiorthState, system: BiorthEigensystem, t: float) -> BiorthState:
    """Evolve both halves of ``state`` for time ``t`` under the spectral ``system``."""
    _check(state, system.dim)
    c = system.lefts @ state.right
    c_tilde = state.left @ system.rights
    phase = np.exp(-1j * system.energies * t)
    return BiorthState(system.rights @ (c * phase), (c_tilde / phase) @ system.lefts)


def loschmidt_amplitude(state0: BiorthState, system: BiorthEigensystem, t: float) -> complex:
    """``G(t) = <~psi(0)|exp(-iHt)|psi(0)> = sum_n c_n c~_n exp(-i E_n t)``."""
    _check(state0, system.dim)
    pops = (system.lefts @ state0.right) * (state0.left @ system.rights)
    return complex(np.sum(pops * np.exp(-1j * system.energies * t)))


def loschmidt_echo(state0: BiorthState, system: BiorthEigensystem, t: float) -> complex:
    """``L(t) = <~psi(0)|psi(t)><~psi(t)|psi(0)>``; complex in general."""
    st = evolve(state0, system, t)
    return complex((state0.left @ st.right) * (st.left @ state0.right))


def total_phase(amplitude: complex, echo: complex) -> complex:
    """``-i log(G / sqrt(L))`` with principal log and principal square root."""
    return -1j * cmath.log(amplitude / principal_sqrt(echo))


def unwrap_real(values, valid=None) -> np.ndarray:
    """Nearest-branch continuation of the real parts, skipping invalid samples."""
    vals = np.array(values, dtype=complex)
    mask = np.ones(len(vals), dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    if mask.any():
        idx = np.flatnonzero(mask)
        re = np.unwrap(vals.real[idx])
        vals[idx] = re + 1j * vals.imag[idx]
    return vals


def trajectory(state0: BiorthState, path: ParamPath) -> tuple[np.ndarray, np.ndarray]:
    """Right vectors and left covectors at every path sample.

    A constant path is evolved spectrally; otherwise each step uses the
    exponential of the midpoint Hamiltonian on both halves.
    """
    _check(state0, path.dim)
    n_t = len(path.times)
    rights = np.empty((n_t, path.dim), dtype=complex)
    lefts = np.empty((n_t, path.dim), dtype=complex)
    if path.is_constant:
        system = eig_dense(path.hamiltonians[0])
        tau = path.times - path.times[0]
        c = system.lefts @ state0.right
        c_tilde = state0.left @ system.rights
        phase = np.exp(-1j * np.outer(tau, system.energies))
        rights[:] = (c * phase) @ system.rights.T
        lefts[:] = (c_tilde / phase) @ system.lefts
        return rights, lefts
    rights[0], lefts[0] = state0.right, state0.left
    for j in range(n_t - 1):
        dt = path.times[j + 1] - path.times[j]
        h_mid = 0.5 * (path.hamiltonians[j] + path.hamiltonians[j + 1])
        rights[j + 1] = expm_apply(h_mid, 1j * dt, rights[j])
        lefts[j + 1] = expm_apply(h_mid.T, -1j * dt, lefts[j])
    return rights, lefts


def dynamical_phase_trapezoid(times, rights, lefts, hamiltonians) -> np.ndarray:
    """``-int_0^t <~psi|H|psi> dt'`` by the trapezoid rule on the sample grid."""
    energy = np.einsum("ti,tij,tj->t", lefts, hamiltonians, rights)
    out = np.zeros(len(times), dtype=complex)
    out[1:] = -np.cumsum(0.5 * (energy[1:] + energy[:-1]) * np.diff(times))
    return out


def _records(times, amp, rev, strict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    echo = amp * rev
    valid = np.abs(echo) >= ECHO_ZERO
    if strict and not valid.all():
        t_bad = times[np.argmin(valid)]
        raise EchoZero(f"Loschmidt echo vanishes at t = {t_bad:.6g}")
    phi_tot = np.zeros(len(times), dtype=complex)
    for j in np.flatnonzero(valid):
        phi_tot[j] = total_phase(amp[j], echo[j])
    return echo, unwrap_real(phi_tot, valid), valid


def geometric_phase_from_trajectory(times, rights, lefts, strict: bool = False):
    """Total, dynamical and geometric phases of an arbitrary trajectory.

    Here the dynamical phase is ``-i int <~psi|d/dt psi> dt``, accumulated
    step by step as ``-(i/2) [log <~psi_j|psi_j+1> - log <~psi_j+1|psi_j>]``
    (second order in the step). Unlike the Hamiltonian form this responds to
    a time-dependent gauge, and since a gauge factor telescopes through the
    sum exactly, the geometric phase is gauge invariant up to rounding.

    Returns ``(phi_tot, phi_dyn, phi_geo, valid)`` arrays.
    """
    times = np.asarray(times, dtype=float)
    rights = np.asarray(rights, dtype=complex)
    lefts = np.asarray(lefts, dtype=complex)
    amp = rights @ lefts[0]
    rev = lefts @ rights[0]
    _, phi_tot, valid = _records(times, amp, rev, strict)
    forward = np.einsum("ti,ti->t", lefts[:-1], rights[1:])
    backward = np.einsum("ti,ti->t", lefts[1:], rights[:-1])
    phi_dyn = np.zeros(len(times), dtype=complex)
    phi_dyn[1:] = -0.5j * np.cumsum(np.log(forward) - np.log(backward))
    return phi_tot, phi_dyn, phi_tot - phi_dyn, valid


def phase_decomposition(state0: BiorthState, path: ParamPath, strict: bool = False) -> list[PhaseRecord]:
    """Total, dynamical and Pancharatnam phases along ``path``.

    For a constant path the dynamical phase uses the closed form
    ``-t <~psi(0)|H|psi(0)>`` (the energy expectation is conserved);
    otherwise it is integrated with the trapezoid rule. The real part of the
    total phase is continued across samples to the nearest branch.

    With ``strict=True`` a vanishing echo raises :class:`EchoZero`; by default
    such samples come back with ``valid=False``.
    """
    _check(state0, path.dim)
    rights, lefts = trajectory(state0, path)
    times = path.times
    amp = rights @ state0.left
    rev = lefts @ state0.right
    echo, phi_tot, valid = _records(times, amp, rev, strict)
    if path.is_constant:
        energy = complex(state0.left @ path.hamiltonians[0] @ state0.right)
        phi_dyn = -(times - times[0]) * energy
    else:
        phi_dyn = dynamical_phase_trapezoid(times, rights, lefts, path.hamiltonians)
    out = []
    for j, t in enumerate(times):
        if valid[j]:
            out.append(PhaseRecord(float(t), complex(amp[j]), complex(rev[j]), complex(echo[j]),
                                   complex(phi_tot[j]), complex(phi_dyn[j]),
                                   complex(phi_tot[j] - phi_dyn[j])))
        else:
            out.append(PhaseRecord(float(t), complex(amp[j]), complex(rev[j]), complex(echo[j]),
                                   None, None, None, valid=False))
    return out


@dataclass(frozen=True)
class AdiabaticPhases:
    phi: complex
    gamma: complex
    adiabaticity: float
    """Largest ``|<~e_m|dH/dt|e_n> / (E_m - E_n)|`` over samples and ``m != n``."""


def _track_band(systems: list[BiorthEigensystem], band: int) -> list[int]:
    idx = [band]
    for prev, cur in zip(systems[:-1], systems[1:]):
        dist = np.abs(cur.energies - prev.energies[idx[-1]])
        order = np.argsort(dist)
        if len(order) > 1 and dist[order[1]] < 2.0 * dist[order[0]]:
            raise NearDefective("band tracking is ambiguous between neighbouring samples")
        idx.append(int(order[0]))
    return idx


def adiabatic_phases(band: int, path: ParamPath) -> AdiabaticPhases:
    """Dynamical phase ``int E_n dt`` and Berry-like phase ``i int <~e_n|d/dt e_n> dt``.

    ``band`` indexes the eigenvalues of the first sample (sorted by real then
    imaginary part) and is followed by eigenvalue continuity. Eigenvectors
    are phase-aligned to the previous sample; on a closed path the leftover
    mismatch is spread smoothly along the path so the gauge is single valued.
    """
    systems = [eig_dense(h) for h in path.hamiltonians]
    idx = _track_band(systems, band)
    times = path.times
    n_t = len(times)
    energies = np.array([s.energies[i] for s, i in zip(systems, idx)])
    rights = np.array([s.rights[:, i] for s, i in zip(systems, idx)])
    lefts = np.array([s.lefts[i, :] for s, i in zip(systems, idx)])
    for j in range(1, n_t):
        ov = lefts[j - 1] @ rights[j]
        u = abs(ov) / ov if ov != 0 else 1.0
        rights[j] *= u
        lefts[j] /= u
    if n_t > 1 and path.is_closed:
        log_c = cmath.log(lefts[0] @ rights[-1])
        s = (times - times[0]) / (times[-1] - times[0])
        rights *= np.exp(-s * log_c)[:, None]
        lefts *= np.exp(s * log_c)[:, None]
    if n_t > 2:
        deriv = np.gradient(rights, times, axis=0, edge_order=2)
        integrand = np.einsum("ti,ti->t", lefts, deriv)
        gamma = 1j * np.trapezoid(integrand, times)
        phi = np.trapezoid(energies, times)
        h_dot = np.gradient(path.hamiltonians, times, axis=0, edge_order=2)
    else:
        gamma = 0j
        phi = 0j if n_t == 1 else 0.5 * (energies[0] + energies[1]) * (times[1] - times[0])
        h_dot = np.zeros_like(path.hamiltonians)
    worst = 0.0
    for j, (s, i) in enumerate(zip(systems, idx)):
        for m in range(s.dim):
            if m == i:
                continue
            num = s.lefts[m, :] @ h_dot[j] @ s.rights[:, i]
            worst = max(worst, float(abs(num / (s.energies[m] - s.energies[i]))))
    return AdiabaticPhases(complex(phi), complex(gamma), worst)
