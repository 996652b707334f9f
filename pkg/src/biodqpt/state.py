"""Pure states as inseparable right/left pairs, observables and measurement.

A state is the pair ``(|psi>, <~psi|)`` with ``<~psi|psi> = 1``; the density
matrix is ``|psi><~psi|``. Populations ``c_n * c~_n`` in an eigenbasis sum to
one but may individually be negative or complex, and measurement
probabilities inherit the same property. Complex values are kept as complex
throughout; nothing here takes a real part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .kernel import DEFAULT_TOL, BiorthEigensystem, as_matrix, biorth_normalize, eig_dense

EIGENSTATE_TOL = 1e-8


@dataclass(frozen=True)
class BiorthState:
    right: np.ndarray
    left: np.ndarray

    def __post_init__(self):
        r = np.array(self.right, dtype=complex)
        l = np.array(self.left, dtype=complex)
        if r.ndim != 1 or r.shape != l.shape:
            raise DimensionMismatch(f"right {r.shape} and left {l.shape} differ")
        r.setflags(write=False)
        l.setflags(write=False)
        object.__setattr__(self, "right", r)
        object.__setattr__(self, "left", l)

    @property
    def dim(self) -> int:
        return self.right.shape[0]

    @property
    def norm(self) -> complex:
        """``<~psi|psi>``; equals one for every state built by :func:`make_state`."""
        return complex(self.left @ self.right)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.right, self.left)


def make_state(right, left, tol: float = DEFAULT_TOL) -> BiorthState:
    """Build a normalized state from a right vector and a left covector.

    Raises ``SelfOrthogonal`` when ``<left|right>`` vanishes.
    """
    r, l = biorth_normalize(right, left, tol)
    return BiorthState(r, l)


def eigenstate(system: BiorthEigensystem, n: int) -> BiorthState:
    return BiorthState(system.rights[:, n], system.lefts[n, :])


@dataclass(frozen=True)
class StateExpansion:
    """Coefficients ``c_n = <~e_n|psi>`` and ``c~_n = <~psi|e_n>``."""

    c: np.ndarray
    c_tilde: np.ndarray

    @property
    def populations(self) -> np.ndarray:
        return self.c * self.c_tilde

    @property
    def total(self) -> complex:
        return complex(np.sum(self.populations))


def _check_dim(n: int, m: int) -> None:
    if n != m:
        raise DimensionMismatch(f"dimension {n} does not match {m}")


def expand_in_basis(state: BiorthState, basis: BiorthEigensystem) -> StateExpansion:
    _check_dim(state.dim, basis.dim)
    return StateExpansion(basis.lefts @ state.right, state.left @ basis.rights)


def reassemble(expansion: StateExpansion, basis: BiorthEigensystem) -> BiorthState:
    """Inverse of :func:`expand_in_basis`."""
    return BiorthState(basis.rights @ expansion.c, expansion.c_tilde @ basis.lefts)


def assemble_from_spectrum(system: BiorthEigensystem) -> np.ndarray:
    """``sum_n E_n |e_n><~e_n|``."""
    return (system.rights * system.energies) @ system.lefts


def expectation(a, state: BiorthState) -> complex:
    """``Tr[A |psi><~psi|] = <~psi|A|psi>``; complex in general."""
    a = as_matrix(a)
    _check_dim(a.shape[0], state.dim)
    return complex(state.left @ a @ state.right)


@dataclass(frozen=True)
class Observable:
    """An operator given by its spectral decomposition ``sum_n a_n |a_n><~a_n|``."""

    system: BiorthEigensystem

    @classmethod
    def from_matrix(cls, a, tol: float = DEFAULT_TOL) -> "Observable":
        return cls(eig_dense(a, tol))

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.system.energies

    @property
    def dim(self) -> int:
        return self.system.dim

    def measurement_operators(self) -> list[np.ndarray]:
        return [self.system.projector(n) for n in range(self.dim)]

    def closure_error(self) -> float:
        """``max |sum_n M_n M_n - I|`` over entries."""
        total = sum(m @ m for m in self.measurement_operators())
        return float(np.max(np.abs(total - np.eye(self.dim))))


@dataclass(frozen=True)
class Outcome:
    value: complex
    probability: complex
    post_state: BiorthState


@dataclass(frozen=True)
class Mixture:
    """Weighted projector list ``sum_n w_n |a_n><~a_n|``.

    Kept as a list so the weights stay exactly the measured probabilities.
    Renormalizing a subset of outcomes is left to the caller.
    """

    weights: tuple[complex, ...]
    states: tuple[BiorthState, ...]

    @property
    def trace(self) -> complex:
        return complex(sum(self.weights))

    def to_matrix(self) -> np.ndarray:
        return sum(w * s.density_matrix() for w, s in zip(self.weights, self.states))


def measure(a: Observable, state: BiorthState) -> list[Outcome]:
    """Projective measurement with ``p_n = <~a_n|psi><~psi|a_n>``.

    The post-measurement state for outcome ``n`` is ``|a_n><~a_n|`` itself.
    """
    _check_dim(a.dim, state.dim)
    sys = a.system
    probs = (sys.lefts @ state.right) * (state.left @ sys.rights)
    return [
        Outcome(complex(sys.energies[n]), complex(probs[n]), BiorthState(sys.rights[:, n], sys.lefts[n, :]))
        for n in range(sys.dim)
    ]


def unread_mixture(outcomes: list[Outcome]) -> Mixture:
    """State after measuring without reading the result."""
    return Mixture(tuple(o.probability for o in outcomes), tuple(o.post_state for o in outcomes))


def verify_eigenstate(state: BiorthState, o, tol: float = EIGENSTATE_TOL) -> complex | None:
    """Return ``lam`` if both ``O|psi> = lam|psi>`` and ``<~psi|O = lam<~psi|``.

    ``tol`` is relative to ``max |O_ij|``. Returns ``None`` when either side
    fails.
    """
    o = as_matrix(o)
    _check_dim(o.shape[0], state.dim)
    lam = complex(state.left @ o @ state.right)
    bound = tol * max(float(np.max(np.abs(o))), 1.0)
    right_ok = np.max(np.abs(o @ state.right - lam * state.right)) <= bound
    left_ok = np.max(np.abs(state.left @ o - lam * state.left)) <= bound
    return lam if right_ok and left_ok else None
