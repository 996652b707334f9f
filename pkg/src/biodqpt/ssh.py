"""Non-Hermitian SSH chain in momentum space.

Each Bloch block is ``H_k = d_k . sigma`` with

    d_k = (1 + q cos k, -q sin k, i eta),   d_k = sqrt(|1 + q e^{ik}|^2 - eta^2)

in units where the intracell hopping is one. Component 0 of every vector is
the A sublattice, component 1 the B sublattice.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ExceptionalPoint, GaugeSingular
from .kernel import principal_sqrt, principal_sqrt_array
from .state import BiorthState, make_state

BOUNDARY_TOL = 1e-12
EP_TOL = 1e-12
GAUGE_TOL = 1e-8

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class SSHParams:
    q: float
    eta: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.eta)):
            raise ValueError(f"non-finite SSH parameters {self}")


@dataclass(frozen=True)
class BlochVector:
    dx: complex
    dy: complex
    dz: complex
    d: complex

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz])


class PhaseLabel(enum.Enum):
    PT_SYMMETRIC_ALPHA = "PTSymmetricAlpha"
    PT_SYMMETRIC_BETA = "PTSymmetricBeta"
    BROKEN_PHASE_I = "BrokenPhaseI"
    BROKEN_PHASE_II = "BrokenPhaseII"
    CRITICAL_BOUNDARY = "CriticalBoundary"

    @property
    def is_pt_symmetric(self) -> bool:
        return self in (PhaseLabel.PT_SYMMETRIC_ALPHA, PhaseLabel.PT_SYMMETRIC_BETA)


class ModeType(enum.Enum):
    REAL_ENERGY = "RealEnergy"
    IMAGINARY_ENERGY = "ImaginaryEnergy"
    EXCEPTIONAL_POINT = "ExceptionalPoint"


@dataclass(frozen=True)
class MomentumGrid:
    """Momenta in ``[0, pi]`` with quadrature weights for the half zone.

    ``midpoint`` grids put ``M`` nodes at the cell centres (the periodic
    trapezoid rule on the full zone, never touching ``0`` or ``pi``);
    ``inclusive`` grids include both endpoints and carry trapezoid weights.
    """

    ks: np.ndarray
    weights: np.ndarray
    kind: str

    @classmethod
    def midpoint(cls, m: int) -> "MomentumGrid":
        if m < 1:
            raise ValueError("grid needs at least one point")
        step = math.pi / m
        ks = (np.arange(m) + 0.5) * step
        return cls(ks, np.full(m, step), "midpoint")

    @classmethod
    def inclusive(cls, m: int) -> "MomentumGrid":
        if m < 2:
            raise ValueError("inclusive grid needs at least two points")
        ks = np.linspace(0.0, math.pi, m)
        w = np.full(m, ks[1] - ks[0])
        w[0] = w[-1] = 0.5 * w[0]
        return cls(ks, w, "inclusive")

    @property
    def size(self) -> int:
        return len(self.ks)

    @property
    def step(self) -> float:
        return float(self.ks[1] - self.ks[0]) if self.size > 1 else math.pi


def hopping_modulus_sq(p: SSHParams, k):
    """``|1 + q e^{ik}|^2``."""
    return (1.0 + p.q * np.cos(k)) ** 2 + (p.q * np.sin(k)) ** 2


def bloch_vector(p: SSHParams, k: float) -> BlochVector:
    dx = 1.0 + p.q * math.cos(k)
    dy = -p.q * math.sin(k)
    d_sq = float(hopping_modulus_sq(p, k)) - p.eta**2
    return BlochVector(complex(dx), complex(dy), complex(0.0, p.eta), principal_sqrt(complex(d_sq, 0.0)))


def bloch_arrays(p: SSHParams, ks) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised :func:`bloch_vector`: ``(dx, dy, dz, d)`` arrays."""
    ks = np.asarray(ks, dtype=float)
    dx = (1.0 + p.q * np.cos(ks)).astype(complex)
    dy = (-p.q * np.sin(ks)).astype(complex)
    dz = np.full(ks.shape, complex(0.0, p.eta))
    d = principal_sqrt_array(hopping_modulus_sq(p, ks) - p.eta**2 + 0j)
    return dx, dy, dz, d


def build_hk(p: SSHParams, k: float) -> np.ndarray:
    """``[[i eta, 1 + q e^{ik}], [1 + q e^{-ik}, -i eta]]``."""
    off = 1.0 + p.q * np.exp(1j * k)
    return np.array([[1j * p.eta, off], [np.conj(off), -1j * p.eta]], dtype=complex)


def band_energies(p: SSHParams, ks) -> tuple[np.ndarray, np.ndarray]:
    d = bloch_arrays(p, ks)[3]
    return d, -d


@dataclass(frozen=True)
class BandPairs:
    plus: tuple[np.ndarray, np.ndarray]
    minus: tuple[np.ndarray, np.ndarray]


def band_eigenpairs(v: BlochVector, gauge: str = "standard") -> BandPairs:
    """Closed-form biorthonormal eigenpairs of ``d . sigma``.

    The standard gauge normalizes by ``sqrt(2 (1 + dz/d))``. When that factor
    vanishes use ``gauge="alternate"``, built on ``1 - dz/d``, or
    ``gauge="auto"`` to switch automatically.

    Raises
    ------
    ExceptionalPoint
        ``|d| <= 1e-12``.
    GaugeSingular
        Standard gauge requested with ``|1 + dz/d| < 1e-8``.
    """
    if abs(v.d) <= EP_TOL:
        raise ExceptionalPoint(f"band energy |d| = {abs(v.d):.3e} at an exceptional point")
    ux, uy, uz = v.dx / v.d, v.dy / v.d, v.dz / v.d
    if gauge == "auto":
        gauge = "standard" if abs(1.0 + uz) >= GAUGE_TOL else "alternate"
    if gauge == "standard":
        a = 1.0 + uz
        if abs(a) < GAUGE_TOL:
            raise GaugeSingular(f"|1 + dz/d| = {abs(a):.3e}; use the alternate gauge")
        norm = principal_sqrt(2.0 * a)
        plus = (np.array([a, ux + 1j * uy]) / norm, np.array([a, ux - 1j * uy]) / norm)
        minus = (np.array([-ux + 1j * uy, a]) / norm, np.array([-ux - 1j * uy, a]) / norm)
    elif gauge == "alternate":
        b = 1.0 - uz
        norm = principal_sqrt(2.0 * b)
        plus = (np.array([ux - 1j * uy, b]) / norm, np.array([ux + 1j * uy, b]) / norm)
        minus = (np.array([b, -(ux + 1j * uy)]) / norm, np.array([b, -(ux - 1j * uy)]) / norm)
    else:
        raise ValueError(f"unknown gauge {gauge!r}")
    return BandPairs(plus, minus)


def ground_state(p: SSHParams, k: float) -> BiorthState:
    """Lower-band state ``(|e_k^->, <~e_k^-|)``, switching gauge when needed."""
    r, l = band_eigenpairs(bloch_vector(p, k), gauge="auto").minus
    return make_state(r, l)


def classify_phase(p: SSHParams) -> PhaseLabel:
    """PT phase of ``(q, eta)``.

    The smallest and largest values of ``|1 + q e^{ik}|`` over the zone are
    ``|1 - |q||`` and ``1 + |q|``; below the first every mode is real, above
    the second every mode is imaginary. The two PT-symmetric regions are
    told apart by ``|q| < 1`` (alpha) and ``|q| > 1`` (beta).
    """
    eta = abs(p.eta)
    low = abs(1.0 - abs(p.q))
    high = 1.0 + abs(p.q)
    if abs(eta - low) <= BOUNDARY_TOL or abs(eta - high) <= BOUNDARY_TOL:
        return PhaseLabel.CRITICAL_BOUNDARY
    if eta < low:
        return PhaseLabel.PT_SYMMETRIC_ALPHA if abs(p.q) < 1.0 else PhaseLabel.PT_SYMMETRIC_BETA
    if eta > high:
        return PhaseLabel.BROKEN_PHASE_I
    return PhaseLabel.BROKEN_PHASE_II


def classify_mode(p: SSHParams, k: float) -> ModeType:
    gap = float(hopping_modulus_sq(p, k)) - p.eta**2
    if abs(gap) <= EP_TOL:
        return ModeType.EXCEPTIONAL_POINT
    return ModeType.REAL_ENERGY if gap > 0 else ModeType.IMAGINARY_ENERGY


def exceptional_momentum(p: SSHParams) -> float | None:
    """Momentum in ``[0, pi]`` where ``|1 + q e^{ik}| = |eta|``, if any."""
    if p.q == 0.0:
        return None
    c = (p.eta**2 - 1.0 - p.q**2) / (2.0 * p.q)
    if -1.0 - BOUNDARY_TOL <= c <= 1.0 + BOUNDARY_TOL:
        return math.acos(min(1.0, max(-1.0, c)))
    return None
