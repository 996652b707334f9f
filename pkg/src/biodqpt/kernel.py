"""Small dense complex linear algebra for non-Hermitian matrices.

The eigensolver is written out explicitly (Householder reduction to upper
Hessenberg form followed by single-shift complex QR) so that the pairing of
right eigenvectors with left covectors is under our control. Left covectors
are computed independently as right eigenvectors of ``H.T`` and matched to
the right eigenvalues; every pair is then rescaled so that
``left @ right == 1``.

Conventions
-----------
* A *vector* ``|v>`` is a 1-d complex array. A *covector* ``<w|`` is also a
  1-d complex array, and the pairing ``<w|v>`` is the plain product
  ``w @ v`` (no complex conjugation).
* ``rights[:, n]`` holds ``|e_n>`` and ``lefts[n, :]`` holds ``<~e_n|``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NearDefective, NoConvergence, SelfOrthogonal

DEFAULT_TOL = 1e-10
EXPM_TOL = 1e-12

_EPS = np.finfo(float).eps


def principal_sqrt(z: complex) -> complex:
    """Square root with ``Re(w) >= 0`` and, on the imaginary axis, ``Im(w) >= 0``.

    ``cmath.sqrt`` honours the sign of a zero imaginary part, so
    ``sqrt(complex(-1, -0.0))`` is ``-1j``. Here that case maps to ``+1j``.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"principal_sqrt needs a finite argument, got {z!r}")
    w = cmath.sqrt(z)
    if w.real == 0.0:
        return complex(0.0, abs(w.imag))
    return w


def principal_sqrt_array(z: np.ndarray) -> np.ndarray:
    """Vectorised :func:`principal_sqrt`."""
    w = np.sqrt(np.asarray(z, dtype=complex))
    on_axis = w.real == 0.0
    if np.any(on_axis):
        w = np.where(on_axis, 1j * np.abs(w.imag), w)
    return w


def as_matrix(h) -> np.ndarray:
    a = np.array(h, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BiorthEigensystem:
    """Eigenvalues with paired right eigenvectors and left covectors.

    Attributes
    ----------
    energies : ndarray, shape (n,)
        Eigenvalues, sorted by real part then imaginary part.
    rights : ndarray, shape (n, n)
        Column ``n`` is the right eigenvector belonging to ``energies[n]``.
    lefts : ndarray, shape (n, n)
        Row ``n`` is the left covector belonging to ``energies[n]``.
    tolerance : float
        Bound used by :meth:`check`.
    """

    energies: np.ndarray
    rights: np.ndarray
    lefts: np.ndarray
    tolerance: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "energies", _frozen(self.energies))
        object.__setattr__(self, "rights", _frozen(self.rights))
        object.__setattr__(self, "lefts", _frozen(self.lefts))
        n = self.energies.shape[0]
        if self.rights.shape != (n, n) or self.lefts.shape != (n, n):
            raise DimensionMismatch("energies, rights and lefts disagree in size")

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def right(self, n: int) -> np.ndarray:
        return self.rights[:, n]

    def left(self, n: int) -> np.ndarray:
        return self.lefts[n, :]

    def projector(self, n: int) -> np.ndarray:
        return np.outer(self.rights[:, n], self.lefts[n, :])

    def biorthonormality_error(self) -> float:
        return float(np.max(np.abs(self.lefts @ self.rights - np.eye(self.dim))))

    def completeness_error(self) -> float:
        return float(np.max(np.abs(self.rights @ self.lefts - np.eye(self.dim))))

    def reconstruction_error(self, h) -> float:
        rebuilt = (self.rights * self.energies) @ self.lefts
        return float(np.max(np.abs(rebuilt - np.asarray(h))))

    def check(self, h=None) -> dict[str, bool]:
        """Evaluate the three structural invariants at ``self.tolerance``."""
        out = {
            "biorthonormal": self.biorthonormality_error() <= self.tolerance,
            "complete": self.completeness_error() <= self.tolerance,
        }
        if h is not None:
            out["reconstructs"] = self.reconstruction_error(h) <= 10 * self.tolerance
        return out


def biorth_normalize(right, left, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Rescale a right/left pair by ``1/sqrt(<left|right>)`` each.

    Raises
    ------
    SelfOrthogonal
        If ``|<left|right>| <= tol`` (the pair sits at an exceptional point).
    """
    r = np.asarray(right, dtype=complex)
    l = np.asarray(left, dtype=complex)
    if r.shape != l.shape or r.ndim != 1:
        raise DimensionMismatch(f"right {r.shape} and left {l.shape} must be equal-length vectors")
    overlap = complex(l @ r)
    if abs(overlap) <= tol:
        raise SelfOrthogonal(f"<left|right> = {overlap:.3e} is below tolerance {tol:.1e}")
    s = principal_sqrt(overlap)
    return r / s, l / s


# ---------------------------------------------------------------------------
# eigensolver internals


def _householder_hessenberg(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(h, q)`` with ``a = q @ h @ q.conj().T`` and ``h`` upper Hessenberg."""
    h = a.copy()
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for j in range(n - 2):
        x = h[j + 1 :, j].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[j + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ h[j + 1 :, :])
        h[:, j + 1 :] -= 2.0 * np.outer(h[:, j + 1 :] @ v, v.conj())
        q[:, j + 1 :] -= 2.0 * np.outer(q[:, j + 1 :] @ v, v.conj())
        h[j + 2 :, j] = 0.0
    return h, q


def _wilkinson_shift(a: complex, b: complex, c: complex, d: complex) -> complex:
    # eigenvalue of [[a, b], [c, d]] closest to d
    m = 0.5 * (a + d)
    disc = cmath.sqrt(0.25 * (a - d) ** 2 + b * c)
    l1, l2 = m + disc, m - disc
    return l1 if abs(l1 - d) <= abs(l2 - d) else l2


def _complex_schur(a: np.ndarray, max_sweeps_per_eig: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Upper-triangular ``t`` and unitary ``q`` with ``a = q t q^H``."""
    h, q = _householder_hessenberg(a)
    n = h.shape[0]
    hi = n - 1
    its = 0
    total = 0
    budget = max_sweeps_per_eig * n
    while hi > 0:
        lo = hi
        while lo > 0:
            scale = abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])
            if scale == 0.0:
                scale = np.max(np.abs(h))
            if abs(h[lo, lo - 1]) <= _EPS * scale:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        its += 1
        total += 1
        if total > budget:
            raise NoConvergence("shifted QR iteration exceeded its sweep budget")
        if its % 11 == 0:
            # exceptional shift breaks rare cycling
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * (1.0 + 0.5j)
        else:
            mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        idx = np.arange(lo, hi + 1)
        h[idx, idx] -= mu
        rotations = []
        for j in range(lo, hi):
            x, y = h[j, j], h[j + 1, j]
            r = math.hypot(abs(x), abs(y))
            if r == 0.0:
                c, s = 1.0 + 0j, 0j
            else:
                c, s = x / r, y / r
            g = np.array([[c.conjugate(), s.conjugate()], [-s, c]])
            h[j : j + 2, j:] = g @ h[j : j + 2, j:]
            rotations.append(g)
        for j, g in zip(range(lo, hi), rotations):
            gh = g.conj().T
            top = min(j + 2, hi) + 1
            h[:top, j : j + 2] = h[:top, j : j + 2] @ gh
            q[:, j : j + 2] = q[:, j : j + 2] @ gh
        h[idx, idx] += mu
    return np.triu(h), q


def _triangular_eigvecs(t: np.ndarray) -> np.ndarray:
    """Right eigenvectors of an upper-triangular matrix by back substitution."""
    n = t.shape[0]
    vecs = np.zeros((n, n), dtype=complex)
    small = _EPS * max(np.max(np.abs(t)), 1.0)
    for k in range(n):
        lam = t[k, k]
        y = np.zeros(n, dtype=complex)
        y[k] = 1.0
        for i in range(k - 1, -1, -1):
            denom = t[i, i] - lam
            if abs(denom) < small:
                denom = small
            y[i] = -(t[i, i + 1 : k + 1] @ y[i + 1 : k + 1]) / denom
        vecs[:, k] = y
    return vecs


def _right_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    if n == 1:
        return a[0].copy(), np.ones((1, 1), dtype=complex)
    if n == 2:
        return _right_eig_2x2(a)
    t, q = _complex_schur(a)
    return np.diag(t).copy(), q @ _triangular_eigvecs(t)


def _right_eig_2x2(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    (p, b), (c, d) = a
    m = 0.5 * (p + d)
    disc = principal_sqrt(0.25 * (p - d) ** 2 + b * c)
    vals = np.array([m + disc, m - disc])
    vecs = np.empty((2, 2), dtype=complex)
    for n, lam in enumerate(vals):
        u = np.array([b, lam - p])
        w = np.array([lam - d, c])
        vecs[:, n] = u if np.linalg.norm(u) >= np.linalg.norm(w) else w
        if np.linalg.norm(vecs[:, n]) == 0.0:
            vecs[:, n] = np.eye(2)[n]
    return vals, vecs


def _order(vals: np.ndarray) -> np.ndarray:
    return np.lexsort((np.round(vals.imag, 12), np.round(vals.real, 12)))


def _pair_by_eigenvalue(right_vals: np.ndarray, left_vals: np.ndarray) -> list[int]:
    """Greedy nearest-eigenvalue matching; ambiguous matches raise."""
    free = list(range(len(left_vals)))
    match = []
    for lam in right_vals:
        dist = np.abs(left_vals[free] - lam)
        order = np.argsort(dist)
        best = dist[order[0]]
        if len(order) > 1:
            second = dist[order[1]]
            if second < 2.0 * best:
                raise NearDefective(
                    f"ambiguous left/right pairing near eigenvalue {lam:.6g} "
                    f"(distances {best:.2e}, {second:.2e})"
                )
        match.append(free.pop(int(order[0])))
    return match


def _gauge_fix(right: np.ndarray, left: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # unit right vector whose dominant entry is real positive, then a unit left
    # covector rotated so that <left|right> is real positive
    r = right / np.linalg.norm(right)
    mags = np.abs(r)
    j = int(np.argmax(mags >= (1.0 - 1e-8) * mags.max()))
    r = r * (abs(r[j]) / r[j])
    l = left / np.linalg.norm(left)
    ov = l @ r
    if ov != 0:
        l = l * (abs(ov) / ov)
    return r, l


def eig_dense(h, tol: float = DEFAULT_TOL) -> BiorthEigensystem:
    """Biorthogonal eigendecomposition of a small dense matrix.

    Raises
    ------
    NearDefective
        When two eigenvalues lie within ``tol * max(1, ||h||_max)`` of each
        other, or the left/right pairing is ambiguous.
    """
    a = as_matrix(h)
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a))))
    vals, rvecs = _right_eig(a)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= tol * scale:
                raise NearDefective(
                    f"eigenvalues {vals[i]:.6g} and {vals[j]:.6g} coincide within {tol:.1e}"
                )
    lvals, lvecs = _right_eig(a.T.copy())
    match = _pair_by_eigenvalue(vals, lvals)
    order = _order(vals)
    energies = vals[order]
    rights = np.empty((n, n), dtype=complex)
    lefts = np.empty((n, n), dtype=complex)
    for out, src in enumerate(order):
        r, l = _gauge_fix(rvecs[:, src], lvecs[:, match[src]])
        rights[:, out], lefts[out, :] = biorth_normalize(r, l, tol)
    return BiorthEigensystem(energies, rights, lefts, tol)


def spectral_apply(system: BiorthEigensystem, z: complex, v) -> np.ndarray:
    """``sum_n exp(-z E_n) |e_n><~e_n|v>``."""
    v = np.asarray(v, dtype=complex)
    return system.rights @ (np.exp(-z * system.energies) * (system.lefts @ v))


def expm_apply(h, z: complex, v) -> np.ndarray:
    """``exp(-z H) @ v`` by scaling and squaring a truncated Taylor series.

    The scaled argument has infinity norm at most 1/2 and the series is cut
    once a term drops below machine precision relative to the partial sum,
    well inside the ``EXPM_TOL`` accuracy target. No eigendecomposition is
    used, so defective matrices are fine.
    """
    a = as_matrix(h)
    v = np.asarray(v, dtype=complex)
    if v.shape != (a.shape[0],):
        raise DimensionMismatch(f"vector of length {v.shape} against {a.shape} matrix")
    if z == 0:
        return v.copy()
    b = -complex(z) * a
    norm = float(np.max(np.sum(np.abs(b), axis=1)))
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    b = b / 2.0**squarings
    n = a.shape[0]
    term = np.eye(n, dtype=complex)
    total = term.copy()
    for k in range(1, 40):
        term = term @ b / k
        total += term
        if np.max(np.abs(term)) <= _EPS * np.max(np.abs(total)):
            break
    for _ in range(squarings):
        total = total @ total
    return total @ v
