"""Quench analysis for the non-Hermitian SSH chain.

The system starts in the lower band of the initial Bloch Hamiltonian for
every momentum and evolves under the final one. Per mode everything follows
from two numbers: the band energy ``d_f`` after the quench and the overlap

    kappa_k = (d_i . d_f) / (d_i d_f)

of the normalized complex Bloch vectors. The mode partition function is

    Z_k(z) = 1/2 e^{-z d_f} (1 - kappa) + 1/2 e^{z d_f} (1 + kappa),

``Z_k(it)`` is the Loschmidt amplitude ``cos(d_f t) + i kappa sin(d_f t)``
and the echo is ``cos^2(d_f t) + kappa^2 sin^2(d_f t)``.

Momentum integrals run over ``[0, pi]`` and are doubled, since every
integrand here is even in ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRatio, ExceptionalPoint, LogSingular, NotCritical, Unwrappable
from .kernel import principal_sqrt_array
from .ssh import (
    EP_TOL,
    BlochVector,
    MomentumGrid,
    SSHParams,
    bloch_arrays,
    bloch_vector,
    hopping_modulus_sq,
)

DEFAULT_M = 2000
DEFAULT_T = 2000
DEFAULT_TMAX = 10.0

ECHO_ZERO = 1e-14
RATIO_TOL = 1e-12
MODULUS_TOL = 1e-8
REAL_TOL = 1e-10
ROOT_TOL = 1e-12
REFINE = 16
REFINE_TRIGGER = math.pi / 4
MAX_STEP = math.pi / 2
_CHUNK = 256


@dataclass(frozen=True)
class QuenchSpec:
    initial: SSHParams
    final: SSHParams
    grid: MomentumGrid
    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        if t.ndim != 1 or len(t) == 0 or self.grid.size == 0:
            raise ValueError("quench needs non-empty momentum and time grids")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValueError("times must be finite and non-negative")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def build(cls, initial: SSHParams, final: SSHParams, m: int = DEFAULT_M,
              t_max: float = DEFAULT_TMAX, n_t: int = DEFAULT_T, grid: str = "midpoint") -> "QuenchSpec":
        g = MomentumGrid.midpoint(m) if grid == "midpoint" else MomentumGrid.inclusive(m)
        return cls(initial, final, g, np.linspace(0.0, t_max, n_t))

    @property
    def t_max(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class ModeOverlap:
    k: float
    kappa: complex
    d_f: complex


@dataclass(frozen=True)
class FisherZeroCurve:
    branch: int
    ks: np.ndarray
    zs: np.ndarray
    residuals: np.ndarray
    skipped: int = 0

    @property
    def samples(self) -> list[tuple[float, complex]]:
        return list(zip(self.ks.tolist(), self.zs.tolist()))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0


@dataclass(frozen=True)
class RateSeries:
    times: np.ndarray
    re_r: np.ndarray
    im_r: np.ndarray


@dataclass(frozen=True)
class WindingSeries:
    times: np.ndarray
    re_nu: np.ndarray
    im_nu: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class CriticalSet:
    modes: list[float]
    times: list[tuple[float, int, float]]
    aperiodic_band: tuple[float, float] | None = None


@dataclass(frozen=True)
class AperiodicSweep:
    """Zero crossings of the echo for modes whose echo stays real.

    ``crossings[i]`` lists the times in ``[0, t_max]`` at which ``L_k(t)``
    changes sign for ``ks[i]``; ``intervals`` merges, branch by branch, the
    range those times sweep as ``k`` runs over the band.
    """

    ks: np.ndarray
    crossings: list[np.ndarray]
    intervals: list[tuple[float, float]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# per-mode quantities


def kappa(i: BlochVector, f: BlochVector) -> complex:
    """Normalized complex dot product ``(d_i . d_f) / (d_i d_f)``."""
    if abs(i.d) <= EP_TOL or abs(f.d) <= EP_TOL:
        raise ExceptionalPoint("overlap undefined at an exceptional point")
    num = i.dx * f.dx + i.dy * f.dy + i.dz * f.dz
    return complex(num / (i.d * f.d))


def overlap_numerator(initial: SSHParams, final: SSHParams, ks) -> np.ndarray:
    """``1 + (q + q') cos k + q q' - eta eta'``, the numerator of kappa."""
    return 1.0 + (initial.q + final.q) * np.cos(ks) + initial.q * final.q - initial.eta * final.eta


def mode_overlap(initial: SSHParams, final: SSHParams, k: float) -> ModeOverlap:
    f = bloch_vector(final, k)
    return ModeOverlap(float(k), kappa(bloch_vector(initial, k), f), f.d)


def overlap_arrays(initial: SSHParams, final: SSHParams, ks) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(kappa, d_f)`` on an array of momenta."""
    ks = np.asarray(ks, dtype=float)
    di = bloch_arrays(initial, ks)
    df = bloch_arrays(final, ks)
    if np.any(np.abs(di[3]) <= EP_TOL) or np.any(np.abs(df[3]) <= EP_TOL):
        bad = ks[np.argmax((np.abs(di[3]) <= EP_TOL) | (np.abs(df[3]) <= EP_TOL))]
        raise ExceptionalPoint(f"exceptional point on the momentum grid at k = {bad:.15g}")
    num = di[0] * df[0] + di[1] * df[1] + di[2] * df[2]
    return num / (di[3] * df[3]), df[3]


def mode_partition(m: ModeOverlap, z: complex) -> complex:
    """``1/2 e^{-z d_f}(1 - kappa) + 1/2 e^{z d_f}(1 + kappa)``."""
    return complex(_partition(m.kappa, m.d_f, z))


def _partition(kap, d_f, z):
    return 0.5 * np.exp(-z * d_f) * (1.0 - kap) + 0.5 * np.exp(z * d_f) * (1.0 + kap)


def free_energy_density(spec: QuenchSpec, z: complex) -> complex:
    """``-(1/2 pi) int_BZ ln Z_k(z) dk`` on the quench grid.

    The log is principal at the first momentum and continued to the nearest
    branch along ``k``.
    """
    kap, d_f = overlap_arrays(spec.initial, spec.final, spec.grid.ks)
    zk = _partition(kap, d_f, z)
    if np.min(np.abs(zk)) <= 1e-10:
        k_bad = spec.grid.ks[np.argmin(np.abs(zk))]
        raise LogSingular(f"partition function vanishes at k = {k_bad:.12g}")
    log_z = np.log(np.abs(zk)) + 1j * np.unwrap(np.angle(zk))
    return complex(-np.sum(log_z * spec.grid.weights) / math.pi)


# ---------------------------------------------------------------------------
# Fisher zeros and critical modes


def _zeros(kap, d_f, branch: int):
    ratio = (1.0 - kap) / (1.0 + kap)
    theta = np.angle(ratio)
    theta = np.where(theta == -math.pi, math.pi, theta)
    return (np.log(np.abs(ratio)) + 1j * theta + 1j * (2 * branch + 1) * math.pi) / (2.0 * d_f)


def fisher_zeros(spec: QuenchSpec, branch: int = 0, skip_singular: bool = False) -> FisherZeroCurve:
    """Line ``z_l(k)`` of zeros of the mode partition function.

    With ``skip_singular`` momenta at exceptional points or with
    ``kappa = +-1`` (no finite zero) are left out and counted instead of
    raising.
    """
    ks = np.asarray(spec.grid.ks, dtype=float)
    di = bloch_arrays(spec.initial, ks)[3]
    df = bloch_arrays(spec.final, ks)[3]
    regular = (np.abs(di) > EP_TOL) & (np.abs(df) > EP_TOL)
    if not skip_singular and not regular.all():
        raise ExceptionalPoint(f"exceptional point at k = {ks[np.argmin(regular)]:.15g}")
    kap, d_f = overlap_arrays(spec.initial, spec.final, ks[regular])
    # kappa = -1 leaves the ratio undefined; kappa = +1 pushes the zero to Re z = -inf
    ok = (np.abs(1.0 + kap) > RATIO_TOL) & (np.abs(1.0 - kap) > RATIO_TOL)
    if not skip_singular and not ok.all():
        raise DegenerateRatio(f"kappa = +-1 at k = {ks[regular][np.argmin(ok)]:.15g}")
    keep_ks = ks[regular][ok]
    kap, d_f = kap[ok], d_f[ok]
    zs = _zeros(kap, d_f, branch)
    terms = 0.5 * np.abs(np.exp(-zs * d_f) * (1.0 - kap))
    residuals = np.abs(_partition(kap, d_f, zs)) / np.maximum(1.0, terms)
    return FisherZeroCurve(branch, keep_ks, zs, residuals, skipped=len(ks) - len(keep_ks))


def _bisect(func, a: float, b: float, tol: float = ROOT_TOL) -> float:
    fa = func(a)
    for _ in range(200):
        if b - a <= tol:
            break
        mid = 0.5 * (a + b)
        fm = func(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def axis_crossings(spec: QuenchSpec, branch: int = 0) -> list[float]:
    """Momenta where ``Re z_l(k)`` changes sign, refined by bisection."""
    curve = fisher_zeros(spec, branch, skip_singular=True)

    def re_z(k: float) -> float:
        kap, d_f = overlap_arrays(spec.initial, spec.final, [k])
        return float(_zeros(kap, d_f, branch)[0].real)

    out = []
    re = curve.zs.real
    for j in range(len(re) - 1):
        if re[j] == 0.0 or re[j + 1] == 0.0 or (re[j] > 0) == (re[j + 1] > 0):
            continue
        a, b = curve.ks[j], curve.ks[j + 1]
        if np.any(_mode_types(spec.initial, [a, b]) != _mode_types(spec.initial, [b, a])):
            continue
        out.append(_bisect(re_z, a, b))
    return out


def critical_times(m: ModeOverlap, l_max: int) -> list[float]:
    """``t_{c,l} = Theta/(2 d_f) + (l + 1/2) pi / d_f`` for ``l = 0..l_max``."""
    if abs(m.d_f.imag) > REAL_TOL:
        raise NotCritical(f"final band energy {m.d_f} is not real")
    if abs(1.0 + m.kappa) <= RATIO_TOL:
        raise DegenerateRatio("kappa = -1")
    ratio = (1.0 - m.kappa) / (1.0 + m.kappa)
    if abs(abs(ratio) - 1.0) > MODULUS_TOL:
        raise NotCritical(f"|(1-kappa)/(1+kappa)| = {abs(ratio):.12g} differs from 1")
    theta = float(np.angle(ratio))
    if theta == -math.pi:
        theta = math.pi
    d = m.d_f.real
    return [theta / (2.0 * d) + (l + 0.5) * math.pi / d for l in range(l_max + 1)]


def _mode_types(p: SSHParams, ks) -> np.ndarray:
    """+1 real energy, -1 imaginary energy, 0 exceptional point."""
    gap = hopping_modulus_sq(p, np.asarray(ks, dtype=float)) - p.eta**2
    return np.where(np.abs(gap) <= EP_TOL, 0, np.sign(gap)).astype(int)


def _all_real(p: SSHParams) -> bool:
    return abs(p.eta) <= abs(1.0 - abs(p.q)) + EP_TOL


def _overlap_at(initial: SSHParams, final: SSHParams, k: float) -> ModeOverlap:
    # at a boundary critical mode the initial band may close; the numerator
    # vanishes quadratically there while d_i vanishes linearly, so kappa -> 0
    try:
        return mode_overlap(initial, final, k)
    except ExceptionalPoint:
        if abs(overlap_numerator(initial, final, k)) > 1e-12:
            raise
        return ModeOverlap(float(k), 0j, bloch_vector(final, k).d)


def _band_edges(p: SSHParams, ks: np.ndarray, mask: np.ndarray) -> tuple[float, float] | None:
    if not mask.any():
        return None
    idx = np.flatnonzero(mask)
    first = idx[0]
    last = first
    while last + 1 < len(mask) and mask[last + 1]:
        last += 1

    def gap(k: float) -> float:
        return float(hopping_modulus_sq(p, k) - p.eta**2)

    lo = 0.0 if first == 0 and gap(0.0) < 0 else _bisect(gap, ks[first - 1] if first else 0.0, ks[first])
    hi = math.pi if last == len(mask) - 1 and gap(math.pi) < 0 else _bisect(gap, ks[last], ks[last + 1] if last + 1 < len(ks) else math.pi)
    return lo, hi


def critical_modes(spec: QuenchSpec, l_max: int | None = None) -> CriticalSet:
    """Critical momenta, their periodic critical times and any aperiodic band.

    Quenches between all-real spectra are solved in closed form from
    ``1 + q q' - eta eta' + (q + q') cos k = 0``. Otherwise ``Re kappa`` is
    scanned on the grid over modes with real initial and final energies and
    sign changes are refined by bisection; modes with imaginary initial and
    real final energy have purely imaginary ``kappa`` and are reported as the
    aperiodic band. ``l_max`` defaults to every branch with ``t <= t_max``.
    """
    pi_, pf = spec.initial, spec.final
    modes: list[float] = []
    band = None
    if _all_real(pi_) and _all_real(pf):
        a = 1.0 + pi_.q * pf.q - pi_.eta * pf.eta
        b = pi_.q + pf.q
        if abs(abs(a) - abs(b)) <= ROOT_TOL:
            modes.append(0.0 if -a / b > 0 else math.pi)
        elif abs(a) < abs(b):
            modes.append(math.acos(-a / b))
    else:
        ks = np.asarray(spec.grid.ks, dtype=float)
        ti = _mode_types(pi_, ks)
        tf = _mode_types(pf, ks)
        usable = (ti != 0) & (tf != 0)
        kap = np.full(len(ks), np.nan + 0j)
        kap[usable] = overlap_arrays(pi_, pf, ks[usable])[0]
        imag_band = (ti < 0) & (tf > 0) & usable
        imag_band &= np.abs(kap.real) <= REAL_TOL
        band = _band_edges(pi_, ks, imag_band)

        def re_kappa(k: float) -> float:
            return float(overlap_arrays(pi_, pf, [k])[0][0].real)

        regular = (ti > 0) & (tf > 0)
        for j in range(len(ks) - 1):
            if not (regular[j] and regular[j + 1]):
                continue
            r0, r1 = kap[j].real, kap[j + 1].real
            if (r0 > 0) != (r1 > 0):
                modes.append(_bisect(re_kappa, ks[j], ks[j + 1]))
    times = []
    for k in modes:
        m = _overlap_at(pi_, pf, k)
        if abs(m.d_f.imag) > REAL_TOL:
            continue
        period = math.pi / m.d_f.real
        n = l_max if l_max is not None else max(0, int(math.floor(spec.t_max / period + 0.5)))
        for l, t in enumerate(critical_times(m, n)):
            if l_max is not None or t <= spec.t_max:
                times.append((k, l, t))
    return CriticalSet(modes, times, band)


# ---------------------------------------------------------------------------
# time series


def echo_closed_form(kap, d_f, t):
    x = d_f * t
    return np.cos(x) ** 2 + kap**2 * np.sin(x) ** 2


def rate_function(spec: QuenchSpec) -> RateSeries:
    """``r(t) = -(1/2 pi) int_BZ ln L_k(t) dk`` from the closed-form echo.

    Raises ``LogSingular`` if an echo is exactly zero on the grid.
    """
    kap, d_f = overlap_arrays(spec.initial, spec.final, spec.grid.ks)
    w = spec.grid.weights
    times = spec.times
    re_r = np.empty(len(times))
    im_r = np.empty(len(times))
    tiny = np.finfo(float).tiny
    for s in range(0, len(times), _CHUNK):
        t = times[s : s + _CHUNK, None]
        echo = echo_closed_form(kap, d_f, t)
        if np.any(np.abs(echo) <= tiny):
            row, col = np.argwhere(np.abs(echo) <= tiny)[0]
            raise LogSingular(f"echo vanishes at t = {t[row, 0]:.12g}, k = {spec.grid.ks[col]:.12g}")
        log_echo = np.log(np.abs(echo)) + 1j * np.unwrap(np.angle(echo), axis=1)
        r = -np.sum(log_echo * w, axis=1) / math.pi
        re_r[s : s + _CHUNK] = r.real
        im_r[s : s + _CHUNK] = r.imag
    return RateSeries(times.copy(), re_r, im_r)


def detect_cusps(series: RateSeries, factor: float = 10.0) -> list[float]:
    """Times where ``|second difference of Re r|`` exceeds ``factor`` times its median.

    Neighbouring detections are merged and reported at the largest one.
    """
    r = np.asarray(series.re_r, dtype=float)
    t = np.asarray(series.times, dtype=float)
    if len(r) < 3:
        return []
    d2 = np.abs(r[2:] - 2.0 * r[1:-1] + r[:-2])
    # floor keeps round-off in an exactly flat series from registering
    threshold = max(factor * float(np.median(d2)), 1e-12)
    hits = np.flatnonzero(d2 > threshold)
    out = []
    group: list[int] = []
    for h in hits:
        if group and h - group[-1] > 1:
            out.append(float(t[1 + max(group, key=lambda i: d2[i])]))
            group = []
        group.append(int(h))
    if group:
        out.append(float(t[1 + max(group, key=lambda i: d2[i])]))
    return out


def mode_phases(kap, d_f, t):
    """Amplitude, echo, total and dynamical phase for each mode at times ``t``.

    Uses the same conventions as :func:`biodqpt.dynamics.phase_decomposition`
    for a constant path: ``Phi_tot = -i log(G / sqrt(L))`` with principal
    branches and ``Phi_dyn = -t <~psi|H_f|psi> = t d_f kappa``; the
    Pancharatnam phase is ``Phi_tot - Phi_dyn``. Samples with a vanishing echo
    come back with ``valid=False`` and zero total phase.
    """
    x = d_f * t
    c, s = np.cos(x), np.sin(x)
    amp = c + 1j * kap * s
    echo = amp * (c - 1j * kap * s)
    valid = np.abs(echo) >= ECHO_ZERO
    safe_amp = np.where(valid, amp, 1.0)
    safe_echo = np.where(valid, echo, 1.0)
    phi_tot = np.where(valid, -1j * np.log(safe_amp / principal_sqrt_array(safe_echo)), 0.0)
    return amp, echo, phi_tot, t * d_f * kap, valid


def _wrap(x):
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _real_amplitude(amp):
    # a real amplitude pins Re Phi_tot to a branch value; changes there are jumps
    return np.abs(amp.imag) <= 1e-12 * np.maximum(1.0, np.abs(amp))


def _winding_ks(spec: QuenchSpec) -> np.ndarray:
    ks = list(np.asarray(spec.grid.ks, dtype=float))
    for edge in (0.0, math.pi):
        if any(abs(k - edge) < 1e-15 for k in ks):
            continue
        if _mode_types(spec.initial, [edge])[0] != 0 and _mode_types(spec.final, [edge])[0] != 0:
            if edge == 0.0:
                ks.insert(0, edge)
            else:
                ks.append(edge)
    return np.array(ks)


def _tot_increments(amp, phi_tot):
    """Nearest-branch increments of ``Phi_tot`` along the last axis."""
    d_re = _wrap(np.diff(phi_tot.real, axis=-1))
    d_im = np.diff(phi_tot.imag, axis=-1)
    cut = _real_amplitude(amp[..., :-1]) & _real_amplitude(amp[..., 1:])
    return d_re, d_im, cut


def _winding_rows(spec: QuenchSpec, times: np.ndarray):
    """Core of :func:`winding_number`; returns ``(re_nu, im_nu, valid, reason)``."""
    ks = _winding_ks(spec)
    ti = _mode_types(spec.initial, ks)
    tf = _mode_types(spec.final, ks)
    regular = (ti != 0) & (tf != 0)
    ks, types = ks[regular], (ti * 10 + tf)[regular]
    kap, d_f = overlap_arrays(spec.initial, spec.final, ks)
    # steps across an exceptional point straddle a divergence of kappa
    cross_ep = (types[1:] != types[:-1])[None, :]
    re_nu = np.zeros(len(times))
    im_nu = np.zeros(len(times))
    valid = np.ones(len(times), dtype=bool)
    reason = [""] * len(times)
    sub = np.linspace(0.0, 1.0, REFINE + 1)
    for s in range(0, len(times), _CHUNK):
        t = times[s : s + _CHUNK, None]
        amp, _, phi_tot, phi_dyn, ok = mode_phases(kap, d_f, t)
        d_re, d_im, cut = _tot_increments(amp, phi_tot)
        trigger = (np.abs(d_re) > REFINE_TRIGGER) & ~cut & ~cross_ep
        d_re = np.where(cut, 0.0, d_re)
        d_im = np.where(cut, 0.0, d_im)
        rows, cols = np.nonzero(trigger)
        failed_rows = np.zeros(0, dtype=int)
        if len(rows):
            k_fine = ks[cols, None] + (ks[cols + 1] - ks[cols])[:, None] * sub[None, :]
            kap_f, d_f_f = overlap_arrays(spec.initial, spec.final, k_fine.ravel())
            amp_f, _, tot_f, _, ok_f = mode_phases(
                kap_f.reshape(k_fine.shape), d_f_f.reshape(k_fine.shape), t[rows, 0][:, None]
            )
            sd_re, sd_im, sub_cut = _tot_increments(amp_f, tot_f)
            too_big = (np.abs(sd_re) > MAX_STEP) & ~sub_cut
            d_re[rows, cols] = np.where(sub_cut, 0.0, sd_re).sum(axis=1)
            d_im[rows, cols] = np.where(sub_cut, 0.0, sd_im).sum(axis=1)
            failed_rows = np.unique(rows[too_big.any(axis=1) | ~ok_f.all(axis=1)])
        # Phi_dyn is single valued between exceptional points: exact differences
        dd = np.diff(phi_dyn, axis=1)
        d_re = np.where(cross_ep, 0.0, d_re - dd.real)
        d_im = np.where(cross_ep, 0.0, d_im - dd.imag)
        re_nu[s : s + _CHUNK] = d_re.sum(axis=1) / (2.0 * math.pi)
        im_nu[s : s + _CHUNK] = d_im.sum(axis=1) / (2.0 * math.pi)
        for r in failed_rows:
            valid[s + r] = False
            reason[s + r] = "unresolved phase jump after refinement"
        for r in np.flatnonzero(~ok.all(axis=1)):
            valid[s + r] = False
            reason[s + r] = "echo vanishes on the momentum grid"
    return re_nu, im_nu, valid, reason


def winding_number(spec: QuenchSpec) -> WindingSeries:
    """Dynamical winding ``nu(t) = (1/2 pi) int_0^pi d_k Phi_g(k, t) dk``.

    ``Phi_g = Phi_tot - Phi_dyn``. The dynamical part is single valued away
    from exceptional points, so its contribution is a plain difference. The
    total phase is accumulated from nearest-branch increments between
    neighbouring momenta; increments above pi/4 are re-resolved on a 16-fold
    finer sub-grid. Increments that carry no winding are dropped: steps
    across an exceptional point, and total-phase steps between modes with a
    real amplitude, where ``Re Phi_tot`` only takes branch values. Times at
    which a sub-grid step still exceeds pi/2, or where an echo vanishes on
    the grid, are flagged invalid.
    """
    re_nu, im_nu, valid, _ = _winding_rows(spec, spec.times)
    return WindingSeries(spec.times.copy(), re_nu, im_nu, valid)


def winding_at(spec: QuenchSpec, t: float) -> complex:
    """Winding number at a single time; raises ``Unwrappable`` instead of flagging."""
    re_nu, im_nu, valid, reason = _winding_rows(spec, np.array([float(t)]))
    if not valid[0]:
        raise Unwrappable(f"winding undefined at t = {t:.12g}: {reason[0]}")
    return complex(re_nu[0], im_nu[0])


def series_jump(times, values, t0: float, gap: float = 0.02, span: float = 0.1, valid=None) -> float:
    """Size of a step in ``values`` at ``t0``.

    Straight lines are fitted on ``[t0 - gap - span, t0 - gap]`` and
    ``[t0 + gap, t0 + gap + span]`` and extrapolated to ``t0``, which removes
    the smooth background and the finite-grid rounding of the step.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = np.ones(len(times), dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    before = mask & (times >= t0 - gap - span) & (times <= t0 - gap)
    after = mask & (times >= t0 + gap) & (times <= t0 + gap + span)
    if before.sum() < 2 or after.sum() < 2:
        raise ValueError(f"not enough samples around t = {t0}")
    fit_b = np.polyfit(times[before] - t0, values[before], 1)
    fit_a = np.polyfit(times[after] - t0, values[after], 1)
    return float(fit_a[1] - fit_b[1])


def zero_crossing_sweep(spec: QuenchSpec) -> AperiodicSweep:
    """Closed-form zero crossings of real-valued echoes.

    For ``kappa = i y`` and real ``d_f`` the echo ``cos^2 - y^2 sin^2``
    vanishes where ``tan(d_f t) = +-1/y``.
    """
    ks = np.asarray(spec.grid.ks, dtype=float)
    ti = _mode_types(spec.initial, ks)
    tf = _mode_types(spec.final, ks)
    usable = (ti != 0) & (tf != 0)
    kap = np.full(len(ks), np.nan + 0j)
    d_f = np.full(len(ks), np.nan + 0j)
    kap[usable], d_f[usable] = overlap_arrays(spec.initial, spec.final, ks[usable])
    band = usable & (np.abs(kap.real) <= REAL_TOL) & (np.abs(d_f.imag) <= REAL_TOL) & (np.abs(kap.imag) > 0)
    t_max = spec.t_max
    out_ks, crossings = [], []
    for k, y, d in zip(ks[band], kap[band].imag, d_f[band].real):
        theta0 = math.atan(1.0 / abs(y))
        phases = []
        n = 0
        while (n * math.pi + theta0) / d <= t_max:
            phases.append(n * math.pi + theta0)
            if (n + 1) * math.pi - theta0 > n * math.pi + theta0:
                phases.append((n + 1) * math.pi - theta0)
            n += 1
        ts = np.array(sorted(p / d for p in phases if p / d <= t_max))
        out_ks.append(k)
        crossings.append(ts)
    intervals: list[tuple[float, float]] = []
    if crossings:
        depth = max(len(c) for c in crossings)
        for j in range(depth):
            branch = [c[j] for c in crossings if len(c) > j]
            intervals.append((float(min(branch)), float(max(branch))))
        intervals.sort()
        merged = [intervals[0]]
        for lo, hi in intervals[1:]:
            if lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
            else:
                merged.append((lo, hi))
        intervals = merged
    return AperiodicSweep(np.array(out_ks), crossings, intervals)
