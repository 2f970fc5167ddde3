"""Closed-loop analysis: spectral abscissa and H-infinity norm.

The norm computation is a level-set iteration: a lower bound gamma is probed
at gamma*(1 + rel_tol); purely imaginary eigenvalues of the associated
Hamiltonian matrix locate frequency intervals where the largest singular
value exceeds the probe, and evaluating at interval midpoints pushes the
lower bound up.  No imaginary eigenvalues means the probe is an upper bound,
which brackets the norm to the requested relative tolerance.  A dense-grid
search with golden-section refinement backs the method up when the
Hamiltonian eigenvalue solve is unusable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import EigenFailure, UnstableSystem
from .statespace import StateSpace

__all__ = [
    "AbscissaResult",
    "NormResult",
    "spectral_abscissa",
    "is_stable",
    "hinf_norm",
]

# Relative half-width of the eigenvalue tie window, scaled by 1 + |alpha|.
DEFAULT_TIE_TOL = 1e-8
# |Re(lam)| below this times the eigenvalue scale counts as "on the axis".
_HAM_IMAG_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class AbscissaResult:
    """Spectral abscissa with the indices of the eigenvalues attaining it."""

    alpha: float
    active_indices: tuple[int, ...]
    eigenvalues: np.ndarray

    @property
    def is_stable(self) -> bool:
        return self.alpha < 0.0


@dataclass(frozen=True, eq=False)
class NormResult:
    """H-infinity norm value and where it is (approximately) attained.

    `converged` is False when the level-set iteration stalled before
    certifying the requested tolerance; `gamma` is then the best verified
    lower bound rather than a bracketed value.
    """

    gamma: float
    omega_peak: float
    attained_at_infinity: bool
    converged: bool = True
    iterations: int = 0


def spectral_abscissa(A: np.ndarray, *, tie_tol: float | None = None) -> AbscissaResult:
    """Max real part over the spectrum of A, with the active eigenvalue set.

    Eigenvalues within tie_tol * (1 + |alpha|) of the abscissa are reported
    active; tie_tol defaults to 1e-8.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if A.shape[0] == 0:
        return AbscissaResult(-math.inf, (), np.zeros(0, dtype=complex))
    try:
        w = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure("eigenvalue iteration failed on A") from exc
    alpha = float(w.real.max())
    tol = (DEFAULT_TIE_TOL if tie_tol is None else tie_tol) * (1.0 + abs(alpha))
    active = tuple(int(i) for i in np.flatnonzero(w.real >= alpha - tol))
    return AbscissaResult(alpha, active, w)


def is_stable(A: np.ndarray) -> bool:
    """True when every eigenvalue of A has strictly negative real part."""
    return spectral_abscissa(A).alpha < 0.0


class _FreqEvaluator:
    """Evaluates sigma_max(C (jw I - A)^-1 B + D) cheaply at many frequencies.

    Diagonalizes A once when the eigenvector basis is well conditioned;
    otherwise falls back to a factor-and-solve per frequency.
    """

    def __init__(self, sys: StateSpace):
        self.sys = sys
        self._diag = None
        if sys.n:
            try:
                lam, V = np.linalg.eig(sys.A)
                cond = np.linalg.cond(V)
                if np.isfinite(cond) and cond < 1e8:
                    self._diag = (lam, sys.C @ V, np.linalg.solve(V, sys.B))
            except np.linalg.LinAlgError:
                self._diag = None

    def sigma_max(self, omega: float) -> float:
        return float(self.sigma_max_many(np.array([omega]))[0])

    def sigma_max_many(self, omegas: np.ndarray) -> np.ndarray:
        omegas = np.asarray(omegas, dtype=float)
        sys = self.sys
        if sys.n == 0:
            return np.full(omegas.shape, la.svdvals(sys.D)[0] if sys.D.size else 0.0)
        if self._diag is not None:
            lam, CV, VB = self._diag
            # resolvent through the eigenbasis: one outer product per frequency
            inv = 1.0 / (1j * omegas[:, None] - lam[None, :])
            T = np.einsum("pn,kn,nm->kpm", CV, inv, VB) + sys.D
            return np.linalg.svd(T, compute_uv=False)[..., 0]
        out = np.empty(omegas.shape)
        I = np.eye(sys.n, dtype=complex)
        Bc = sys.B.astype(complex)
        for idx, omega in enumerate(omegas):
            X = la.solve(1j * omega * I - sys.A, Bc)
            out[idx] = la.svdvals(sys.C @ X + sys.D)[0]
        return out


def _hamiltonian(sys: StateSpace, gamma: float) -> np.ndarray:
    """Hamiltonian whose imaginary-axis eigenvalues mark sigma crossings of gamma."""
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    m, p = sys.m, sys.p
    R = gamma * gamma * np.eye(m) - D.T @ D
    S = gamma * gamma * np.eye(p) - D @ D.T
    cr = la.cho_factor(R)
    cs = la.cho_factor(S)
    H11 = A + B @ la.cho_solve(cr, D.T @ C)
    H12 = gamma * (B @ la.cho_solve(cr, B.T))
    H21 = -gamma * (C.T @ la.cho_solve(cs, C))
    H12 = 0.5 * (H12 + H12.T)
    H21 = 0.5 * (H21 + H21.T)
    return np.block([[H11, H12], [H21, -H11.T]])


def _candidate_frequencies(eigenvalues: np.ndarray) -> np.ndarray:
    """Initial probe frequencies from the pole pattern (plus dc)."""
    cands = [0.0]
    for lam in eigenvalues:
        mag = abs(lam)
        if mag > 0:
            cands.append(mag)
        if abs(lam.imag) > 0:
            cands.append(abs(lam.imag))
    return np.unique(np.asarray(cands))


def _scan_grid(eigenvalues: np.ndarray, best_omega: float, points: int) -> np.ndarray:
    """Log grid spanning the pole frequencies, densified near the current peak."""
    mags = np.abs(eigenvalues)
    mags = mags[mags > 0]
    lo = float(mags.min()) * 1e-4 if mags.size else 1e-4
    hi = float(mags.max()) * 1e4 if mags.size else 1e4
    lo = max(lo, 1e-12)
    hi = max(hi, 10.0 * lo)
    grid = [np.zeros(1), np.geomspace(lo, hi, points), _candidate_frequencies(eigenvalues)]
    if best_omega > 0:
        grid.append(best_omega * np.geomspace(0.9, 1.1, 15))
    return np.unique(np.concatenate(grid))


def _refine_peak(ev: _FreqEvaluator, lo: float, hi: float, *, iters: int = 80) -> tuple[float, float]:
    """Golden-section maximization of sigma_max over [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = ev.sigma_max(c), ev.sigma_max(d)
    for _ in range(iters):
        if b - a <= 1e-13 * (1.0 + b):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = ev.sigma_max(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = ev.sigma_max(d)
    return (c, fc) if fc > fd else (d, fd)


def _grid_fallback(
    sys: StateSpace, ev: _FreqEvaluator, eigenvalues: np.ndarray, sigma_d: float, iterations: int
) -> NormResult:
    points = 2048 if sys.n <= 60 else 512
    omegas = _scan_grid(eigenvalues, 0.0, points)
    vals = ev.sigma_max_many(omegas)
    best = 0.0
    best_omega = 0.0
    order = np.argsort(vals)[::-1][:8]
    for idx in order:
        lo = omegas[max(int(idx) - 1, 0)]
        hi = omegas[min(int(idx) + 1, omegas.size - 1)]
        if hi <= lo:
            continue
        om, val = _refine_peak(ev, lo, hi)
        if val > best:
            best, best_omega = val, om
    if sigma_d >= best:
        return NormResult(sigma_d, 0.0, True, True, iterations)
    return NormResult(best, best_omega, False, True, iterations)


def hinf_norm(sys: StateSpace, *, rel_tol: float = 1e-7, max_iters: int = 60) -> NormResult:
    """H-infinity norm of a stable system to relative tolerance rel_tol.

    Raises UnstableSystem when the spectral abscissa of A is not strictly
    negative.  When the level iteration cannot certify the tolerance within
    max_iters, the best verified lower bound is returned with
    converged=False instead of raising.
    """
    if not (0.0 < rel_tol <= 1e-2):
        raise ValueError(f"rel_tol must be in (0, 1e-2], got {rel_tol}")
    sigma_d = float(la.svdvals(sys.D)[0]) if sys.D.size else 0.0
    if sys.n == 0:
        return NormResult(sigma_d, 0.0, True, True, 0)
    absc = spectral_abscissa(sys.A)
    if absc.alpha >= 0.0:
        raise UnstableSystem(
            f"spectral abscissa is {absc.alpha:.6g} >= 0; H-infinity norm undefined"
        )
    ev = _FreqEvaluator(sys)
    eigs = absc.eigenvalues

    cands = _candidate_frequencies(eigs)
    vals = ev.sigma_max_many(cands)
    best_idx = int(np.argmax(vals))
    best_finite = float(vals[best_idx])
    best_omega = float(cands[best_idx])
    if max(best_finite, sigma_d) == 0.0:
        # possibly a zero system; a coarse scan decides
        scan = _scan_grid(eigs, 0.0, 256)
        svals = ev.sigma_max_many(scan)
        if float(svals.max()) == 0.0:
            return NormResult(0.0, 0.0, False, True, 0)
        best_idx = int(np.argmax(svals))
        best_finite = float(svals[best_idx])
        best_omega = float(scan[best_idx])

    lower = max(best_finite, sigma_d)
    iterations = 0
    converged = False
    scanned = False
    while iterations < max_iters:
        iterations += 1
        probe = lower * (1.0 + rel_tol)
        try:
            H = _hamiltonian(sys, probe)
            ew = np.linalg.eigvals(H)
        except (la.LinAlgError, np.linalg.LinAlgError):
            return _grid_fallback(sys, ev, eigs, sigma_d, iterations)
        if not np.all(np.isfinite(ew)):
            return _grid_fallback(sys, ev, eigs, sigma_d, iterations)
        scale = max(1.0, float(np.abs(ew).max()))
        on_axis = ew[np.abs(ew.real) <= _HAM_IMAG_TOL * scale]
        omegas = np.unique(np.abs(on_axis.imag))
        if omegas.size >= 2:
            # merge crossings that are numerically identical
            keep = np.concatenate([[True], np.diff(omegas) > 1e-9 * (1.0 + omegas[1:])])
            omegas = omegas[keep]
        if omegas.size == 0:
            # probe is an upper bound; one confirmation scan guards against
            # eigenvalues misclassified as off-axis
            if not scanned:
                scanned = True
                scan = _scan_grid(eigs, best_omega, 512)
                svals = ev.sigma_max_many(scan)
                idx = int(np.argmax(svals))
                if float(svals[idx]) > lower * (1.0 + 1e-12):
                    if float(svals[idx]) > sigma_d:
                        best_finite = float(svals[idx])
                        best_omega = float(scan[idx])
                    lower = max(float(svals[idx]), lower)
                    continue
            converged = True
            break
        mids = 0.5 * (omegas[:-1] + omegas[1:])
        trial = np.concatenate([omegas, mids]) if mids.size else omegas
        tvals = ev.sigma_max_many(trial)
        idx = int(np.argmax(tvals))
        top = float(tvals[idx])
        if top > best_finite:
            best_finite = top
            best_omega = float(trial[idx])
        if top <= lower * (1.0 + 1e-14):
            # tangency: the probe grazes the curve; treat as converged after
            # the confirmation scan
            if not scanned:
                scanned = True
                scan = _scan_grid(eigs, best_omega, 512)
                svals = ev.sigma_max_many(scan)
                sidx = int(np.argmax(svals))
                if float(svals[sidx]) > lower * (1.0 + 1e-12):
                    if float(svals[sidx]) > sigma_d:
                        best_finite = float(svals[sidx])
                        best_omega = float(scan[sidx])
                    lower = max(float(svals[sidx]), lower)
                    continue
            converged = True
            break
        lower = max(lower, top)

    at_infinity = sigma_d > best_finite
    gamma = max(sigma_d, best_finite)
    return NormResult(
        gamma,
        0.0 if at_infinity else best_omega,
        at_infinity,
        converged,
        iterations,
    )
