"""Phase-space covariance matrices through the quench.

The covariance route is the Gaussian-state counterpart of the operator
route: build second moments in the disjoint normal-mode basis, rotate to
configuration space, rotate to joint normal modes, evolve with the
per-mode symplectic rotation, and read occupancies off the diagonal.
Fock states are not Gaussian, but their second moments are still exact,
which is all this module ever uses (higher moments are out of scope).

Basis tags: "disjoint-normal-modes" -> "configuration" -> "joint-normal-modes".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import QuenchSpec, normal_modes
from .bogoliubov import build_bogoliubov

DISJOINT = "disjoint-normal-modes"
CONFIGURATION = "configuration"
JOINT = "joint-normal-modes"


class BasisError(ValueError):
    """Operation applied to a covariance matrix in the wrong basis."""


@dataclass(frozen=True)
class CovarianceMatrix:
    sigma: np.ndarray           # 2K x 2K, block order (positions, momenta)
    basis_tag: str

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=float)
        if sig.ndim != 2 or sig.shape[0] != sig.shape[1] or sig.shape[0] % 2:
            raise ValueError("covariance matrix must be square of even dimension")
        if np.max(np.abs(sig - sig.T)) > 1e-10:
            raise ValueError("covariance matrix must be symmetric")
        object.__setattr__(self, "sigma", sig)

    @property
    def n_modes(self):
        return self.sigma.shape[0] // 2

    def block(self, which):
        K = self.n_modes
        if which == "xx":
            return self.sigma[:K, :K]
        if which == "xp":
            return self.sigma[:K, K:]
        if which == "pp":
            return self.sigma[K:, K:]
        raise ValueError(which)


def _require(cov, tag):
    if cov.basis_tag != tag:
        raise BasisError(f"expected basis {tag!r}, got {cov.basis_tag!r}")


def _disjoint_frequencies(spec):
    left = normal_modes(spec.left)
    right = normal_modes(spec.right)
    return np.concatenate([left.frequencies, right.frequencies])


def initial_covariance(spec: QuenchSpec) -> CovarianceMatrix:
    """Second moments of the pre-quench Fock state in disjoint normal modes.

    sigma_xx = (n + 1/2) hbar / (m w),  sigma_pp = (n + 1/2) hbar m w,
    and all cross correlations vanish for energy eigenstates.
    """
    n = spec.initial_state.as_array()
    w = _disjoint_frequencies(spec)
    m, hbar = spec.left.mass, spec.left.hbar
    K = spec.total_size
    sig = np.zeros((2 * K, 2 * K))
    sig[:K, :K] = np.diag((n + 0.5) * hbar / (m * w))
    sig[K:, K:] = np.diag((n + 0.5) * hbar * m * w)
    return CovarianceMatrix(sigma=sig, basis_tag=DISJOINT)


def _conjugate(cov, mat, new_tag):
    K = cov.n_modes
    full = np.zeros((2 * K, 2 * K))
    full[:K, :K] = mat
    full[K:, K:] = mat
    return CovarianceMatrix(sigma=full @ cov.sigma @ full.T, basis_tag=new_tag)


def to_configuration(cov: CovarianceMatrix, spec: QuenchSpec) -> CovarianceMatrix:
    """Rotate disjoint normal modes to lattice-site coordinates."""
    _require(cov, DISJOINT)
    N, M = spec.n_left, spec.n_right
    blk = np.zeros((N + M, N + M))
    blk[:N, :N] = normal_modes(spec.left).transform
    blk[N:, N:] = normal_modes(spec.right).transform
    return _conjugate(cov, blk, CONFIGURATION)


def to_joint_modes(cov: CovarianceMatrix, spec: QuenchSpec) -> CovarianceMatrix:
    """Rotate lattice-site coordinates to the joint normal modes."""
    _require(cov, CONFIGURATION)
    return _conjugate(cov, normal_modes(spec.joint_chain).transform, JOINT)


def joint_covariance(spec: QuenchSpec) -> CovarianceMatrix:
    """Initial covariance pushed through both rotations."""
    return to_joint_modes(to_configuration(initial_covariance(spec), spec), spec)


def evolve_covariance(cov: CovarianceMatrix, spec: QuenchSpec, t: float) -> CovarianceMatrix:
    """Free evolution in the joint modes, the symplectic congruence
    sigma(t) = U sigma U^T with per-mode rotation blocks
    (cos wt, sin wt/(m w); -m w sin wt, cos wt)."""
    _require(cov, JOINT)
    w = normal_modes(spec.joint_chain).frequencies
    m = spec.left.mass
    K = cov.n_modes
    c, s = np.cos(w * t), np.sin(w * t)
    U = np.zeros((2 * K, 2 * K))
    U[:K, :K] = np.diag(c)
    U[:K, K:] = np.diag(s / (m * w))
    U[K:, :K] = np.diag(-m * w * s)
    U[K:, K:] = np.diag(c)
    return CovarianceMatrix(sigma=U @ cov.sigma @ U.T, basis_tag=JOINT)


def occupations_from_covariance(cov: CovarianceMatrix, spec: QuenchSpec) -> np.ndarray:
    """Mode occupancies off the covariance diagonal in the joint basis."""
    _require(cov, JOINT)
    w = normal_modes(spec.joint_chain).frequencies
    m, hbar = spec.left.mass, spec.left.hbar
    xx = np.diagonal(cov.block("xx"))
    pp = np.diagonal(cov.block("pp"))
    return 0.5 * (m * w * xx + pp / (m * w)) / hbar - 0.5


def symplectic_eigenvalues(cov: CovarianceMatrix, hbar=1.0) -> np.ndarray:
    """Williamson spectrum in units of hbar (vacuum modes give 1/2).

    Uses the Hermitian similarity sqrt(sigma) (i Omega) sqrt(sigma), whose
    spectrum is +-nu_k, instead of the non-normal i Omega sigma.
    """
    sig = cov.sigma / hbar
    K = cov.n_modes
    omega = np.zeros((2 * K, 2 * K))
    omega[:K, K:] = np.eye(K)
    omega[K:, :K] = -np.eye(K)
    w, v = np.linalg.eigh(sig)
    if np.min(w) < -1e-12:
        raise ValueError("covariance matrix is not positive semidefinite")
    sqrt_sig = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    herm = 1j * (sqrt_sig @ omega @ sqrt_sig)
    ev = np.linalg.eigvalsh(herm)
    pos = np.sort(ev[ev > 0])
    return pos


def uncertainty_defect(cov: CovarianceMatrix, hbar=1.0) -> float:
    """How far the smallest symplectic eigenvalue dips below 1/2 (<= 0 is fine)."""
    return float(0.5 - np.min(symplectic_eigenvalues(cov, hbar)))


# ---------------------------------------------------------------------------
# Window averaging.  Averaging the evolved matrix over a uniform grid only
# needs the Gram matrices of the cos/sin factors, so a window costs
# O(samples K^2) instead of samples full congruences.

def mean_evolved_covariance(cov: CovarianceMatrix, spec: QuenchSpec,
                            window: float, dt: float = 0.5) -> CovarianceMatrix:
    """Uniform-grid time average of sigma(t) over [0, window)."""
    _require(cov, JOINT)
    w = normal_modes(spec.joint_chain).frequencies
    m = spec.left.mass
    ts = np.arange(0.0, window, dt)
    c = np.cos(np.outer(ts, w))
    s = np.sin(np.outer(ts, w)) / (m * w)[None, :]    # position response
    d = -np.sin(np.outer(ts, w)) * (m * w)[None, :]   # momentum response
    S = len(ts)
    cc = c.T @ c / S
    cs = c.T @ s / S
    cd = c.T @ d / S
    ss = s.T @ s / S
    sd = s.T @ d / S
    dd = d.T @ d / S
    axx, axp, app = cov.block("xx"), cov.block("xp"), cov.block("pp")
    xx = cc * axx + cs * axp + cs.T * axp.T + ss * app
    pp = dd * axx + cd.T * axp + cd * axp.T + cc * app
    xp = cd * axx + cc * axp + sd * axp.T + cs.T * app
    K = cov.n_modes
    out = np.zeros((2 * K, 2 * K))
    out[:K, :K] = 0.5 * (xx + xx.T)
    out[K:, K:] = 0.5 * (pp + pp.T)
    out[:K, K:] = xp
    out[K:, :K] = xp.T
    return CovarianceMatrix(sigma=out, basis_tag=JOINT)


def max_offdiagonal(cov: CovarianceMatrix) -> float:
    """Largest |entry| outside the full-matrix diagonal."""
    sig = np.abs(cov.sigma.copy())
    np.fill_diagonal(sig, 0.0)
    return float(sig.max())


def offdiagonal_decay(cov: CovarianceMatrix, spec: QuenchSpec,
                      windows=(125, 250, 500, 1000, 2000, 4000), dt=0.5):
    """Window-averaged off-diagonal residuals and their log-log slope."""
    residuals = [max_offdiagonal(mean_evolved_covariance(cov, spec, T, dt))
                 for T in windows]
    slope = float(np.polyfit(np.log(windows), np.log(residuals), 1)[0])
    return np.asarray(windows, dtype=float), np.asarray(residuals), slope


@dataclass(frozen=True)
class ThermalFormReport:
    passed: bool
    flagged_pairs: list         # 1-based (i, j) with nonzero xp structure at t=0
    windows: np.ndarray
    max_offdiag_avg: np.ndarray
    decay_slope: float
    gge_occupancies: np.ndarray
    b_tol: float


def thermal_form_check(cov: CovarianceMatrix, spec: QuenchSpec,
                       windows=(125, 250, 500, 1000, 2000, 4000), dt=0.5,
                       b_tol=1e-10, margin=3.0) -> ThermalFormReport:
    """Does the window-averaged covariance settle into diagonal (GGE) form?

    Two ingredients: the position-momentum block must vanish at t = 0
    (energy eigenstates guarantee this; a nonzero entry is flagged since it
    breaks the purely oscillatory structure of the evolved off-diagonals),
    and the window-averaged off-diagonal residual must fall like c/T.
    The reported occupancies come from the largest window's average.
    """
    _require(cov, JOINT)
    xp = cov.block("xp")
    flagged = [(i + 1, j + 1) for i, j in zip(*np.nonzero(np.abs(xp) > b_tol))]
    win, resid, slope = offdiagonal_decay(cov, spec, windows, dt)
    c_cal = resid[0] * win[0] * margin
    scaling_ok = bool(np.all(resid[1:] <= c_cal / win[1:]))
    mean_last = mean_evolved_covariance(cov, spec, win[-1], dt)
    occ = occupations_from_covariance(mean_last, spec)
    return ThermalFormReport(
        passed=(not flagged) and scaling_ok,
        flagged_pairs=flagged,
        windows=win,
        max_offdiag_avg=resid,
        decay_slope=slope,
        gge_occupancies=occ,
        b_tol=b_tol,
    )


def vacuum_polarization_check(spec: QuenchSpec) -> float:
    """Max gap between covariance-diagonal occupancies and sum_l beta^2."""
    bog = build_bogoliubov(spec)
    cov = joint_covariance(QuenchSpec(spec.left, spec.right,
                                      spec.initial_state.vacuum(spec.total_size),
                                      spec.time_grid))
    occ = occupations_from_covariance(cov, spec)
    return float(np.max(np.abs(occ - (bog.beta ** 2).sum(axis=0))))
