"""Time evolution of occupation numbers and subsystem energies.

The quadruple mode sums collapse to bilinear forms: for each disjoint mode m
the four correlator channels are contracted against precomputed coefficient
rows, with the time dependence isolated in K x K phase matrices.  Per time
sample the cost is O(K^2) after the one-off setup, which is what makes the
long averaging windows (T up to several thousand) cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import QuenchSpec, normal_modes
from .bogoliubov import BogoliubovMap, CorrelationSet, ConsistencyError, joint_energy


class NumericalError(ArithmeticError):
    """A numeric sanity bound was violated (for instance imaginary residue)."""


class DegenerateInitial(ValueError):
    """The initial fluctuation is zero, the normalized ratio is undefined."""


@dataclass(frozen=True)
class ObservableSeries:
    times: np.ndarray
    n_expect: np.ndarray        # shape (T, N+M)
    e_left: np.ndarray
    e_right: np.ndarray
    e_total_joint: float
    long_time_avg: np.ndarray
    e_left_avg: float
    e_right_avg: float
    n_left: int
    n_right: int


@dataclass(frozen=True)
class FluctuationSeries:
    times: np.ndarray
    ratio: np.ndarray
    first_recurrence_time: Optional[float]
    recurrence_threshold: float
    relaxation_skip: float


@dataclass(frozen=True)
class PerModeEnergy:
    times: np.ndarray
    left: np.ndarray            # E_N(t)/N
    right: np.ndarray           # E_M(t)/M
    left_avg: float
    right_avg: float


def _phase_kernel(bog, corr, times, chunk=256, imag_tol=1e-8):
    """<n_m(t)> for all m and t.  Channels: two co-rotating (particle
    conserving) and two counter-rotating (pair) terms with phases
    exp(+-i (w_l +- w_k) t / hbar)."""
    a, b = bog.alpha, bog.beta
    w = bog.omega_joint / bog.hbar
    wm = w[:, None] - w[None, :]
    wp = w[:, None] + w[None, :]
    c1, c2 = corr.cdag_c, corr.cdag_cdag
    c3, c4 = corr.c_c, corr.c_cdag
    times = np.asarray(times, dtype=float)
    out = np.empty((times.size, bog.total_size))
    worst_imag = 0.0
    for start in range(0, times.size, chunk):
        ts = times[start:start + chunk]
        pm = np.exp(1j * ts[:, None, None] * wm[None, :, :])
        pp = np.exp(1j * ts[:, None, None] * wp[None, :, :])
        vals = np.einsum("ml,tlk,mk->tm", a, pm * c1, a, optimize=True)
        vals += np.einsum("ml,tlk,mk->tm", a, pp * c2, b, optimize=True)
        vals += np.einsum("ml,tlk,mk->tm", b, np.conj(pp) * c3, a, optimize=True)
        vals += np.einsum("ml,tlk,mk->tm", b, np.conj(pm) * c4, b, optimize=True)
        worst_imag = max(worst_imag, float(np.max(np.abs(vals.imag))))
        out[start:start + chunk] = vals.real
    if worst_imag > imag_tol:
        raise NumericalError(f"imaginary residue {worst_imag:.3e} exceeds {imag_tol:g}")
    return out


def evolve_occupations_direct(bog, corr, times):
    """Direct evaluation of the mode sums, kept as a slow reference for tests."""
    K = bog.total_size
    a, b = bog.alpha, bog.beta
    w = bog.omega_joint / bog.hbar
    times = np.asarray(times, dtype=float)
    out = np.zeros((times.size, K))
    for it, t in enumerate(times):
        for m in range(K):
            acc = 0.0 + 0.0j
            for l in range(K):
                for k in range(K):
                    acc += a[m, l] * a[m, k] * np.exp(1j * (w[l] - w[k]) * t) * corr.cdag_c[l, k]
                    acc += a[m, l] * b[m, k] * np.exp(1j * (w[l] + w[k]) * t) * corr.cdag_cdag[l, k]
                    acc += b[m, l] * a[m, k] * np.exp(-1j * (w[l] + w[k]) * t) * corr.c_c[l, k]
                    acc += b[m, l] * b[m, k] * np.exp(-1j * (w[l] - w[k]) * t) * corr.c_cdag[l, k]
            out[it, m] = acc.real
    return out


def long_time_average(bog: BogoliubovMap, corr: CorrelationSet) -> np.ndarray:
    """Infinite-time average of <n_m(t)>: only the diagonal (stationary)
    terms of the co- and counter-rotating channels survive."""
    return (bog.alpha ** 2) @ np.diagonal(corr.cdag_c) + (bog.beta ** 2) @ np.diagonal(corr.c_cdag)


def evolve_occupations(spec: QuenchSpec, bog: BogoliubovMap, corr: CorrelationSet,
                       times=None, chunk=256) -> ObservableSeries:
    """Occupation numbers and subsystem energies on a time grid."""
    corr.validate()
    if bog.total_size != spec.total_size:
        raise ConsistencyError("spec and map sizes differ")
    times = spec.time_grid if times is None else np.asarray(times, dtype=float)
    n_t = _phase_kernel(bog, corr, times, chunk=chunk)
    if np.min(n_t) < -1e-8:
        raise NumericalError(f"negative occupancy {np.min(n_t):.3e}")

    hbar = spec.left.hbar
    omega = bog.omega_pre
    N = spec.n_left
    e_left = hbar * (n_t[:, :N] + 0.5) @ omega[:N]
    e_right = hbar * (n_t[:, N:] + 0.5) @ omega[N:]
    avg = long_time_average(bog, corr)
    return ObservableSeries(
        times=times,
        n_expect=n_t,
        e_left=e_left,
        e_right=e_right,
        e_total_joint=joint_energy(bog, corr),
        long_time_avg=avg,
        e_left_avg=float(hbar * np.sum(omega[:N] * (avg[:N] + 0.5))),
        e_right_avg=float(hbar * np.sum(omega[N:] * (avg[N:] + 0.5))),
        n_left=N,
        n_right=spec.n_right,
    )


def fluctuation_series(series: ObservableSeries, threshold=0.5,
                       relaxation_skip=50.0) -> FluctuationSeries:
    """Normalized fluctuation of the right-chain energy around its average.

    ratio(t) = |E_M(t) - E_M_avg| / |E_M(0) - E_M_avg|.  The first
    recurrence is the earliest sample beyond the relaxation skip where the
    ratio climbs back above the threshold.
    """
    denom = abs(series.e_right[0] - series.e_right_avg)
    if denom < 1e-12:
        raise DegenerateInitial("E_M starts at its long-time average")
    ratio = np.abs(series.e_right - series.e_right_avg) / denom
    ratio[0] = 1.0
    first = None
    mask = (series.times > relaxation_skip) & (ratio >= threshold)
    hits = np.nonzero(mask)[0]
    if hits.size:
        first = float(series.times[hits[0]])
    return FluctuationSeries(
        times=series.times,
        ratio=ratio,
        first_recurrence_time=first,
        recurrence_threshold=threshold,
        relaxation_skip=relaxation_skip,
    )


def per_mode_energy(series: ObservableSeries, spec: QuenchSpec) -> PerModeEnergy:
    N, M = spec.n_left, spec.n_right
    return PerModeEnergy(
        times=series.times,
        left=series.e_left / N,
        right=series.e_right / M,
        left_avg=series.e_left_avg / N,
        right_avg=series.e_right_avg / M,
    )


def occupation_time_mean(series: ObservableSeries) -> np.ndarray:
    """Plain grid mean of <n_m(t)>, the finite-T estimate of the average."""
    return series.n_expect.mean(axis=0)


def beat_set(bog: BogoliubovMap):
    """All |w'_l +- w'_k| / hbar values, the only frequencies that can appear
    in the spectrum of <n_m(t)>."""
    w = bog.omega_joint / bog.hbar
    diffs = np.abs(w[:, None] - w[None, :]).ravel()
    sums = np.abs(w[:, None] + w[None, :]).ravel()
    return np.unique(np.round(np.concatenate([diffs, sums]), 12))
