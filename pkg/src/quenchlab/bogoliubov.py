"""Bogoliubov map between pre-quench and post-quench mode operators.

Conventions, fixed once and used everywhere downstream:

    c_k = sum_l  alpha[l, k] a_l - beta[l, k] a_l^dag
    a_l = sum_k  alpha[l, k] c_k + beta[l, k] c_k^dag

so the row index always runs over pre-quench (disjoint) modes and the
column index over post-quench (joint) modes.  Both matrices are real.
The orientation was locked by certifying the resulting correlators
against the truncated-Fock oracle, not by notation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import QuenchSpec, FockExcitation, normal_modes, sine_transform


class SingularAlpha(np.linalg.LinAlgError):
    """alpha is numerically singular; the quench configuration is degenerate."""


class ConsistencyError(ValueError):
    """Inputs violate an algebraic invariant they were assumed to satisfy."""


@dataclass(frozen=True)
class BogoliubovMap:
    """alpha/beta coefficients plus the ingredients they were built from."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    overlap: np.ndarray
    omega_pre: np.ndarray       # disjoint-mode frequencies, left block then right
    omega_joint: np.ndarray
    n_left: int
    n_right: int
    hbar: float = 1.0

    @property
    def total_size(self):
        return self.n_left + self.n_right

    def symplectic_defect(self):
        """Max violation of the bosonic commutation constraints, both orientations."""
        a, b = self.alpha, self.beta
        eye = np.eye(self.total_size)
        return max(
            np.max(np.abs(a @ a.T - b @ b.T - eye)),
            np.max(np.abs(a @ b.T - b @ a.T)),
            np.max(np.abs(a.T @ a - b.T @ b - eye)),
            np.max(np.abs(a.T @ b - b.T @ a)),
        )


@dataclass(frozen=True)
class FMatrix:
    """Symmetric matrix of the Gaussian vacuum relation, F = alpha^{-1} beta."""

    f: np.ndarray

    @property
    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.f))))


@dataclass(frozen=True)
class CorrelationSet:
    """The four quadratic correlators of the joint-mode operators at t = 0."""

    cdag_c: np.ndarray
    c_cdag: np.ndarray
    c_c: np.ndarray
    cdag_cdag: np.ndarray

    def commutator_defect(self):
        eye = np.eye(self.cdag_c.shape[0])
        return float(np.max(np.abs(self.c_cdag - self.cdag_c.T - eye)))

    def validate(self, tol=1e-8):
        if self.commutator_defect() > tol:
            raise ConsistencyError(
                f"correlator commutator defect {self.commutator_defect():.3e} > {tol:g}")
        if np.min(np.diagonal(self.cdag_c)) < -tol:
            raise ConsistencyError("negative occupancy on cdag_c diagonal")


def build_bogoliubov(spec: QuenchSpec) -> BogoliubovMap:
    """Construct the Bogoliubov map for the given quench.

    The overlap matrix is the product of the block-diagonal disjoint sine
    transform with the joint sine transform, which evaluates the double
    sine sums as one dense matrix product.
    """
    N, M, K = spec.n_left, spec.n_right, spec.total_size
    left = normal_modes(spec.left)
    right = normal_modes(spec.right)
    joint = normal_modes(spec.joint_chain)

    blocks = np.zeros((K, K))
    blocks[:N, :N] = left.transform
    blocks[N:, N:] = right.transform
    overlap = blocks @ joint.transform

    omega_pre = np.concatenate([left.frequencies, right.frequencies])
    gamma = 0.5 * np.log(omega_pre[:, None] / joint.frequencies[None, :])
    return BogoliubovMap(
        alpha=overlap * np.cosh(gamma),
        beta=overlap * np.sinh(gamma),
        gamma=gamma,
        overlap=overlap,
        omega_pre=omega_pre,
        omega_joint=joint.frequencies,
        n_left=N,
        n_right=M,
        hbar=spec.left.hbar,
    )


def f_matrix(bog: BogoliubovMap, cond_limit=1e12, sym_tol=1e-8) -> FMatrix:
    """Solve alpha F = beta for the Gaussian vacuum-relation matrix."""
    cond = np.linalg.cond(bog.alpha)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularAlpha(f"cond(alpha) = {cond:.3e} exceeds {cond_limit:g}")
    f = np.linalg.solve(bog.alpha, bog.beta)
    defect = np.max(np.abs(f - f.T))
    if defect > sym_tol:
        raise ConsistencyError(f"F symmetry defect {defect:.3e} > {sym_tol:g}")
    return FMatrix(f=f)


def initial_correlations(bog: BogoliubovMap, state: FockExcitation) -> CorrelationSet:
    """Correlators of the joint-mode operators in a disjoint-mode Fock state.

    Obtained from the inverse map c_k = sum_l alpha[l,k] a_l - beta[l,k] a_l^dag
    with <a^dag a> = diag(n), <a a^dag> = diag(n+1) and no anomalous pre-quench
    moments.  All four matrices are real; c_c and cdag_cdag coincide.
    """
    if len(state.occupations) != bog.total_size:
        raise ConsistencyError("state length does not match the map")
    a, b = bog.alpha, bog.beta
    n = state.as_array()
    an = a * n[:, None]
    bn = b * n[:, None]
    a1 = a * (1.0 + n)[:, None]
    b1 = b * (1.0 + n)[:, None]
    cdag_c = b.T @ b1 + a.T @ an
    c_cdag = a.T @ a1 + b.T @ bn
    c_c = -(a.T @ b1 + b.T @ an)
    return CorrelationSet(cdag_c=cdag_c, c_cdag=c_cdag, c_c=c_c, cdag_cdag=c_c.T.copy())


def emitted_occupations(bog: BogoliubovMap, state: FockExcitation) -> np.ndarray:
    """Post-quench mode occupancies: vacuum polarization plus stimulated part.

    <n'_k> = sum_l beta[l,k]^2 + sum_j (alpha[j,k]^2 + beta[j,k]^2) n_j.
    Equals the diagonal of initial_correlations(...).cdag_c.
    """
    n = state.as_array()
    b2 = bog.beta ** 2
    return b2.sum(axis=0) + n @ (bog.alpha ** 2 + b2)


def moments_pre_to_joint(bog, a1, a4, a3, a2):
    """Map generic pre-quench quadratic moments to joint-mode correlators.

    Arguments are <a^dag a>, <a a^dag>, <a a>, <a^dag a^dag> as matrices.
    """
    a, b = bog.alpha, bog.beta
    c1 = a.T @ a1 @ a - a.T @ a2 @ b - b.T @ a3 @ a + b.T @ a4 @ b
    c4 = a.T @ a4 @ a - a.T @ a3 @ b - b.T @ a2 @ a + b.T @ a1 @ b
    c3 = a.T @ a3 @ a - a.T @ a4 @ b - b.T @ a1 @ a + b.T @ a2 @ b
    c2 = a.T @ a2 @ a - a.T @ a1 @ b - b.T @ a4 @ a + b.T @ a3 @ b
    return c1, c4, c3, c2


def moments_joint_to_pre(bog, c1, c4, c3, c2):
    """Inverse of moments_pre_to_joint, via a_l = sum_k alpha c_k + beta c_k^dag."""
    a, b = bog.alpha, bog.beta
    a1 = a @ c1 @ a.T + a @ c2 @ b.T + b @ c3 @ a.T + b @ c4 @ b.T
    a4 = a @ c4 @ a.T + a @ c3 @ b.T + b @ c2 @ a.T + b @ c1 @ b.T
    a3 = a @ c3 @ a.T + a @ c4 @ b.T + b @ c1 @ a.T + b @ c2 @ b.T
    a2 = a @ c2 @ a.T + a @ c1 @ b.T + b @ c4 @ a.T + b @ c3 @ b.T
    return a1, a4, a3, a2


def pre_quench_energy(spec: QuenchSpec) -> float:
    """<H> of the joint Hamiltonian in the pre-quench Fock state.

    The coupling term has zero expectation in any product of Fock states
    (positions have vanishing means and the chains are uncorrelated), so
    only the disjoint mode energies contribute.
    """
    left = normal_modes(spec.left)
    right = normal_modes(spec.right)
    omega = np.concatenate([left.frequencies, right.frequencies])
    n = spec.initial_state.as_array()
    return float(spec.left.hbar * np.sum(omega * (n + 0.5)))


def joint_energy(bog: BogoliubovMap, corr: CorrelationSet) -> float:
    """<H> from the joint-mode side, sum_k hbar w'_k (<n'_k> + 1/2)."""
    return float(bog.hbar * np.sum(bog.omega_joint * (np.diagonal(corr.cdag_c) + 0.5)))


def mirror_permutation(K):
    """Site-reflection permutation matrix for a joint chain of K sites."""
    return np.eye(K)[::-1]
