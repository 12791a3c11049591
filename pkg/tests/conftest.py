import numpy as np
import pytest

from quenchlab.model import ChainSpec, QuenchSpec, FockExcitation, default_time_grid


def make_spec(N, M, modes=(), t_max=2000.0, t_steps=2001, mass=1.0,
              omega0=1.0, hbar=1.0):
    """QuenchSpec with quanta in the given 1-based pre-chain modes."""
    left = ChainSpec(N, mass, omega0, hbar)
    right = ChainSpec(M, mass, omega0, hbar)
    state = FockExcitation.from_modes(N + M, list(modes))
    return QuenchSpec(left, right, state, default_time_grid(t_max, t_steps))


def eigh_bogoliubov(spec):
    """Independent route to the Bogoliubov coefficients.

    Diagonalizes the stiffness matrices numerically instead of using the
    closed-form sine basis, fixes the eigenvector sign by making the first
    component positive, and assembles alpha and beta from the frequency
    mismatch factors. Shares no code with the package implementation.
    """
    m = spec.left.mass
    w0 = spec.left.omega0
    N, M, K = spec.n_left, spec.n_right, spec.total_size

    def stiffness(n):
        k = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
        return m * w0 ** 2 * k

    def modes_of(kmat):
        evals, vecs = np.linalg.eigh(kmat)
        order = np.argsort(evals)
        evals, vecs = evals[order], vecs[:, order]
        for j in range(vecs.shape[1]):
            lead = vecs[np.nonzero(np.abs(vecs[:, j]) > 1e-12)[0][0], j]
            if lead < 0:
                vecs[:, j] = -vecs[:, j]
        return np.sqrt(evals / m), vecs

    w_left, v_left = modes_of(stiffness(N))
    w_right, v_right = modes_of(stiffness(M))
    w_pre = np.concatenate([w_left, w_right])
    v_pre = np.zeros((K, K))
    v_pre[:N, :N] = v_left
    v_pre[N:, N:] = v_right

    joint = stiffness(K)
    w_joint, v_joint = modes_of(joint)

    overlap = v_pre.T @ v_joint
    ratio = np.sqrt(np.outer(w_pre, 1.0 / w_joint))
    alpha = overlap * 0.5 * (ratio + 1.0 / ratio)
    beta = overlap * 0.5 * (ratio - 1.0 / ratio)
    return alpha, beta, w_pre, w_joint, overlap


@pytest.fixture(scope="session")
def spec22():
    return make_spec(2, 2, t_max=50.0, t_steps=51)


@pytest.fixture(scope="session")
def spec_5_10():
    return make_spec(5, 10, modes=(3, 4))
