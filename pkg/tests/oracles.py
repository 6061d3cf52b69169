"""Independent reference computations used to freeze expected test values.

Everything here is deliberately separate from the package's own code paths:
closed forms for binary pure-state ensembles and a dense brute-force grid
over qubit projective measurements and priors.
"""

import math

import numpy as np


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def pure_pair_capacity(s: float) -> float:
    """Holevo capacity of two equiprobable pure states with overlap s."""
    return binary_entropy((1 - s) / 2)


def helstrom_crossover(s: float) -> float:
    """Error probability of optimal discrimination of an equiprobable pure pair."""
    return (1 - math.sqrt(1 - s * s)) / 2


def pure_pair_c1(s: float) -> float:
    """Single-copy capacity of the pure pair: Helstrom channel at uniform prior."""
    return 1.0 - binary_entropy(helstrom_crossover(s))


def block_success(s: float, n: int) -> float:
    """Two-codeword block discrimination success with per-letter overlap s."""
    return (1 + math.sqrt(1 - s ** (2 * n))) / 2


def majority_error(eps: float, n: int) -> float:
    """Majority-vote error of n independent symmetric slots (odd n)."""
    total = 0.0
    for k in range((n // 2) + 1, n + 1):
        total += math.comb(n, k) * eps**k * (1 - eps) ** (n - k)
    return total


def _bloch(v: np.ndarray) -> np.ndarray:
    rho = np.outer(v, v.conj())
    return np.array(
        [2 * rho[0, 1].real, 2 * rho[1, 0].imag, (rho[0, 0] - rho[1, 1]).real]
    )


def grid_c1_qubit(psi0, psi1, n_angle: int = 1501, n_prior: int = 1501) -> float:
    """Brute-force single-copy capacity of a binary pure qubit ensemble.

    Scans projective measurements along axes in the Bloch plane spanned by
    the two states (components orthogonal to that plane only dilute the
    statistics) jointly with a dense prior grid.
    """
    r0, r1 = _bloch(np.asarray(psi0, complex)), _bloch(np.asarray(psi1, complex))
    e1 = r0 / np.linalg.norm(r0)
    r1p = r1 - (r1 @ e1) * e1
    if np.linalg.norm(r1p) < 1e-12:
        e2 = np.zeros(3)
        e2[int(np.argmin(np.abs(e1)))] = 1.0
        e2 -= (e2 @ e1) * e1
        e2 /= np.linalg.norm(e2)
    else:
        e2 = r1p / np.linalg.norm(r1p)
    angles = np.linspace(0.0, np.pi, n_angle)
    axes = np.outer(np.cos(angles), e1) + np.outer(np.sin(angles), e2)
    q0 = 0.5 * (1 + axes @ r0)
    q1 = 0.5 * (1 + axes @ r1)
    ps = np.linspace(0.0, 1.0, n_prior)

    def h(x):
        x = np.clip(x, 0.0, 1.0)
        out = np.zeros_like(x)
        m = (x > 0) & (x < 1)
        out[m] = -x[m] * np.log2(x[m]) - (1 - x[m]) * np.log2(1 - x[m])
        return out

    mix = ps[:, None] * q0[None, :] + (1 - ps)[:, None] * q1[None, :]
    vals = h(mix) - ps[:, None] * h(q0)[None, :] - (1 - ps)[:, None] * h(q1)[None, :]
    return float(vals.max())
