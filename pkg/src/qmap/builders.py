"""Constructors for the channel families: dilations, unistochastic maps,
random external fields, one-qubit Bloch maps and generalized Choi maps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .channel import (
    Channel,
    KrausSet,
    NotHermiticityPreserving,
    channel_from_choi,
    channel_from_kraus,
    compose,
    is_hermiticity_preserving,
    is_trace_preserving,
    unitary_channel,
)
from .tensor_ops import DimensionError, is_hermitian, is_unitary, reshuffle

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class EnvironmentSpec:
    """Coupling ``U`` on H_N (x) H_k and environment state ``sigma`` (k x k).

    The system is the first tensor factor; the environment is traced out.
    """

    env_state: np.ndarray
    coupling: np.ndarray
    seed: Optional[int] = None

    @property
    def env_dim(self) -> int:
        return self.env_state.shape[0]

    @property
    def sys_dim(self) -> int:
        return self.coupling.shape[0] // self.env_dim


@dataclass(frozen=True)
class BlochAffine:
    """One-qubit affine map ``tau -> O1 diag(eta) O2 tau + kappa``."""

    eta: np.ndarray
    kappa: np.ndarray
    rotations: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @property
    def t(self) -> np.ndarray:
        T = np.diag(self.eta)
        if self.rotations is not None:
            T = self.rotations[0] @ T @ self.rotations[1]
        return T

    @property
    def is_unital(self) -> bool:
        return bool(np.allclose(self.kappa, 0.0, atol=1e-12))


# -- environmental forms --------------------------------------------------------

def environmental_channel(spec: EnvironmentSpec, tol: float = 1e-10) -> Channel:
    """``rho -> Tr_env[U (rho (x) sigma) U^dagger]`` as a Kraus set of up to k^2 terms.

    Kraus operators are ``sqrt(q_nu) <mu|U|e_nu>`` over environment basis
    states mu and eigenvectors e_nu of sigma with q_nu > 0.
    """
    sigma = np.asarray(spec.env_state, dtype=complex)
    U = np.asarray(spec.coupling, dtype=complex)
    k = sigma.shape[0]
    if sigma.shape != (k, k) or not is_hermitian(sigma, tol):
        raise ValueError("environment state must be a Hermitian k x k matrix")
    if U.shape[0] % k or U.shape[0] != U.shape[1]:
        raise DimensionError(f"coupling of shape {U.shape} does not fit environment dimension {k}")
    if not is_unitary(U, tol):
        raise ValueError("coupling is not unitary")
    q, E = np.linalg.eigh((sigma + sigma.conj().T) / 2)
    if q[0] < -tol or abs(q.sum() - 1) > tol:
        raise ValueError("environment state must be positive with unit trace")
    n = U.shape[0] // k
    U4 = U.reshape(n, k, n, k)  # [m, mu, n, nu]
    ops = []
    for qi, e in zip(q[::-1], E[:, ::-1].T):
        if qi <= tol:
            continue
        block = np.einsum("manb,b->amn", U4, e)  # [mu, m, n]
        ops.extend(np.sqrt(qi) * block[mu] for mu in range(k))
    return channel_from_kraus(ops, provenance="dilation")


def unistochastic_channel(U, tol: float = 1e-10) -> Channel:
    """Couple to a maximally mixed N-level environment with ``U`` of size N^2."""
    U = np.asarray(U, dtype=complex)
    n = int(round(np.sqrt(U.shape[0])))
    if n * n != U.shape[0]:
        raise DimensionError(f"size {U.shape[0]} is not a perfect square")
    return k_unistochastic_channel(U, 1, tol)


def k_unistochastic_channel(U, K: int, tol: float = 1e-10) -> Channel:
    """Environment of size N^K in the maximally mixed state, ``U`` of size N^(1+K)."""
    U = np.asarray(U, dtype=complex)
    size = U.shape[0]
    n = int(round(size ** (1.0 / (1 + K))))
    if K < 1 or n ** (1 + K) != size:
        raise DimensionError(f"size {size} is not N^(1+K) for K={K}")
    k = n ** K
    ch = environmental_channel(EnvironmentSpec(np.eye(k) / k, U), tol)
    return Channel(ch.superop, kraus=ch.kraus, provenance="unistochastic")


def unistochastic_choi(U) -> np.ndarray:
    """Closed form ``D = U^R (U^R)^dagger / N`` for the environment-second convention."""
    U = np.asarray(U, dtype=complex)
    n = int(round(np.sqrt(U.shape[0])))
    UR = reshuffle(U, (n, n))
    return UR @ UR.conj().T / n


def orthostochastic_channel(O, tol: float = 1e-10) -> Channel:
    O = np.asarray(O)
    if np.iscomplexobj(O) and np.max(np.abs(O.imag)) > tol:
        raise ValueError("orthostochastic maps need a real orthogonal matrix")
    O = O.real
    if not is_unitary(O, tol):
        raise ValueError("matrix is not orthogonal")
    ch = unistochastic_channel(O, tol)
    return Channel(ch.superop, kraus=ch.kraus, provenance="orthostochastic")


def _complete_columns(U: np.ndarray, filled: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Fill the remaining columns of ``U`` with an orthonormal completion.

    Modified Gram-Schmidt, done twice per vector to keep orthogonality at
    roundoff level.
    """
    size = U.shape[0]
    basis = [U[:, j] for j in filled]
    free = [j for j in range(size) if j not in set(filled)]
    for j in free:
        while True:
            v = rng.normal(size=size) + 1j * rng.normal(size=size)
            for _ in range(2):
                for b in basis:
                    v = v - np.vdot(b, v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-6:
                break
        v = v / nv
        U[:, j] = v
        basis.append(v)
    return U


def stinespring_dilation(ks, seed: int = 0, tol: float = 1e-10) -> EnvironmentSpec:
    """Unitary dilation of a trace-preserving Kraus set with k operators.

    With environment state |0><0|, ``U[(m, mu), (n, 0)] = A_mu[m, n]``; the other
    N(k-1) columns are an arbitrary orthonormal completion seeded by ``seed``.
    """
    ops = [np.asarray(A, dtype=complex) for A in (ks.operators if isinstance(ks, KrausSet) else ks)]
    if not ops:
        raise ValueError("empty Kraus set")
    n, k = ops[0].shape[0], len(ops)
    E = sum(A.conj().T @ A for A in ops)
    if np.max(np.abs(E - np.eye(n))) > tol:
        raise ValueError("Kraus set is not trace preserving; no unitary dilation exists")
    U = np.zeros((n * k, n * k), dtype=complex)
    U4 = U.reshape(n, k, n, k)
    for mu, A in enumerate(ops):
        U4[:, mu, :, 0] = A
    filled = [col * k for col in range(n)]
    U = _complete_columns(U, filled, np.random.default_rng(seed))
    sigma = np.zeros((k, k), dtype=complex)
    sigma[0, 0] = 1
    return EnvironmentSpec(env_state=sigma, coupling=U, seed=seed)


def random_external_field(ps, Vs, tol: float = 1e-10) -> Channel:
    """Convex mixture of unitary conjugations ``sum_i p_i V_i rho V_i^dagger``."""
    ps = np.asarray(ps, dtype=float)
    if ps.ndim != 1 or len(ps) != len(Vs) or np.any(ps <= 0) or abs(ps.sum() - 1) > tol:
        raise ValueError("probabilities must be positive, sum to one, and match the unitaries")
    ops = []
    for p, V in zip(ps, Vs):
        V = np.asarray(V, dtype=complex)
        if not is_unitary(V, tol):
            raise ValueError("random external field members must be unitary")
        ops.append(np.sqrt(p) * V)
    return channel_from_kraus(ops, provenance="random_external_field")


# -- one-qubit maps -----------------------------------------------------------

def pauli_channel(weights, tol: float = 1e-10) -> Channel:
    """``rho -> sum_i w_i sigma_i rho sigma_i`` with ``w`` the rescaled Choi spectrum."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (4,):
        raise ValueError("Pauli channel needs four weights")
    if np.any(w < -tol):
        raise ValueError("Pauli weights must be non-negative")
    if abs(w.sum() - 1) > tol:
        raise ValueError("Pauli weights must sum to one")
    ops = [np.sqrt(max(wi, 0.0)) * s for wi, s in zip(w, PAULI) if wi > 0]
    return channel_from_kraus(ops, provenance="pauli")


def pauli_weights_from_eta(eta) -> np.ndarray:
    ex, ey, ez = eta
    return np.array([1 + ex + ey + ez, 1 + ex - ey - ez, 1 - ex + ey - ez, 1 - ex - ey + ez]) / 4


def fujiwara_algoet(eta, tol: float = 1e-9) -> bool:
    """CP test for unital qubit maps: ``(1 +- eta_z)^2 >= (eta_x +- eta_y)^2``.

    Evaluated as ``1 +- eta_z >= |eta_x +- eta_y|``, which is the same inside
    the cube ``|eta_i| <= 1`` and stays equal to Choi positivity outside it.
    """
    ex, ey, ez = (float(e) for e in eta)
    return 1 + ez - abs(ex + ey) >= -tol and 1 - ez - abs(ex - ey) >= -tol


def eta_choi_eigenvalues(eta) -> np.ndarray:
    """Closed-form Choi spectrum ``(d0, d1, d2, d3)`` of the unital diagonal map."""
    ex, ey, ez = eta
    return 0.5 * np.array([1 + ez + (ex + ey), 1 - ez + (ex - ey),
                           1 - ez - (ex - ey), 1 + ez - (ex + ey)])


def _bloch_choi_diagonal(eta, kappa) -> np.ndarray:
    ex, ey, ez = eta
    kx, ky, kz = kappa
    # row layout as usually quoted; its transpose implements tau -> eta*tau + kappa under D = L^R
    D = 0.5 * np.array([
        [1 + ez + kz, 0, kx + 1j * ky, ex + ey],
        [0, 1 - ez + kz, ex - ey, kx + 1j * ky],
        [kx - 1j * ky, ex - ey, 1 - ez - kz, 0],
        [ex + ey, kx - 1j * ky, 0, 1 + ez - kz],
    ], dtype=complex)
    return D.T


def su2_lift(O) -> np.ndarray:
    """Unitary U with ``U (v.sigma) U^dagger = (O v).sigma``; scalar part taken >= 0."""
    O = np.asarray(O, dtype=float)
    if np.max(np.abs(O.T @ O - np.eye(3))) > 1e-9 or np.linalg.det(O) < 0:
        raise ValueError("rotation must lie in SO(3)")
    x, y, z, w = Rotation.from_matrix(O).as_quat()
    if w < 0:
        x, y, z, w = -x, -y, -z, -w
    return w * PAULI[0] - 1j * (x * PAULI[1] + y * PAULI[2] + z * PAULI[3])


def channel_from_bloch(b: BlochAffine) -> Channel:
    eta = np.asarray(b.eta, dtype=float)
    kappa = np.asarray(b.kappa, dtype=float)
    if b.rotations is None:
        ch = channel_from_choi(_bloch_choi_diagonal(eta, kappa))
        return Channel(ch.superop, provenance="bloch")
    O1, O2 = (np.asarray(O, dtype=float) for O in b.rotations)
    inner = channel_from_choi(_bloch_choi_diagonal(eta, O1.T @ kappa))
    ch = compose(unitary_channel(su2_lift(O1)), compose(inner, unitary_channel(su2_lift(O2))))
    return Channel(ch.superop, provenance="bloch")


def affine_from_channel(ch: Channel, tol: float = 1e-10):
    """Return ``(t, kappa)`` with ``t_ij = Tr(sigma_i Phi(sigma_j)) / 2``."""
    if ch.dim != 2:
        raise DimensionError("Bloch representation is defined for N=2 only")
    if not is_hermiticity_preserving(ch, tol):
        raise NotHermiticityPreserving("Bloch form needs a Hermiticity-preserving map")
    L = ch.superop
    images = [(L @ s.reshape(-1)).reshape(2, 2) for s in PAULI]
    t = np.array([[np.trace(PAULI[i] @ images[j]).real / 2 for j in (1, 2, 3)] for i in (1, 2, 3)])
    kappa = np.array([np.trace(PAULI[i] @ images[0]).real / 2 for i in (1, 2, 3)])
    return t, kappa


def bloch_from_channel(ch: Channel, tol: float = 1e-10) -> BlochAffine:
    """Factor the affine map as ``t = O1 diag(eta) O2`` with O1, O2 in SO(3).

    A diagonal ``t`` is reported as is with no rotations. Otherwise signs are
    moved pairwise so that ``eta_z >= 0``, then ``eta_y >= 0``; ``eta_x``
    carries the sign of det(t).
    """
    t, kappa = affine_from_channel(ch, tol)
    if np.max(np.abs(t - np.diag(np.diag(t)))) <= tol:
        return BlochAffine(eta=np.diag(t).copy(), kappa=kappa)
    U, s, Vt = np.linalg.svd(t)
    eta = s.copy()
    if np.linalg.det(U) < 0:
        U[:, 2] *= -1
        eta[2] *= -1
    if np.linalg.det(Vt) < 0:
        Vt[2, :] *= -1
        eta[2] *= -1
    for i, j in ((1, 2), (0, 1)):
        if eta[j] < 0:
            eta[[i, j]] *= -1
            U[:, [i, j]] *= -1
            Vt[[i, j], :] *= -1
    return BlochAffine(eta=eta, kappa=kappa, rotations=(U, Vt))


# -- catalogue ------------------------------------------------------------------

def _check_prob(name: str, p: float):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def identity(N: int = 2) -> Channel:
    return channel_from_kraus([np.eye(N)], provenance="identity")


def phase_flip(p: float) -> Channel:
    _check_prob("p", p)
    return pauli_channel([1 - p / 2, 0, 0, p / 2])


def bit_flip(p: float) -> Channel:
    _check_prob("p", p)
    return pauli_channel([1 - p / 2, p / 2, 0, 0])


def depolarizing(x: float) -> Channel:
    _check_prob("x", x)
    return pauli_channel([1 - 3 * x / 4, x / 4, x / 4, x / 4])


def amplitude_damping(p: float) -> Channel:
    _check_prob("p", p)
    A1 = np.array([[1, 0], [0, np.sqrt(1 - p)]])
    A2 = np.array([[0, np.sqrt(p)], [0, 0]])
    return channel_from_kraus([A1, A2], provenance="amplitude_damping")


def linear(q: float) -> Channel:
    if abs(q) > 1:
        raise ValueError(f"linear channel needs |q| <= 1, got {q}")
    return pauli_channel(pauli_weights_from_eta((0.0, 0.0, q)))


def planar(q: float, r: float) -> Channel:
    if abs(q) + abs(r) > 1 + 1e-12:
        raise ValueError(f"planar channel needs |q| + |r| <= 1, got q={q}, r={r}")
    return pauli_channel(pauli_weights_from_eta((0.0, r, q)))


def rotation(U) -> Channel:
    ch = unitary_channel(U)
    return Channel(ch.superop, kraus=ch.kraus, provenance="rotation")


def coarse_graining(N: int = 2) -> Channel:
    ops = []
    for i in range(N):
        P = np.zeros((N, N))
        P[i, i] = 1
        ops.append(P)
    return channel_from_kraus(ops, provenance="coarse_graining")


def transposition(N: int = 2) -> Channel:
    """``rho -> rho^T``; superoperator and Choi matrix are both the swap."""
    L = np.eye(N * N).reshape(N, N, N, N).transpose(0, 1, 3, 2).reshape(N * N, N * N)
    return Channel(L, provenance="transposition")


def depolarizing_general(N: int = 2, x: float = 1.0) -> Channel:
    """``(1 - x) id + x Phi_*``; ``x = 1`` is the completely depolarizing channel."""
    _check_prob("x", x)
    D = (1 - x) * np.outer(np.eye(N).reshape(-1), np.eye(N).reshape(-1)) + x * np.eye(N * N) / N
    ch = channel_from_choi(D)
    return Channel(ch.superop, provenance="depolarizing_general")


def choi_map(a: float, b: float, c: float) -> Channel:
    """Generalized Choi map on N=3: ``diag(M diag(rho)) - rho`` with circulant M."""
    if min(a, b, c) < 0:
        raise ValueError("Choi map parameters must be non-negative")
    M = np.array([[a, b, c], [c, a, b], [b, c, a]], dtype=float)
    L = -np.eye(9, dtype=complex)
    for i in range(3):
        for j in range(3):
            L[4 * i, 4 * j] += M[i, j]
    return Channel(L, provenance="choi_map")


def stochastic_embedding(T) -> Channel:
    """Quantum map acting as the stochastic matrix T on diagonals and killing coherences."""
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    if T.shape != (n, n) or np.any(T < 0):
        raise ValueError("transition matrix must be square and non-negative")
    ops = []
    for m in range(n):
        for k in range(n):
            if T[m, k] > 0:
                A = np.zeros((n, n))
                A[m, k] = np.sqrt(T[m, k])
                ops.append(A)
    if not ops:
        return Channel(np.zeros((n * n, n * n)), provenance="classical_stochastic")
    ch = channel_from_kraus(ops)
    return Channel(ch.superop, kraus=ch.kraus, provenance="classical_stochastic")


NAMED = {
    "identity": identity,
    "rotation": rotation,
    "phase_flip": phase_flip,
    "bit_flip": bit_flip,
    "depolarizing": depolarizing,
    "amplitude_damping": amplitude_damping,
    "linear": linear,
    "planar": planar,
    "coarse_graining": coarse_graining,
    "transposition": transposition,
    "depolarizing_general": depolarizing_general,
}


def named_channel(name: str, *params, **kwargs) -> Channel:
    try:
        builder = NAMED[name]
    except KeyError:
        raise ValueError(f"unknown channel family {name!r}; known: {sorted(NAMED)}") from None
    return builder(*params, **kwargs)
