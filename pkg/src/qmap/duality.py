"""Map/state dictionary and the classical shadow of a quantum map."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import Channel, channel_from_choi
from .tensor_ops import DimensionError, partial_transpose, partial_trace, reshuffle

PPT_NOTE = "separability-equivalent only for N=2"


def max_entangled_state(N: int) -> np.ndarray:
    """Projector onto ``sum_i |i>|i> / sqrt(N)``."""
    if N < 2:
        raise DimensionError("maximally entangled state needs N >= 2")
    psi = np.eye(N, dtype=complex).reshape(-1) / np.sqrt(N)
    return np.outer(psi, psi.conj())


def _vn_entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


@dataclass(frozen=True)
class JamiolkowskiState:
    rho: np.ndarray
    source_dim: int

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    @property
    def entropy(self) -> float:
        return _vn_entropy(self.rho)

    @property
    def pt_min_eig(self) -> float:
        R = partial_transpose(self.rho, self.source_dim, "A")
        return float(np.linalg.eigvalsh((R + R.conj().T) / 2)[0])

    @property
    def is_ppt(self) -> bool:
        return self.pt_min_eig >= -1e-9 * max(np.abs(self.rho).max(), 1e-300)

    def diagnostics(self) -> dict:
        return {"trace": float(np.real(np.trace(self.rho))), "purity": self.purity,
                "entropy": self.entropy, "pt_min_eig": self.pt_min_eig,
                "ppt": self.is_ppt, "ppt_note": PPT_NOTE}


def state_from_map(ch: Channel) -> JamiolkowskiState:
    return JamiolkowskiState(rho=ch.choi / ch.dim, source_dim=ch.dim)


def map_from_state(rho, N: Optional[int] = None) -> Channel:
    rho = np.asarray(rho, dtype=complex)
    if N is None:
        N = int(round(np.sqrt(rho.shape[0])))
    if rho.shape != (N * N, N * N):
        raise DimensionError(f"state of shape {rho.shape} does not live on C^{N} (x) C^{N}")
    return channel_from_choi(N * rho)


def apply_extended(ch: Channel, rho_big) -> np.ndarray:
    """``[Phi (x) 1](rho)`` as ``(L rho^R)^R`` using the Choi matrix ``D = L^R``."""
    rho_big = np.asarray(rho_big, dtype=complex)
    n = ch.dim
    if rho_big.shape != (n * n, n * n):
        raise DimensionError(f"expected a {n * n}x{n * n} state, got {rho_big.shape}")
    return reshuffle(ch.superop @ reshuffle(rho_big, n), n)


def apply_extended_kraus(ops, rho_big) -> np.ndarray:
    """Direct ``sum_i (A_i (x) 1) rho (A_i (x) 1)^dagger``."""
    ops = [np.asarray(A) for A in ops]
    I = np.eye(ops[0].shape[0])
    out = 0
    for A in ops:
        K = np.kron(A, I)
        out = out + K @ rho_big @ K.conj().T
    return out


# -- classical shadow -------------------------------------------------------------

def _real_if_exact(a: np.ndarray) -> np.ndarray:
    return a.real.copy() if np.all(a.imag == 0) else a.copy()


@dataclass(frozen=True)
class ClassicalShadow:
    transition: np.ndarray
    prob_vector: np.ndarray


def classical_shadow(ch: Channel) -> ClassicalShadow:
    """``T[m, n] = L[mm, nn]`` and ``t = diag(D) / N``."""
    n = ch.dim
    idx = np.arange(n) * (n + 1)
    return ClassicalShadow(transition=_real_if_exact(ch.superop[np.ix_(idx, idx)]),
                           prob_vector=_real_if_exact(np.diag(ch.choi) / n))


def diagram_commutes(ch: Channel, tol: float = 1e-14) -> bool:
    """Both routes to the classical probability vector agree."""
    sh = classical_shadow(ch)
    return bool(np.max(np.abs(sh.transition.reshape(-1) / ch.dim - sh.prob_vector), initial=0) <= tol)


def reshaped_stochastic(T) -> np.ndarray:
    """Probability vector ``reshape(T) / N`` of a stochastic matrix."""
    T = np.asarray(T, dtype=float)
    return T.reshape(-1) / T.shape[0]


@dataclass(frozen=True)
class ClassicalClasses:
    stochastic: bool
    bistochastic: bool
    symmetric: bool
    permutation: bool
    orthostochastic: Optional[bool]
    unistochastic: Optional[bool]
    witness: Optional[np.ndarray] = None
    heuristic: bool = False


def verify_unistochastic_witness(T, U, tol: float = 1e-10) -> bool:
    U = np.asarray(U)
    if not np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=tol):
        return False
    return bool(np.allclose(np.abs(U) ** 2, np.asarray(T, dtype=float), atol=tol))


def classical_classes(T, tol: float = 1e-10, witness=None) -> ClassicalClasses:
    """Flags for a real square matrix under the column-stochastic convention.

    For N=2 every bistochastic matrix is orthostochastic and a rotation witness
    is built. For larger N only a supplied unitary ``witness`` is checked.
    """
    T = np.asarray(T)
    if np.iscomplexobj(T):
        if np.any(np.abs(T.imag) > tol):
            raise ValueError("classical matrix must be real")
        T = T.real
    T = T.astype(float)
    n = T.shape[0]
    if T.shape != (n, n):
        raise DimensionError("classical matrix must be square")
    stochastic = bool(np.all(T >= -tol) and np.allclose(T.sum(axis=0), 1, atol=tol))
    bistochastic = stochastic and bool(np.allclose(T.sum(axis=1), 1, atol=tol))
    symmetric = bool(np.allclose(T, T.T, atol=tol))
    binary = np.all((np.abs(T) <= tol) | (np.abs(T - 1) <= tol))
    permutation = bool(bistochastic and binary)
    ortho = uni = None
    wit = None
    heuristic = False
    if not bistochastic:
        ortho = uni = False
    elif n == 2:
        a = float(np.clip(T[0, 0], 0, 1))
        wit = np.array([[np.sqrt(a), np.sqrt(1 - a)], [-np.sqrt(1 - a), np.sqrt(a)]])
        ortho = uni = True
    elif permutation:
        wit = np.round(T)
        ortho = uni = True
    elif witness is not None:
        W = np.asarray(witness)
        ok = verify_unistochastic_witness(T, W, tol)
        uni = ok or None
        ortho = (ok and bool(np.allclose(W.imag if np.iscomplexobj(W) else 0, 0, atol=tol))) or None
        wit = W if ok else None
        heuristic = True
    else:
        heuristic = True
    return ClassicalClasses(stochastic=stochastic, bistochastic=bistochastic, symmetric=symmetric,
                            permutation=permutation, orthostochastic=ortho, unistochastic=uni,
                            witness=wit, heuristic=heuristic)


def embedding_square_vertices() -> np.ndarray:
    """Reshaped vectors of the four deterministic 2x2 stochastic matrices."""
    verts = []
    for a in (0.0, 1.0):
        for b in (0.0, 1.0):
            T = np.array([[a, b], [1 - a, 1 - b]])
            verts.append(reshaped_stochastic(T))
    return np.array(verts)
