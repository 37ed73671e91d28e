"""Linear maps on N x N matrices stored as superoperators.

``L`` acts on row-major vectorized matrices, ``vec(Phi(rho)) = L @ vec(rho)``,
and the dynamical (Choi) matrix is its reshuffle ``D = L^R``, so that
``D[(m, mu), (n, nu)] = <m| Phi(|mu><nu|) |n>``. This is the ``Phi (x) 1``
convention: the first tensor factor of ``D`` is the output space.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .tensor_ops import (
    DimensionError,
    fix_phase,
    flip,
    is_hermitian,
    is_unitary,
    partial_trace,
    reshuffle,
)

KRAUS_CUTOFF = 1e-11


class NotCompletelyPositive(ValueError):
    """The dynamical matrix has negative eigenvalues."""

    def __init__(self, message: str, neg_rank: int, min_eigenvalue: float):
        super().__init__(message)
        self.neg_rank = neg_rank
        self.min_eigenvalue = min_eigenvalue


class NotHermiticityPreserving(ValueError):
    """The dynamical matrix is not Hermitian."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KrausSet:
    operators: Sequence[np.ndarray]
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(_frozen(A) for A in self.operators))

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    @property
    def is_canonical(self) -> bool:
        return self.weights is not None


class Channel:
    """A linear map on N x N matrices.

    The superoperator is the canonical representation; the Choi matrix is
    computed once at construction. Instances are immutable.
    """

    def __init__(self, superop, kraus: Optional[KrausSet] = None, provenance: str = "superop"):
        L = np.asarray(superop, dtype=complex)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise DimensionError(f"superoperator must be square, got {L.shape}")
        n = int(round(np.sqrt(L.shape[0])))
        if n * n != L.shape[0]:
            raise DimensionError(f"superoperator size {L.shape[0]} is not a perfect square")
        self._dim = n
        self._superop = _frozen(L)
        self._choi = _frozen(reshuffle(L, (n, n)))
        self._kraus = kraus
        self._provenance = provenance

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def superop(self) -> np.ndarray:
        return self._superop

    @property
    def choi(self) -> np.ndarray:
        return self._choi

    @property
    def kraus(self) -> Optional[KrausSet]:
        return self._kraus

    @property
    def provenance(self) -> str:
        return self._provenance

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def __matmul__(self, other: "Channel") -> "Channel":
        return compose(self, other)

    def __repr__(self):
        return f"Channel(dim={self.dim}, provenance={self.provenance!r})"

    def scaled(self, a: float) -> "Channel":
        return Channel(a * self.superop, provenance="linear")

    def __add__(self, other: "Channel") -> "Channel":
        if other.dim != self.dim:
            raise DimensionError("cannot add maps of different dimension")
        return Channel(self.superop + other.superop, provenance="linear")


# -- constructors -------------------------------------------------------------

def channel_from_kraus(ops: Iterable, provenance: str = "kraus") -> Channel:
    """Build ``L = sum_i kron(A_i, conj(A_i))``; completeness is not required."""
    ops = [np.asarray(A, dtype=complex) for A in ops]
    if not ops:
        raise ValueError("empty Kraus list")
    n = ops[0].shape[0]
    for A in ops:
        if A.shape != (n, n):
            raise DimensionError(f"Kraus operators must all be {n}x{n}, got {A.shape}")
    L = sum(np.kron(A, A.conj()) for A in ops)
    return Channel(L, kraus=KrausSet(ops), provenance=provenance)


def channel_from_superop(L) -> Channel:
    return Channel(L, provenance="superop")


def channel_from_choi(D) -> Channel:
    D = np.asarray(D, dtype=complex)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DimensionError(f"Choi matrix must be square, got {D.shape}")
    n = int(round(np.sqrt(D.shape[0])))
    if n * n != D.shape[0]:
        raise DimensionError(f"Choi size {D.shape[0]} is not a perfect square")
    return Channel(reshuffle(D, (n, n)), provenance="choi")


def choi_from_channel(ch: Channel) -> np.ndarray:
    return ch.choi


def unitary_channel(U, tol: float = 1e-10) -> Channel:
    U = np.asarray(U, dtype=complex)
    if not is_unitary(U, tol):
        raise ValueError("matrix is not unitary")
    return channel_from_kraus([U], provenance="unitary")


# -- spectral helpers -----------------------------------------------------------

def psd_threshold(D: np.ndarray, rel: float = 1e-9) -> float:
    """Scale-aware roundoff guard: ``rel * Tr|D| / N^2``, floored at ``rel``."""
    ev = np.linalg.eigvalsh((D + D.conj().T) / 2)
    return rel * max(np.sum(np.abs(ev)) / D.shape[0], 1.0)


def _cluster(values: np.ndarray, tol: float) -> List[List[int]]:
    groups: List[List[int]] = []
    for i, v in enumerate(values):
        if groups and abs(values[groups[-1][0]] - v) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def hermitian_basis(n: int) -> np.ndarray:
    """Columns are vec of E_ii, then (E_jk + E_kj)/sqrt2 and i(E_jk - E_kj)/sqrt2 for j < k."""
    cols = []
    for i in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[i, i] = 1
        cols.append(E.reshape(-1))
    for j in range(n):
        for k in range(j + 1, n):
            S = np.zeros((n, n), dtype=complex)
            S[j, k] = S[k, j] = 1 / np.sqrt(2)
            A = np.zeros((n, n), dtype=complex)
            A[j, k], A[k, j] = 1j / np.sqrt(2), -1j / np.sqrt(2)
            cols.extend([S.reshape(-1), A.reshape(-1)])
    return np.column_stack(cols)


def canonical_eigh(H: np.ndarray, degeneracy_tol: float = 1e-9, candidates=None):
    """Deterministic eigendecomposition of a Hermitian matrix, descending.

    Within a degenerate eigenspace the basis is obtained by Gram-Schmidt on
    the projections of the ``candidates`` columns (default: standard basis),
    which depends only on the subspace. Each vector is phase-fixed so its
    first sizable entry is real positive.
    """
    H = (H + H.conj().T) / 2
    w, V = np.linalg.eigh(H)
    w, V = w[::-1], V[:, ::-1]
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    C = np.eye(H.shape[0]) if candidates is None else candidates
    vectors = []
    for group in _cluster(w, degeneracy_tol * scale):
        if len(group) == 1:
            vectors.append(V[:, group[0]])
            continue
        block = V[:, group]
        P = block @ (block.conj().T @ C)
        basis: List[np.ndarray] = []
        for j in range(P.shape[1]):
            v = P[:, j].copy()
            for _ in range(2):
                for b in basis:
                    v -= np.vdot(b, v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-6:
                basis.append(v / nv)
            if len(basis) == len(group):
                break
        vectors.extend(basis)
    vectors = [fix_phase(v)[0] for v in vectors]
    return w, np.column_stack(vectors)


def choi_spectrum(ch: Channel) -> np.ndarray:
    """Eigenvalues of the Choi matrix, descending (real for Hermitian Choi)."""
    if not is_hermiticity_preserving(ch):
        raise NotHermiticityPreserving("Choi matrix is not Hermitian")
    return np.linalg.eigvalsh((ch.choi + ch.choi.conj().T) / 2)[::-1]


def canonical_kraus(ch: Channel, tol: Optional[float] = None) -> KrausSet:
    """Canonical Kraus form: ``A_i = sqrt(d_i) * reshape(chi_i)`` from ``D``'s eigenpairs.

    Operators are mutually HS-orthogonal with ``<A_i|A_j> = d_i delta_ij``.
    Eigenvalues ``d_i <= 1e-11 * N`` are dropped.
    """
    D = ch.choi
    if not is_hermitian(D):
        raise NotHermiticityPreserving("Choi matrix is not Hermitian")
    if tol is None:
        tol = psd_threshold(D)
    w, V = canonical_eigh(D, candidates=hermitian_basis(ch.dim))
    neg = int(np.sum(w < -tol))
    if neg:
        raise NotCompletelyPositive(
            f"map is not completely positive (min Choi eigenvalue {w[-1]:.3e})", neg, float(w[-1]))
    keep = w > KRAUS_CUTOFF * ch.dim
    n = ch.dim
    ops = [np.sqrt(d) * V[:, i].reshape(n, n) for i, d in enumerate(w) if keep[i]]
    return KrausSet(ops, weights=w[keep].copy())


def kraus_rank(ch: Channel) -> int:
    return len(canonical_kraus(ch))


# -- action -------------------------------------------------------------------

def apply(ch: Channel, rho) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (ch.dim, ch.dim):
        raise DimensionError(f"state of shape {rho.shape} does not fit a map on N={ch.dim}")
    return (ch.superop @ rho.reshape(-1)).reshape(ch.dim, ch.dim)


def evolve(ch: Channel, rho0, steps: int) -> np.ndarray:
    """``L^t vec(rho0)`` by repeated matrix-vector products."""
    v = np.asarray(rho0, dtype=complex).reshape(-1)
    if v.size != ch.dim ** 2:
        raise DimensionError("initial state does not match the map dimension")
    for _ in range(int(steps)):
        v = ch.superop @ v
    return v.reshape(ch.dim, ch.dim)


# -- structural predicates ------------------------------------------------------

def is_hermiticity_preserving(ch: Channel, tol: float = 1e-10) -> bool:
    return is_hermitian(ch.choi, tol)


def trace_defect(ch: Channel) -> float:
    """``max |Tr_A D - I|``; zero for trace-preserving maps."""
    return float(np.max(np.abs(partial_trace(ch.choi, ch.dim, over="A") - np.eye(ch.dim))))


def unital_defect(ch: Channel) -> float:
    return float(np.max(np.abs(partial_trace(ch.choi, ch.dim, over="B") - np.eye(ch.dim))))


def is_trace_preserving(ch: Channel, tol: float = 1e-10) -> bool:
    return trace_defect(ch) < tol


def is_unital(ch: Channel, tol: float = 1e-10) -> bool:
    return unital_defect(ch) < tol


def is_bistochastic(ch: Channel, tol: float = 1e-10) -> bool:
    return is_trace_preserving(ch, tol) and is_unital(ch, tol)


def effect(ch: Channel) -> np.ndarray:
    """``E = Tr_B D = sum_i A_i A_i^dagger``."""
    return partial_trace(ch.choi, ch.dim, over="B")


def kraus_matrix(ks) -> np.ndarray:
    """Non-negative matrix ``M_mn = sum_i |A^(i)_mn|^2``."""
    ops = list(ks.operators if isinstance(ks, KrausSet) else ks)
    if not ops:
        raise ValueError("empty Kraus set")
    return sum(np.abs(np.asarray(A)) ** 2 for A in ops)


# -- transforms ---------------------------------------------------------------

def compose(psi: Channel, phi: Channel) -> Channel:
    """The map ``rho -> psi(phi(rho))``."""
    if psi.dim != phi.dim:
        raise DimensionError(f"cannot compose maps on N={psi.dim} and N={phi.dim}")
    kraus = None
    if psi.kraus is not None and phi.kraus is not None:
        kraus = KrausSet([B @ A for A in phi.kraus for B in psi.kraus])
    return Channel(psi.superop @ phi.superop, kraus=kraus, provenance="composition")


def dual(ch: Channel) -> Channel:
    """Adjoint map with respect to the HS product; ``D_dual = conj(D^F)``."""
    L = flip(ch.superop.T, ch.dim)
    kraus = None
    if ch.kraus is not None:
        kraus = KrausSet([A.conj().T for A in ch.kraus])
    return Channel(L, kraus=kraus, provenance="dual")


def unitarily_similar(ch: Channel, V, W, tol: float = 1e-10) -> Channel:
    """``rho -> V Phi(W rho W^dagger) V^dagger``."""
    V, W = np.asarray(V, dtype=complex), np.asarray(W, dtype=complex)
    if not (is_unitary(V, tol) and is_unitary(W, tol)):
        raise ValueError("V and W must be unitary")
    if V.shape != (ch.dim, ch.dim) or W.shape != (ch.dim, ch.dim):
        raise DimensionError("V and W must match the map dimension")
    L = np.kron(V, V.conj()) @ ch.superop @ np.kron(W, W.conj())
    kraus = None
    if ch.kraus is not None:
        kraus = KrausSet([V @ A @ W for A in ch.kraus])
    return Channel(L, kraus=kraus, provenance="unitarily_similar")


# -- diagnostics --------------------------------------------------------------

def shannon(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def entropy(ch: Channel) -> float:
    """Entropy of the operation, ``-sum (d_i/N) ln(d_i/N)``."""
    D = ch.choi
    if not is_hermitian(D):
        raise NotHermiticityPreserving("Choi matrix is not Hermitian")
    w = np.linalg.eigvalsh((D + D.conj().T) / 2)
    tol = psd_threshold(D)
    if w[0] < -tol:
        raise NotCompletelyPositive("entropy requires a completely positive map",
                                    int(np.sum(w < -tol)), float(w[0]))
    return shannon(np.clip(w, 0.0, None) / ch.dim)


def norm2(ch: Channel) -> float:
    return float(np.linalg.norm(ch.superop))


def trace_norm(ch: Channel) -> float:
    return float(np.sum(np.linalg.svd(ch.superop, compute_uv=False)))


@dataclass(frozen=True)
class SuperopSpectrum:
    eigenvalues: np.ndarray
    invariant_state: Optional[np.ndarray]
    spectral_gap: float
    degenerate: bool = False
    unit_multiplicity: int = 0


def _sorted_eig(L: np.ndarray):
    z, V = np.linalg.eig(L)
    order = sorted(range(z.size), key=lambda i: (-round(abs(z[i]), 12),
                                                   -round(z[i].real, 12), -round(z[i].imag, 12)))
    return z[order], V[:, order]


def superop_spectrum(ch: Channel, tol: float = 1e-9) -> SuperopSpectrum:
    """Eigenvalues of ``L`` by decreasing modulus plus the invariant state.

    The invariant state is a fixed point of ``L`` normalized to unit trace. If
    the eigenvalue 1 is degenerate the flag is set and the basis element with
    the largest trace is returned.
    """
    L = ch.superop
    z, _ = _sorted_eig(L)
    n = ch.dim
    # null space of L - 1 via SVD is more reliable than eigenvectors
    _, s, Vh = np.linalg.svd(L - np.eye(n * n))
    null = Vh[s <= tol * max(1.0, s[0])].conj()
    state = None
    if null.shape[0]:
        mats = [v.reshape(n, n) for v in null]
        best = max(mats, key=lambda M: abs(np.trace(M)))
        tr = np.trace(best)
        if abs(tr) > tol:
            state = best / tr
            if is_hermiticity_preserving(ch):
                state = (state + state.conj().T) / 2
    gap = 1.0 - abs(z[1]) if z.size > 1 else 1.0
    return SuperopSpectrum(eigenvalues=z, invariant_state=state, spectral_gap=float(gap),
                           degenerate=null.shape[0] > 1, unit_multiplicity=int(null.shape[0]))
