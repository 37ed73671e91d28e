"""Index gymnastics on matrices acting on a bipartite space H_A (x) H_B.

A square matrix of size N*M is addressed with four indices ``X[(m, mu), (n, nu)]``
where Roman indices (m, n) belong to the first subsystem (dimension N) and
Greek indices (mu, nu) to the second (dimension M). Flat indices are row-major,
``k = m * M + mu`` (0-based), which is the 0-based form of ``k = (m-1) M + mu``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

ATOL = 1e-10

Dims = Union[int, Tuple[int, int], "BipartiteDims"]


class DimensionError(ValueError):
    """Raised when matrix shapes do not match the declared dimensions."""


class BipartiteDims(NamedTuple):
    dim_a: int
    dim_b: int

    @property
    def size(self) -> int:
        return self.dim_a * self.dim_b


def as_dims(dims: Optional[Dims], X: np.ndarray) -> BipartiteDims:
    """Normalize ``dims`` (None, int or pair) against the square matrix ``X``."""
    if dims is None:
        n = _isqrt(X.shape[0])
        if n is None:
            raise DimensionError(f"size {X.shape[0]} is not a perfect square; pass dims")
        return BipartiteDims(n, n)
    if isinstance(dims, (int, np.integer)):
        dims = (dims, dims)
    a, b = dims
    if a < 1 or b < 1:
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    return BipartiteDims(int(a), int(b))


def _isqrt(k: int) -> Optional[int]:
    r = int(round(np.sqrt(k)))
    return r if r * r == k else None


def _square(X, dims) -> Tuple[np.ndarray, BipartiteDims]:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {X.shape}")
    d = as_dims(dims, X)
    if d.size != X.shape[0]:
        raise DimensionError(f"matrix of size {X.shape[0]} does not match dims {tuple(d)}")
    return X, d


def _four(X, dims) -> Tuple[np.ndarray, BipartiteDims]:
    X, d = _square(X, dims)
    return X.reshape(d.dim_a, d.dim_b, d.dim_a, d.dim_b), d


# -- predicates ---------------------------------------------------------------

def _scaled_tol(A: np.ndarray, tol: float) -> float:
    return tol * max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)


def is_hermitian(A, tol: float = ATOL) -> bool:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) <= _scaled_tol(A, tol))


def is_unitary(A, tol: float = ATOL) -> bool:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    eye = np.eye(A.shape[0])
    return bool(np.max(np.abs(A.conj().T @ A - eye), initial=0.0) <= _scaled_tol(A, tol))


def is_psd(A, tol: float = ATOL) -> bool:
    A = np.asarray(A)
    if not is_hermitian(A, tol):
        return False
    H = (A + A.conj().T) / 2
    return bool(np.linalg.eigvalsh(H)[0] >= -_scaled_tol(A, tol))


# -- reshaping ----------------------------------------------------------------

def reshape_to_vector(A) -> np.ndarray:
    """Stack the rows of ``A`` into a vector (row after row)."""
    return np.asarray(A).reshape(-1)


def reshape_to_matrix(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v)
    if v.size != rows * cols:
        raise DimensionError(f"vector of length {v.size} cannot fill a {rows}x{cols} matrix")
    return v.reshape(rows, cols)


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt product Tr(A^dagger B)."""
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    return complex(np.vdot(A, B))


# -- index swaps --------------------------------------------------------------

def reshuffle(X, dims: Optional[Dims] = None) -> np.ndarray:
    """Reshuffle ``X^R[(m, n), (mu, nu)] = X[(m, mu), (n, nu)]``.

    A square input of size N*M gives an N^2 x M^2 output. A rectangular
    N^2 x M^2 input is mapped back to the square N*M matrix, so the
    operation is an involution in both directions.
    """
    X = np.asarray(X)
    if X.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={X.ndim}")
    r, c = X.shape
    if X.size == 0:
        raise DimensionError("empty matrix")
    a = b = None
    if dims is not None:
        a, b = as_dims(dims, X)

    if a is not None:
        if r == c == a * b:
            shape = (a, b, a, b)
        elif r == a * a and c == b * b:
            shape = (a, a, b, b)
        else:
            raise DimensionError(f"shape {X.shape} is incompatible with dims {(a, b)}")
    else:
        ra, ca = _isqrt(r), _isqrt(c)
        if ra is None or ca is None:
            raise DimensionError(f"cannot infer subsystem dims for shape {X.shape}")
        if r == c:
            shape = (ra, ra, ra, ra)
        else:
            shape = (ra, ra, ca, ca)
    i, j, k, l = shape
    return X.reshape(shape).transpose(0, 2, 1, 3).reshape(i * k, j * l)


def reshuffle_prime(X, dims: Optional[Dims] = None) -> np.ndarray:
    """Alternate (column-stacking) reshuffle ``X^R'[(m, mu), (n, nu)] = X[(nu, mu), (n, m)]``."""
    X4, d = _four(X, dims)
    return X4.transpose(3, 1, 2, 0).reshape(d.dim_b ** 2, d.dim_a ** 2)


def partial_transpose(X, dims: Optional[Dims] = None, subsystem: str = "A") -> np.ndarray:
    X4, d = _four(X, dims)
    if subsystem.upper() == "A":
        out = X4.transpose(2, 1, 0, 3)
    elif subsystem.upper() == "B":
        out = X4.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return out.reshape(d.size, d.size)


def _equal_dims(X, dims, what: str):
    X4, d = _four(X, dims)
    if d.dim_a != d.dim_b:
        raise DimensionError(f"{what} requires equal subsystem dimensions, got {tuple(d)}")
    return X4, d


def flip(X, dims: Optional[Dims] = None) -> np.ndarray:
    """Exchange the subsystems: ``X^F[(m, mu), (n, nu)] = X[(mu, m), (nu, n)]``."""
    X4, d = _equal_dims(X, dims, "flip")
    return X4.transpose(1, 0, 3, 2).reshape(d.size, d.size)


def partial_flip(X, dims: Optional[Dims] = None, which: int = 1) -> np.ndarray:
    X4, d = _equal_dims(X, dims, "partial flip")
    if which == 1:
        out = X4.transpose(1, 0, 2, 3)
    elif which == 2:
        out = X4.transpose(0, 1, 3, 2)
    else:
        raise ValueError(f"which must be 1 or 2, got {which!r}")
    return out.reshape(d.size, d.size)


def partial_trace(X, dims: Optional[Dims] = None, over: str = "B") -> np.ndarray:
    X4, _ = _four(X, dims)
    if over.upper() == "B":
        return np.einsum("iaja->ij", X4)
    if over.upper() == "A":
        return np.einsum("aiaj->ij", X4)
    raise ValueError(f"over must be 'A' or 'B', got {over!r}")


# -- operator Schmidt decomposition -------------------------------------------

@dataclass(frozen=True)
class SchmidtDecomposition:
    """``X = sum_k sqrt(coefficients[k]) * kron(left_ops[k], right_ops[k])``."""

    coefficients: np.ndarray
    left_ops: Sequence[np.ndarray]
    right_ops: Sequence[np.ndarray]

    @property
    def rank(self) -> int:
        return schmidt_rank(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        return sum(np.sqrt(lam) * np.kron(a, b)
                   for lam, a, b in zip(self.coefficients, self.left_ops, self.right_ops))


def schmidt_rank(coefficients, tol: float = 1e-10) -> int:
    c = np.asarray(coefficients)
    if c.size == 0 or c[0] <= 0:
        return 0
    return int(np.sum(c > tol * c[0]))


def fix_phase(v: np.ndarray, cutoff: float = 1e-8) -> Tuple[np.ndarray, complex]:
    """Rotate ``v`` so its first entry with modulus above ``cutoff`` is real positive."""
    flat = v.reshape(-1)
    idx = np.flatnonzero(np.abs(flat) > cutoff)
    if idx.size == 0:
        return v, 1.0
    phase = flat[idx[0]] / abs(flat[idx[0]])
    return v / phase, phase


def operator_schmidt(X, dims: Optional[Dims] = None) -> SchmidtDecomposition:
    """Operator-Schmidt decomposition from the SVD of the reshuffled matrix.

    The coefficients are the squared singular values of ``X^R``; left and right
    operators are the reshaped left and right singular vectors.
    """
    X, d = _square(X, dims)
    XR = reshuffle(X, d)
    U, s, Vh = np.linalg.svd(XR)
    terms = []
    for k in range(s.size):
        a = U[:, k].reshape(d.dim_a, d.dim_a)
        b = Vh[k, :].reshape(d.dim_b, d.dim_b)
        a, phase = fix_phase(a)
        terms.append((s[k] ** 2, a, b * phase))
    # descending, ties broken by the rounded real parts of the left operator
    terms.sort(key=lambda t: (-round(t[0], 10), tuple(np.round(t[1].real.ravel(), 8))))
    return SchmidtDecomposition(
        coefficients=np.array([t[0] for t in terms]),
        left_ops=[t[1] for t in terms],
        right_ops=[t[2] for t in terms],
    )


def is_product(X, dims: Optional[Dims] = None, tol: float = 1e-10):
    """Return ``(True, (X1, X2))`` with ``X = kron(X1, X2)`` if Schmidt rank is one.

    Factors are taken from the leading Schmidt term, so traceless factors are
    recovered as well. Returns ``(False, None)`` otherwise.
    """
    sd = operator_schmidt(X, dims)
    if schmidt_rank(sd.coefficients, tol) != 1:
        return False, None
    return True, (np.sqrt(sd.coefficients[0]) * sd.left_ops[0], sd.right_ops[0])
