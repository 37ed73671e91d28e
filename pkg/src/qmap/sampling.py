"""Seeded random unitaries, states and channels."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .channel import Channel, channel_from_choi, channel_from_kraus


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(n: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary."""
    rng = _rng(seed)
    if n == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


def ginibre(rows: int, cols: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    return (rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))) / np.sqrt(2)


def random_density(n: int, rank: int = None, seed=None) -> np.ndarray:
    G = ginibre(n, rank or n, seed)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_psd(n: int, seed=None) -> np.ndarray:
    G = ginibre(n, n, seed)
    return G @ G.conj().T


def random_hermitian(n: int, seed=None) -> np.ndarray:
    G = ginibre(n, n, seed)
    return (G + G.conj().T) / 2


def random_channel(n: int, kraus_rank: int = None, seed=None) -> Channel:
    """Trace-preserving CP map from an isometry cut into Kraus blocks."""
    k = kraus_rank or n * n
    G = ginibre(k * n, n, seed)
    Q, _ = np.linalg.qr(G)
    ops = [Q[i * n:(i + 1) * n] for i in range(k)]
    return channel_from_kraus(ops, provenance="random")


def random_cp_map(n: int, kraus_rank: int = None, seed=None) -> Channel:
    """CP map with no trace condition."""
    k = kraus_rank or n * n
    rng = _rng(seed)
    return channel_from_kraus([ginibre(n, n, rng) for _ in range(k)], provenance="random")


def random_hp_map(n: int, seed=None) -> Channel:
    """Hermiticity-preserving map from a random Hermitian Choi matrix."""
    return channel_from_choi(random_hermitian(n * n, seed))
