import numpy as np
import pytest

import oracles
from conftest import cgauss
from qmap import builders
from qmap.channel import (
    Channel,
    KrausSet,
    NotCompletelyPositive,
    NotHermiticityPreserving,
    apply,
    canonical_kraus,
    channel_from_choi,
    channel_from_kraus,
    channel_from_superop,
    choi_from_channel,
    choi_spectrum,
    compose,
    dual,
    effect,
    entropy,
    evolve,
    is_bistochastic,
    is_hermiticity_preserving,
    is_trace_preserving,
    is_unital,
    kraus_matrix,
    kraus_rank,
    norm2,
    superop_spectrum,
    trace_norm,
    unitarily_similar,
    unitary_channel,
)
from qmap.sampling import random_channel, random_cp_map, random_density, random_unitary
from qmap.tensor_ops import DimensionError, flip, hs_inner, partial_trace, reshuffle

SWAP = np.eye(4)[[0, 2, 1, 3]]


def test_identity_from_kraus():
    ch = channel_from_kraus([np.eye(3)])
    assert np.array_equal(ch.superop, np.eye(9))
    psi = np.eye(3).reshape(-1)
    assert np.array_equal(ch.choi, np.outer(psi, psi))


def test_representations_agree_with_loop_oracles(rng):
    ops = [cgauss(rng, 3, 3) for _ in range(2)]
    ch = channel_from_kraus(ops)
    act = lambda r: oracles.apply_kraus(ops, r)
    assert np.allclose(ch.superop, oracles.superop_from_action(act, 3))
    assert np.allclose(ch.choi, oracles.choi_from_action(act, 3))
    assert np.array_equal(ch.choi, reshuffle(ch.superop))
    assert np.array_equal(choi_from_channel(ch), ch.choi)


def test_kraus_errors():
    with pytest.raises(ValueError):
        channel_from_kraus([])
    with pytest.raises(DimensionError):
        channel_from_kraus([np.eye(2), np.eye(3)])
    with pytest.raises(DimensionError):
        channel_from_choi(np.eye(5))
    with pytest.raises(DimensionError):
        Channel(np.eye(3))


def test_channel_is_immutable():
    ch = builders.identity(2)
    with pytest.raises(ValueError):
        ch.superop[0, 0] = 5
    with pytest.raises(ValueError):
        ch.choi[0, 0] = 5


def test_pauli_unitary_norm():
    ch = builders.pauli_channel([1, 0, 0, 0])
    assert np.isclose(norm2(ch), 2)


def test_choi_round_trip(rng):
    L = cgauss(rng, 9, 9)
    ch = channel_from_superop(L)
    assert np.array_equal(channel_from_choi(ch.choi).superop, L)


def test_choi_of_scaled_identity_is_complete_depolarization(rng):
    ch = channel_from_choi(np.eye(4) / 2)
    rho = random_density(2, seed=rng)
    assert np.allclose(apply(ch, rho), np.eye(2) / 2)
    # without the 1/N factor the image has trace N
    assert np.isclose(np.trace(apply(channel_from_choi(np.eye(4)), rho)), 2)


def test_swap_choi_is_transposition(rng):
    ch = channel_from_choi(SWAP)
    A = cgauss(rng, 2, 2)
    assert np.allclose(apply(ch, A), A.T)


def test_canonical_kraus_examples():
    ks = canonical_kraus(builders.identity(3))
    assert len(ks) == 1 and np.allclose(ks.weights, [3])
    assert np.allclose(ks.operators[0], np.eye(3))
    ks = canonical_kraus(builders.phase_flip(0.5))
    assert np.allclose(ks.weights, [1.5, 0.5])
    ks = canonical_kraus(builders.depolarizing(0.5))
    assert np.allclose(ks.weights / 2, [0.625, 0.125, 0.125, 0.125])
    for A in ks.operators:
        # each operator is proportional to a Pauli matrix
        coeffs = [abs(hs_inner(P, A)) for P in builders.PAULI]
        assert sum(c > 1e-9 for c in coeffs) == 1


def test_canonical_kraus_invariants(rng):
    for n in (2, 3):
        ch = random_channel(n, seed=rng)
        ks = canonical_kraus(ch)
        G = np.array([[hs_inner(A, B) for B in ks.operators] for A in ks.operators])
        assert np.allclose(G, np.diag(ks.weights), atol=1e-10)
        assert np.isclose(ks.weights.sum(), n)
        assert len(ks) <= n * n
        assert np.max(np.abs(channel_from_kraus(ks.operators).superop - ch.superop)) < 1e-10
        assert ks.is_canonical and not KrausSet(ks.operators).is_canonical


def test_canonical_kraus_is_deterministic_under_degeneracy():
    a = canonical_kraus(builders.depolarizing_general(2))
    b = canonical_kraus(channel_from_choi(np.eye(4) / 2))
    for A, B in zip(a.operators, b.operators):
        assert np.array_equal(A, B)
    for A in a.operators:
        first = A.reshape(-1)[np.argmax(np.abs(A.reshape(-1)) > 1e-8)]
        assert abs(first.imag) < 1e-15 and first.real > 0


def test_canonical_kraus_rejects_non_cp():
    with pytest.raises(NotCompletelyPositive) as info:
        canonical_kraus(builders.transposition(3))
    assert info.value.neg_rank == 3
    with pytest.raises(NotHermiticityPreserving):
        canonical_kraus(channel_from_superop(np.diag([1, 1j, 0, 0])))


def test_unitary_freedom(rng):
    ch = random_channel(2, kraus_rank=3, seed=rng)
    ks = canonical_kraus(ch)
    V = random_unitary(5, seed=rng)[:, :len(ks)]  # isometry k -> 5
    mixed = [sum(V[j, i] * ks.operators[i] for i in range(len(ks))) for j in range(5)]
    assert np.allclose(channel_from_kraus(mixed).choi, ch.choi)


def test_apply(rng):
    rho = random_density(3, seed=rng)
    assert np.allclose(apply(builders.depolarizing_general(3), rho), np.eye(3) / 3)
    out = apply(builders.coarse_graining(3), rho)
    assert np.allclose(out, np.diag(np.diag(rho)))
    U = random_unitary(3, seed=rng)
    assert np.allclose(unitary_channel(U)(rho), U @ rho @ U.conj().T)
    ch = random_cp_map(3, kraus_rank=2, seed=rng)
    assert np.allclose(apply(ch, rho), oracles.apply_kraus(ch.kraus.operators, rho))
    with pytest.raises(DimensionError):
        apply(ch, np.eye(2))


def test_trace_and_unital_flags():
    ad = builders.amplitude_damping(0.75)
    assert is_trace_preserving(ad) and not is_unital(ad)
    for w in ([0.1, 0.2, 0.3, 0.4], [0.25] * 4, [1, 0, 0, 0]):
        ch = builders.pauli_channel(w)
        assert is_bistochastic(ch)
        assert np.allclose(effect(ch), np.eye(2))
    assert not is_trace_preserving(builders.identity(2).scaled(0.5))


def test_effect_is_psd_for_cp(rng):
    ch = random_cp_map(3, seed=rng)
    E = effect(ch)
    assert np.allclose(E, E.conj().T)
    assert np.linalg.eigvalsh(E).min() > -1e-12
    ops = ch.kraus.operators
    assert np.allclose(E, sum(A @ A.conj().T for A in ops))
    assert np.allclose(E, ch(np.eye(3)))


def test_kraus_matrix(rng):
    U = random_unitary(3, seed=rng)
    M = kraus_matrix(unitary_channel(U).kraus)
    assert np.allclose(M, np.abs(U) ** 2)
    assert np.allclose(M.sum(0), 1) and np.allclose(M.sum(1), 1)
    assert np.allclose(kraus_matrix(builders.identity(2).kraus), np.eye(2))
    p = 0.3
    M = kraus_matrix(builders.amplitude_damping(p).kraus)
    assert np.allclose(M.sum(0), [1, 1])
    assert np.allclose(M.sum(1), [1 + p, 1 - p])


def test_compose(rng):
    phi = random_channel(2, seed=rng)
    assert np.allclose(compose(builders.identity(2), phi).superop, phi.superop)
    TT = compose(builders.transposition(2), builders.transposition(2))
    assert np.allclose(TT.choi, builders.identity(2).choi)
    psi = random_channel(2, seed=rng)
    direct = channel_from_kraus([B @ A for A in phi.kraus.operators for B in psi.kraus.operators])
    comp = psi @ phi
    assert np.max(np.abs(comp.choi - direct.choi)) < 1e-10
    assert np.max(np.abs(comp.choi - reshuffle(reshuffle(psi.choi) @ reshuffle(phi.choi)))) < 1e-12
    with pytest.raises(DimensionError):
        compose(psi, random_channel(3, seed=rng))


def test_dual(rng):
    ch = random_cp_map(3, seed=rng)
    d = dual(ch)
    assert np.allclose(d.choi, flip(ch.choi).conj())
    for _ in range(100):
        s, r = cgauss(rng, 3, 3), cgauss(rng, 3, 3)
        assert abs(hs_inner(ch(s), r) - hs_inner(s, d(r))) < 1e-10
    ad = builders.amplitude_damping(0.4)
    assert np.isclose(entropy(ad), entropy(dual(ad)))
    assert is_unital(dual(ad)) and not is_trace_preserving(dual(ad))
    b = builders.pauli_channel([0.1, 0.2, 0.3, 0.4]) @ unitary_channel(random_unitary(2, seed=1))
    assert is_bistochastic(dual(b))


def test_unitarily_similar(rng):
    ad = builders.amplitude_damping(0.6)
    same = unitarily_similar(ad, np.eye(2), np.eye(2))
    assert np.allclose(same.superop, ad.superop)
    V, W = random_unitary(2, seed=rng), random_unitary(2, seed=rng)
    ch = unitarily_similar(ad, V, W)
    assert np.allclose(choi_spectrum(ch), choi_spectrum(ad))
    assert np.isclose(norm2(ch), norm2(ad))
    assert np.isclose(entropy(ch), entropy(ad))
    with pytest.raises(ValueError):
        unitarily_similar(ad, 2 * np.eye(2), W)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_entropy_and_norm_of_basic_channels(N):
    U = random_unitary(N, seed=N)
    u = unitary_channel(U)
    assert abs(entropy(u)) < 1e-9 and abs(norm2(u) - N) < 1e-9
    cg = builders.coarse_graining(N)
    assert abs(entropy(cg) - np.log(N)) < 1e-9 and abs(norm2(cg) - np.sqrt(N)) < 1e-9
    dp = builders.depolarizing_general(N)
    assert abs(entropy(dp) - 2 * np.log(N)) < 1e-9 and abs(norm2(dp) - 1) < 1e-9


def test_entropy_rejects_non_cp():
    with pytest.raises(NotCompletelyPositive):
        entropy(builders.transposition(2))


def test_entropy_and_norm_bounds(rng):
    for _ in range(30):
        n = int(rng.integers(2, 4))
        ch = random_channel(n, kraus_rank=int(rng.integers(1, n * n + 1)), seed=rng)
        S, nrm = entropy(ch), norm2(ch)
        assert -1e-12 <= S <= 2 * np.log(n) + 1e-12
        assert 1 - 1e-10 <= nrm <= n + 1e-10
        assert nrm >= n * np.exp(-S / 2) - 1e-10
        assert trace_norm(ch) >= nrm - 1e-12


def test_superop_spectrum(rng):
    sp = superop_spectrum(builders.depolarizing_general(2))
    assert np.allclose(sp.eigenvalues, [1, 0, 0, 0])
    assert np.allclose(sp.invariant_state, np.eye(2) / 2)
    ch = random_channel(3, seed=rng)
    sp = superop_spectrum(ch)
    z = sp.eigenvalues
    assert np.isclose(z[0], 1)
    assert np.all(np.abs(z) <= 1 + 1e-10)
    for zi in z:
        assert np.min(np.abs(z - zi.conj())) < 1e-10
    assert np.allclose(apply(ch, sp.invariant_state), sp.invariant_state)
    assert np.isclose(np.trace(sp.invariant_state), 1)
    vals, vecs = np.linalg.eig(ch.superop)
    for zi, v in zip(vals, vecs.T):
        if abs(zi - 1) > 1e-6:
            assert abs(np.trace(v.reshape(3, 3))) < 1e-9
    assert np.isclose(sp.spectral_gap, 1 - abs(z[1]))


def test_superop_spectrum_degenerate():
    sp = superop_spectrum(builders.coarse_graining(2))
    assert sp.degenerate and sp.unit_multiplicity == 2
    assert np.isclose(np.trace(sp.invariant_state), 1)


def test_evolve(rng):
    rho = random_density(2, seed=rng)
    assert np.allclose(evolve(builders.depolarizing_general(2), rho, 1), np.eye(2) / 2)
    ad = builders.amplitude_damping(0.5)
    out = evolve(ad, rho, 60)
    assert np.allclose(out, np.diag([1, 0]), atol=1e-8)
    assert np.allclose(evolve(ad, rho, 0), rho)


def test_linearity_of_choi(rng):
    a, b = 0.3, -1.7
    phi, psi = random_channel(2, seed=rng), random_channel(2, seed=rng)
    combo = phi.scaled(a) + psi.scaled(b)
    assert np.allclose(combo.choi, a * phi.choi + b * psi.choi)


def test_hermiticity_preservation_identity(rng):
    ch = random_cp_map(2, seed=rng)
    assert is_hermiticity_preserving(ch)
    assert np.allclose(ch.superop.conj(), flip(ch.superop))
    assert not is_hermiticity_preserving(channel_from_superop(cgauss(rng, 4, 4)))


def test_trace_condition_via_partial_trace(rng):
    ch = random_channel(3, seed=rng)
    assert np.allclose(partial_trace(ch.choi, 3, "A"), np.eye(3))
    assert np.isclose(np.trace(ch.choi), 3)
