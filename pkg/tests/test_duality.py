import numpy as np
import pytest

import oracles
from conftest import cgauss
from qmap import builders
from qmap.builders import PAULI, unitary_channel
from qmap.channel import (
    channel_from_kraus,
    entropy,
    is_trace_preserving,
    is_unital,
)
from qmap.duality import (
    apply_extended,
    apply_extended_kraus,
    classical_classes,
    classical_shadow,
    diagram_commutes,
    embedding_square_vertices,
    map_from_state,
    max_entangled_state,
    reshaped_stochastic,
    state_from_map,
    verify_unistochastic_witness,
)
from qmap.positivity import ccp_value, cp_value
from qmap.sampling import random_channel, random_cp_map, random_density, random_hp_map, random_unitary
from qmap.tensor_ops import DimensionError, operator_schmidt, partial_trace, reshuffle

BELL = {
    "phi+": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0]) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0]) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1]) / np.sqrt(2),
}


def test_max_entangled_state():
    rho = max_entangled_state(2)
    assert np.allclose(rho, np.outer(BELL["phi+"], BELL["phi+"]))
    for N in (2, 3, 4):
        rho = max_entangled_state(N)
        vals = np.linalg.svd(rho.reshape(N, N, N, N).transpose(0, 2, 1, 3).reshape(N * N, N * N),
                             compute_uv=False)
        v = np.eye(N).reshape(-1) / np.sqrt(N)
        sv = np.linalg.svd(v.reshape(N, N), compute_uv=False) ** 2
        assert np.allclose(sv, 1 / N)
        assert np.allclose(N * reshuffle(rho), np.eye(N * N))
    with pytest.raises(DimensionError):
        max_entangled_state(1)


def test_state_from_map_examples():
    js = state_from_map(builders.identity(2))
    assert np.allclose(js.rho, max_entangled_state(2))
    assert np.isclose(js.purity, 1) and abs(js.entropy) < 1e-12
    js = state_from_map(builders.depolarizing_general(3))
    assert np.allclose(js.rho, np.eye(9) / 9)
    # Pauli conjugations map to the four Bell states
    pairs = [(PAULI[1], "psi+"), (PAULI[2], "psi-"), (PAULI[3], "phi-")]
    for P, name in pairs:
        rho = state_from_map(unitary_channel(P)).rho
        assert np.allclose(rho, np.outer(BELL[name], BELL[name].conj()))


def test_state_matches_extended_map(rng):
    for _ in range(10):
        ch = random_channel(3, seed=rng)
        psi = max_entangled_state(3)
        assert np.allclose(state_from_map(ch).rho, apply_extended(ch, psi))
        assert np.allclose(state_from_map(ch).rho, apply_extended_kraus(ch.kraus.operators, psi))


def test_unitary_state_is_pure(rng):
    U = random_unitary(3, seed=rng)
    js = state_from_map(unitary_channel(U))
    v = np.kron(U, np.eye(3)) @ (np.eye(3).reshape(-1) / np.sqrt(3))
    assert np.allclose(js.rho, np.outer(v, v.conj()))


def test_round_trip(rng):
    for _ in range(20):
        ch = random_channel(2, seed=rng)
        back = map_from_state(state_from_map(ch).rho)
        assert np.max(np.abs(back.superop - ch.superop)) < 1e-12
    assert np.allclose(map_from_state(np.eye(4) / 4, 2).choi, np.eye(4) / 2)
    with pytest.raises(DimensionError):
        map_from_state(np.eye(4), 3)


def test_map_from_state_entrywise(rng):
    rho = cgauss(rng, 9, 9)
    rho = rho + rho.conj().T
    ch = map_from_state(rho, 3)
    D = 3 * rho
    for k, i, l, j in np.ndindex(3, 3, 3, 3):
        E = np.zeros((3, 3))
        E[i, j] = 1
        assert np.isclose(D[k * 3 + i, l * 3 + j], ch(E)[k, l])


def test_apply_extended(rng):
    rho = random_density(4, seed=rng)
    assert np.allclose(apply_extended(builders.identity(2), rho), rho)
    for _ in range(20):
        ch = random_cp_map(2, seed=rng)
        rho = random_density(4, seed=rng)
        ref = oracles.extended_kraus(ch.kraus.operators, rho)
        assert np.max(np.abs(apply_extended(ch, rho) - ref)) < 1e-10
    with pytest.raises(DimensionError):
        apply_extended(builders.identity(2), np.eye(9))


def test_isomorphism_chain(rng):
    for _ in range(50):
        ch = random_channel(2, seed=rng)
        js = state_from_map(ch)
        assert np.linalg.eigvalsh(js.rho).min() > -1e-12
        assert np.allclose(partial_trace(2 * js.rho, 2, "A"), np.eye(2))
        assert np.isclose(entropy(ch), js.entropy, atol=1e-12)
    ub = builders.unistochastic_channel(random_unitary(4, seed=rng))
    assert np.allclose(partial_trace(2 * state_from_map(ub).rho, 2, "B"), np.eye(2))
    nonunital = builders.amplitude_damping(0.5)
    assert not np.allclose(partial_trace(2 * state_from_map(nonunital).rho, 2, "B"), np.eye(2))
    assert is_trace_preserving(nonunital) and not is_unital(nonunital)
    T = builders.transposition(2)
    assert np.linalg.eigvalsh(state_from_map(T).rho).min() < 0


def test_ppt_equivalence_qubits(rng):
    for _ in range(200):
        ch = random_hp_map(2, seed=rng)
        js = state_from_map(ch)
        assert (js.pt_min_eig >= 0) == (ccp_value(ch) >= 0)
    assert state_from_map(builders.identity(2)).diagnostics()["ppt_note"] == "separability-equivalent only for N=2"


def test_classical_shadow_examples(rng):
    sh = classical_shadow(builders.identity(2))
    assert np.array_equal(sh.transition, np.eye(2))
    assert np.array_equal(sh.prob_vector, np.array([1, 0, 0, 1]) / 2)
    U = random_unitary(3, seed=rng)
    sh = classical_shadow(unitary_channel(U))
    assert np.allclose(sh.transition, np.abs(U) ** 2)
    ch = random_channel(3, seed=rng)
    cg = builders.coarse_graining(3)
    assert np.allclose(classical_shadow(cg @ ch).transition, classical_shadow(ch).transition)
    assert np.allclose(classical_shadow(ch @ cg).transition, classical_shadow(ch).transition)


def test_shadow_of_channels_is_stochastic(rng):
    ch = random_channel(3, seed=rng)
    T = classical_shadow(ch).transition
    assert np.allclose(T.sum(axis=0), 1) and np.all(T >= 0)
    t = classical_shadow(ch).prob_vector
    assert np.isclose(t.sum(), 1) and np.all(t >= 0)
    ub = builders.unistochastic_channel(random_unitary(9, seed=rng))
    assert classical_classes(classical_shadow(ub).transition).bistochastic


def test_diagram_commutes_for_builders(rng):
    chans = [builders.identity(2), builders.phase_flip(0.3), builders.bit_flip(0.3),
             builders.depolarizing(0.4), builders.amplitude_damping(0.4), builders.linear(0.2),
             builders.planar(0.3, 0.4), builders.coarse_graining(3), builders.transposition(3),
             builders.depolarizing_general(3, 0.7), builders.choi_map(2, 0, 1),
             builders.rotation(random_unitary(2, seed=rng)),
             builders.unistochastic_channel(random_unitary(4, seed=rng)),
             builders.k_unistochastic_channel(random_unitary(8, seed=rng), 2),
             builders.random_external_field([0.5, 0.5], [PAULI[1], PAULI[2]]),
             builders.stochastic_embedding([[0.2, 0.5], [0.8, 0.5]])]
    for ch in chans:
        sh = classical_shadow(ch)
        assert np.max(np.abs(sh.transition.reshape(-1) / ch.dim - sh.prob_vector)) <= 1e-14
        assert diagram_commutes(ch)


def test_classical_classes():
    c = classical_classes(np.eye(3))
    assert c.stochastic and c.bistochastic and c.symmetric and c.permutation
    assert c.orthostochastic and c.unistochastic
    a = 0.3
    B = np.array([[a, 1 - a], [1 - a, a]])
    c = classical_classes(B)
    assert c.orthostochastic and not c.permutation
    assert np.allclose(c.witness ** 2, B)
    assert np.allclose(c.witness @ c.witness.T, np.eye(2))
    c = classical_classes(np.array([[0.2, 0.5], [0.8, 0.5]]))
    assert c.stochastic and not c.bistochastic and c.orthostochastic is False
    c = classical_classes(np.array([[0.5, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0.5]]))
    assert c.bistochastic and c.unistochastic is None and c.heuristic


def test_unistochastic_witness_verification(rng):
    U = random_unitary(3, seed=rng)
    B = np.abs(U) ** 2
    assert verify_unistochastic_witness(B, U)
    c = classical_classes(B, witness=U)
    assert c.unistochastic and c.heuristic
    assert not verify_unistochastic_witness(B, np.eye(3))


def test_embedding_square():
    V = embedding_square_vertices()
    assert V.shape == (4, 4)
    for v in V:
        assert np.isclose(v.sum(), 1) and set(np.round(v * 2, 12)) <= {0.0, 1.0}
    # the four vertices are pairwise equidistant along edges, forming a square
    d = np.array([[np.linalg.norm(a - b) for b in V] for a in V])
    sides = np.sort(d[0])[1:]
    assert np.isclose(sides[0], sides[1]) and np.isclose(sides[2], np.sqrt(2) * sides[0])
    a, b = 0.3, 0.6
    assert np.allclose(reshaped_stochastic([[a, b], [1 - a, 1 - b]]), np.array([a, b, 1 - a, 1 - b]) / 2)
