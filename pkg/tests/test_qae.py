import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaemix.linalg import DimensionError
from qaemix.qae import (
    DEFAULT_PR_GRID,
    QaeProblem,
    ReferenceStrategy,
    build_reference,
    compress,
    decode,
    decoding_fidelity,
    encode_split,
    evaluate_ensemble,
    grid_search_pr,
    j_pure,
    j_qmi,
    mix_reference,
    phi,
    phi_terms_batch,
    qae_pure_bound,
)
from qaemix.qinfo import fidelity
from qaemix.states import blended_state, haar_random_pure, thermal_state, werner_state

from conftest import random_density, random_unitary

LN2 = np.log(2.0)


def encoder_for(psi):
    """A unitary whose first row is psi^dagger, so psi -> |0...0>."""
    d = psi.shape[0]
    m = np.eye(d, dtype=complex)
    m[:, 0] = psi
    q, r = np.linalg.qr(m)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q.conj().T


def test_encode_split_product(rng):
    ra, rb = random_density(2, rng), random_density(2, rng)
    prob = QaeProblem(1, 1, np.kron(ra, rb))
    encoded, trash, latent = encode_split(prob, np.eye(4))
    assert np.allclose(trash.matrix, ra, atol=1e-12)
    assert np.allclose(latent.matrix, rb, atol=1e-12)
    assert abs(np.trace(trash.matrix) - 1) <= 1e-12 and abs(np.trace(latent.matrix) - 1) <= 1e-12


def test_encode_split_preserves_spectrum(rng):
    rho = random_density(8, rng)
    encoded, _, _ = encode_split(QaeProblem(1, 2, rho), random_unitary(8, rng))
    assert np.allclose(np.linalg.eigvalsh(encoded.matrix), np.linalg.eigvalsh(rho), atol=1e-9)


def test_encode_split_dimension_mismatch():
    with pytest.raises(DimensionError):
        encode_split(QaeProblem(1, 1, np.eye(4) / 4), np.eye(8))
    with pytest.raises(DimensionError):
        QaeProblem(1, 2, np.eye(4) / 4)
    with pytest.raises(ValueError):
        QaeProblem(1, 1, np.eye(4) / 4, w=1.5)


def test_j_pure_examples():
    assert j_pure(np.diag([1.0, 0.0])) == pytest.approx(1.0, abs=1e-12)
    assert j_pure(np.eye(2) / 2) == pytest.approx(0.5, abs=1e-12)
    t = np.diag([0.7, 0.3])
    assert j_pure(t) == pytest.approx(0.7, abs=1e-12)
    assert j_pure(t) == pytest.approx(fidelity(t, np.diag([1.0, 0.0])), abs=1e-12)
    assert j_pure(t, "root") == pytest.approx(np.sqrt(0.7), abs=1e-12)


def test_j_qmi_examples(rng):
    assert abs(j_qmi(np.kron(random_density(2, rng), random_density(2, rng)), 1, 1)) <= 1e-9
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert j_qmi(np.outer(bell, bell), 1, 1) == pytest.approx(-2 * LN2, abs=1e-10)
    anti, sym = 1.5 / 3, 0.5 / 3
    expected = -(2 * LN2 + anti * np.log(anti) + 3 * sym * np.log(sym))
    assert j_qmi(werner_state(2, 0.5), 1, 1) == pytest.approx(expected, abs=1e-10)


def test_phi_weights(rng):
    rho = random_density(4, rng)
    u = random_unitary(4, rng)
    encoded, trash, _ = encode_split(QaeProblem(1, 1, rho), u)
    jp, jq = j_pure(trash), j_qmi(encoded, 1, 1)
    for w in (0.0, 0.5, 0.99, 1.0):
        assert abs(phi(QaeProblem(1, 1, rho, w), u) - (w * jp + (1 - w) * jq)) <= 1e-12
    assert phi(QaeProblem(1, 1, rho, 1.0), u) == pytest.approx(jp, abs=1e-15)
    assert phi(QaeProblem(1, 1, rho, 0.0), u) == pytest.approx(jq, abs=1e-15)


@pytest.mark.parametrize("convention", ["squared", "root"])
def test_phi_batch_matches_scalar(convention, rng):
    rho = random_density(8, rng)
    prob = QaeProblem(1, 2, rho, 0.3, convention)
    us = np.stack([random_unitary(8, rng) for _ in range(5)])
    values, jp, jq = phi_terms_batch(prob, us)
    for k, u in enumerate(us):
        encoded, trash, _ = encode_split(prob, u)
        assert values[k] == pytest.approx(phi(prob, u), abs=1e-10)
        assert jp[k] == pytest.approx(j_pure(trash, convention), abs=1e-12)
        assert jq[k] == pytest.approx(j_qmi(encoded, 1, 2), abs=1e-10)


def test_bound_examples():
    psi = haar_random_pure(4, 1)
    assert qae_pure_bound(psi.projector(), 1) == pytest.approx(1.0, abs=1e-12)
    assert qae_pure_bound(np.eye(4) / 4, 1) == pytest.approx(0.5, abs=1e-12)
    assert qae_pure_bound(werner_state(2, 0.8), 1) == pytest.approx(0.75 + 1 / 12, abs=1e-12)
    assert qae_pure_bound(werner_state(2, 0.0), 1) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DimensionError):
        qae_pure_bound(np.eye(4) / 4, 3)


def test_werner_bound_minimum_at_zero():
    alphas = np.round(np.linspace(-1, 1, 11), 10)
    bounds = [qae_pure_bound(werner_state(2, a), 1) for a in alphas]
    assert alphas[int(np.argmin(bounds))] == 0.0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(1, 1), (1, 2), (2, 1)]), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_bound_dominates_j_pure(dims, rank, seed):
    rng = np.random.default_rng(seed)
    n_a, n_b = dims
    d = 2 ** (n_a + n_b)
    rho = random_density(d, rng, rank=min(rank, d))
    prob = QaeProblem(n_a, n_b, rho)
    _, trash, _ = encode_split(prob, random_unitary(d, rng))
    assert j_pure(trash) <= qae_pure_bound(rho, n_b) + 1e-9


def test_bound_attained_by_spectral_encoder(rng):
    # sorting eigenvectors into |0>_A x |b>_B saturates the bound
    rho = thermal_state(2, 1.0).matrix
    values, vectors = np.linalg.eigh(rho)
    u = vectors[:, ::-1].conj().T
    _, trash, _ = encode_split(QaeProblem(1, 1, rho), u)
    assert j_pure(trash) == pytest.approx(qae_pure_bound(rho, 1), abs=1e-12)


def test_reference_examples():
    assert np.allclose(mix_reference(1.0, 2).matrix, np.diag([1.0, 0.0]))
    assert np.allclose(mix_reference(0.0, 2).matrix, np.eye(2) / 2)
    psi = haar_random_pure(4, 3)
    rho = blended_state(4, 0.8, psi)
    ref, p_r = build_reference(ReferenceStrategy("mix", "bound"), n_a=1, rho0=rho, n_b=1)
    assert p_r == pytest.approx(0.81, abs=1e-12)
    assert np.allclose(ref.matrix, np.diag([0.81 + 0.095, 0.095]))
    ref, p_r = build_reference(ReferenceStrategy("mix", "guess"), n_a=1, current_j_pure=0.9)
    assert p_r == pytest.approx(0.81)
    ref, p_r = build_reference(ReferenceStrategy("pure"), n_a=2)
    assert p_r is None and ref.matrix[0, 0] == 1 and np.trace(ref.matrix) == 1
    trash = np.diag([0.6, 0.4])
    ref, _ = build_reference(ReferenceStrategy("trash"), n_a=1, trash=trash)
    assert np.array_equal(ref.matrix, trash)


def test_reference_errors():
    with pytest.raises(ValueError):
        build_reference(ReferenceStrategy("trash"), n_a=1)
    with pytest.raises(ValueError):
        build_reference(ReferenceStrategy("mix", "guess"), n_a=1)
    with pytest.raises(ValueError):
        build_reference(ReferenceStrategy("mix", "bound"), n_a=1)
    with pytest.raises(ValueError):
        ReferenceStrategy("mix", "fixed", 1.2)
    with pytest.raises(ValueError):
        ReferenceStrategy("mix", "grid", candidates=())
    with pytest.raises(ValueError):
        ReferenceStrategy("clone")
    with pytest.raises(ValueError):
        mix_reference(-0.1, 2)


def test_strategy_parse_and_labels():
    assert ReferenceStrategy.parse("trash").label == "trash"
    assert ReferenceStrategy.parse("mix", "grid").label == "mix-grid"
    assert ReferenceStrategy.parse("mix", "0.5") == ReferenceStrategy("mix", "fixed", 0.5)
    assert ReferenceStrategy.parse("mix").source == "grid"
    assert DEFAULT_PR_GRID == (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def test_decode_product_reconstruction(rng):
    ra, rb = random_density(2, rng), random_density(4, rng)
    rho = np.kron(ra, rb)
    rho_f = decode(np.eye(8), rb, ra)
    assert np.allclose(rho_f.matrix, rho, atol=1e-12)
    assert decoding_fidelity(rho, rho_f) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(DimensionError):
        decode(np.eye(8), rb, np.eye(4) / 4)


def test_decode_maximally_mixed(rng):
    for _ in range(10):
        u = random_unitary(4, rng)
        rho_f = decode(u, np.eye(2) / 2, np.eye(2) / 2)
        assert np.allclose(rho_f.matrix, np.eye(4) / 4, atol=1e-12)


def test_decoding_fidelity_examples():
    a = haar_random_pure(4, 2).projector()
    assert decoding_fidelity(a, a) == pytest.approx(1.0, abs=1e-9)
    assert decoding_fidelity(np.diag([1.0, 0, 0, 0]), np.diag([0, 1.0, 0, 0])) == pytest.approx(0.0, abs=1e-12)


def test_werner_zero_decodes_perfectly(rng):
    rho = werner_state(2, 0.0)
    prob = QaeProblem(1, 1, rho)
    u = random_unitary(4, rng)
    res = compress(prob, u, ReferenceStrategy("mix", "fixed", 0.0))
    assert res.j_d == pytest.approx(1.0, abs=1e-9)


def test_perfect_disentanglement(rng):
    sa, sb = random_density(2, rng), random_density(2, rng)
    u = random_unitary(4, rng)
    rho0 = u.conj().T @ np.kron(sa, sb) @ u
    res = compress(QaeProblem(1, 1, rho0), u, ReferenceStrategy("trash"))
    assert res.j_e == pytest.approx(1.0, abs=1e-9)
    assert res.j_d == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.5, 0.99, 1.0]))
def test_compression_result_invariants(seed, w):
    rng = np.random.default_rng(seed)
    prob = QaeProblem(1, 1, random_density(4, rng), w)
    res = compress(prob, random_unitary(4, rng), ReferenceStrategy("trash"))
    for value in (res.j_pure, res.j_e, res.j_d):
        assert -1e-9 <= value <= 1 + 1e-9
    assert abs(res.j_e - 1) <= 1e-9
    assert abs(res.phi - (w * res.j_pure + (1 - w) * res.j_qmi)) <= 1e-12
    assert res.j_qmi <= 1e-9


def test_global_phase_invariance(rng):
    rho = random_density(4, rng)
    prob = QaeProblem(1, 1, rho)
    u = random_unitary(4, rng)
    a = compress(prob, u, ReferenceStrategy("trash")).j_d
    b = compress(prob, np.exp(0.7j) * u, ReferenceStrategy("trash")).j_d
    assert abs(a - b) <= 1e-12


def test_reconstruction_is_linear(rng):
    u = random_unitary(4, rng)
    ref = mix_reference(0.6, 2)
    r1, r2 = random_density(4, rng), random_density(4, rng)
    t = 0.3

    def reconstruct(rho):
        _, _, latent = encode_split(QaeProblem(1, 1, rho), u)
        return decode(u, latent, ref).matrix

    mixed = reconstruct(t * r1 + (1 - t) * r2)
    assert np.max(np.abs(mixed - (t * reconstruct(r1) + (1 - t) * reconstruct(r2)))) <= 1e-10


def test_grid_search_pure_state_prefers_pure_reference():
    psi = haar_random_pure(4, 11)
    prob = QaeProblem(1, 1, psi.projector())
    best_p, best_jd, table = grid_search_pr(prob, encoder_for(psi.amplitudes))
    assert best_p == 1.0 and best_jd == pytest.approx(1.0, abs=1e-9)
    assert [p for p, _ in table] == list(DEFAULT_PR_GRID)
    assert all(jd <= best_jd + 1e-12 for _, jd in table)


def test_grid_search_maximally_mixed():
    prob = QaeProblem(1, 1, np.eye(4) / 4)
    best_p, best_jd, table = grid_search_pr(prob, np.eye(4))
    assert best_p == 0.0 and best_jd == pytest.approx(1.0, abs=1e-9)
    assert table[0] == (0.0, best_jd)
    with pytest.raises(ValueError):
        grid_search_pr(prob, np.eye(4), [])


def test_grid_search_ties_go_to_larger_pr(monkeypatch):
    import qaemix.qae as qae

    monkeypatch.setattr(qae, "decoding_fidelity", lambda *args: 0.5)
    prob = QaeProblem(1, 1, np.eye(4) / 4)
    best_p, best_jd, _ = qae.grid_search_pr(prob, np.eye(4), [0.2, 0.9, 0.4])
    assert (best_p, best_jd) == (0.9, 0.5)


def test_grid_search_blended_tracks_p0():
    # ideal encoder: the pure component goes to |00>, the mixed part stays uniform
    psi = haar_random_pure(4, 5)
    prob = QaeProblem(1, 1, blended_state(4, 0.8, psi))
    best_p, _, _ = grid_search_pr(prob, encoder_for(psi.amplitudes))
    assert abs(best_p - 0.8) <= 0.1 + 1e-12


def test_ensemble_single_member(rng):
    rho = random_density(4, rng)
    u = random_unitary(4, rng)
    ref = mix_reference(0.4, 2)
    jds, mean = evaluate_ensemble([(1.0, rho)], u, ref, 1, 1)
    _, _, latent = encode_split(QaeProblem(1, 1, rho), u)
    direct = decoding_fidelity(rho, decode(u, latent, ref))
    assert jds == [pytest.approx(direct, abs=1e-12)] and mean == pytest.approx(direct, abs=1e-12)


def test_ensemble_two_members():
    a = np.array([1, 0, 0, 0], dtype=complex)
    b = np.array([0, 1, 0, 0], dtype=complex)
    ref = mix_reference(1.0, 2)
    jds, mean = evaluate_ensemble([(0.25, np.outer(a, a)), (0.75, np.outer(b, b))], np.eye(4), ref, 1, 1)
    assert jds == [pytest.approx(1.0), pytest.approx(1.0)]
    assert mean == pytest.approx(1.0)
    with pytest.raises(ValueError):
        evaluate_ensemble([(0.5, np.outer(a, a))], np.eye(4), ref, 1, 1)
    with pytest.raises(ValueError):
        evaluate_ensemble([(-0.5, np.outer(a, a)), (1.5, np.outer(b, b))], np.eye(4), ref, 1, 1)


def test_ensemble_thermal_members_reported(rng):
    rho = thermal_state(2, 1.0).matrix
    values, vectors = np.linalg.eigh(rho)
    members = [(float(p), np.outer(v, v.conj())) for p, v in zip(values, vectors.T)]
    u = random_unitary(4, rng)
    ref = mix_reference(0.7, 2)
    jds, mean = evaluate_ensemble(members, u, ref, 1, 1)
    assert len(jds) == 4 and 0.0 <= mean <= 1.0
    # the reconstruction map is linear, so mixing member reconstructions recovers rho_f
    mixture = sum(p * decode(u, encode_split(QaeProblem(1, 1, m), u)[2], ref).matrix for p, m in members)
    direct = decode(u, encode_split(QaeProblem(1, 1, rho), u)[2], ref).matrix
    assert np.max(np.abs(mixture - direct)) <= 1e-10


def test_compress_strategies(rng):
    rho = thermal_state(2, 1.0)
    prob = QaeProblem(1, 1, rho)
    u = random_unitary(4, rng)
    grid = compress(prob, u, ReferenceStrategy("mix", "grid"))
    assert grid.p_r_used in DEFAULT_PR_GRID and len(grid.grid_table) == 11
    assert grid.j_d == pytest.approx(max(jd for _, jd in grid.grid_table), abs=1e-12)
    bound = compress(prob, u, ReferenceStrategy("mix", "bound"))
    assert bound.p_r_used == pytest.approx(qae_pure_bound(rho, 1) ** 2)
    guess = compress(prob, u, ReferenceStrategy("mix", "guess"), trained_j_pure=0.5)
    assert guess.p_r_used == pytest.approx(0.25)
    assert set(guess.metrics()) == {"j_pure", "j_qmi", "j_e", "j_d", "phi", "bound", "p_r_used"}
