import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsslab.qstate import (
    DensityMatrix,
    EntropyRecord,
    PureState,
    QStateError,
    RegisterLayout,
    apply_isometry,
    eigendecompose_hermitian,
    entropy_record,
    mutual_information,
    partial_trace,
    purify_secret,
    subsystem_entropy,
    von_neumann_entropy,
)

SQ2 = 2**-0.5


def bell_state():
    return PureState(RegisterLayout(("a", "b")), [SQ2, 0, 0, SQ2])


def threshold34_images():
    images = np.zeros((2, 16), dtype=np.complex128)
    images[0, 0b0000] = images[0, 0b1111] = SQ2
    images[1, 0b0011] = images[1, 0b1100] = SQ2
    return images


def distributed_state():
    """Purified maximally mixed secret pushed through the four-share isometry."""
    return apply_isometry(
        purify_secret((0.5, 0.5)), "S", ("p1", "p2", "p3", "p4"), threshold34_images()
    )


# ---------------------------------------------------------------------------
# oracle: index-arithmetic partial trace, independent of the library path


def oracle_reduced(amplitudes, num_qubits, keep_axes):
    keep_axes = tuple(keep_axes)
    env = [a for a in range(num_qubits) if a not in keep_axes]
    k = len(keep_axes)
    rho = np.zeros((1 << k, 1 << k), dtype=np.complex128)

    def bit(i, axis):
        return (i >> (num_qubits - 1 - axis)) & 1

    for i in range(1 << num_qubits):
        for j in range(1 << num_qubits):
            if any(bit(i, a) != bit(j, a) for a in env):
                continue
            ik = sum(bit(i, a) << (k - 1 - t) for t, a in enumerate(keep_axes))
            jk = sum(bit(j, a) << (k - 1 - t) for t, a in enumerate(keep_axes))
            rho[ik, jk] += amplitudes[i] * np.conj(amplitudes[j])
    return rho


def oracle_entropy(rho):
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > 1e-12]
    return float(-(lam * np.log2(lam)).sum())


# ---------------------------------------------------------------------------
# layouts and states


class TestLayout:
    def test_duplicate_labels_rejected(self):
        with pytest.raises(QStateError, match="duplicate"):
            RegisterLayout(("a", "a"))

    def test_qubit_cap(self):
        with pytest.raises(QStateError, match="14"):
            RegisterLayout(tuple(f"q{i}" for i in range(15)))

    def test_unknown_register(self):
        with pytest.raises(QStateError, match="unknown"):
            RegisterLayout(("a", "b")).axis("c")


class TestPureState:
    def test_norm_enforced(self):
        with pytest.raises(QStateError, match="norm"):
            PureState(RegisterLayout(("a",)), [1.0, 1.0])

    def test_amplitudes_read_only(self):
        state = bell_state()
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0.0


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(QStateError, match="Hermitian"):
            DensityMatrix([[0.5, 0.5], [0.0, 0.5]])

    def test_rejects_bad_trace(self):
        with pytest.raises(QStateError, match="trace"):
            DensityMatrix([[1.0, 0.0], [0.0, 1.0]])


# ---------------------------------------------------------------------------
# purification


class TestPurifySecret:
    def test_maximally_mixed(self):
        state = purify_secret((0.5, 0.5))
        np.testing.assert_allclose(state.amplitudes, [SQ2, 0, 0, SQ2], atol=1e-15)

    def test_pure_secret(self):
        state = purify_secret((1.0, 0.0))
        np.testing.assert_allclose(state.amplitudes, [1, 0, 0, 0], atol=1e-15)

    def test_biased_secret_marginal(self):
        state = purify_secret((0.3, 0.7))
        rho = oracle_reduced(state.amplitudes, 2, (1,))
        np.testing.assert_allclose(sorted(np.linalg.eigvalsh(rho)), [0.3, 0.7], atol=1e-12)

    def test_rejects_bad_distribution(self):
        with pytest.raises(QStateError):
            purify_secret((0.5, 0.6))
        with pytest.raises(QStateError):
            purify_secret((1.5, -0.5))
        with pytest.raises(QStateError):
            purify_secret((1.0,))

    @given(st.floats(0.0, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_reference_correlation_is_twice_secret_entropy(self, p):
        state = purify_secret((p, 1.0 - p))
        i_rs = mutual_information(state, ("R",), ("S",))
        s_s = subsystem_entropy(state, ("S",))
        assert abs(i_rs - 2.0 * s_s) <= 1e-9


# ---------------------------------------------------------------------------
# isometry application


class TestApplyIsometry:
    def test_four_share_distribution(self):
        state = distributed_state()
        assert state.layout.labels == ("R", "p1", "p2", "p3", "p4")
        expected = np.zeros(32, dtype=np.complex128)
        for ket in ("00000", "01111", "10011", "11100"):
            expected[int(ket, 2)] = 0.5
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-12)

    def test_identity_images(self):
        state = purify_secret((0.5, 0.5))
        out = apply_isometry(state, "S", ("T",), np.eye(2))
        np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)

    def test_rejects_non_orthogonal_images(self):
        images = np.zeros((2, 4), dtype=np.complex128)
        images[0, 0] = images[1, 0] = 1.0
        with pytest.raises(QStateError, match="isometry"):
            apply_isometry(purify_secret((0.5, 0.5)), "S", ("a", "b"), images)

    def test_rejects_label_collision(self):
        with pytest.raises(QStateError, match="collide"):
            apply_isometry(purify_secret((0.5, 0.5)), "S", ("R",), np.eye(2))

    def test_norm_preserved_on_random_isometry(self):
        rng = np.random.default_rng(7)
        raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        q, _ = np.linalg.qr(raw)
        images = q[:2, :]
        state = apply_isometry(purify_secret((0.3, 0.7)), "S", ("a", "b"), images)
        assert abs(np.linalg.norm(state.amplitudes) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# partial trace


class TestPartialTrace:
    def test_bell_marginal(self):
        rho = partial_trace(bell_state(), ("a",))
        np.testing.assert_allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)

    def test_share_pair_is_classical_mixture(self):
        rho = partial_trace(distributed_state(), ("p1", "p2"))
        expected = np.zeros((4, 4))
        expected[0, 0] = expected[3, 3] = 0.5
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)

    def test_product_state_marginal(self):
        amps = np.kron([1, 0], [SQ2, SQ2])
        state = PureState(RegisterLayout(("a", "b")), amps)
        rho = partial_trace(state, ("b",))
        np.testing.assert_allclose(rho.matrix, np.full((2, 2), 0.5), atol=1e-12)

    def test_matches_oracle_on_random_state(self):
        rng = np.random.default_rng(11)
        raw = rng.normal(size=16) + 1j * rng.normal(size=16)
        amps = raw / np.linalg.norm(raw)
        state = PureState(RegisterLayout(("a", "b", "c", "d")), amps)
        for keep, axes in ((("b", "d"), (1, 3)), (("a",), (0,)), (("a", "b", "c"), (0, 1, 2))):
            np.testing.assert_allclose(
                partial_trace(state, keep).matrix, oracle_reduced(amps, 4, axes), atol=1e-12
            )

    def test_keep_order_is_layout_order(self):
        state = distributed_state()
        a = partial_trace(state, ("p2", "p1")).matrix
        b = partial_trace(state, ("p1", "p2")).matrix
        np.testing.assert_allclose(a, b, atol=1e-15)

    def test_composition(self):
        state = distributed_state()
        one_step = partial_trace(state, ("p1", "p2"))
        rho_three = partial_trace(state, ("p1", "p2", "p3"))
        two_step = partial_trace(rho_three, ("p1", "p2"))
        np.testing.assert_allclose(one_step.matrix, two_step.matrix, atol=1e-12)

    def test_unknown_register(self):
        with pytest.raises(QStateError, match="unknown"):
            partial_trace(bell_state(), ("z",))

    def test_empty_keep_rejected(self):
        with pytest.raises(QStateError):
            partial_trace(bell_state(), ())


# ---------------------------------------------------------------------------
# spectra and entropy


class TestEigendecomposition:
    def test_diagonal(self):
        values, _ = eigendecompose_hermitian(DensityMatrix(np.eye(2) / 2))
        np.testing.assert_allclose(values, [0.5, 0.5], atol=1e-14)

    def test_two_level_mixture(self):
        rho = np.zeros((4, 4))
        rho[0, 0] = rho[3, 3] = 0.5
        values, _ = eigendecompose_hermitian(DensityMatrix(rho))
        np.testing.assert_allclose(values, [0.5, 0.5, 0.0, 0.0], atol=1e-14)

    def test_off_diagonal_symmetry(self):
        values, _ = eigendecompose_hermitian(np.array([[0.0, 0.5], [0.5, 0.0]]))
        np.testing.assert_allclose(values, [0.5, -0.5], atol=1e-14)

    def test_residual_contract(self):
        rng = np.random.default_rng(3)
        raw = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        herm = (raw + raw.conj().T) / 2
        values, vectors = eigendecompose_hermitian(herm)
        scale = np.linalg.norm(herm, 2)
        for lam, vec in zip(values, vectors.T):
            assert np.linalg.norm(herm @ vec - lam * vec) <= 1e-10 * scale
        assert list(values) == sorted(values, reverse=True)

    def test_rejects_non_hermitian(self):
        with pytest.raises(QStateError, match="Hermitian"):
            eigendecompose_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestEntropy:
    def test_maximally_mixed_qubit(self):
        assert von_neumann_entropy(DensityMatrix(np.eye(2) / 2)) == pytest.approx(1.0, abs=1e-12)

    def test_pure_projector(self):
        rho = np.zeros((4, 4))
        rho[2, 2] = 1.0
        assert von_neumann_entropy(DensityMatrix(rho)) == pytest.approx(0.0, abs=1e-12)

    def test_two_qubit_maximally_mixed(self):
        assert von_neumann_entropy(DensityMatrix(np.eye(4) / 4)) == pytest.approx(2.0, abs=1e-12)

    def test_bounds_on_random_states(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            rho = raw @ raw.conj().T
            rho /= np.trace(rho).real
            s = von_neumann_entropy(DensityMatrix(rho))
            assert -1e-9 <= s <= 2.0 + 1e-9


# ---------------------------------------------------------------------------
# mutual information: values frozen from the index-arithmetic oracle


class TestMutualInformation:
    def test_share_triple_recovers_everything(self):
        state = distributed_state()
        oracle = (
            oracle_entropy(oracle_reduced(state.amplitudes, 5, (0,)))
            + oracle_entropy(oracle_reduced(state.amplitudes, 5, (1, 2, 3)))
            - oracle_entropy(oracle_reduced(state.amplitudes, 5, (0, 1, 2, 3)))
        )
        assert oracle == pytest.approx(2.0, abs=1e-9)
        value = mutual_information(state, ("R",), ("p1", "p2", "p3"))
        assert value == pytest.approx(2.0, abs=1e-9)

    def test_single_share_learns_nothing(self):
        assert mutual_information(distributed_state(), ("R",), ("p1",)) == pytest.approx(
            0.0, abs=1e-9
        )

    def test_share_pair_learns_one_bit(self):
        assert mutual_information(distributed_state(), ("R",), ("p1", "p2")) == pytest.approx(
            1.0, abs=1e-9
        )

    def test_rejects_overlap(self):
        with pytest.raises(QStateError, match="overlap"):
            mutual_information(distributed_state(), ("R",), ("R", "p1"))

    def test_entropy_record_consistent(self):
        record = entropy_record(distributed_state(), ("R",), ("p1", "p2"))
        assert isinstance(record, EntropyRecord)
        s_r = subsystem_entropy(distributed_state(), ("R",))
        assert record.i_ra == pytest.approx(s_r + record.s_a - record.s_ra, abs=1e-12)
        assert record.i_ra >= -1e-9


# ---------------------------------------------------------------------------
# purity identities on random states


def random_state(rng, labels):
    raw = rng.normal(size=1 << len(labels)) + 1j * rng.normal(size=1 << len(labels))
    return PureState(RegisterLayout(labels), raw / np.linalg.norm(raw))


@given(st.integers(0, 10_000), st.integers(3, 6))
@settings(max_examples=60, deadline=None)
def test_purity_symmetry(seed, n):
    rng = np.random.default_rng(seed)
    labels = tuple(f"q{i}" for i in range(n))
    state = random_state(rng, labels)
    cut = int(rng.integers(1, n))
    part = list(rng.permutation(n))
    left = tuple(labels[i] for i in part[:cut])
    right = tuple(labels[i] for i in part[cut:])
    assert abs(subsystem_entropy(state, left) - subsystem_entropy(state, right)) <= 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_complementary_information(seed):
    rng = np.random.default_rng(seed)
    labels = ("R", "a", "b", "c")
    state = random_state(rng, labels)
    i_ra = mutual_information(state, ("R",), ("a",))
    i_rbc = mutual_information(state, ("R",), ("b", "c"))
    s_r = subsystem_entropy(state, ("R",))
    assert abs(i_ra + i_rbc - 2.0 * s_r) <= 1e-9
