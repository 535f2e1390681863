import numpy as np
import pytest

from weakmeter.errors import SignatureError
from weakmeter.hilbert import (
    Ket,
    Operator,
    SpaceSignature,
    dft_q_to_p,
    extend,
    identity,
    idft_p_to_q,
    inner,
    mat_exp,
    tensor,
)


def sig(*factors):
    return SpaceSignature(tuple(factors))


def random_hermitian(rng, dim, norm=1.0):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (m + m.conj().T) / 2
    return h * (norm / np.linalg.norm(h, 2))


class TestSpaceSignature:
    def test_dimension_is_product(self):
        s = sig(("path", 2), ("orbital", 3), ("meter", 5))
        assert s.dim == 30

    def test_duplicate_labels_rejected(self):
        with pytest.raises(SignatureError):
            sig(("path", 2), ("path", 2))

    def test_factor_order_is_identity(self):
        a = sig(("path", 2), ("polarization", 2))
        b = sig(("polarization", 2), ("path", 2))
        assert a != b

    def test_concat_rejects_duplicates(self):
        with pytest.raises(SignatureError):
            sig(("a", 2)).concat(sig(("a", 3)))


class TestTensor:
    def test_identity_times_identity(self):
        got = tensor(identity(2, "a"), identity(3, "b"))
        np.testing.assert_allclose(got.matrix, np.eye(6))

    def test_basis_ket_product(self):
        l_ket = Ket(sig(("path", 2)), [1, 0])
        h_ket = Ket(sig(("polarization", 2)), [1, 0])
        got = tensor(l_ket, h_ket)
        np.testing.assert_array_equal(got.amplitudes, [1, 0, 0, 0])

    def test_projector_times_sigma_z_by_hand(self):
        # 4x4 Kronecker product written out explicitly
        pi_l = Operator(sig(("path", 2)), np.diag([1.0, 0.0]))
        sz = Operator(sig(("polarization", 2)), np.diag([1.0, -1.0]))
        expected = np.diag([1.0, -1.0, 0.0, 0.0])
        np.testing.assert_allclose(tensor(pi_l, sz).matrix, expected)

    def test_duplicate_label_rejected(self):
        with pytest.raises(SignatureError):
            tensor(identity(2, "x"), identity(2, "x"))

    def test_kron_associativity(self):
        rng = np.random.default_rng(3)
        a = Operator(sig(("a", 2)), rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        b = Operator(sig(("b", 3)), rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        c = Operator(sig(("c", 2)), rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        left = tensor(tensor(a, b), c)
        right = tensor(a, tensor(b, c))
        assert np.max(np.abs(left.matrix - right.matrix)) < 1e-14


class TestExtend:
    def test_trailing_identity(self):
        sz = Operator(sig(("polarization", 2)), np.diag([1.0, -1.0]))
        target = sig(("path", 2), ("orbital", 2), ("polarization", 2))
        got = extend(sz, target)
        expected = np.kron(np.eye(4), np.diag([1.0, -1.0]))
        np.testing.assert_allclose(got.matrix, expected)

    def test_leading_factor(self):
        pi_r = Operator(sig(("path", 2)), np.diag([0.0, 1.0]))
        target = sig(("path", 2), ("polarization", 2))
        got = extend(pi_r, target)
        np.testing.assert_allclose(got.matrix, np.kron(np.diag([0.0, 1.0]), np.eye(2)))

    def test_middle_factors(self):
        # I (x) L_x (x) sigma_x (x) I on path, orbital, polarization, meter
        l_x = np.array([[0, -1j], [1j, 0]])
        s_x = np.array([[0, 1], [1, 0]], dtype=complex)
        op = Operator(sig(("orbital", 2), ("polarization", 2)), np.kron(l_x, s_x))
        target = sig(("path", 2), ("orbital", 2), ("polarization", 2), ("meter", 5))
        got = extend(op, target)
        expected = np.kron(np.kron(np.eye(2), np.kron(l_x, s_x)), np.eye(5))
        np.testing.assert_allclose(got.matrix, expected)

    def test_non_contiguous_factors(self):
        # operator on (path, polarization) extended into path, orbital, polarization
        rng = np.random.default_rng(5)
        block = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        op = Operator(sig(("path", 2), ("polarization", 2)), block)
        target = sig(("path", 2), ("orbital", 3), ("polarization", 2))
        got = extend(op, target)
        # oracle: permute a kron built in (path, polarization, orbital) order
        full = np.kron(block, np.eye(3)).reshape(2, 2, 3, 2, 2, 3)
        expected = full.transpose(0, 2, 1, 3, 5, 4).reshape(12, 12)
        np.testing.assert_allclose(got.matrix, expected, atol=1e-14)

    def test_missing_label_rejected(self):
        op = Operator(sig(("spin", 2)), np.eye(2))
        with pytest.raises(SignatureError):
            extend(op, sig(("path", 2), ("polarization", 2)))

    def test_homomorphism(self):
        rng = np.random.default_rng(11)
        s = sig(("orbital", 2), ("polarization", 2))
        target = sig(("path", 2), ("orbital", 2), ("polarization", 2))
        a = Operator(s, rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        b = Operator(s, rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        lhs = extend(a @ b, target)
        rhs = extend(a, target) @ extend(b, target)
        np.testing.assert_allclose(lhs.matrix, rhs.matrix, atol=1e-12)


class TestInner:
    def test_self_overlap(self):
        h = Ket(sig(("polarization", 2)), np.array([1, 1]) / np.sqrt(2))
        assert inner(h, h) == pytest.approx(1.0)

    def test_orthogonality(self):
        h = Ket(sig(("polarization", 2)), [1, 0])
        v = Ket(sig(("polarization", 2)), [0, 1])
        assert inner(h, v) == 0

    def test_conjugate_linear_first_argument(self):
        s = sig(("a", 2))
        a = Ket(s, [1j, 0.5])
        b = Ket(s, [1, 1])
        assert inner(2j * a, b) == pytest.approx(-2j * inner(a, b))

    def test_review_states_overlap(self):
        # hand expansion of the review pre/post pair gives i/2
        from weakmeter.optics import named_state

        got = inner(named_state("cheshire_f"), named_state("cheshire_in"))
        assert got == pytest.approx(0.5j, abs=1e-15)

    def test_signature_mismatch(self):
        with pytest.raises(SignatureError):
            inner(Ket(sig(("a", 2)), [1, 0]), Ket(sig(("b", 2)), [1, 0]))


class TestMatExp:
    def test_zero_gives_identity(self):
        np.testing.assert_allclose(mat_exp(np.zeros((3, 3)), 2.0), np.eye(3))

    def test_sigma_z_quarter_turn(self):
        # 2x2 closed form: exp(-i pi/2 sigma_z) = diag(-i, i)
        got = mat_exp(np.diag([1.0, -1.0]), -1j * np.pi / 2)
        np.testing.assert_allclose(got, np.diag([-1j, 1j]), atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_unitarity_for_hermitian_generators(self, seed):
        rng = np.random.default_rng(seed)
        h = random_hermitian(rng, 6, norm=10.0)
        t = rng.uniform(-10, 10)
        u = mat_exp(h, -1j * t)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(6), atol=1e-10)

    def test_non_hermitian_against_scipy(self):
        import scipy.linalg

        rng = np.random.default_rng(9)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        np.testing.assert_allclose(mat_exp(m, 0.3), scipy.linalg.expm(0.3 * m), atol=1e-12)

    def test_operator_wrapper(self):
        op = identity(3, "x")
        out = mat_exp(op, 1j)
        assert out.signature == op.signature
        np.testing.assert_allclose(out.matrix, np.exp(1j) * np.eye(3))

    def test_nonfinite_rejected(self):
        bad = np.array([[np.inf, 0], [0, 1]])
        with pytest.raises(ValueError):
            mat_exp(bad, 1.0)


class TestDft:
    def test_uniform_maps_to_zero_momentum(self):
        vec = np.ones(9) / 3.0
        out = dft_q_to_p(vec)
        expected = np.zeros(9, complex)
        expected[4] = 1.0
        np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        vec = rng.normal(size=65) + 1j * rng.normal(size=65)
        np.testing.assert_allclose(idft_p_to_q(dft_q_to_p(vec)), vec, atol=1e-12)

    def test_gaussian_momentum_variance(self):
        # continuous-limit closed form: density variance 1/(4 delta^2)
        n, delta = 32, 2.0
        q = np.arange(-n, n + 1)
        amps = np.exp(-(q**2) / (4 * delta**2))
        amps = amps / np.linalg.norm(amps)
        p = 2 * np.pi * np.arange(-n, n + 1) / (2 * n + 1)
        density = np.abs(dft_q_to_p(amps)) ** 2
        var = np.sum(p**2 * density) - np.sum(p * density) ** 2
        assert var == pytest.approx(1 / (4 * delta**2), rel=1e-3)

    @pytest.mark.parametrize("n", [5, 64, 512])
    def test_inner_products_preserved(self, n):
        rng = np.random.default_rng(n)
        size = 2 * n + 1
        a = rng.normal(size=size) + 1j * rng.normal(size=size)
        b = rng.normal(size=size) + 1j * rng.normal(size=size)
        before = np.vdot(a, b)
        after = np.vdot(dft_q_to_p(a), dft_q_to_p(b))
        assert abs(after - before) < 1e-12 * max(1.0, abs(before))

    def test_even_length_rejected(self):
        with pytest.raises(ValueError):
            dft_q_to_p(np.ones(8))


class TestKetOperatorInvariants:
    def test_normalized_flag_verified(self):
        with pytest.raises(ValueError):
            Ket(sig(("a", 2)), [1, 1], normalized=True)

    def test_hermitian_flag_verified(self):
        with pytest.raises(ValueError):
            Operator(sig(("a", 2)), np.array([[0, 1], [0, 0]]), hermitian=True)

    def test_unitary_flag_verified(self):
        with pytest.raises(ValueError):
            Operator(sig(("a", 2)), np.diag([1.0, 2.0]), unitary=True)

    def test_amplitudes_frozen(self):
        ket = Ket(sig(("a", 2)), [1, 0])
        with pytest.raises(ValueError):
            ket.amplitudes[0] = 5.0
