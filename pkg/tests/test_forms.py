import math

import numpy as np
import pytest

from pecurves.errors import DimensionMismatchError, SignatureError
from pecurves.forms import (FieldTag, GroupFamily, GroupTag, Signature, e_p_matrix,
                            euclidean_form, h_matrix, membership_defect, pseudo_form)


def boost(a):
    return np.array([[math.cosh(a), math.sinh(a)], [math.sinh(a), math.cosh(a)]])


class TestEpMatrix:
    def test_minkowski_plane(self):
        assert np.array_equal(e_p_matrix(Signature(2, 1)), np.diag([1.0, -1.0]))

    def test_euclidean_degenerate(self):
        assert np.array_equal(e_p_matrix(Signature(3, 3)), np.eye(3))

    def test_split_signature(self):
        assert np.array_equal(e_p_matrix(Signature(4, 2)), np.diag([1.0, 1.0, -1.0, -1.0]))

    def test_invalid_p(self):
        with pytest.raises(SignatureError):
            e_p_matrix(Signature(3, 0))

    def test_squares_to_identity(self):
        for n in range(2, 7):
            for p in list(range(1, n)) + [n]:
                e = e_p_matrix(Signature(n, p))
                assert np.array_equal(e @ e, np.eye(n))


class TestEuclideanForm:
    def test_orthonormal_pair(self):
        assert euclidean_form((1, 0), (0, 1)) == 0.0

    def test_complex_isotropic_vector(self):
        # i^2 + 1 = 0: bilinear, not Hermitian
        assert euclidean_form((1j, 1), (1j, 1)) == 0

    def test_circle_identity(self):
        for t in np.linspace(-3, 3, 11):
            v = (math.cos(t), math.sin(t))
            assert abs(euclidean_form(v, v) - 1.0) < 1e-15

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            euclidean_form((1, 2), (1, 2, 3))

    def test_real_inputs_stay_real(self):
        assert isinstance(euclidean_form((1.0, 2.0), (3.0, 4.0)), float)


class TestPseudoForm:
    def test_hyperbola_identity(self):
        sig = Signature(2, 1)
        for t in np.linspace(-2, 2, 9):
            v = (math.cosh(t), math.sinh(t))
            assert abs(pseudo_form(v, v, sig) - 1.0) < 1e-12

    def test_lightlike_direction(self):
        assert pseudo_form((1, 1), (1, 1), Signature(2, 1)) == 0.0

    def test_direct_evaluation(self):
        assert pseudo_form((1, 2, 3), (1, 2, 3), Signature(3, 2)) == -4.0

    def test_requires_pseudo_index(self):
        with pytest.raises(SignatureError):
            pseudo_form((1, 2), (1, 2), Signature(2, 2))

    def test_matches_matrix_form(self):
        rng = np.random.default_rng(3)
        sig = Signature(4, 2)
        e = e_p_matrix(sig)
        for _ in range(20):
            x, y = rng.normal(size=4), rng.normal(size=4)
            assert abs(pseudo_form(x, y, sig) - x @ e @ y) < 1e-12

    def test_symmetric_bilinear(self):
        rng = np.random.default_rng(11)
        sig = Signature(3, 1)
        for _ in range(25):
            x = rng.normal(size=3) + 1j * rng.normal(size=3)
            y = rng.normal(size=3) + 1j * rng.normal(size=3)
            z = rng.normal(size=3) + 1j * rng.normal(size=3)
            alpha = complex(rng.normal(), rng.normal())
            assert abs(pseudo_form(x, y, sig) - pseudo_form(y, x, sig)) < 1e-12
            lhs = pseudo_form(x, alpha * y + z, sig)
            rhs = alpha * pseudo_form(x, y, sig) + pseudo_form(x, z, sig)
            assert abs(lhs - rhs) < 1e-12


class TestHMatrix:
    def test_minkowski_plane(self):
        assert np.array_equal(h_matrix(Signature(2, 1)), np.diag([1.0, 1j]))

    def test_squares_to_e_p(self):
        sig = Signature(3, 2)
        h = h_matrix(sig)
        assert np.max(np.abs(h @ h - e_p_matrix(sig))) == 0.0

    def test_inverse_is_e_p_h(self):
        sig = Signature(2, 1)
        h = h_matrix(sig)
        hinv = np.linalg.inv(h)
        assert np.max(np.abs(hinv - e_p_matrix(sig) @ h)) < 1e-15
        assert np.max(np.abs(hinv - np.diag([1.0, -1j]))) < 1e-15

    def test_rejects_real_field(self):
        with pytest.raises(SignatureError):
            h_matrix(Signature(2, 1), FieldTag.REAL)

    def test_conjugation_identity(self):
        # [x, y] = (Hx, Hy) on random complex vectors
        rng = np.random.default_rng(7)
        for sig in (Signature(2, 1), Signature(3, 2), Signature(4, 2)):
            h = h_matrix(sig)
            for _ in range(30):
                x = rng.normal(size=sig.n) + 1j * rng.normal(size=sig.n)
                y = rng.normal(size=sig.n) + 1j * rng.normal(size=sig.n)
                assert abs(pseudo_form(x, y, sig) - euclidean_form(h @ x, h @ y)) < 1e-12


class TestMembershipDefect:
    def test_identity_everywhere(self):
        for family in GroupFamily:
            for sig in (Signature(2, 1), Signature(3, 3), Signature(4, 2)):
                assert membership_defect(np.eye(sig.n), family, sig) == 0.0

    def test_boost_is_pseudo_orthogonal(self):
        assert membership_defect(boost(0.7), GroupFamily.O, Signature(2, 1)) <= 1e-12

    def test_reflection_det_defect(self):
        assert abs(membership_defect(np.diag([1.0, -1.0]), GroupFamily.SO, Signature(2, 1)) - 2.0) < 1e-15

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            membership_defect(np.eye(3), GroupFamily.O, Signature(2, 1))

    def test_group_closure(self):
        # products of near-members stay near-members
        from pecurves.equivalence import sample_group_element
        tol = 1e-9
        for sig in (Signature(2, 1), Signature(3, 2)):
            tag = GroupTag(GroupFamily.SO, sig)
            for seed in range(6):
                g1 = sample_group_element(tag, seed=seed).g
                g2 = sample_group_element(tag, seed=seed + 100).g
                assert membership_defect(g1, GroupFamily.SO, sig) <= tol / 4
                assert membership_defect(g2, GroupFamily.SO, sig) <= tol / 4
                assert membership_defect(g1 @ g2, GroupFamily.SO, sig) <= tol


class TestGroupTag:
    def test_rejects_p_zero(self):
        with pytest.raises(SignatureError):
            GroupTag(GroupFamily.O, Signature(2, 0))

    def test_names(self):
        assert str(GroupTag(GroupFamily.SO, Signature(2, 1))) == "SO(2,1,R)"
        assert str(GroupTag(GroupFamily.O, Signature(3, 3), FieldTag.COMPLEX)) == "O(3,C)"
        assert "x" in str(GroupTag(GroupFamily.ESO, Signature(2, 1)))

    def test_signature_guards(self):
        with pytest.raises(SignatureError):
            Signature(1, 1)
        with pytest.raises(SignatureError):
            Signature(3, 4)
