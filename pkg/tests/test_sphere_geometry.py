import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ANGLE_DENSITY_C, COSINE_POWER_C
from latlab import goodness
from latlab import sphere_geometry as sg
from latlab.errors import (
    DimensionError,
    DomainError,
    NotRepresentableError,
    NumericalInconsistencyError,
    PreconditionError,
    SingularityError,
)

HALF_PI = math.pi / 2


def random_phi(rng, N, lo=0.05, hi=math.pi - 0.05):
    return sg.AngleVector(N, rng.uniform(lo, hi, sg.num_pairs(N)))


def right_angles(N):
    return sg.AngleVector(N, np.full(sg.num_pairs(N), HALF_PI))


class TestAngleVector:
    def test_pair_order(self):
        assert sg.pair_list(4) == ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
        assert sg.pair_index(4, 2, 3) == 3

    def test_lookup(self):
        a = sg.AngleVector.from_values([0.1, 0.2, 0.3])
        assert a.N == 3
        assert a[2, 3] == 0.3
        assert a.as_dict() == {(1, 2): 0.1, (1, 3): 0.2, (2, 3): 0.3}

    def test_bad_length(self):
        with pytest.raises(DomainError):
            sg.AngleVector.from_values([0.1, 0.2])


class TestSphereSurface:
    @pytest.mark.parametrize("k, expected", [(1, 2.0), (2, 2 * math.pi), (3, 4 * math.pi)])
    def test_small(self, k, expected):
        assert sg.sphere_surface(k) == pytest.approx(expected, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            sg.sphere_surface(0)

    def test_recurrence(self):
        for k in range(1, 201):
            lhs = sg.log_sphere_surface(k + 2)
            rhs = math.log(2 * math.pi / k) + sg.log_sphere_surface(k)
            assert math.exp(lhs - rhs) == pytest.approx(1.0, abs=1e-12)

    def test_recurrence_direct(self):
        for k in range(1, 150):
            assert sg.sphere_surface(k + 2) == pytest.approx(2 * math.pi * sg.sphere_surface(k) / k, rel=1e-12)


class TestFrame:
    def test_right_angle_pair(self):
        f = sg.build_unit_frame(sg.AngleVector(2, [HALF_PI]), 3)
        np.testing.assert_allclose(f.vectors[1], [0, 1, 0], atol=1e-16)

    def test_orthonormal(self):
        f = sg.build_unit_frame(right_angles(3), 3)
        np.testing.assert_allclose(f.vectors, np.eye(3), atol=1e-15)

    def test_unit_norms(self, rng):
        for _ in range(50):
            f = sg.build_unit_frame(random_phi(rng, 6), 9)
            np.testing.assert_allclose(np.linalg.norm(f.vectors, axis=1), 1.0, atol=1e-12)

    def test_dimension(self):
        with pytest.raises(DimensionError):
            sg.build_unit_frame(right_angles(4), 3)


class TestDotProduct:
    def test_first_row(self, rng):
        phi = random_phi(rng, 4)
        for j in (2, 3, 4):
            assert sg.dot_product_formula(phi, 1, j) == pytest.approx(math.cos(phi[1, j]), abs=1e-15)

    def test_orthogonal(self):
        phi = right_angles(5)
        assert all(abs(sg.dot_product_formula(phi, i, j)) < 1e-15 for i, j in sg.pair_list(5))

    def test_matches_coordinates(self, rng):
        for _ in range(20):
            phi = random_phi(rng, 5)
            G = sg.build_unit_frame(phi, 5).gram()
            for i, j in sg.pair_list(5):
                assert sg.dot_product_formula(phi, i, j) == pytest.approx(G[i - 1, j - 1], abs=1e-12)

    def test_bad_pair(self):
        with pytest.raises(DomainError):
            sg.dot_product_formula(right_angles(3), 2, 2)


class TestForwardMap:
    def test_fixed_point(self):
        np.testing.assert_allclose(sg.forward_map(right_angles(5)).values, HALF_PI, atol=1e-15)

    def test_first_row_copied(self, rng):
        phi = random_phi(rng, 5)
        alpha = sg.forward_map(phi)
        for j in range(2, 6):
            assert alpha[1, j] == phi[1, j]

    def test_coordinate_oracle(self, rng):
        for _ in range(50):
            phi = random_phi(rng, 4)
            G = np.clip(sg.build_unit_frame(phi, 4).gram(), -1, 1)
            alpha = sg.forward_map(phi)
            for i, j in sg.pair_list(4):
                assert alpha[i, j] == pytest.approx(math.acos(G[i - 1, j - 1]), abs=1e-10)

    def test_frame_consistency(self, rng):
        # arccos of the closed-form dot product agrees with the map, N <= 8
        for t in range(1000):
            N = 2 + t % 7
            phi = random_phi(rng, N)
            alpha = sg.forward_map(phi)
            for i, j in sg.pair_list(N):
                c = min(1.0, max(-1.0, sg.dot_product_formula(phi, i, j)))
                assert abs(math.acos(c) - alpha[i, j]) <= 1e-10

    def test_clamp_guard(self):
        with pytest.raises(NumericalInconsistencyError):
            sg._safe_arccos(1 + 1e-9)
        assert sg._safe_arccos(1 + 1e-13) == 0.0
        assert sg._safe_arccos(-1 - 1e-13) == math.pi

    def test_monotone_in_own_angle(self, rng):
        h = 1e-6
        for _ in range(100):
            N = 4
            phi = random_phi(rng, N, 0.2, math.pi - 0.2)
            for k in range(phi.b):
                up = phi.values.copy()
                up[k] += h
                d = sg.forward_map(sg.AngleVector(N, up)).values[k] - sg.forward_map(phi).values[k]
                assert d > 0


class TestJacobian:
    def test_identity_point(self):
        assert sg.jacobian_det(right_angles(4)) == pytest.approx(1.0)

    def test_one_pair(self, rng):
        phi = random_phi(rng, 2)
        assert sg.jacobian_det(phi, phi) == pytest.approx(1.0)

    @pytest.mark.parametrize("N", [3, 4])
    def test_finite_differences(self, N):
        rng = np.random.default_rng(100 + N)
        for _ in range(100):
            phi = random_phi(rng, N, 0.3, math.pi - 0.3)
            closed = sg.jacobian_det(phi)
            assert sg.jacobian_fd(phi, 1e-6) == pytest.approx(closed, rel=1e-5)

    def test_singular(self):
        phi = sg.AngleVector(2, [0.3])
        with pytest.raises(SingularityError):
            sg.jacobian_det(phi, sg.AngleVector(2, [0.0]))


class TestInverse:
    def test_fixed_point(self):
        np.testing.assert_allclose(sg.invert_map(right_angles(5)).values, HALF_PI, atol=1e-12)

    def test_first_row_copied(self, rng):
        alpha = sg.AngleVector(4, HALF_PI + rng.uniform(-0.01, 0.01, 6))
        phi = sg.invert_map(alpha)
        for j in (2, 3, 4):
            assert phi[1, j] == alpha[1, j]

    def test_round_trip_small_box(self, rng):
        for _ in range(50):
            alpha = sg.AngleVector(4, HALF_PI + rng.uniform(-0.01, 0.01, 6))
            back = sg.forward_map(sg.invert_map(alpha))
            assert np.max(np.abs(back.values - alpha.values)) <= 1e-9

    @pytest.mark.parametrize("N", range(3, 9))
    def test_round_trip_good_width(self, N):
        s = goodness.good_width_table(N).last_width
        rng = np.random.default_rng(N)
        for _ in range(30):
            alpha = sg.AngleVector(N, HALF_PI + s * rng.uniform(-0.5, 0.5, sg.num_pairs(N)))
            back = sg.forward_map(sg.invert_map(alpha))
            assert np.max(np.abs(back.values - alpha.values)) <= 1e-9

    def test_matches_closed_form_row_solve(self, rng):
        # cos(alpha) = F + X cos(phi) solved for phi directly
        alpha = sg.AngleVector(4, HALF_PI + rng.uniform(-0.2, 0.2, 6))
        phi = sg.invert_map(alpha)
        P = phi.matrix()
        for i, j in sg.pair_list(4):
            if i == 1:
                continue
            F, X = sg._row_coefficients(P, i, j)
            direct = math.acos((math.cos(alpha[i, j]) - F) / X)
            assert phi[i, j] == pytest.approx(direct, abs=1e-10)

    def test_not_representable(self):
        # u_1, u_2 at angle 0.1 and u_1, u_3 at 0.1 force angle(u_2, u_3) <= 0.2
        alpha = sg.AngleVector(3, [0.1, 0.1, 1.5])
        with pytest.raises(NotRepresentableError):
            sg.invert_map(alpha)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(min_value=0.3, max_value=math.pi - 0.3), min_size=6, max_size=6))
    def test_inverse_of_forward(self, vals):
        phi = sg.AngleVector(4, vals)
        again = sg.invert_map(sg.forward_map(phi))
        np.testing.assert_allclose(again.values, phi.values, atol=1e-8)


class TestCosinePowerResidual:
    def test_zero(self):
        assert sg.cosine_power_residual(np.zeros(6), 100).value == 0.0

    def test_rate_one_over_n(self):
        ratio = sg.cosine_power_residual([1.0], 10_000).value / sg.cosine_power_residual([1.0], 40_000).value
        assert 2.0 <= ratio <= 8.0
        assert ratio == pytest.approx(4.0, rel=0.01)

    def test_calibrated_bound(self):
        r = sg.cosine_power_residual(np.ones(10), 10**6)
        assert abs(r.value) <= COSINE_POWER_C * 5**3 / 10**6

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            sg.cosine_power_residual([3.0], 18)


class TestSphereRatioResidual:
    def test_large_n(self):
        assert abs(sg.sphere_ratio_residual(10**6, 2).value) <= 1e-5

    def test_two_scale(self):
        for n in (100, 1000, 10_000):
            ratio = sg.sphere_ratio_residual(n, 4).value / sg.sphere_ratio_residual(4 * n, 4).value
            assert 2.0 <= ratio <= 8.0

    def test_decreasing(self):
        assert abs(sg.sphere_ratio_residual(10_000, 2).value) < abs(sg.sphere_ratio_residual(100, 2).value)

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            sg.sphere_ratio_residual(3, 3)

    def test_product_against_direct_gamma(self):
        # small n where Gamma itself is representable
        n, N = 30, 3
        direct = (2 * math.pi) ** 1.5
        for l in range(1, N):
            for m in range(1, l + 1):
                direct *= sg.sphere_surface(n - m) / (sg.sphere_surface(n - m + 1) * math.sqrt(n))
        assert sg.sphere_ratio_residual(n, N).value == pytest.approx(direct - 1, rel=1e-12)


class TestAngleDensityResidual:
    def test_zero(self):
        assert sg.angle_density_residual(np.zeros(3), 10_000).value == pytest.approx(0.0, abs=1e-13)

    def test_rate_one_over_sqrt_n(self):
        a = np.array([2.0, -2.0, 2.0])
        ratio = sg.angle_density_residual(a, 10_000).value / sg.angle_density_residual(a, 40_000).value
        assert 1.0 <= ratio <= 4.0
        assert ratio == pytest.approx(2.0, rel=0.05)

    def test_calibrated_bound(self):
        worst = max(
            abs(sg.angle_density_residual(2.0 * np.array(c), 10**6).value)
            for c in itertools.product((-1, 1), repeat=3)
        )
        assert worst <= ANGLE_DENSITY_C * 27 / 10**3


class TestWallis:
    def test_n3(self):
        q, g = sg.wallis_integral(3)
        assert q == pytest.approx(1.0, rel=1e-12)
        assert g == pytest.approx(1.0, rel=1e-12)

    def test_n4(self):
        q, g = sg.wallis_integral(4)
        assert q == pytest.approx(math.pi / 4, rel=1e-12)
        assert g == pytest.approx(math.pi / 4, rel=1e-12)

    @pytest.mark.parametrize("n", [50, 200, 1000])
    def test_large(self, n):
        q, g = sg.wallis_integral(n)
        assert q == pytest.approx(g, rel=1e-10)
