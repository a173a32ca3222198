import math

import numpy as np
import pytest

from latlab import sphere_geometry as sg
from latlab import sphere_mc as sm
from latlab.errors import ConfigError, DegenerateConfigError, DomainError

G1 = math.erf(1 / math.sqrt(2))


class TestSampling:
    def test_unit_norm(self, rng):
        U = sm.sample_uniform_sphere(7, rng, 1000)
        np.testing.assert_allclose(np.linalg.norm(U, axis=1), 1.0, atol=1e-12)
        assert sm.sample_uniform_sphere(3, rng).shape == (3,)

    def test_moments(self, rng):
        n, draws = 5, 100_000
        U = sm.sample_uniform_sphere(n, rng, draws)
        x = U[:, 0]
        assert abs(x.mean()) <= 3 * x.std(ddof=1) / math.sqrt(draws)
        y = x**2
        assert abs(y.mean() - 1 / n) <= 3 * y.std(ddof=1) / math.sqrt(draws)

    def test_small_n(self, rng):
        with pytest.raises(DomainError):
            sm.sample_uniform_sphere(1, rng)

    def test_signed_angles_direct(self, rng):
        U = sm.sample_uniform_sphere(9, rng, 4)
        got = sm.signed_normalized_angles(U)
        k = 0
        for i in range(4):
            for j in range(i + 1, 4):
                assert got[k] == pytest.approx(3 * (math.acos(U[i] @ U[j]) - math.pi / 2), abs=1e-12)
                k += 1

    def test_signed_angles_match_frame_map(self, rng):
        # the frame built from angles phi has pairwise angles alpha = forward_map(phi)
        N, n = 4, 6
        phi = sg.AngleVector(N, rng.uniform(0.4, math.pi - 0.4, sg.num_pairs(N)))
        U = sg.build_unit_frame(phi, n).vectors
        alpha = sg.forward_map(phi)
        np.testing.assert_allclose(sm.signed_normalized_angles(U), math.sqrt(n) * (alpha.values - math.pi / 2), atol=1e-10)

    def test_substreams_reproducible(self):
        np.testing.assert_array_equal(sm.sample_angles(3, 10, 50, 4), sm.sample_angles(3, 10, 50, 4))
        assert not np.array_equal(sm.sample_angles(3, 10, 50, 4), sm.sample_angles(3, 10, 50, 5))


class TestConfig:
    def test_broadcast(self):
        c = sm.SphereExperimentConfig(4, 100, [-1.0, 1.5])
        assert c.boxes.shape == (6, 2)
        assert c.K == 1.5 and c.eps == 2.5

    def test_per_pair(self):
        c = sm.SphereExperimentConfig(3, 100, [[-1, 1], [0, 0.5], [-2, 0]])
        assert c.eps == 0.5 and c.K == 2.0

    @pytest.mark.parametrize("boxes", [[1.0, 1.0], [2.0, 1.0], [[0, 1], [0, 1]]])
    def test_bad_boxes(self, boxes):
        with pytest.raises(ConfigError):
            sm.SphereExperimentConfig(3, 100, boxes)

    def test_too_few_trials(self):
        with pytest.raises(ConfigError):
            sm.estimate_P(sm.SphereExperimentConfig(2, 100, [-1, 1], trials=10))


class TestEstimate:
    def test_full_range(self):
        n = 50
        h = math.sqrt(n) * math.pi / 2
        p, se = sm.estimate_P(sm.SphereExperimentConfig(3, n, [-h - 1e-9, h], 2000, 1))
        assert p == 1.0 and se == 0.0

    def test_outside_support(self):
        n = 50
        h = math.sqrt(n) * math.pi / 2
        p, _ = sm.estimate_P(sm.SphereExperimentConfig(3, n, [h, h + 1], 2000, 1))
        assert p == 0.0

    def test_pair_matches_exact(self):
        cfg = sm.SphereExperimentConfig(2, 30, [-1, 1], 20_000, 2)
        p, se = sm.estimate_P(cfg)
        assert abs(p - sm.pair_box_probability(30, -1, 1)) <= 3 * se

    def test_pair_exact_tends_to_erf(self):
        assert sm.pair_box_probability(10**6, -1, 1) == pytest.approx(G1, abs=1e-6)

    def test_nested_monotone(self):
        widths = [0.25, 0.5, 1.0, 2.0, 4.0]
        cfgs = [sm.SphereExperimentConfig(3, 40, [-w, w / 2], 2000, 6) for w in widths]
        est = [p for p, _ in sm.estimate_P_nested(cfgs)]
        assert est == sorted(est)
        assert len(set(est)) > 1

    def test_nested_mismatch(self):
        a = sm.SphereExperimentConfig(3, 40, [-1, 1], 2000, 6)
        b = sm.SphereExperimentConfig(3, 41, [-1, 1], 2000, 6)
        with pytest.raises(ConfigError):
            sm.estimate_P_nested([a, b])


class TestG:
    def test_four_points(self):
        G = sm.compute_G(sm.SphereExperimentConfig(4, 100, [-1, 1]))
        assert G == pytest.approx(G1**6, rel=1e-13)
        assert G == pytest.approx(0.101237, abs=1e-6)

    def test_two_points(self):
        G = sm.compute_G(sm.SphereExperimentConfig(2, 100, [-2, 2]))
        assert G == pytest.approx(0.95450, abs=1e-5)

    def test_zero_mass(self):
        cfg = sm.SphereExperimentConfig(2, 100, [40.0, 50.0])
        assert sm.compute_G(cfg) == 0.0
        with pytest.raises(DegenerateConfigError):
            sm.ratio_experiment(cfg)


class TestRatio:
    def test_pair_large_n(self):
        r = sm.ratio_experiment(sm.SphereExperimentConfig(2, 10_000, [-1, 1], 10_000, 3))
        assert abs(r.ratio - 1) <= 3 * r.ratio_stderr
        assert r.ci_low < r.ratio < r.ci_high
        assert r.diagnostic == pytest.approx(8 / 100)

    def test_exact_pair_bias_shrinks(self):
        # N = 2 has a closed form, so the trend is checked without noise
        dev = [abs(sm.pair_box_probability(n, -1, 1) / G1 - 1) for n in (16, 64, 256, 1024, 4096)]
        for a, b in zip(dev, dev[1:]):
            assert b <= a / 2

    @pytest.mark.parametrize("seed", [1, 2])
    def test_mc_trend_three_scales(self, seed):
        reps = [sm.ratio_experiment(sm.SphereExperimentConfig(3, n, [-1, 1], 20_000, seed)) for n in (4, 16, 64)]
        dev = [abs(r.ratio - 1) for r in reps]
        se = [r.ratio_stderr for r in reps]
        for k in range(2):
            assert dev[k] > dev[k + 1] + 3 * math.hypot(se[k], se[k + 1])

    def test_report_dict(self):
        r = sm.ratio_experiment(sm.SphereExperimentConfig(2, 100, [-1, 1], 1000, 0))
        d = r.as_dict()
        assert set(d) >= {"ratio", "ci_low", "ci_high", "diagnostic", "passed", "G"}
