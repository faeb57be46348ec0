import math
import random

import numpy as np
import pytest
import scipy.stats as st

from gridmc.distributions import (
    Custom,
    DiscreteUniform,
    Lognormal,
    Normal,
    Triangular,
    Uniform,
    distribution_from_json,
    norm_ppf,
    sample_inverse,
)
from gridmc.rng import RandomSource

ALL = [
    Uniform(0, 8),
    Triangular(0, 2, 10),
    Normal(5, 2),
    Lognormal(0.3, 0.5),
    DiscreteUniform(1, 6),
    Custom([(1, 0.2), (2, 0.5), (4, 0.3)]),
]


class TestNormPpf:
    def test_accuracy_in_u(self):
        # |Phi(ppf(u)) - u| below the stated 1.2e-9 budget
        u = np.concatenate([
            np.linspace(1e-12, 0.02425, 2000),
            np.linspace(0.025, 0.975, 20000),
            np.linspace(0.97575, 1 - 1e-12, 2000),
        ])
        x = norm_ppf(u)
        back = 0.5 * np.array([math.erfc(-v / math.sqrt(2)) for v in x])
        assert np.max(np.abs(back - u)) < 1.2e-9

    def test_symmetry(self):
        assert norm_ppf(0.5) == pytest.approx(0.0, abs=1e-9)
        assert norm_ppf(0.2) == pytest.approx(-norm_ppf(0.8), abs=1e-9)

    def test_rejects_endpoints(self):
        for bad in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                norm_ppf(bad)


class TestInverseCdf:
    def test_triangular_median_at_symmetric_mode(self):
        assert sample_inverse(Triangular(0, 5, 10), 0.5) == pytest.approx(5.0)

    def test_uniform_linear(self):
        assert sample_inverse(Uniform(0, 8), 0.25) == pytest.approx(2.0)

    def test_triangular_u_at_mode_cdf(self):
        # u = F(mode) = (mode-min)/(max-min)
        assert sample_inverse(Triangular(0, 2, 10), 0.2) == pytest.approx(2.0)

    def test_u_out_of_range(self):
        with pytest.raises(ValueError):
            sample_inverse(Uniform(0, 1), 0.0)
        with pytest.raises(ValueError):
            sample_inverse(Uniform(0, 1), 1.0)

    @pytest.mark.parametrize("dist", ALL, ids=lambda d: type(d).__name__)
    def test_monotone(self, dist):
        rng = random.Random(5)
        for _ in range(1000):
            u1, u2 = sorted((rng.uniform(1e-9, 1 - 1e-9), rng.uniform(1e-9, 1 - 1e-9)))
            assert sample_inverse(dist, u1) <= sample_inverse(dist, u2)

    def test_custom_step_function(self):
        c = Custom([(1, 0.2), (2, 0.5), (4, 0.3)])
        assert sample_inverse(c, 0.1) == 1
        assert sample_inverse(c, 0.2) == 1
        assert sample_inverse(c, 0.21) == 2
        assert sample_inverse(c, 0.7) == 2
        assert sample_inverse(c, 0.71) == 4
        assert sample_inverse(c, 0.999) == 4

    def test_discrete_uniform_covers_support(self):
        d = DiscreteUniform(1, 6)
        values = {sample_inverse(d, u) for u in np.linspace(0.01, 0.99, 200)}
        assert values == {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}


class TestParameterValidation:
    @pytest.mark.parametrize("make", [
        lambda: Uniform(1, 1),
        lambda: Uniform(2, 1),
        lambda: Triangular(0, 11, 10),
        lambda: Triangular(5, 4, 10),
        lambda: Normal(0, 0),
        lambda: Normal(0, -1),
        lambda: Lognormal(0, 0),
        lambda: DiscreteUniform(3, 3),
        lambda: Custom([]),
        lambda: Custom([(1, 0.5), (2, 0.6)]),
        lambda: Custom([(1, -0.5), (2, 1.5)]),
    ])
    def test_rejected_at_construction(self, make):
        with pytest.raises(ValueError):
            make()

    def test_custom_sum_tolerance(self):
        Custom([(1, 0.5), (2, 0.5 + 5e-10)])  # within 1e-9


def ks_statistic(samples, dist):
    """sup |F_n - F| for a possibly discontinuous CDF."""
    xs = np.sort(samples)
    n = len(xs)
    d = 0.0
    for i, x in enumerate(xs):
        f = dist.cdf(x)
        d = max(d, abs((i + 1) / n - f), abs(i / n - f))
    return d


class TestSamplingFidelity:
    N = 20000

    @pytest.mark.parametrize("dist", ALL, ids=lambda d: type(d).__name__)
    def test_mean_and_ks(self, dist):
        src = RandomSource(2024)
        u = src.uniform_block(np.arange(self.N), np.arange(1))[:, 0]
        samples = np.array([dist.inverse_cdf(v) for v in u])
        se = math.sqrt(dist.variance() / self.N)
        assert abs(samples.mean() - dist.mean()) < 4 * se
        if isinstance(dist, (DiscreteUniform, Custom)):
            # discrete KS: compare empirical mass up to each atom
            atoms = sorted({float(v) for v in samples})
            d = max(abs(np.mean(samples <= a) - dist.cdf(a)) for a in atoms)
        else:
            d = ks_statistic(samples, dist)
        assert d < 1.63 / math.sqrt(self.N)

    def test_against_scipy_cdfs(self):
        # cross-check our analytic CDFs against scipy's
        grid = np.linspace(-3, 12, 50)
        pairs = [
            (Uniform(0, 8), st.uniform(0, 8)),
            (Triangular(0, 2, 10), st.triang(0.2, loc=0, scale=10)),
            (Normal(5, 2), st.norm(5, 2)),
            (Lognormal(0.3, 0.5), st.lognorm(0.5, scale=math.exp(0.3))),
        ]
        for ours, ref in pairs:
            for x in grid:
                assert ours.cdf(x) == pytest.approx(ref.cdf(x), abs=1e-9)


class TestJsonCodec:
    @pytest.mark.parametrize("dist", ALL, ids=lambda d: type(d).__name__)
    def test_round_trip(self, dist):
        assert distribution_from_json(dist.to_json()) == dist

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            distribution_from_json({"type": "beta"})
