"""
Data generation: disturbance laws, covariance square roots, factor panels, regressors.
"""

import numpy as np
import pytest

from panel_sphericity.core.simulation import (
    PanelData,
    apply_sqrt,
    draw_standardized,
    factor_covariance,
    gen_disturbances,
    gen_factor_disturbances,
    gen_panel,
)
from panel_sphericity.core.spectra import DisturbanceMatrix, materialize
from panel_sphericity.core.streams import stream_rng
from panel_sphericity.errors import DomainError, InputError
from panel_sphericity.models import (
    DenseCovariance,
    DiagonalCovariance,
    ErrorDistribution,
    FactorAlternative,
    IdentityCovariance,
    SpikedFactorCovariance,
)
from tests.config import SEED

GAUSSIAN = ErrorDistribution()


class TestStandardizedDraws:
    @pytest.mark.parametrize("kind", ["gaussian", "gamma", "uniform", "rademacher"])
    def test_mean_zero_variance_one(self, kind):
        z = draw_standardized(ErrorDistribution(kind=kind), stream_rng(SEED, 1), (200, 500))
        assert abs(z.mean()) < 0.02
        assert abs(z.var() - 1.0) < 0.03

    def test_gamma_fourth_moment(self):
        dist = ErrorDistribution(kind="gamma", shape=4.0)
        z = draw_standardized(dist, stream_rng(SEED, 2), (200, 500))
        assert dist.gamma4 == pytest.approx(4.5)
        assert np.mean(z ** 4) == pytest.approx(4.5, abs=0.2)

    def test_supports(self):
        rad = draw_standardized(ErrorDistribution(kind="rademacher"), stream_rng(SEED, 3), (10, 10))
        assert set(np.unique(rad)) <= {-1.0, 1.0}
        uni = draw_standardized(ErrorDistribution(kind="uniform"), stream_rng(SEED, 3), (10, 10))
        assert np.all(np.abs(uni) <= np.sqrt(3.0))


class TestSquareRoot:
    @pytest.mark.parametrize(
        "spec",
        [
            IdentityCovariance(n=6, scale=2.5),
            DiagonalCovariance(eigenvalues=[4, 1, 2, 9, 1, 1]),
            SpikedFactorCovariance(n=6, base=1.5, spikes=[3.0, 1.0]),
            SpikedFactorCovariance(n=6, base=1.5, spikes=[3.0, 1.0], loadings="random", loading_seed=SEED),
            DenseCovariance(matrix=[[2.0, 0.5, 0, 0, 0, 0], [0.5, 1.0, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0],
                                    [0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1]]),
        ],
        ids=["identity", "diagonal", "spiked", "spiked-random", "dense"],
    )
    def test_root_squares_to_sigma(self, spec):
        root = apply_sqrt(spec, np.eye(6))
        assert np.allclose(root @ root.T, materialize(spec), atol=1e-12)


class TestDisturbances:
    def test_reproducible_per_stream(self):
        spec = IdentityCovariance(n=5)
        a = gen_disturbances(spec, GAUSSIAN, 5, 8, SEED, (3,))
        b = gen_disturbances(spec, GAUSSIAN, 5, 8, SEED, (3,))
        c = gen_disturbances(spec, GAUSSIAN, 5, 8, SEED, (4,))
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_dimension_must_match(self):
        with pytest.raises(InputError):
            gen_disturbances(IdentityCovariance(n=4), GAUSSIAN, 5, 8, SEED)

    def test_sample_covariance_tracks_sigma(self):
        spec = DiagonalCovariance(eigenvalues=[4, 1, 1])
        v = gen_disturbances(spec, GAUSSIAN, 3, 20000, SEED)
        s = v.values @ v.values.T / v.T
        assert np.allclose(s, materialize(spec), atol=0.3)


class TestFactorDisturbances:
    def test_spike_inflates_first_coordinate(self):
        alt = FactorAlternative(r=1, h=[4.0])
        v = gen_factor_disturbances(alt, GAUSSIAN, 10, 20000, SEED)
        s = v.values @ v.values.T / v.T
        assert s[0, 0] == pytest.approx(5.0, abs=0.25)
        assert s[1, 1] == pytest.approx(1.0, abs=0.1)
        assert abs(s[0, 1]) < 0.1

    def test_factor_variance_does_not_change_sigma(self):
        alt = FactorAlternative(r=1, h=[4.0], factor_variances=[9.0])
        v = gen_factor_disturbances(alt, GAUSSIAN, 10, 20000, SEED)
        assert np.mean(v.values[0] ** 2) == pytest.approx(5.0, abs=0.25)

    def test_too_many_factors(self):
        with pytest.raises(DomainError):
            gen_factor_disturbances(FactorAlternative(r=5, h=[1.0]), GAUSSIAN, 5, 10, SEED)

    def test_rule_giving_no_factor(self):
        with pytest.raises(DomainError):
            gen_factor_disturbances(FactorAlternative(tau=0.1), GAUSSIAN, 5, 10, SEED)

    def test_zero_spikes_give_identity(self):
        spec = factor_covariance(FactorAlternative(r=2, h=[0.0], sigma_eps2=2.0), 10)
        assert isinstance(spec, IdentityCovariance)
        assert spec.scale == 2.0

    def test_growing_spikes(self):
        alt = FactorAlternative(r=2, d=[1.0, 0.5], alpha=0.5)
        assert alt.spikes(100) == pytest.approx([10.0, 5.0])
        assert alt.setting == "intermediate-s3"
        assert alt.moment_regime == "sixteenth-moment"
        assert FactorAlternative(r=1, alpha=0.2).moment_regime == "sixth-moment"


class TestPanel:
    def test_decomposition(self):
        v = gen_disturbances(IdentityCovariance(n=6), GAUSSIAN, 6, 9, SEED)
        panel = gen_panel([1.0, -0.5], v, SEED)
        truth = panel.truth
        rebuilt = panel.x @ truth.beta + truth.mu[:, None] + v.values
        assert np.allclose(panel.y, rebuilt)
        assert (panel.n, panel.T, panel.k) == (6, 9, 2)

    def test_without_fixed_effects(self):
        v = DisturbanceMatrix(np.zeros((4, 5)))
        panel = gen_panel([2.0], v, SEED, fixed_effects=False)
        assert np.allclose(panel.y, 2.0 * panel.x[:, :, 0])

    def test_regressors_independent_of_disturbance_stream(self):
        v1 = gen_disturbances(IdentityCovariance(n=4), GAUSSIAN, 4, 5, SEED, (0,))
        v2 = gen_disturbances(IdentityCovariance(n=4), GAUSSIAN, 4, 5, SEED, (1,))
        p1 = gen_panel([1.0], v1, SEED, (0,))
        p2 = gen_panel([1.0], v2, SEED, (0,))
        assert np.array_equal(p1.x, p2.x)

    def test_too_many_regressors(self):
        v = DisturbanceMatrix(np.zeros((4, 5)))
        with pytest.raises(InputError):
            gen_panel([1.0] * 17, v, SEED)

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            PanelData(y=np.zeros((3, 4)), x=np.zeros((3, 5, 1)))
