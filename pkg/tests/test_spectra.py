"""
Trace kernels: sample traces, population trace functionals and spectral moments.
"""

import numpy as np
import pytest

from panel_sphericity.core.spectra import (
    DisturbanceMatrix,
    eta_limits,
    loading_directions,
    materialize,
    moment_set,
    mp_moments,
    sample_traces,
    sigma_traces,
    theta_moments,
    with_dimension,
)
from panel_sphericity.core.streams import stream_rng
from panel_sphericity.errors import DomainError, InputError
from panel_sphericity.models import (
    DenseCovariance,
    DiagonalCovariance,
    IdentityCovariance,
    SpikedFactorCovariance,
)
from tests.config import SEED

TRACE_FIELDS = ("tr1", "tr2", "tr3", "tr4", "had11", "had12", "had22")


class TestDisturbanceMatrix:
    def test_rejects_non_finite(self):
        values = np.ones((3, 4))
        values[1, 2] = np.nan
        with pytest.raises(InputError):
            DisturbanceMatrix(values)

    @pytest.mark.parametrize("shape", [(1, 5), (5, 1), (6,)])
    def test_rejects_bad_shapes(self, shape):
        with pytest.raises(InputError):
            DisturbanceMatrix(np.ones(shape))

    def test_values_are_read_only_copy(self):
        source = np.ones((2, 3))
        v = DisturbanceMatrix(source)
        source[0, 0] = 5.0
        assert v.values[0, 0] == 1.0
        with pytest.raises(ValueError):
            v.values[0, 0] = 2.0


class TestSampleTraces:
    def test_half_identity(self):
        tp = sample_traces(DisturbanceMatrix(np.eye(2)))
        assert tp.tr_s == pytest.approx(1.0)
        assert tp.tr_s2 == pytest.approx(0.5)

    @pytest.mark.parametrize("path", ["dense", "gram"])
    def test_hand_oracle(self, path):
        # S = [[1, 0.5], [0.5, 0.5]].
        tp = sample_traces(DisturbanceMatrix(np.array([[1.0, 1.0], [0.0, 1.0]])), path)
        assert tp.tr_s == pytest.approx(1.5)
        assert tp.tr_s2 == pytest.approx(1.75)

    @pytest.mark.parametrize("c", [0.5, 3.0, 1e3])
    def test_scaling(self, c):
        values = stream_rng(SEED, 6).standard_normal((15, 9))
        base = sample_traces(DisturbanceMatrix(values))
        scaled = sample_traces(DisturbanceMatrix(c * values))
        assert scaled.tr_s == pytest.approx(c ** 2 * base.tr_s, rel=1e-12)
        assert scaled.tr_s2 == pytest.approx(c ** 4 * base.tr_s2, rel=1e-12)

    def test_gram_path_matches_dense(self):
        rng = stream_rng(SEED, 7)
        for n, T in rng.integers(5, 201, size=(50, 2)):
            v = DisturbanceMatrix(rng.uniform(0.1, 10.0) * rng.standard_normal((int(n), int(T))))
            dense, gram = sample_traces(v, "dense"), sample_traces(v, "gram")
            assert gram.tr_s == pytest.approx(dense.tr_s, rel=1e-10), (n, T)
            assert gram.tr_s2 == pytest.approx(dense.tr_s2, rel=1e-10), (n, T)

    def test_auto_matches_numpy_reference(self):
        rng = stream_rng(SEED, 8)
        values = rng.standard_normal((40, 12))
        s = values @ values.T / 12
        tp = sample_traces(DisturbanceMatrix(values))
        assert tp.tr_s == pytest.approx(np.trace(s), rel=1e-12)
        assert tp.tr_s2 == pytest.approx(np.trace(s @ s), rel=1e-10)
        assert (tp.n, tp.T) == (40, 12)


class TestSigmaTraces:
    def test_identity(self):
        st = sigma_traces(IdentityCovariance(n=4))
        for field in TRACE_FIELDS:
            assert getattr(st, field) == pytest.approx(4.0)

    def test_two_point_diagonal(self):
        st = sigma_traces(DiagonalCovariance(eigenvalues=[2, 1]))
        expected = (3.0, 5.0, 9.0, 17.0, 5.0, 9.0, 17.0)
        assert tuple(getattr(st, field) for field in TRACE_FIELDS) == pytest.approx(expected)

    def test_dense_oracle(self):
        st = sigma_traces(DenseCovariance(matrix=[[1.0, 0.5], [0.5, 1.0]]))
        expected = (2.0, 2.5, 3.5, 5.125, 2.0, 2.5, 3.125)
        assert tuple(getattr(st, field) for field in TRACE_FIELDS) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("spec", [
        IdentityCovariance(n=5, scale=2.5),
        DiagonalCovariance(eigenvalues=[0.3, 1.7, 4.0, 2.2]),
        SpikedFactorCovariance(n=12, base=1.5, spikes=[6.0, 0.25]),
    ])
    def test_hadamard_equalities_for_diagonal_specs(self, spec):
        st = sigma_traces(spec)
        assert (st.had11, st.had12, st.had22) == (st.tr2, st.tr3, st.tr4)

    def test_eta_of_one_spike_diagonal(self):
        eta = eta_limits(DiagonalCovariance(eigenvalues=[2, 1, 1, 1]))
        assert eta == pytest.approx((1.25, 1.75, 1.75))

    def test_theta_of_two_point_spectrum(self):
        theta = theta_moments(DiagonalCovariance(eigenvalues=[1, 1, 3, 3]))
        assert theta == pytest.approx((2.0, 5.0, 14.0, 41.0))

    @pytest.mark.parametrize("loadings", ["canonical", "random"])
    def test_spiked_closed_form_matches_dense(self, loadings):
        spec = SpikedFactorCovariance(n=30, base=2.0, spikes=[3.0, 0.5], loadings=loadings, loading_seed=SEED)
        closed = sigma_traces(spec)
        dense = sigma_traces(DenseCovariance(matrix=materialize(spec).tolist()))
        for field in TRACE_FIELDS:
            assert getattr(closed, field) == pytest.approx(getattr(dense, field), rel=1e-10)

    def test_dense_must_be_symmetric(self):
        with pytest.raises(DomainError):
            sigma_traces(DenseCovariance(matrix=[[1.0, 0.5], [0.0, 1.0]]))

    def test_dense_must_be_psd(self):
        with pytest.raises(DomainError):
            sigma_traces(DenseCovariance(matrix=[[1.0, 2.0], [2.0, 1.0]]))

    def test_with_dimension_resizes_families_only(self):
        assert with_dimension(IdentityCovariance(n=3), 10).dim == 10
        with pytest.raises(InputError):
            with_dimension(DiagonalCovariance(eigenvalues=[1, 2, 3]), 10)

    def test_random_loadings_are_orthonormal(self):
        q = loading_directions(50, 3, "random", SEED)
        assert np.allclose(q.T @ q, np.eye(3), atol=1e-12)
        assert np.array_equal(q, loading_directions(50, 3, "random", SEED))
        assert loading_directions(50, 3, "canonical") is None


class TestSpectralMoments:
    @pytest.mark.parametrize("eigenvalues", [[1, 2, 3], [0.5, 0.5, 4.0], [1e-3, 1.0]])
    def test_second_moment_exceeds_squared_mean(self, eigenvalues):
        spec = DiagonalCovariance(eigenvalues=eigenvalues)
        theta, eta = theta_moments(spec), eta_limits(spec)
        assert theta[1] > theta[0] ** 2
        assert eta[1] > eta[0] ** 2

    @pytest.mark.parametrize("spec", [IdentityCovariance(n=7, scale=2.0), DiagonalCovariance(eigenvalues=[3, 3, 3, 3])])
    def test_equal_eigenvalues_reach_the_bound(self, spec):
        theta, eta = theta_moments(spec), eta_limits(spec)
        assert theta[1] == pytest.approx(theta[0] ** 2, rel=1e-15)
        assert eta[1] == pytest.approx(eta[0] ** 2, rel=1e-15)

    def test_standard_and_centered_conventions(self):
        assert mp_moments((1.0, 1.0, 1.0, 1.0), 0.5) == pytest.approx((1.0, 1.5))
        assert mp_moments((1.0, 1.0, 1.0, 1.0), 0.5, centered=True) == pytest.approx((1.0, 0.5))

    def test_requires_positive_ratio(self):
        with pytest.raises(DomainError):
            mp_moments((1.0, 1.0, 1.0, 1.0), 0.0)

    def test_moment_set_uses_n_over_T(self):
        ms = moment_set(DiagonalCovariance(eigenvalues=[1, 1, 3, 3]), T=8)
        assert ms.c == pytest.approx(0.5)
        assert ms.vartheta == pytest.approx((2.0, 5.0 + 0.5 * 4.0))
        assert ms.eta[0] == pytest.approx(2.0)
