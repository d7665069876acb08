import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_stability import (
    EnergyDistribution,
    EnsembleSpec,
    bin_distribution,
    canonical_weights,
    mixture_weights,
    moments,
    nn_zz_correlation,
)
from ensemble_stability.oracles import classical_ising_spectrum

ISING3 = classical_ising_spectrum(3, 1.0)


def direct_boltzmann(energies, t):
    # unshifted summation in plain floats, as an independent reference
    terms = [math.exp(-e / t) for e in energies]
    z = math.fsum(terms)
    return np.array([x / z for x in terms])


def test_infinite_temperature_is_uniform():
    p = canonical_weights(1e12, ISING3).weights
    assert np.max(np.abs(p - 1 / 8)) < 1e-12


def test_cold_ising_ring():
    p = canonical_weights(0.1, ISING3).weights
    ref = direct_boltzmann(ISING3, 0.1)
    assert np.max(np.abs(p - ref)) < 1e-14
    # six degenerate ground states, two frustrated-free excited states 1.0 above
    assert p[0] == pytest.approx(1 / (6 + 2 * math.exp(-10)), abs=1e-14)
    assert p[0] == pytest.approx(0.16666414, abs=1e-8)


def test_negative_temperature_ising_ring():
    p = canonical_weights(-0.1, ISING3).weights
    assert np.max(np.abs(p - direct_boltzmann(ISING3, -0.1))) < 1e-14
    assert p[-1] > 0.49


def test_zero_temperature_rejected():
    with pytest.raises(ValueError):
        canonical_weights(0.0, ISING3)
    with pytest.raises(ValueError):
        EnsembleSpec("two_peak", 0.1, 0.0)


def test_no_overflow_at_low_temperature(eig10):
    p = canonical_weights(1e-4, eig10.energies).weights
    assert np.all(np.isfinite(p))
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("mix,temp", [(1.0, 0.1), (0.0, -0.1)])
def test_mixture_endpoints(eig4, mix, temp):
    p = mixture_weights(EnsembleSpec("two_peak", 0.1, -0.1, mix), eig4.energies).weights
    q = canonical_weights(temp, eig4.energies).weights
    assert np.max(np.abs(p - q)) < 1e-15


def test_mixture_rejects_bad_weight():
    with pytest.raises(ValueError):
        EnsembleSpec("two_peak", mix_weight=1.5)


def test_two_peak_shape(eig10):
    p = mixture_weights(EnsembleSpec(), eig10.energies)
    g = bin_distribution(p, eig10.energies, 100).masses
    lower, upper = g[:50], g[50:]
    assert lower.sum() == pytest.approx(0.5, abs=1e-6)
    assert np.argmax(lower) < 15
    assert np.argmax(upper) > 35
    assert g[45:55].sum() < 1e-6


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.05, 50) | st.floats(-50, -0.05), shift=st.floats(-100, 100))
def test_gauge_invariance(eig4, t, shift):
    p = canonical_weights(t, eig4.energies).weights
    q = canonical_weights(t, eig4.energies + shift).weights
    assert np.max(np.abs(p - q)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(t1=st.floats(0.05, 5), t2=st.floats(-5, -0.05), mix=st.floats(0, 1))
def test_mixture_mean_between_components(eig4, t1, t2, mix):
    e = eig4.energies
    m1 = moments(canonical_weights(t1, e), e).e_av
    m2 = moments(canonical_weights(t2, e), e).e_av
    m = moments(mixture_weights(EnsembleSpec("two_peak", t1, t2, mix), e), e).e_av
    assert min(m1, m2) - 1e-12 <= m <= max(m1, m2) + 1e-12


def test_weights_validation():
    with pytest.raises(ValueError):
        EnergyDistribution(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        EnergyDistribution(np.array([1.5, -0.5]))


def test_two_point_moments():
    m = moments(EnergyDistribution(np.array([0.5, 0.5])), np.array([-1.0, 1.0]))
    assert (m.e_av, m.width, m.kurtosis) == (0.0, 1.0, 1.0)


def test_point_mass_kurtosis_undefined():
    m = moments(EnergyDistribution(np.array([0.0, 1.0, 0.0])), np.array([-1.0, 0.0, 1.0]))
    assert m.width == 0
    assert math.isnan(m.kurtosis)
    assert not m.kurtosis_defined


def test_gaussian_kurtosis():
    x = np.linspace(-12, 12, 200001)
    w = np.exp(-0.5 * x * x)
    m = moments(EnergyDistribution.normalized(w), x)
    assert m.width == pytest.approx(1.0, abs=1e-6)
    assert m.kurtosis == pytest.approx(3.0, abs=1e-3)


def test_binning_edges_and_top_edge():
    e = np.array([0.0, 0.4, 0.5, 1.0])
    g = bin_distribution(EnergyDistribution(np.full(4, 0.25)), e, 2)
    np.testing.assert_allclose(g.edges, [0.0, 0.5, 1.0])
    # left-closed bins, the top energy falls into the last bin
    np.testing.assert_allclose(g.masses, [0.5, 0.5])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=16, max_size=16).filter(lambda v: sum(v) > 1e-3),
       st.integers(2, 60))
def test_binning_preserves_mass(eig4, values, n_bins):
    dist = EnergyDistribution.normalized(np.array(values))
    g = bin_distribution(dist, eig4.energies, n_bins)
    assert g.masses.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(g.masses >= 0)


def test_refining_by_two_preserves_coarse_masses(eig10):
    dist = mixture_weights(EnsembleSpec(), eig10.energies)
    coarse = bin_distribution(dist, eig10.energies, 50).masses
    fine = bin_distribution(dist, eig10.energies, 100).masses
    assert np.max(np.abs(fine.reshape(50, 2).sum(axis=1) - coarse)) < 1e-12


def test_nn_zz_correlation_signs(eig10):
    e = eig10.energies
    cold = nn_zz_correlation(canonical_weights(0.1, e), eig10)
    hot = nn_zz_correlation(canonical_weights(-0.1, e), eig10)
    assert cold < 0 < hot


def test_nn_zz_correlation_ising_ground_state():
    from ensemble_stability import ChainSpec, build_hamiltonian, diagonalize

    eig = diagonalize(build_hamiltonian(ChainSpec(4, (0.0, 0.0, 1.0))))
    # Neel states: every bond antiparallel
    p = canonical_weights(0.01, eig.energies)
    assert nn_zz_correlation(p, eig) == pytest.approx(-0.25, abs=1e-10)
