import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_stability import (
    ChainSpec,
    EnergyDistribution,
    EnsembleSpec,
    ProjectorSpec,
    ProtocolSpec,
    QuantumState,
    build_hamiltonian,
    collapse,
    diagonalize,
    draw_protocol,
    energy_distribution,
    free_evolve,
    initialize_state,
    make_projector,
    mixture_weights,
    outcome_probability,
    split,
    to_energy_basis,
)
from ensemble_stability.measurement import ZeroProbabilityError
from ensemble_stability.oracles import kron_hamiltonian, kron_projector, taylor_propagator

AXES = ["x", "y", "z", (0.6, 0.0, 0.8), (1 / np.sqrt(3),) * 3]


def uniform(dim):
    return EnergyDistribution(np.full(dim, 1.0 / dim))


def site_state(eig, vec):
    """Typicality state for a site-basis pure vector."""
    return QuantumState("typicality", to_energy_basis(np.asarray(vec, dtype=complex), eig), eig)


def all_up(dim):
    v = np.zeros(dim)
    v[0] = 1.0
    return v


def test_initialize_density_is_diagonal(eig4):
    dist = mixture_weights(EnsembleSpec(), eig4.energies)
    rho = initialize_state(dist, eig4, "density").rho
    assert np.max(np.abs(rho - np.diag(dist.weights))) < 1e-15


def test_initialize_typicality_occupations(eig4, rng):
    dist = mixture_weights(EnsembleSpec(), eig4.energies)
    s = initialize_state(dist, eig4, "typicality", rng)
    assert np.max(np.abs(np.abs(s.psi) ** 2 - dist.weights)) < 1e-15


def test_free_evolve_zero_time_is_identity(eig4, rng):
    s = initialize_state(uniform(16), eig4, "typicality", rng)
    assert np.array_equal(free_evolve(s, 0.0).amplitudes, s.amplitudes)


def test_free_evolve_rejects_negative_time(eig4):
    with pytest.raises(ValueError):
        free_evolve(initialize_state(uniform(16), eig4), -1.0)


def test_free_evolve_diagonal_state_unchanged(eig4):
    s = initialize_state(mixture_weights(EnsembleSpec(), eig4.energies), eig4)
    assert np.max(np.abs(free_evolve(s, 1.7).rho - s.rho)) < 1e-15


@pytest.mark.parametrize("t", [0.3, 1.3, 2.0])
def test_free_evolve_matches_taylor_oracle(eig4, rng, t):
    psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi /= np.linalg.norm(psi)
    evolved = free_evolve(site_state(eig4, psi), t).psi
    ref = to_energy_basis(taylor_propagator(kron_hamiltonian(ChainSpec(4)), t) @ psi, eig4)
    assert np.max(np.abs(evolved - ref)) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 20), st.integers(0, 2**32 - 1))
def test_free_evolve_preserves_occupations(eig4, t, seed):
    s = initialize_state(uniform(16), eig4, "typicality", np.random.default_rng(seed))
    assert np.max(np.abs(free_evolve(s, t).occupations() - s.occupations())) < 1e-12


@pytest.mark.parametrize("axis", AXES)
@pytest.mark.parametrize("site", [0, 2])
def test_projector_matches_kronecker(axis, site):
    for outcome in (0.5, -0.5):
        p = make_projector(ProjectorSpec(site, axis, outcome), 4)
        ref = kron_projector(4, site, p.axis, outcome)
        assert np.max(np.abs(p.matrix() - ref)) < 1e-14


@pytest.mark.parametrize("axis", AXES)
def test_projector_algebra(axis):
    up = make_projector(ProjectorSpec(1, axis, 0.5), 3).matrix()
    down = make_projector(ProjectorSpec(1, axis, -0.5), 3).matrix()
    assert np.max(np.abs(up @ up - up)) < 1e-14
    assert np.max(np.abs(up.conj().T - up)) < 1e-14
    assert np.max(np.abs(up + down - np.eye(8))) < 1e-14
    assert np.max(np.abs(up @ down)) < 1e-14
    assert np.trace(up).real == pytest.approx(4.0)


def test_z_projector_selects_bit_states():
    p = make_projector(ProjectorSpec(0, "z", 0.5), 3).matrix()
    np.testing.assert_allclose(np.diag(p).real, [1, 0, 1, 0, 1, 0, 1, 0])


def test_outcome_validation():
    with pytest.raises(ValueError):
        ProjectorSpec(0, "z", 1.0)


def test_maximally_mixed_probability(eig4):
    s = initialize_state(uniform(16), eig4)
    for axis in AXES:
        assert outcome_probability(s, ProjectorSpec(3, axis, 0.5)) == pytest.approx(0.5, abs=1e-12)


def test_product_state_probabilities(eig4):
    s = site_state(eig4, all_up(16))
    assert outcome_probability(s, ProjectorSpec(2, "z", 0.5)) == pytest.approx(1.0, abs=1e-12)
    assert outcome_probability(s, ProjectorSpec(2, "z", -0.5)) == pytest.approx(0.0, abs=1e-12)
    assert outcome_probability(s, ProjectorSpec(2, "x", 0.5)) == pytest.approx(0.5, abs=1e-12)
    tilted = (np.sin(0.7), 0.0, np.cos(0.7))
    assert outcome_probability(s, ProjectorSpec(2, tilted, 0.5)) == pytest.approx(np.cos(0.35) ** 2, abs=1e-12)


def test_impossible_outcome_raises(eig4):
    s = site_state(eig4, all_up(16))
    with pytest.raises(ZeroProbabilityError):
        collapse(s, ProjectorSpec(0, "z", -0.5))


@pytest.mark.parametrize("axis", AXES)
def test_repeated_measurement_is_deterministic(eig4, axis):
    s = initialize_state(mixture_weights(EnsembleSpec(), eig4.energies), eig4)
    spec = ProjectorSpec(1, axis, -0.5)
    once = collapse(s, spec)
    twice = collapse(once, spec)
    assert outcome_probability(once, spec) == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(twice.rho - once.rho)) < 1e-12


def test_collapse_of_maximally_mixed_state(eig4):
    s = collapse(initialize_state(uniform(16), eig4), ProjectorSpec(0, "x", 0.5))
    p = make_projector(ProjectorSpec(0, "x", 0.5), 4).matrix()
    rho_site = eig4.vectors @ s.rho @ eig4.vectors.T
    assert np.max(np.abs(rho_site - p / 8)) < 1e-12


def test_collapse_matches_dense_oracle(eig4):
    dist = mixture_weights(EnsembleSpec(), eig4.energies)
    s = initialize_state(dist, eig4)
    spec = ProjectorSpec(2, (0.6, 0.0, 0.8), 0.5)
    post = collapse(s, spec).rho
    rho = eig4.vectors @ np.diag(dist.weights) @ eig4.vectors.T
    proj = kron_projector(4, 2, spec.axis, 0.5)
    ref = proj @ rho @ proj
    ref = eig4.vectors.T @ (ref / np.trace(ref)) @ eig4.vectors
    assert np.max(np.abs(post - ref)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(site=st.integers(0, 3), axis=st.sampled_from(AXES), seed=st.integers(0, 2**32 - 1),
       backend=st.sampled_from(["density", "typicality"]))
def test_split_is_complete_and_normalized(eig4, site, axis, seed, backend):
    rng = np.random.default_rng(seed)
    dist = EnergyDistribution.normalized(rng.random(16))
    s = free_evolve(initialize_state(dist, eig4, backend, rng), float(rng.uniform(0, 2)))
    sp = split(s, site, axis)
    assert sp.prob_up + sp.prob_down == pytest.approx(1.0, abs=1e-12)
    assert sp.prob_up == pytest.approx(outcome_probability(s, ProjectorSpec(site, axis, 0.5)), abs=1e-12)
    for p, child in ((sp.prob_up, sp.up), (sp.prob_down, sp.down)):
        if p > 1e-9:
            assert np.max(np.abs(np.asarray(child.norms()) - 1.0)) < 1e-10


def test_split_batch_matches_single_members(eig4, rng):
    dist = mixture_weights(EnsembleSpec(), eig4.energies)
    members = [initialize_state(dist, eig4, "typicality", rng) for _ in range(3)]
    batch = QuantumState("typicality", np.column_stack([m.psi for m in members]), eig4)
    sp = split(batch, 1, "y")
    for j, member in enumerate(members):
        single = split(member, 1, "y")
        assert sp.prob_up[j] == pytest.approx(single.prob_up, abs=1e-14)
        assert np.max(np.abs(sp.up.amplitudes[:, j] - single.up.psi)) < 1e-13


def test_energy_distribution_after_evolution(eig4):
    dist = mixture_weights(EnsembleSpec(), eig4.energies)
    s = free_evolve(initialize_state(dist, eig4), 0.9)
    assert np.max(np.abs(energy_distribution(s).weights - dist.weights)) < 1e-14


def test_from_density_matrix_round_trip(eig4):
    dist = mixture_weights(EnsembleSpec(), eig4.energies)
    rho = collapse(initialize_state(dist, eig4), ProjectorSpec(0, "x", 0.5)).rho
    assert np.max(np.abs(QuantumState.from_density_matrix(rho, eig4).rho - rho)) < 1e-13


def test_backends_agree_on_first_measurement():
    eig = diagonalize(build_hamiltonian(ChainSpec(6)))
    dist = mixture_weights(EnsembleSpec(), eig.energies)
    spec = ProjectorSpec(2, (0.0, 0.6, 0.8), 0.5)
    exact = outcome_probability(initialize_state(dist, eig), spec)
    rng = np.random.default_rng(7)
    samples = np.array([outcome_probability(initialize_state(dist, eig, "typicality", rng), spec)
                        for _ in range(200)])
    stderr = samples.std(ddof=1) / np.sqrt(samples.size)
    assert abs(samples.mean() - exact) < 3 * stderr + 1e-12


def test_draw_protocol_nn_structure(rng):
    events = draw_protocol(ProtocolSpec("nn_z", 6), 10, rng)
    assert [e.ordinal for e in events] == list(range(1, 7))
    for a, b in zip(events[0::2], events[1::2]):
        assert (b.site - a.site) % 10 in (1, 9)
    assert all(e.axis == (0.0, 0.0, 1.0) for e in events)
    assert all(0.0 <= e.delay <= 2.0 for e in events)


def test_draw_protocol_random_axes(rng):
    events = draw_protocol(ProtocolSpec("random_site_random_axis", 300), 8, rng)
    labels = {e.axis_label for e in events}
    assert labels == {"x", "y", "z"}
    sphere = draw_protocol(ProtocolSpec("random_site_random_axis", 50, axis_mode="sphere_uniform"), 8, rng)
    assert all(abs(np.linalg.norm(e.axis) - 1) < 1e-12 for e in sphere)


def test_draw_protocol_fixed_axis(rng):
    events = draw_protocol(ProtocolSpec("random_site_random_axis", 5, axis_mode="fixed", axis="x"), 4, rng)
    assert all(e.axis_label == "x" for e in events)


def test_draw_protocol_is_seeded():
    spec = ProtocolSpec("random_site_random_axis", 6)
    a = draw_protocol(spec, 8, np.random.default_rng(3))
    b = draw_protocol(spec, 8, np.random.default_rng(3))
    assert a == b
    assert draw_protocol(ProtocolSpec("nn_z", 0), 8, np.random.default_rng(3)) == []


def test_protocol_validation():
    with pytest.raises(ValueError):
        ProtocolSpec("nn_x")
    with pytest.raises(ValueError):
        ProtocolSpec(delay_interval=(2.0, 1.0))
