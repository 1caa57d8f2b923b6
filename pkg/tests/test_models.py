import numpy as np
import pytest

from lindforge import lindblad, models
from lindforge.lindblad import local_split
from lindforge.states import measures, schmidt_from_vector


def _rho(psi):
    return np.outer(psi, psi.conj())


@pytest.mark.parametrize("build", [models.xxz_lindbladian, models.ladder_lindbladian])
@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("v", [0.1, 0.3])
@pytest.mark.parametrize("j_z", [0.0, 0.5, 1.0])
def test_rainbow_is_steady(build, n, v, j_z):
    l = build(models.ChainSpec(n, j=1.0, j_z=j_z, v=v))
    assert np.linalg.norm(l.apply(_rho(models.rainbow_state(n, v)))) <= 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("j_z", [0.0, 0.5, 1.0])
def test_rung_hamiltonian_eigenvalue(n, j_z):
    spec = models.ChainSpec(n, j=0.7, j_z=j_z, v=0.3)
    psi = models.rainbow_state(n, spec.v)
    np.testing.assert_allclose(models.rung_hamiltonian(spec) @ psi, n * j_z * psi, atol=1e-10)


def test_jumps_are_local():
    l = models.xxz_lindbladian(models.ChainSpec(2, v=0.4))
    for j in l.jumps:
        a, b = local_split(j.operator(), l.n_a, l.n_b)
        np.testing.assert_allclose(np.kron(a, np.eye(4)) + np.kron(np.eye(4), b), j.operator(), atol=1e-12)


def test_chain_spec_validation():
    with pytest.raises(ValueError):
        models.ChainSpec(5)
    with pytest.raises(ValueError):
        models.ChainSpec(2, v=0.6, u=0.6)
    with pytest.raises(ValueError):
        models.ChainSpec(0)
    assert models.ChainSpec(2, v=0.6).u == pytest.approx(0.8)


def test_vacuum_at_zero_squeezing():
    psi = models.rainbow_state(2, 0.0)
    assert psi[0] == 1 and np.count_nonzero(psi) == 1
    l = models.xxz_lindbladian(models.ChainSpec(2, j_z=0.5, v=0.0))
    assert np.linalg.norm(l.apply(_rho(psi))) <= 1e-12


def test_single_rung_state():
    v = 0.3
    psi = models.rainbow_state(1, v)
    expected = np.zeros(4)
    expected[0], expected[3] = np.sqrt(1 - v**2), -v
    np.testing.assert_allclose(psi, expected, atol=1e-15)
    bell = models.rainbow_state(1, np.sqrt(0.5))
    state, _, _ = schmidt_from_vector(bell, 2, 2)
    assert measures(state).delta_e2 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("v", [0.05, 0.2, 0.5, 0.7])
def test_rainbow_renyi_additivity(n, v):
    psi = models.rainbow_state(n, v)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-14)
    state, _, _ = schmidt_from_vector(psi, 2**n, 2**n)
    m = measures(state)
    assert m.renyi2 == pytest.approx(-n * np.log((1 - v**2) ** 2 + v**4), rel=1e-10, abs=1e-14)
    assert m.delta_e2 == pytest.approx(models.rainbow_delta_e2(n, v), rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_delta_e2_monotone_in_v(n):
    vs = np.linspace(1e-3, np.sqrt(0.5), 200)
    d = [models.rainbow_delta_e2(n, v) for v in vs]
    assert np.all(np.diff(d) < 0)
    target = 1e-3
    v = models.rainbow_v_for_delta_e2(n, target)
    assert models.rainbow_delta_e2(n, v) == pytest.approx(target, rel=1e-9)


def test_ladder_reduces_to_xxz_without_hamiltonian():
    spec = models.ChainSpec(2, j=0.0, j_z=0.0, v=0.3)
    a, b = models.ladder_lindbladian(spec), models.xxz_lindbladian(spec)
    np.testing.assert_allclose(a.hamiltonian, b.hamiltonian, atol=0)
    np.testing.assert_allclose(lindblad.build_superoperator(a), lindblad.build_superoperator(b), atol=0)


def test_unique_steady_state_is_rainbow():
    spec = models.ChainSpec(2, j=1.0, j_z=0.5, v=0.3)
    l = models.xxz_lindbladian(spec)
    res = lindblad.spectrum(l, vectors=False)
    assert res.steady_count == 1
    rho = lindblad.steady_states(l)[0]
    psi = models.rainbow_state(2, spec.v)
    assert lindblad.fidelity_to_pure(rho, psi) >= 1 - 1e-8


def test_steady_state_independent_of_couplings():
    v = 0.25
    psi = models.rainbow_state(2, v)
    gaps = []
    for j, j_z in [(0.5, 0.0), (1.0, 0.5), (2.0, 1.0)]:
        l = models.xxz_lindbladian(models.ChainSpec(2, j=j, j_z=j_z, v=v))
        assert np.linalg.norm(l.apply(_rho(psi))) <= 1e-9
        gaps.append(lindblad.spectrum(l, vectors=False).gap)
    assert len(set(np.round(gaps, 6))) > 1


@pytest.mark.parametrize(
    "build, j_z, expected",
    [(models.xxz_lindbladian, 0.0, 2), (models.xxz_lindbladian, 0.5, 1), (models.ladder_lindbladian, 0.5, 2)],
)
def test_midgap_counts(build, j_z, expected):
    v = models.rainbow_v_for_delta_e2(2, 1e-3)
    res = lindblad.spectrum(build(models.ChainSpec(2, j=1.0, j_z=j_z, v=v)), vectors=False)
    assert models.count_midgap(res) == expected
    mask = models.midgap_mask(res)
    assert mask.sum() == expected
    assert not mask[: res.steady_count].any()
