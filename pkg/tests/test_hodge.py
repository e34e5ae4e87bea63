import numpy as np
import pytest

from mlc import GeometryError
from mlc.dec import ConformalMetric, DiscreteForm, codifferential, d, inner, norm
from mlc.hodge import (
    decompose,
    harmonic_basis,
    homology_loops,
    periods,
    _closed_form_for,
    _spanning_trees,
)

TOL = 1e-11


def conformal(pair):
    mesh, metric = pair
    return mesh, ConformalMetric(metric)


def random_one_form(mesh, seed):
    rng = np.random.default_rng(seed)
    return DiscreteForm(1, rng.standard_normal(mesh.n_edges))


# -- tree-cotree structure ------------------------------------------------------


@pytest.mark.parametrize("fixture,expected", [
    ("icosphere", 0), ("torus_mesh", 2), ("genus2_mesh", 4), ("genus3_mesh", 6),
])
def test_leftover_edge_count_is_twice_genus(fixture, expected, request):
    mesh, _ = request.getfixturevalue(fixture)
    leftover = _spanning_trees(mesh)[6]
    assert len(leftover) == expected


def test_raw_generators_are_exactly_closed(genus2_mesh):
    mesh, _ = genus2_mesh
    _, _, _, _, order, dpe, leftover = _spanning_trees(mesh)
    d1 = mesh.d1_incidence()
    for x in leftover:
        omega = _closed_form_for(mesh, x, order, dpe)
        assert np.all(d1 @ omega == 0.0)  # integer cancellation, no roundoff


def test_raw_period_matrix_is_signed_identity(genus2_mesh):
    """Loop j meets generator k only on leftover edge j: pairing +-delta_jk."""
    mesh, _ = genus2_mesh
    _, _, _, _, order, dpe, leftover = _spanning_trees(mesh)
    loops = homology_loops(mesh)
    P = np.array([[np.dot(chain, _closed_form_for(mesh, x, order, dpe))
                   for x in leftover] for chain in loops])
    assert np.array_equal(np.abs(P), np.eye(len(leftover)))


def test_homology_loops_are_cycles(genus2_mesh):
    mesh, _ = genus2_mesh
    d0 = mesh.d0_incidence()
    for chain in homology_loops(mesh):
        # a cycle has zero boundary: signed vertex degrees cancel
        assert np.all(d0.T @ chain == 0)


# -- harmonic basis ---------------------------------------------------------------


@pytest.mark.parametrize("fixture,count", [
    ("icosphere", 0), ("torus_mesh", 2), ("genus2_mesh", 4),
])
def test_harmonic_basis_dimension(fixture, count, request):
    mesh, cm = conformal(request.getfixturevalue(fixture))
    assert len(harmonic_basis(cm, tol=TOL)) == count


def test_harmonic_basis_is_orthonormal_closed_coclosed(genus2_mesh):
    mesh, cm = conformal(genus2_mesh)
    basis = harmonic_basis(cm, tol=TOL)
    for i, a in enumerate(basis):
        assert np.abs(d(a, mesh).values).max() < 1e-12
        assert np.abs(codifferential(a, cm).values).max() < 1e-7
        for j, b in enumerate(basis):
            assert abs(inner(a, b, cm) - (i == j)) < 1e-10


def test_harmonic_basis_respects_flat_metric(flat_torus_9):
    mesh, cm = conformal(flat_torus_9)
    basis = harmonic_basis(cm, tol=1e-12)
    assert len(basis) == 2
    for a in basis:
        assert np.abs(codifferential(a, cm).values).max() < 1e-10


# -- decomposition ----------------------------------------------------------------


def test_reconstruction_and_gauges(genus2_mesh):
    mesh, cm = conformal(genus2_mesh)
    beta = random_one_form(mesh, 0)
    parts = decompose(beta, cm, tol=TOL)
    recon = parts.gamma.values + d(parts.v, mesh).values + parts.coexact.values
    assert norm(DiscreteForm(1, recon - beta.values), cm) <= 10 * TOL * norm(beta, cm)
    assert abs(np.dot(parts.v.values, cm.dual_areas)) < 1e-10
    # harmonicity of the remainder, in integrated form
    assert np.abs(d(parts.gamma, mesh).values).max() < 1e-8
    assert np.abs(codifferential(parts.gamma, cm).values).max() < 1e-7
    # the coexact part is coclosed by integer incidence algebra
    assert np.abs(codifferential(parts.coexact, cm).values).max() < 1e-12


def test_exact_input_recovers_potential(icosphere):
    mesh, cm = conformal(icosphere)
    rng = np.random.default_rng(4)
    v0 = rng.standard_normal(mesh.n_vertices)
    parts = decompose(d(DiscreteForm(0, v0), mesh), cm, tol=1e-12)
    centered = v0 - np.dot(v0, cm.dual_areas) / cm.total_area
    assert np.abs(parts.v.values - centered).max() < 1e-9
    assert norm(parts.gamma, cm) < 1e-9
    assert norm(parts.coexact, cm) < 1e-12


def test_sphere_closed_forms_are_exact(icosphere):
    """Trivial first cohomology: closed input leaves no harmonic remainder."""
    mesh, cm = conformal(icosphere)
    rng = np.random.default_rng(9)
    beta = d(DiscreteForm(0, rng.standard_normal(mesh.n_vertices)), mesh)
    parts = decompose(beta, cm, tol=TOL)
    assert norm(parts.gamma, cm) <= 1e-9 * max(norm(beta, cm), 1.0)


def test_closed_input_has_tiny_coexact_part(genus2_mesh):
    mesh, cm = conformal(genus2_mesh)
    _, _, _, _, order, dpe, leftover = _spanning_trees(mesh)
    rng = np.random.default_rng(13)
    closed = DiscreteForm(1, _closed_form_for(mesh, leftover[1], order, dpe)
                          + d(DiscreteForm(0, rng.standard_normal(mesh.n_vertices)),
                              mesh).values)
    parts = decompose(closed, cm, tol=TOL)
    assert norm(parts.coexact, cm) <= 10 * TOL * norm(closed, cm)


def test_periods_of_gamma_match_closed_input(genus2_mesh):
    """The harmonic representative keeps every cohomology period."""
    mesh, cm = conformal(genus2_mesh)
    loops = homology_loops(mesh)
    _, _, _, _, order, dpe, leftover = _spanning_trees(mesh)
    rng = np.random.default_rng(2)
    raw = sum(k * _closed_form_for(mesh, x, order, dpe)
              for k, x in zip((2.0, -1.0, 3.0, 0.5), leftover))
    closed = DiscreteForm(1, raw + d(DiscreteForm(0, rng.standard_normal(
        mesh.n_vertices)), mesh).values)
    parts = decompose(closed, cm, tol=1e-12)
    assert np.allclose(periods(parts.gamma, loops), periods(closed, loops),
                       atol=1e-8)


def test_torus_generator_keeps_unit_period(flat_torus_9):
    mesh, cm = conformal(flat_torus_9)
    loops = homology_loops(mesh)
    _, _, _, _, order, dpe, leftover = _spanning_trees(mesh)
    beta = DiscreteForm(1, _closed_form_for(mesh, leftover[0], order, dpe))
    parts = decompose(beta, cm, tol=1e-12)
    assert norm(parts.gamma, cm) > 0.1  # genuinely non-exact
    got = periods(parts.gamma, loops)
    want = periods(beta, loops)
    assert np.allclose(got, want, atol=1e-9)


def test_negative_weights_are_reported(flat_torus_9):
    from mlc.mesh import EdgeLengthMetric
    mesh, _ = flat_torus_9
    lengths = np.ones(mesh.n_edges)
    lengths[0] = 1.95  # obtuse in both adjacent faces: weight goes negative
    cm = ConformalMetric(EdgeLengthMetric(mesh, lengths))
    assert cm.cot_weights.min() < 0
    with pytest.raises(GeometryError, match="cotangent weight"):
        harmonic_basis(cm, tol=TOL)
