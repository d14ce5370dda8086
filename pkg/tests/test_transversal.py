import math

import numpy as np
import pytest

from transim.errors import FacesNotTransverse, TrialsExhausted
from transim.poly import PolyMap
from transim.scenarios import (
    line_member,
    longitude_arcs,
    meridian_member,
    origin_member,
    plane,
    tangent_longitude_arcs,
)
from transim.simplex_geom import DeltaMorphism
from transim.smooth_maps import SmoothSimplexMap, maps_close
from transim.transversal import (
    CornerManifold,
    LocusOptions,
    TCollection,
    _project_corner,
    intersection_locus,
    is_T_transverse,
    is_transverse_pair,
    perturb_to_transverse,
)

_OPTS = LocusOptions(cells_per_dim=12)


def test_longitude_crosses_meridian_once():
    right, left = longitude_arcs()
    member = meridian_member()
    report = intersection_locus(right, 0, member, 0, _OPTS)
    assert len(report.points) == 1
    p = report.points[0]
    assert abs(p.x[0] - 0.5) < 1e-8
    assert p.member_active == ()
    # the left return arc crosses {y = 0} only at x < 0, outside the member
    assert not intersection_locus(left, 0, member, 0, _OPTS).points


def test_left_arc_verdict_is_vacuous():
    _, left = longitude_arcs()
    v = is_transverse_pair(left, meridian_member(), opts=_OPTS)
    assert v.ok
    assert v.min_sv == math.inf
    assert not v.report.points


def test_triangle_through_origin_is_transverse(crossing_triangle, origin_collection):
    res = is_T_transverse(crossing_triangle, origin_collection, opts=_OPTS)
    assert res.ok
    assert res.min_sv > 0.1
    pts = res.verdicts["origin"].report.points
    assert len(pts) == 1
    assert pts[0].simplex_vanishing == ()


def test_origin_on_open_edge_fails(edge_triangle, origin_collection):
    res = is_T_transverse(edge_triangle, origin_collection, opts=_OPTS)
    assert not res.ok
    w = res.witness()
    assert w is not None
    assert w.simplex_depth == 1
    # an edge plus a point cannot span the plane
    assert w.spanning_sv < 1e-7


def test_tangent_crossing_fails_rank_test():
    tangent, _ = tangent_longitude_arcs()
    v = is_transverse_pair(tangent, meridian_member(), opts=_OPTS)
    assert not v.ok
    assert v.min_sv < 1e-6


def test_parametric_member_crossing():
    chart = SmoothSimplexMap.affine_from_vertices(
        np.array([[-1.0, 0.0], [1.0, 0.0]]), plane()
    )
    member = CornerManifold.parametric("strip", chart)
    assert member.codim_in_m == 1
    sigma = SmoothSimplexMap.affine_from_vertices(
        np.array([[0.2, -1.0], [0.2, 1.0]]), plane()
    )
    report = intersection_locus(sigma, 0, member, 0, _OPTS)
    assert len(report.points) == 1
    p = report.points[0]
    assert abs(p.x[0] - 0.5) < 1e-8
    assert abs(p.y[0] - 0.6) < 1e-8
    assert np.allclose(p.z, [0.2, 0.0], atol=1e-9)
    assert is_transverse_pair(sigma, member, opts=_OPTS).ok


def test_project_corner_properties():
    rng = np.random.default_rng(51)
    pts = rng.uniform(-2.0, 2.0, (200, 3))
    proj = _project_corner(pts)
    assert np.all(proj >= 0.0)
    assert np.all(proj.sum(axis=1) <= 1.0 + 1e-12)
    assert np.allclose(_project_corner(proj), proj, atol=1e-12)
    inside = np.array([[0.2, 0.3, 0.1], [0.0, 0.0, 0.0]])
    assert np.array_equal(_project_corner(inside), inside)
    # projection is the nearest feasible point; spot-check optimality
    z = np.array([[0.9, 0.8, -0.3]])
    p = _project_corner(z)[0]
    for d in np.eye(3):
        for s in (1e-4, -1e-4):
            q = _project_corner((p + s * d)[None, :])[0]
            assert np.linalg.norm(z[0] - q) >= np.linalg.norm(z[0] - p) - 1e-9


def test_perturbation_is_reproducible():
    pt = SmoothSimplexMap.constant(np.zeros(2), plane())
    members = TCollection.of(origin_member())
    a = perturb_to_transverse(pt, members, seed=5, max_trials=10, opts=_OPTS)
    b = perturb_to_transverse(pt, members, seed=5, max_trials=10, opts=_OPTS)
    assert a.trials_used == b.trials_used
    assert np.array_equal(a.s, b.s)
    assert maps_close(a.sigma_prime, b.sigma_prime, tol=0.0)


def test_perturbation_fixes_boundary_exactly():
    seg = SmoothSimplexMap.affine_from_vertices(
        np.array([[-0.8, 0.0], [0.5, 0.0]]), plane()
    )
    members = TCollection.of(line_member())
    assert not is_T_transverse(seg, members, opts=_OPTS).ok
    out = perturb_to_transverse(seg, members, seed=42, max_trials=10, opts=_OPTS)
    assert is_T_transverse(out.sigma_prime, members, simplex_depths=(0,), opts=_OPTS).ok
    for i in range(2):
        beta = DeltaMorphism.face(i, 1)
        assert maps_close(out.sigma_prime.restrict(beta), seg.restrict(beta), tol=0.0)
    assert maps_close(out.sigma_prime.with_last_bump_scale(0.0), seg, tol=0.0)


def test_trials_exhausted_carries_diagnostics():
    pt = SmoothSimplexMap.constant(np.zeros(2), plane())
    members = TCollection.of(origin_member())
    with pytest.raises(TrialsExhausted) as exc:
        perturb_to_transverse(pt, members, seed=5, max_trials=0, opts=_OPTS)
    diag = exc.value.diagnostics
    assert diag["seed"] == 5
    assert diag["per_trial_min_sv"] == []


def test_nontransverse_face_is_reported():
    seg = SmoothSimplexMap.affine_from_vertices(
        np.array([[0.0, 0.0], [1.0, 1.0]]), plane()
    )
    members = TCollection.of(line_member())
    with pytest.raises(FacesNotTransverse):
        perturb_to_transverse(
            seg, members, seed=1, max_trials=5, opts=_OPTS,
            require_transverse_faces=True,
        )


def test_collection_rejects_duplicate_names():
    with pytest.raises(ValueError):
        TCollection.of(origin_member(), origin_member())


def test_member_validation():
    level = PolyMap.affine(np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        CornerManifold("bad", plane(), 1, "level_set", level=level)
    with pytest.raises(ValueError):
        CornerManifold("worse", plane(), 1, "mystery")
