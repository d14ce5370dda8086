import numpy as np
import pytest

from transim.corner_ext import (
    CornerData,
    check_compatibility,
    extend_from_corner,
    smooth_rel_boundary,
    verify_restriction_identity,
)
from transim.errors import IncompatibleFaces, ToleranceUnreachable
from transim.poly import PolyMap, monomial_exponents
from transim.simplex_geom import DeltaMorphism, SimplexDomain
from transim.smooth_maps import SmoothSimplexMap, maps_close


def _random_scalar(rng, nvars, degree=3):
    terms = {e: rng.uniform(-1, 1, 1) for e in monomial_exponents(nvars, degree)}
    return PolyMap(nvars, 1, terms)


def test_extension_restricts_to_each_wall():
    rng = np.random.default_rng(41)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, n + 1))
        data = CornerData.from_global(_random_scalar(rng, n), k)
        ext = extend_from_corner(data)
        for wall in range(k):
            assert verify_restriction_identity(data, ext, wall) <= 1e-12


def test_extension_is_linear():
    rng = np.random.default_rng(42)
    g1 = _random_scalar(rng, 3)
    g2 = _random_scalar(rng, 3)
    d1 = CornerData.from_global(g1, 2)
    d2 = CornerData.from_global(g2, 2)
    dsum = CornerData.from_global(g1 + g2, 2)
    lhs = extend_from_corner(dsum)
    rhs = extend_from_corner(d1) + extend_from_corner(d2)
    assert lhs.max_coeff_diff(rhs) <= 1e-13


def test_extension_of_handmade_compatible_data():
    # f_0 = x_1^2, f_1 = x_0: both vanish where x_0 = x_1 = 0
    f0 = PolyMap(2, 1, {(0, 2): (1.0,)})
    f1 = PolyMap(2, 1, {(1, 0): (1.0,)})
    data = CornerData(2, 2, (f0, f1))
    ext = extend_from_corner(data)
    assert verify_restriction_identity(data, ext, 0) <= 1e-14
    assert verify_restriction_identity(data, ext, 1) <= 1e-14


def test_incompatible_faces_rejected():
    f0 = PolyMap(2, 1, {(0, 0): (1.0,)})
    f1 = PolyMap(2, 1, {(0, 0): (0.0,)})
    data = CornerData(2, 2, (f0, f1))
    with pytest.raises(IncompatibleFaces):
        extend_from_corner(data)


def test_face_must_ignore_its_own_wall():
    bad = PolyMap(2, 1, {(1, 0): (1.0,)})
    with pytest.raises(ValueError):
        CornerData(2, 1, (bad,))


def test_compatibility_measure_is_zero_for_global_data():
    rng = np.random.default_rng(43)
    data = CornerData.from_global(_random_scalar(rng, 4), 3)
    assert check_compatibility(data) <= 1e-14


class _WobblyMap:
    """Interior sine wobble over a polynomial base; facets stay polynomial."""

    def __init__(self, base, freq=3.0, height=0.05):
        self.base = base
        self.dim = base.dim
        self.ambient = base.ambient
        self.freq = freq
        self.height = height

    def eval(self, x):
        x = np.asarray(x, dtype=float).reshape(self.dim)
        lam0 = 1.0 - x.sum()
        rho = lam0 * float(np.prod(x))
        out = self.base.eval(x).copy()
        out[0] += rho * self.height * np.sin(self.freq * x[0])
        return out

    def facet_map(self, i):
        return self.base.restrict(DeltaMorphism.face(i, self.dim))


def _base_map(rng, r2, n=2):
    terms = {e: rng.uniform(-1, 1, 2) for e in monomial_exponents(n, 2)}
    return SmoothSimplexMap.from_poly(PolyMap(n, 2, terms), r2)


def test_smoothing_noop_on_polynomial_input(r2):
    rng = np.random.default_rng(44)
    base = _base_map(rng, r2)
    out, info = smooth_rel_boundary(base, tol=1e-12)
    assert info["already_polynomial"]
    assert maps_close(out, base)


def test_smoothing_keeps_facets_and_stays_close(r2):
    rng = np.random.default_rng(45)
    base = _base_map(rng, r2)
    wobbly = _WobblyMap(base, freq=3.0, height=0.05)
    out, info = smooth_rel_boundary(wobbly, tol=0.02)
    assert not info["already_polynomial"]
    assert info["facet_error"] <= 1e-9
    for i in range(3):
        beta = DeltaMorphism.face(i, 2)
        assert maps_close(out.restrict(beta), base.restrict(beta), tol=1e-9)
    for x in SimplexDomain(2).random_points(rng, 40):
        assert np.linalg.norm(out.eval(x) - wobbly.eval(x)) <= 0.02 + 1e-12


def test_smoothing_reports_unreachable_tolerance(r2):
    rng = np.random.default_rng(46)
    base = _base_map(rng, r2)
    wobbly = _WobblyMap(base, freq=9.0, height=0.3)
    with pytest.raises(ToleranceUnreachable):
        smooth_rel_boundary(wobbly, tol=1e-12)


def test_smoothing_one_dimensional(r2):
    rng = np.random.default_rng(47)
    base = _base_map(rng, r2, n=1)
    wobbly = _WobblyMap(base, freq=2.0, height=0.03)
    out, _ = smooth_rel_boundary(wobbly, tol=0.01)
    for x in ([0.0], [1.0]):
        assert np.allclose(out.eval(x), base.eval(x), atol=1e-10)
