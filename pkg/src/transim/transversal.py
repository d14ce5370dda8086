"""Stratumwise transversality against a finite collection of corner manifolds.

A member of the collection is either a level set cut out of the ambient
manifold by polynomial equations and inequalities, or a parametric patch
(a polynomial simplex map into the tube, post-projected).  Strata on both
sides are indexed by what vanishes: barycentric coordinates for simplices
and parametric patches, active inequalities for level sets.

The locus finder seeds a uniform lattice in the joint parameter domain and
runs batched Gauss-Newton; completeness is heuristic and is guarded by the
density escalation in ``is_transverse_pair``.  Every verdict is therefore a
numerical statement about located points, not a certificate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .ambient import AmbientManifold
from .errors import FacesNotTransverse, OutOfTube, RankDrop, TrialsExhausted
from .poly import PolyMap
from .simplex_geom import (
    DeltaMorphism,
    barycentrics_many,
    face_for_vertices,
    realize_morphism,
    simplex_grid,
)
from .smooth_maps import SmoothSimplexMap

__all__ = [
    "CornerManifold",
    "TCollection",
    "LocusOptions",
    "IntersectionPoint",
    "IntersectionReport",
    "PairVerdict",
    "TransversalityResult",
    "PerturbationResult",
    "intersection_locus",
    "is_transverse_pair",
    "is_T_transverse",
    "perturb_to_transverse",
]

LEVEL_SET = "level_set"
PARAMETRIC = "parametric"

_STRATUM_RANK_TOL = 1e-7


@dataclass(frozen=True)
class CornerManifold:
    """One member of the collection T, with its stratification.

    Level-set members live inside the ambient manifold as {G = 0} cut down
    by inequalities h_a >= 0; depth counts active inequalities.  Parametric
    members are the image of a polynomial simplex map; depth counts
    vanishing barycentric coordinates of the patch domain.
    """

    name: str
    ambient: AmbientManifold
    codim_in_m: int
    kind: str
    level: PolyMap | None = None
    inequalities: tuple[PolyMap, ...] = ()
    chart: SmoothSimplexMap | None = None
    coorientation: tuple[PolyMap, ...] = ()

    def __post_init__(self):
        if self.kind == LEVEL_SET:
            if self.level is None:
                raise ValueError("level-set member needs a level polynomial")
            if self.level.nvars != self.ambient.ambient_dim:
                raise ValueError("level polynomial has wrong arity")
            if self.level.ncomp != self.codim_in_m:
                raise ValueError("level component count must equal the codimension")
            for h in self.inequalities:
                if h.nvars != self.ambient.ambient_dim or h.ncomp != 1:
                    raise ValueError("inequalities must be scalar in ambient coordinates")
        elif self.kind == PARAMETRIC:
            if self.chart is None:
                raise ValueError("parametric member needs a chart")
            if self.chart.ambient.ambient_dim != self.ambient.ambient_dim:
                raise ValueError("chart ambient mismatch")
            expected = self.ambient.intrinsic_dim - self.chart.dim
            if expected != self.codim_in_m:
                raise ValueError("chart dimension inconsistent with codimension")
        else:
            raise ValueError(f"unknown member kind {self.kind!r}")
        for v in self.coorientation:
            if v.nvars != self.ambient.ambient_dim or v.ncomp != self.ambient.ambient_dim:
                raise ValueError("coorientation fields map ambient to ambient")

    @classmethod
    def level_set_in(
        cls,
        name: str,
        ambient: AmbientManifold,
        level: PolyMap,
        inequalities: tuple[PolyMap, ...] = (),
        coorientation: tuple[PolyMap, ...] = (),
    ) -> "CornerManifold":
        return cls(
            name,
            ambient,
            level.ncomp,
            LEVEL_SET,
            level=level,
            inequalities=tuple(inequalities),
            coorientation=tuple(coorientation),
        )

    @classmethod
    def parametric(
        cls,
        name: str,
        chart: SmoothSimplexMap,
        coorientation: tuple[PolyMap, ...] = (),
    ) -> "CornerManifold":
        codim = chart.ambient.intrinsic_dim - chart.dim
        return cls(name, chart.ambient, codim, PARAMETRIC, chart=chart,
                   coorientation=tuple(coorientation))

    @property
    def dim(self) -> int:
        return self.ambient.intrinsic_dim - self.codim_in_m

    def depths(self) -> range:
        if self.kind == LEVEL_SET:
            return range(min(len(self.inequalities), self.dim) + 1)
        return range(self.chart.dim + 1)

    def descriptors(self, ell: int) -> list[tuple[int, ...]]:
        """Active sets (level set) or vanishing barycentric sets (parametric)."""
        if self.kind == LEVEL_SET:
            return [tuple(c) for c in itertools.combinations(range(len(self.inequalities)), ell)]
        d = self.chart.dim
        if ell > d:
            return []
        return [tuple(c) for c in itertools.combinations(range(d + 1), ell)]

    def coorientation_frame(self, z: np.ndarray) -> np.ndarray:
        """Columns of the normal frame at z; empty (N, 0) if none declared."""
        n = self.ambient.ambient_dim
        if not self.coorientation:
            return np.zeros((n, 0))
        return np.stack([v.eval(z) for v in self.coorientation], axis=1)


@dataclass(frozen=True)
class TCollection:
    members: tuple[CornerManifold, ...]

    def __post_init__(self):
        names = [m.name for m in self.members]
        if len(set(names)) != len(names):
            raise ValueError("member names must be distinct")

    @classmethod
    def empty(cls) -> "TCollection":
        return cls(())

    @classmethod
    def of(cls, *members: CornerManifold) -> "TCollection":
        return cls(tuple(members))

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class LocusOptions:
    cells_per_dim: int = 8
    max_cells_per_dim: int = 64
    tau_root: float = 1e-10
    cluster_radius: float = 1e-6
    open_tol: float = 1e-9
    max_iters: int = 30


@dataclass
class IntersectionPoint:
    member: str
    x: np.ndarray
    simplex_vanishing: tuple[int, ...]
    y: np.ndarray
    member_active: tuple[int, ...]
    z: np.ndarray
    residual: float
    spanning_sv: float | None = None
    sign: int | None = None

    @property
    def simplex_depth(self) -> int:
        return len(self.simplex_vanishing)

    @property
    def member_depth(self) -> int:
        return len(self.member_active)


@dataclass
class IntersectionReport:
    points: list[IntersectionPoint] = field(default_factory=list)
    newton_failures: int = 0
    cells_used: int = 0

    def extend(self, other: "IntersectionReport") -> None:
        self.points.extend(other.points)
        self.newton_failures += other.newton_failures
        self.cells_used = max(self.cells_used, other.cells_used)


def _project_corner(pts: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto {x >= 0, sum x <= 1}.

    Clipping the negatives is already the projection when the clipped sum
    fits; otherwise the cap is active and the row projects onto the face
    {x >= 0, sum x = 1} by the usual sort-and-threshold rule.
    """
    if pts.shape[1] == 0:
        return pts
    y = np.maximum(pts, 0.0)
    over = y.sum(axis=1) > 1.0
    if np.any(over):
        sub = pts[over]
        srt = np.sort(sub, axis=1)[:, ::-1]
        csum = np.cumsum(srt, axis=1) - 1.0
        ar = np.arange(1, sub.shape[1] + 1)
        rho = np.sum(srt - csum / ar > 0, axis=1)
        theta = csum[np.arange(len(sub)), rho - 1] / rho
        y[over] = np.maximum(sub - theta[:, None], 0.0)
    return y


def _batched_newton(residual, jacobian, seeds: np.ndarray, opts: LocusOptions,
                    clip=_project_corner):
    """Gauss-Newton from every seed at once; returns (solutions, residual norms).

    Iterates are retracted into the feasible block after every step: the
    sought roots live in the simplex, and projected maps are only
    guaranteed to stay inside the ambient tube there.
    """
    u = seeds.copy()
    if u.shape[1] == 0:
        r = residual(u)
        return u, np.max(np.abs(r), axis=1) if r.shape[1] else np.zeros(len(u))
    for _ in range(opts.max_iters):
        r = residual(u)
        norms = np.max(np.abs(r), axis=1)
        if np.all(norms <= opts.tau_root):
            break
        j = jacobian(u)
        step = np.einsum("pij,pj->pi", np.linalg.pinv(j), r)
        u = clip(u - step)
    r = residual(u)
    norms = np.max(np.abs(r), axis=1) if r.shape[1] else np.zeros(len(u))
    return u, norms


def _cluster(points: list[IntersectionPoint], radius: float) -> list[IntersectionPoint]:
    kept: list[IntersectionPoint] = []
    for p in sorted(points, key=lambda q: (q.residual, tuple(np.round(q.x, 12)))):
        close = False
        for q in kept:
            if (
                np.max(np.abs(p.x - q.x)) <= radius
                and len(p.y) == len(q.y)
                and (len(p.y) == 0 or np.max(np.abs(p.y - q.y)) <= radius)
            ):
                close = True
                break
        if not close:
            kept.append(p)
    return kept


def _solve_descriptor_pair(
    sigma: SmoothSimplexMap,
    member: CornerManifold,
    vanishing: tuple[int, ...],
    active: tuple[int, ...],
    cells: int,
    opts: LocusOptions,
) -> IntersectionReport:
    n = sigma.dim
    kept_vertices = tuple(i for i in range(n + 1) if i not in vanishing)
    beta = face_for_vertices(n, kept_vertices)
    sigma_f = sigma.restrict(beta)
    aff = realize_morphism(beta)
    du_s = n - len(vanishing)
    seeds_s = simplex_grid(du_s, cells + 1)

    if member.kind == LEVEL_SET:
        eqs = [member.level] + [member.inequalities[a] for a in active]

        def residual(w):
            z = sigma_f.eval_many(w)
            return np.concatenate([e.eval_many(z) for e in eqs], axis=1)

        def jacobian(w):
            z = sigma_f.eval_many(w)
            js = sigma_f.jacobian_many(w)
            dz = np.concatenate([e.jac_many(z) for e in eqs], axis=1)
            return np.einsum("pij,pjk->pik", dz, js)

        seeds = seeds_s
        split = du_s
    else:
        d = member.chart.dim
        kept_m = tuple(i for i in range(d + 1) if i not in active)
        gamma = face_for_vertices(d, kept_m)
        chart_f = member.chart.restrict(gamma)
        aff_m = realize_morphism(gamma)
        du_m = d - len(active)
        seeds_m = simplex_grid(du_m, cells + 1)
        split = du_s

        def residual(u):
            return sigma_f.eval_many(u[:, :split]) - chart_f.eval_many(u[:, split:])

        def jacobian(u):
            js = sigma_f.jacobian_many(u[:, :split])
            jm = chart_f.jacobian_many(u[:, split:])
            return np.concatenate([js, -jm], axis=2)

        seeds = np.concatenate(
            [
                np.repeat(seeds_s, len(seeds_m), axis=0),
                np.tile(seeds_m, (len(seeds_s), 1)),
            ],
            axis=1,
        )

    if member.kind == LEVEL_SET:
        clip = _project_corner
    else:
        def clip(u):
            return np.concatenate(
                [_project_corner(u[:, :split]), _project_corner(u[:, split:])],
                axis=1,
            )

    sols, norms = _batched_newton(residual, jacobian, seeds, opts, clip)

    report = IntersectionReport(cells_used=cells)
    candidates: list[IntersectionPoint] = []
    for sol, norm in zip(sols, norms):
        w = sol[:split]
        lam_w = barycentrics_many(du_s, w[None, :])[0]
        inside = np.all(lam_w > opts.open_tol)
        if norm > opts.tau_root:
            # count only failures that stayed in the domain; seeds that wander
            # off are expected and not evidence of trouble
            if inside and norm > 1e-6:
                report.newton_failures += 1
            continue
        if not inside:
            continue
        x = aff.apply(w)
        z = sigma_f.eval(w)
        if member.kind == LEVEL_SET:
            ok = True
            for b, h in enumerate(member.inequalities):
                if b not in active and h.eval(z)[0] <= opts.open_tol:
                    ok = False
                    break
            if not ok:
                continue
            y = z
        else:
            v = sol[split:]
            lam_v = barycentrics_many(len(v), v[None, :])[0]
            if not np.all(lam_v > opts.open_tol):
                continue
            y = aff_m.apply(v)
        candidates.append(
            IntersectionPoint(
                member=member.name,
                x=x,
                simplex_vanishing=vanishing,
                y=y,
                member_active=active,
                z=z,
                residual=float(norm),
            )
        )
    report.points = _cluster(candidates, opts.cluster_radius)
    return report


def intersection_locus(
    sigma: SmoothSimplexMap,
    simplex_depth: int,
    member: CornerManifold,
    member_depth: int,
    opts: LocusOptions = LocusOptions(),
    cells: int | None = None,
) -> IntersectionReport:
    """All located intersections between the open depth-k stratum of the
    simplex and the open depth-l stratum of the member."""
    n = sigma.dim
    cells = opts.cells_per_dim if cells is None else cells
    report = IntersectionReport(cells_used=cells)
    if simplex_depth > n or member_depth not in member.depths():
        return report
    for vanishing in itertools.combinations(range(n + 1), simplex_depth):
        for active in member.descriptors(member_depth):
            report.extend(
                _solve_descriptor_pair(sigma, member, vanishing, active, cells, opts)
            )
    report.points = _cluster(report.points, opts.cluster_radius)
    return report


def _member_stratum_tangent(
    member: CornerManifold,
    point: IntersectionPoint,
    frame: np.ndarray,
) -> np.ndarray:
    """Orthonormal basis, in the given tangent frame of M, of the member
    stratum's tangent space at the intersection point."""
    m = frame.shape[1]
    if member.kind == LEVEL_SET:
        rows = [member.level.jac(point.z) @ frame]
        for a in point.member_active:
            rows.append(member.inequalities[a].jac(point.z) @ frame)
        constraints = np.concatenate(rows, axis=0)
        u, sv, vh = np.linalg.svd(constraints)
        scale = max(sv[0], 1.0) if len(sv) else 1.0
        rank = int(np.sum(sv > _STRATUM_RANK_TOL * scale))
        if rank < constraints.shape[0]:
            raise RankDrop(
                f"member {member.name}: stratum constraints drop rank at z={point.z}"
            )
        return vh[rank:].T
    d = member.chart.dim
    kept = tuple(i for i in range(d + 1) if i not in point.member_active)
    gamma = face_for_vertices(d, kept)
    chart_f = member.chart.restrict(gamma)
    aff_m = realize_morphism(gamma)
    if aff_m.matrix.size:
        v = np.linalg.lstsq(aff_m.matrix, point.y - aff_m.offset, rcond=None)[0]
    else:
        v = np.zeros(aff_m.matrix.shape[1])
    cols = chart_f.jacobian(v)
    return frame.T @ cols


def _normalize_columns(a: np.ndarray) -> np.ndarray:
    # Scale floor, not pure normalization: a column whose norm sits below
    # the floor is a vanishing pushforward direction (the image of the
    # differential collapses there), and blowing it up to unit length
    # would report a tangency as a healthy crossing.
    if a.shape[1] == 0:
        return a
    norms = np.linalg.norm(a, axis=0)
    return a / np.maximum(norms, 1e-3)


def _spanning_sv(cols: np.ndarray) -> float:
    """Smallest singular value of the spanning test: 0 if too few columns."""
    m, p = cols.shape
    if p < m:
        return 0.0
    sv = np.linalg.svd(cols, compute_uv=False)
    return float(sv[m - 1])


def _attach_spanning_sv(
    sigma: SmoothSimplexMap, member: CornerManifold, point: IntersectionPoint
) -> None:
    ambient = sigma.ambient
    frame = ambient.tangent_basis(point.z).basis
    n = sigma.dim
    kept = tuple(i for i in range(n + 1) if i not in point.simplex_vanishing)
    face_aff = realize_morphism(face_for_vertices(n, kept))
    jac = sigma.jacobian(point.x)
    simplex_cols = frame.T @ (jac @ face_aff.matrix)
    member_cols = _member_stratum_tangent(member, point, frame)
    combined = np.concatenate(
        [_normalize_columns(simplex_cols), _normalize_columns(member_cols)], axis=1
    )
    point.spanning_sv = _spanning_sv(combined)


@dataclass
class PairVerdict:
    ok: bool
    min_sv: float
    report: IntersectionReport
    member: str
    tol_rank: float


@dataclass
class TransversalityResult:
    ok: bool
    verdicts: dict[str, PairVerdict]

    @property
    def min_sv(self) -> float:
        svs = [v.min_sv for v in self.verdicts.values()]
        return min(svs) if svs else math.inf

    def witness(self) -> IntersectionPoint | None:
        worst = None
        for v in self.verdicts.values():
            for p in v.report.points:
                if p.spanning_sv is not None and p.spanning_sv < v.tol_rank:
                    if worst is None or p.spanning_sv < worst.spanning_sv:
                        worst = p
        return worst


def _depth_list(sigma: SmoothSimplexMap, simplex_depths) -> list[int]:
    if simplex_depths is None:
        return list(range(sigma.dim + 1))
    return sorted(set(int(k) for k in simplex_depths))


def is_transverse_pair(
    sigma: SmoothSimplexMap,
    member: CornerManifold,
    tol_rank: float = 1e-6,
    simplex_depths=None,
    opts: LocusOptions = LocusOptions(),
) -> PairVerdict:
    """Spanning-test verdict over every located intersection point.

    Cell density escalates (x2, up to the cap) while any located point sits
    within a factor 10 of tol_rank: near-threshold verdicts are the ones a
    missed intersection could flip.
    """
    cells = opts.cells_per_dim
    while True:
        report = IntersectionReport(cells_used=cells)
        for k in _depth_list(sigma, simplex_depths):
            for ell in member.depths():
                report.extend(intersection_locus(sigma, k, member, ell, opts, cells))
        for p in report.points:
            _attach_spanning_sv(sigma, member, p)
        svs = [p.spanning_sv for p in report.points]
        min_sv = min(svs) if svs else math.inf
        near = any(tol_rank / 10 <= s < tol_rank * 10 for s in svs)
        if near and cells * 2 <= opts.max_cells_per_dim:
            cells *= 2
            continue
        ok = all(s >= tol_rank for s in svs)
        return PairVerdict(ok=ok, min_sv=min_sv, report=report,
                           member=member.name, tol_rank=tol_rank)


def is_T_transverse(
    sigma: SmoothSimplexMap,
    members: TCollection,
    tol_rank: float = 1e-6,
    simplex_depths=None,
    opts: LocusOptions = LocusOptions(),
) -> TransversalityResult:
    """Conjunction of pair verdicts over the whole collection.

    Depth k >= 1 strata of the simplex are exactly the open strata of its
    proper faces, so the default all-depths sweep is the stratumwise check
    for the simplex together with every face.
    """
    verdicts = {}
    ok = True
    for member in members:
        v = is_transverse_pair(sigma, member, tol_rank, simplex_depths, opts)
        verdicts[member.name] = v
        ok = ok and v.ok
    return TransversalityResult(ok=ok, verdicts=verdicts)


@dataclass
class PerturbationResult:
    sigma_prime: SmoothSimplexMap
    s: np.ndarray
    amplitude: float
    trials_used: int
    seed: int
    tol_rank: float
    min_sv: float


def _ball_sample(rng: np.random.Generator, dim: int) -> np.ndarray:
    direction = rng.normal(size=dim)
    norm = np.linalg.norm(direction)
    while norm < 1e-12:
        direction = rng.normal(size=dim)
        norm = np.linalg.norm(direction)
    radius = rng.random() ** (1.0 / dim)
    return direction / norm * radius


def perturb_to_transverse(
    sigma: SmoothSimplexMap,
    members: TCollection,
    seed: int,
    max_trials: int = 32,
    tol_rank: float = 1e-6,
    opts: LocusOptions = LocusOptions(),
    require_transverse_faces: bool = False,
) -> PerturbationResult:
    """Rel-boundary perturbation into T-transverse position.

    Adds rho(x) * amp * s with rho the product of all barycentric
    coordinates, s drawn from the open unit ball with the seeded generator,
    and amp chosen so the raw image keeps headroom inside the tube.  The
    candidate is accepted when its interior stratum is transverse to every
    member stratum; boundary strata are untouched by construction, so face
    transversality (the lemma hypothesis) is preserved verbatim.
    """
    if require_transverse_faces and sigma.dim > 0:
        for i in range(sigma.dim + 1):
            face = sigma.restrict(DeltaMorphism.face(i, sigma.dim))
            if not is_T_transverse(face, members, tol_rank, None, opts).ok:
                raise FacesNotTransverse(f"face {i} is not T-transverse")

    eps = sigma.ambient.epsilon()
    if sigma.project_flag:
        headroom = eps - sigma.max_raw_offset()
        amplitude = min(0.9 * headroom, 0.15 * eps)
        if amplitude <= 0:
            raise OutOfTube("no tube headroom left for a perturbation")
    else:
        amplitude = 0.15 * eps

    ambient_dim = sigma.ambient.ambient_dim
    per_trial_sv: list[float] = []
    for trial in range(max_trials):
        rng = np.random.default_rng([int(seed), trial])
        s = _ball_sample(rng, ambient_dim)
        candidate = sigma.with_bump(s, amplitude=amplitude)
        result = is_T_transverse(candidate, members, tol_rank, simplex_depths=(0,), opts=opts)
        per_trial_sv.append(result.min_sv)
        if result.ok:
            return PerturbationResult(
                sigma_prime=candidate,
                s=s,
                amplitude=amplitude,
                trials_used=trial + 1,
                seed=int(seed),
                tol_rank=tol_rank,
                min_sv=result.min_sv,
            )
    raise TrialsExhausted(
        f"no transverse perturbation in {max_trials} trials",
        diagnostics={
            "seed": int(seed),
            "tol_rank": tol_rank,
            "per_trial_min_sv": per_trial_sv,
        },
    )
