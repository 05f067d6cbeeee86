"""Fixed-point index of equilibria.

Three routes are provided:

* ``index_regular`` -- sign of the determinant of the indifference Jacobian
  (regular equilibria only);
* ``local_degree_oracle`` -- combinatorial Brouwer degree of the Nash-map
  displacement on a small sphere (at most three free coordinates);
* ``index_isolated`` / ``component_index`` -- degree by random bonus
  perturbation, summing regular indices of nearby perturbed equilibria.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .equilibria import (
    ComponentRecord,
    EnumerationOptions,
    EquilibriumRecord,
    enumerate_equilibria,
    indifference_system,
    is_equilibrium,
    is_quasi_strict,
    jacobian_condition,
)
from .errors import IndexDisagreement, NotApplicable, StructureError
from .game import Game, as_profile, bonus_apply, flatten, payoff_vector, profile_distance, support

COND_CUTOFF = 1e8
METHODS = ("indifference-jacobian", "local-degree-oracle", "perturbation-degree")


def _profile_of(eq):
    return eq.profile if isinstance(eq, EquilibriumRecord) else eq


# -- Jacobian route ---------------------------------------------------------------


def indifference_jacobian(game: Game, eq, require_quasi_strict: bool = True,
                          tol: float = 1e-9, threshold: float = 1e-9) -> np.ndarray:
    """Jacobian of the support-restricted indifference system at ``eq``.

    Rows and columns are ordered player by player; within a player, the
    support strategies except the last one (the reference strategy).

    Raises
    ------
    NotApplicable
        If ``require_quasi_strict`` and some unused strategy is a best reply.
    """
    prof = as_profile(game, _profile_of(eq))
    if require_quasi_strict and not is_quasi_strict(game, prof, tol, threshold):
        raise NotApplicable("equilibrium is not quasi-strict; use the perturbation degree")
    _, D = indifference_system(game, prof, support(prof, threshold))
    return D


def index_regular(game: Game, eq, cond_cutoff: float = COND_CUTOFF) -> int:
    """Index of a regular equilibrium: ``sign det(-D)``, +1 for the empty matrix.

    Raises
    ------
    NotApplicable
        If the equilibrium is not quasi-strict or the Jacobian is singular.
    """
    D = indifference_jacobian(game, eq)
    if D.size == 0:
        return 1
    if jacobian_condition(D) > cond_cutoff:
        raise NotApplicable("indifference Jacobian is singular; use the perturbation degree")
    sign, _ = np.linalg.slogdet(-D)
    return int(sign)


def is_regular(game: Game, eq, cond_cutoff: float = COND_CUTOFF) -> bool:
    try:
        index_regular(game, eq, cond_cutoff)
    except NotApplicable:
        return False
    return True


# -- Nash map and the degree oracle ---------------------------------------------------


def nash_map(game: Game, profile) -> tuple:
    """Nash's map ``f_{n,s} = (sigma_{n,s} + phi_{n,s}) / (1 + sum_t phi_{n,t})``."""
    prof = as_profile(game, profile)
    out = []
    for n in range(game.num_players):
        u = payoff_vector(game, prof, n)
        phi = np.maximum(0.0, u - u @ prof[n])
        out.append((prof[n] + phi) / (1.0 + phi.sum()))
    return tuple(out)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex along the last axis."""
    v = np.asarray(v, dtype=float)
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, v.shape[-1] + 1)
    rho = np.count_nonzero(u - css / k > 0, axis=-1)
    theta = np.take_along_axis(css, (rho - 1)[..., None], axis=-1) / rho[..., None]
    return np.maximum(v - theta, 0.0)


def _coords(profile) -> np.ndarray:
    return np.concatenate([np.asarray(v)[..., :-1] for v in profile], axis=-1)


def _from_coords(game: Game, y) -> tuple:
    out, i = [], 0
    for k in game.shape:
        head = y[..., i:i + k - 1]
        out.append(np.concatenate([head, 1.0 - head.sum(axis=-1, keepdims=True)], axis=-1))
        i += k - 1
    return tuple(out)


def _nash_map_batch(game: Game, prof) -> tuple:
    N = game.num_players
    letters = "abcdefghijklmnopqrstuvwxy"[:N]
    out = []
    for n in range(N):
        others = [j for j in range(N) if j != n]
        sub = letters + "," + ",".join("z" + letters[j] for j in others) + "->z" + letters[n]
        u = np.einsum(sub, game.payoffs[n], *[prof[j] for j in others])
        phi = np.maximum(0.0, u - np.einsum("zi,zi->z", u, prof[n])[:, None])
        out.append((prof[n] + phi) / (1.0 + phi.sum(axis=1, keepdims=True)))
    return tuple(out)


def displacement(game: Game, y) -> np.ndarray:
    """``d(y) = y - f(pi(sigma(y)))`` in reduced coordinates, defined on all of R^m.

    Accepts a single point of shape ``(m,)`` or a batch ``(B, m)``.
    """
    y = np.asarray(y, dtype=float)
    Y = np.atleast_2d(y)
    prof = tuple(project_simplex(v) for v in _from_coords(game, Y))
    d = Y - _coords(_nash_map_batch(game, prof))
    return d[0] if y.ndim == 1 else d


def _icosphere(level: int):
    t = (1.0 + 5 ** 0.5) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    V = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                p = V[a] + V[b]
                V.append(p / np.linalg.norm(p))
                cache[key] = len(V) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    V = np.array(V)
    F = np.array(faces)
    # orient outward
    n = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
    flip = np.einsum("ij,ij->i", n, V[F].mean(axis=1)) < 0
    F[flip] = F[flip][:, [0, 2, 1]]
    return V, F


def _unit(field_vals, scale):
    norms = np.linalg.norm(field_vals, axis=1)
    if np.any(norms <= 1e-13 * max(1.0, scale)):
        raise NotApplicable("displacement vanishes on the sphere; choose another radius")
    return field_vals / norms[:, None]


def _solid_angles(a, b, c):
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def _sphere_degree(fun, scale, threshold: float = 0.5, base_level: int = 2, max_evals: int = 200_000) -> int:
    """Degree of the batched map ``fun`` restricted to the unit 2-sphere.

    Triangles whose image arcs exceed ``threshold`` are split; hanging midpoints
    are kept in the neighbours' polygons so the image surface stays closed and
    the signed solid-angle sum is an exact multiple of 4 pi.
    """
    V, F = _icosphere(base_level)
    pts = list(V)
    img = list(_unit(fun(V), scale))
    split = {}
    leaves = []
    current = [tuple(f) for f in F]
    while current:
        T = np.array(current)
        U = np.array(img)
        cos = np.stack([np.einsum("ij,ij->i", U[T[:, i]], U[T[:, (i + 1) % 3]]) for i in range(3)], axis=1)
        need = np.arccos(np.clip(cos, -1.0, 1.0)).max(axis=1) > threshold
        leaves += [current[i] for i in np.nonzero(~need)[0]]
        todo = [current[i] for i in np.nonzero(need)[0]]
        if not todo:
            break
        fresh = []
        for a, b, c in todo:
            for i, j in ((a, b), (b, c), (c, a)):
                key = (min(i, j), max(i, j))
                if key not in split:
                    p = pts[key[0]] + pts[key[1]]
                    pts.append(p / np.linalg.norm(p))
                    split[key] = len(pts) - 1
                    fresh.append(pts[-1])
        if len(pts) > max_evals:
            raise NotApplicable("degree oracle exceeded its evaluation budget")
        img += list(_unit(fun(np.array(fresh)), scale))
        current = []
        for a, b, c in todo:
            ab, bc, ca = (split[(min(i, j), max(i, j))] for i, j in ((a, b), (b, c), (c, a)))
            current += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]

    def expand(i, j):
        key = (min(i, j), max(i, j))
        if key in split:
            k = split[key]
            return expand(i, k) + expand(k, j)[1:]
        return [i, j]

    fans = []
    for a, b, c in leaves:
        poly = expand(a, b) + expand(b, c)[1:] + expand(c, a)[1:-1]
        fans += [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]
    fans = np.array(fans)
    U = np.array(img)
    total = _solid_angles(U[fans[:, 0]], U[fans[:, 1]], U[fans[:, 2]]).sum()
    deg = total / (4 * np.pi)
    if abs(deg - round(deg)) > 1e-3:
        raise NotApplicable(f"solid-angle sum is not integral ({deg:.4f})")
    return int(round(deg))


def _circle_degree(fun, scale, threshold: float = np.pi / 4, base: int = 256, max_evals: int = 400_000) -> int:
    """Winding number of the batched map ``fun(t)`` on ``[0, 2 pi)``.

    Arcs whose image turns by ``threshold`` or more are bisected, so a
    displacement that nearly vanishes somewhere on the circle is resolved
    locally instead of by refining the whole circle.
    """
    t = np.linspace(0.0, 2 * np.pi, base, endpoint=False)
    ang = np.arctan2(*_unit(fun(t), scale)[:, ::-1].T)
    while True:
        nxt = np.roll(ang, -1)
        inc = (nxt - ang + np.pi) % (2 * np.pi) - np.pi
        bad = np.abs(inc) >= threshold
        if not bad.any():
            return int(round(inc.sum() / (2 * np.pi)))
        if t.size > max_evals:
            raise NotApplicable("winding number did not settle")
        gap = np.diff(np.r_[t, 2 * np.pi])
        if gap[bad].min() < 1e-13:
            raise NotApplicable("winding number did not settle")
        mid = t[bad] + gap[bad] / 2
        ang_mid = np.arctan2(*_unit(fun(mid), scale)[:, ::-1].T)
        order = np.argsort(np.r_[t, mid], kind="stable")
        t = np.r_[t, mid][order]
        ang = np.r_[ang, ang_mid][order]


def local_degree_oracle(game: Game, eq, radius: float = 0.05, max_evals: int = 400_000) -> int:
    """Brouwer degree of the Nash-map displacement on a sphere around ``eq``.

    Computed combinatorially: sign change for one free coordinate, winding
    number for two, and the sum of signed solid angles over an icosphere for
    three (adaptively subdivided where the image turns quickly).  Requires
    ``m = sum_n (|S_n| - 1) <= 3``.

    Raises
    ------
    NotApplicable
        If ``m > 3`` or the displacement vanishes on the sphere.
    """
    prof = as_profile(game, _profile_of(eq))
    y0 = _coords(prof)
    m = y0.size
    scale = max(1.0, float(np.abs(game.payoffs).max()))
    if m == 0:
        return 1
    if m == 1:
        fa, fb = displacement(game, np.array([[y0[0] - radius], [y0[0] + radius]]))[:, 0]
        if abs(fa) <= 1e-13 or abs(fb) <= 1e-13:
            raise NotApplicable("displacement vanishes on the sphere; choose another radius")
        return int(round((np.sign(fb) - np.sign(fa)) / 2))
    if m == 2:
        return _circle_degree(lambda t: displacement(game, y0 + radius * np.stack([np.cos(t), np.sin(t)], axis=1)),
                              scale, max_evals=max_evals)
    if m == 3:
        return _sphere_degree(lambda V: displacement(game, y0 + radius * V), scale, max_evals=max_evals)
    raise NotApplicable(f"degree oracle supports at most 3 free coordinates, got {m}")


def oracle_radius(profile, others, default: float = 0.05) -> float:
    """Largest admissible oracle radius: ``min(default, 0.3 * distance to nearest other)``."""
    dists = [profile_distance(profile, o) for o in others]
    dists = [x for x in dists if x > 0]
    return min(default, 0.3 * min(dists)) if dists else default


# -- perturbation degree ------------------------------------------------------------------


@dataclass
class _Region:
    members: list
    radius: float

    def contains(self, profile) -> bool:
        return min(profile_distance(m, profile) for m in self.members) <= self.radius


def _region_radii(member_sets, cap: float = 0.25) -> list:
    radii = []
    for i, mi in enumerate(member_sets):
        gap = math.inf
        for j, mj in enumerate(member_sets):
            if i == j:
                continue
            gap = min(gap, min(profile_distance(a, b) for a in mi for b in mj))
        radii.append(min(cap, 0.5 * gap))
    return radii


def perturbation_degrees(game: Game, member_sets, delta: float = 1e-4, trials: int = 3,
                         seed: int = 0, radii=None, halvings: int = 3,
                         opts: Optional[EnumerationOptions] = None, require_total: bool = True):
    """Degree of each neighbourhood under random bonus perturbations.

    Parameters
    ----------
    member_sets : list of lists of profiles
        One entry per region (an isolated equilibrium or a sampled component).
    delta : float
        Bonus magnitude relative to the payoff range.
    require_total : bool
        When ``member_sets`` covers every equilibrium, also require each
        perturbed game to have all its equilibria inside the regions and
        total degree +1.

    Returns
    -------
    degrees : list of int
    used_delta : float

    Raises
    ------
    IndexDisagreement
        If trials still disagree after ``halvings`` halvings of ``delta``.
    """
    opts = replace(opts or EnumerationOptions(), sample_components=False, supports=None)
    if radii is None:
        radii = _region_radii(member_sets)
    regions = [_Region(list(m), r) for m, r in zip(member_sets, radii)]
    rng_range = game.payoff_range or 1.0
    d = delta
    last = None
    for attempt in range(halvings + 1):
        results = []
        for trial in range(trials):
            res = _one_trial(game, regions, d * rng_range, opts,
                             np.random.default_rng([seed, attempt, trial]), require_total)
            results.append(res)
        if all(r is not None for r in results) and all(r == results[0] for r in results):
            return list(results[0]), d
        last = results
        d /= 2
    raise IndexDisagreement(f"perturbation trials disagree: {last}")


def _one_trial(game, regions, magnitude, opts, rng, require_total, redraws: int = 4):
    for _ in range(redraws):
        h = [rng.uniform(-1.0, 1.0, size=k) * magnitude for k in game.shape]
        pg = bonus_apply(game, h)
        recs = enumerate_equilibria(pg, opts)
        if any(r.singular or not r.is_quasi_strict for r in recs):
            continue  # non-generic draw; redraw
        sums = [0] * len(regions)
        outside = 0
        total = 0
        for r in recs:
            idx = index_regular(pg, r)
            total += idx
            hit = [i for i, reg in enumerate(regions) if reg.contains(r.profile)]
            if len(hit) > 1:
                return None
            if hit:
                sums[hit[0]] += idx
            else:
                outside += 1
        if require_total and (outside or total != 1):
            return None
        return tuple(sums)
    return None


def index_isolated(game: Game, eq, delta: float = 1e-4, trials: int = 3, seed: int = 0,
                   records=None, opts: Optional[EnumerationOptions] = None) -> int:
    """Perturbation degree of an isolated equilibrium.

    The isolation neighbourhood is half the distance to the nearest other
    equilibrium (capped at 0.25); ``records`` defaults to a fresh enumeration.
    """
    prof = as_profile(game, _profile_of(eq))
    if records is None:
        records = enumerate_equilibria(game, opts)
    comps = getattr(records, "components", None)
    if comps:
        sets = [c.members for c in comps]
        hit = [i for i, c in enumerate(comps) if c.distance_to(prof) <= 1e-7]
        if not hit:
            sets.append([prof])
            hit = [len(sets) - 1]
        elif not comps[hit[0]].is_singleton:
            raise NotApplicable("equilibrium lies in a non-trivial component; use component_index")
        degs, _ = perturbation_degrees(game, sets, delta, trials, seed, opts=opts)
        return degs[hit[0]]
    others = [r.profile for r in records if profile_distance(r.profile, prof) > 1e-7]
    sets = [[prof]] + [[o] for o in others]
    degs, _ = perturbation_degrees(game, sets, delta, trials, seed, opts=opts)
    return degs[0]


def component_index(game: Game, comp: ComponentRecord, delta: float = 1e-4, seed: int = 0,
                    components=None, trials: int = 3, opts: Optional[EnumerationOptions] = None) -> int:
    """Degree of a component: sum of perturbed regular indices in its neighbourhood.

    ``components`` lists every component of the game (default: recomputed),
    so that neighbourhoods can be kept disjoint.
    """
    if components is None:
        components = enumerate_equilibria(game, opts).components
    if comp.is_singleton and comp.records and is_regular(game, comp.records[0]):
        return index_regular(game, comp.records[0])
    sets = [c.members for c in components]
    pos = [i for i, c in enumerate(components) if c is comp]
    if not pos:
        pos = [i for i, c in enumerate(components) if c.distance_to(comp.members[0]) <= 1e-7]
    if not pos:
        sets.append(comp.members)
        pos = [len(sets) - 1]
    degs, _ = perturbation_degrees(game, sets, delta, trials, seed, opts=opts)
    return degs[pos[0]]


# -- classification -------------------------------------------------------------------


@dataclass(eq=False)
class IndexReport:
    equilibrium: EquilibriumRecord
    index: int
    method: str
    is_regular: bool
    is_sustainable: bool

    def to_dict(self, game: Optional[Game] = None) -> dict:
        return {
            "equilibrium": self.equilibrium.to_dict(game),
            "index": int(self.index),
            "method": self.method,
            "is_regular": bool(self.is_regular),
            "is_sustainable": bool(self.is_sustainable),
        }


@dataclass
class SolutionSet:
    phi_star: list
    phi_plus: list

    def to_dict(self) -> dict:
        return {
            "phi_star": [[[float(x) for x in v] for v in r.profile] for r in self.phi_star],
            "phi_plus": [c.to_dict() for c in self.phi_plus],
        }


@dataclass
class Classification:
    records: list
    reports: list
    components: list
    solutions: SolutionSet
    delta_used: Optional[float] = None

    def to_dict(self, game: Optional[Game] = None) -> dict:
        return {
            "equilibria": [r.to_dict(game) for r in self.reports],
            "components": [c.to_dict() for c in self.components],
            "solutions": self.solutions.to_dict(),
            "delta_used": self.delta_used,
        }


def classify(game: Game, opts: Optional[EnumerationOptions] = None, delta: float = 1e-4,
             trials: int = 3, seed: Optional[int] = None) -> Classification:
    """Enumerate, index and classify every equilibrium of ``game``.

    Regular isolated equilibria are indexed by the Jacobian sign; all other
    components get a joint perturbation degree.  Phi* collects the isolated
    equilibria of index +1, Phi+ the components of positive index.
    """
    opts = opts or EnumerationOptions()
    seed = opts.seed if seed is None else seed
    records = enumerate_equilibria(game, opts)
    comps = records.components
    regular = []
    for c in comps:
        r = c.records[0] if c.is_singleton and c.records else None
        regular.append(r is not None and is_regular(game, r))
    for c, reg in zip(comps, regular):
        if reg:
            c.index = index_regular(game, c.records[0])
    used = None
    if not all(regular):
        degs, used = perturbation_degrees(game, [c.members for c in comps], delta, trials, seed, opts=opts)
        for c, reg, dg in zip(comps, regular, degs):
            if not reg:
                c.index = dg
    reports = []
    for rec in records:
        comp = next(c for c in comps if any(r is rec for r in c.records))
        reg = comp.is_singleton and is_regular(game, rec)
        method = "indifference-jacobian" if reg else "perturbation-degree"
        reports.append(IndexReport(
            equilibrium=rec,
            index=int(comp.index),
            method=method,
            is_regular=reg,
            is_sustainable=bool(rec.is_isolated and comp.index == 1),
        ))
    sol = SolutionSet(
        phi_star=[r.equilibrium for r in reports if r.is_sustainable],
        phi_plus=[c for c in comps if c.index is not None and c.index > 0],
    )
    return Classification(list(records), reports, comps, sol, used)
