"""Lifted Delaunay triangulations, refinement near a face, and convex PL witnesses.

The Delaunay triangulation of a point set is read off the lower convex hull
of the points lifted to the paraboloid ``(p, |p|^2)``; the lift restricted
to that hull is a convex piecewise-linear function that is linear exactly on
the simplices.  All computations use the Euclidean norm.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import null_space
from scipy.spatial import ConvexHull, QhullError

from .errors import StructureError, VerificationFailed

CIRCUMBALL_MARGIN = 1e-10
HINGE_MARGIN = 1e-12


@dataclass
class Triangulation:
    """Simplicial subdivision of a polytope in ``R^d`` (``d <= 3``)."""

    vertices: np.ndarray
    simplices: np.ndarray
    jitter_rounds: int = 0

    @property
    def dimension(self) -> int:
        return int(self.vertices.shape[1])

    def volumes(self) -> np.ndarray:
        P = self.vertices[self.simplices]
        E = P[:, 1:, :] - P[:, :1, :]
        return np.abs(np.linalg.det(E)) / math.factorial(self.dimension)

    def diameters(self) -> np.ndarray:
        P = self.vertices[self.simplices]
        return np.array([max(np.linalg.norm(a - b) for a, b in itertools.combinations(S, 2)) for S in P])

    def faces(self) -> list:
        """All nonempty faces (vertex tuples, sorted) of all simplices."""
        out = set()
        for S in self.simplices:
            for k in range(1, len(S) + 1):
                out.update(tuple(sorted(int(i) for i in c)) for c in itertools.combinations(S, k))
        return sorted(out, key=lambda f: (len(f), f))

    def to_dict(self, witness: Optional["ConvexPLWitness"] = None) -> dict:
        d = {
            "dimension": self.dimension,
            "vertices": self.vertices.tolist(),
            "simplices": self.simplices.tolist(),
            "jitter_rounds": self.jitter_rounds,
        }
        if witness is not None:
            d["witness"] = witness.values.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict):
        tri = cls(np.asarray(d["vertices"], dtype=float), np.asarray(d["simplices"], dtype=int),
                  int(d.get("jitter_rounds", 0)))
        wit = ConvexPLWitness(np.asarray(d["witness"], dtype=float)) if "witness" in d else None
        return tri, wit


@dataclass
class ConvexPLWitness:
    """Per-vertex values of a convex function, interpolated linearly on simplices."""

    values: np.ndarray


# -- geometry helpers ---------------------------------------------------------------


def _circumsphere(P: np.ndarray):
    """Center and radius of the sphere through the ``d+1`` rows of ``P``."""
    A = 2.0 * (P[1:] - P[0])
    b = (P[1:] ** 2).sum(axis=1) - (P[0] ** 2).sum()
    c = np.linalg.lstsq(A, b, rcond=None)[0]
    return c, float(np.linalg.norm(P[0] - c))


def _hull_planes(points: np.ndarray, tol: float = 1e-12):
    """Unique facet hyperplanes ``(normal, offset)`` with ``n.x + off <= 0`` inside."""
    hull = ConvexHull(points)
    planes = []
    for eq in hull.equations:
        if not any(np.allclose(eq, q, atol=1e-10) for q in planes):
            planes.append(eq)
    return np.array(planes)


# -- Delaunay by lifting ------------------------------------------------------------


def _lower_hull(points: np.ndarray):
    d = points.shape[1]
    if len(points) == d + 1:
        simplices = np.arange(d + 1)[None, :]
    else:
        lifted = np.hstack([points, (points ** 2).sum(axis=1, keepdims=True)])
        try:
            hull = ConvexHull(lifted)
        except QhullError:
            # every point on one sphere: the lift is flat; any triangulation is Delaunay
            hull = ConvexHull(lifted, qhull_options="QJ")
        keep = hull.equations[:, d] < -1e-12
        simplices = hull.simplices[keep]
    # orient consistently (positive volume)
    out = []
    scale = np.ptp(points, axis=0).max() ** d
    for S in simplices:
        P = points[S]
        det = np.linalg.det(P[1:] - P[0])
        if abs(det) <= 1e-13 * scale:
            continue  # flat piece of a merged cospherical facet
        if det < 0:
            S = S[[1, 0] + list(range(2, d + 1))]
        out.append(S)
    return np.array(out, dtype=int)


def circumball_margins(tri: Triangulation) -> np.ndarray:
    """For each simplex, ``min |p - c| - R`` over vertices ``p`` not in the simplex."""
    V = tri.vertices
    out = np.empty(len(tri.simplices))
    for k, S in enumerate(tri.simplices):
        c, R = _circumsphere(V[S])
        mask = np.ones(len(V), dtype=bool)
        mask[S] = False
        out[k] = (np.linalg.norm(V[mask] - c, axis=1) - R).min() if mask.any() else np.inf
    return out


def _constrained_jitter(points, planes, scale, rng):
    """Random displacement of each point within the intersection of the hyperplanes it lies on."""
    out = points.copy()
    for i, p in enumerate(points):
        active = [pl for pl in planes if abs(pl[:-1] @ p + pl[-1]) <= 1e-12 * max(1.0, np.abs(p).max())]
        if active:
            basis = null_space(np.array([pl[:-1] for pl in active]))
        else:
            basis = np.eye(points.shape[1])
        if basis.size == 0:
            continue
        out[i] = p + basis @ rng.normal(scale=scale, size=basis.shape[1])
    return out


def delaunay_lift(points, seed: int = 0, jitter: float = 1e-7, max_rounds: int = 5,
                  constraints=None, margin: float = CIRCUMBALL_MARGIN):
    """Delaunay triangulation and its convex PL witness via the lifted lower hull.

    Parameters
    ----------
    points : array_like, shape (k, d)
        ``d`` in {1, 2, 3}; the convex hull must be full-dimensional.
    seed : int
        Seed of the jitter used when the points are (nearly) cospherical.
    jitter : float
        Jitter magnitude.  Points are only moved within the hull facets (and
        any extra ``constraints`` hyperplanes ``(normal, offset)``) they lie
        on, so the hull and every designated face are preserved.
    constraints : array_like, optional
        Additional hyperplanes ``n.x + off = 0`` to respect.

    Returns
    -------
    Triangulation, ConvexPLWitness
        The witness holds ``|p|^2`` at every vertex.

    Notes
    -----
    Degeneracy (an empty-circumball margin at or below ``margin``) triggers
    jitter-and-retry; the number of jitter rounds used is recorded.  If the
    degeneracy involves only points that cannot move (e.g. the four corners
    of a square), the last triangulation is returned with its margins
    available through :func:`circumball_margins`.
    """
    pts = np.array(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (1, 2, 3):
        raise StructureError("points must be an array of shape (k, d) with d <= 3")
    d = pts.shape[1]
    if d == 1:
        order = np.argsort(pts[:, 0])
        simp = np.array([[order[i], order[i + 1]] for i in range(len(pts) - 1)], dtype=int)
        tri = Triangulation(pts, simp)
        return tri, ConvexPLWitness((pts ** 2).sum(axis=1))
    try:
        planes = _hull_planes(pts)
    except QhullError as exc:
        raise StructureError(f"points do not span R^{d}: {exc}") from None
    if constraints is not None:
        planes = np.vstack([planes, np.atleast_2d(constraints)])
    rng = np.random.default_rng(seed)
    cur = pts
    for rounds in range(max_rounds + 1):
        tri = Triangulation(cur, _lower_hull(cur), rounds)
        if circumball_margins(tri).min() > margin:
            break
        cur = _constrained_jitter(pts, planes, jitter * (2 ** rounds), rng)
    return tri, ConvexPLWitness((tri.vertices ** 2).sum(axis=1))


# -- verification oracles -----------------------------------------------------------------


def _interior_facets(tri: Triangulation):
    """Pairs ``(s1, s2, shared, opp1, opp2)`` of simplices meeting in a common facet."""
    seen = {}
    out = []
    for k, S in enumerate(tri.simplices):
        for j in range(len(S)):
            face = tuple(sorted(int(v) for i, v in enumerate(S) if i != j))
            if face in seen:
                k0, opp0 = seen.pop(face)
                out.append((k0, k, face, opp0, int(S[j])))
            else:
                seen[face] = (k, int(S[j]))
    return out


def hinge_folds(tri: Triangulation, witness: ConvexPLWitness) -> np.ndarray:
    """Fold across each interior facet: value at the far vertex minus the affine extension.

    Positive everywhere means the PL function is strictly convex across every
    hinge (linear precisely on the simplices).
    """
    V, w = tri.vertices, witness.values
    folds = []
    for k0, k1, face, o0, o1 in _interior_facets(tri):
        S = list(face) + [o0]
        A = np.hstack([V[S], np.ones((len(S), 1))])
        coef = np.linalg.solve(A, w[S])
        folds.append(w[o1] - np.append(V[o1], 1.0) @ coef)
    return np.array(folds)


def linearity_residuals(tri: Triangulation, witness: ConvexPLWitness, samples: int = 4, seed: int = 0) -> np.ndarray:
    """Max deviation, per simplex, of :func:`pl_eval` from the simplex's affine interpolant."""
    rng = np.random.default_rng(seed)
    V, w = tri.vertices, witness.values
    out = np.zeros(len(tri.simplices))
    for k, S in enumerate(tri.simplices):
        lam = rng.dirichlet(np.ones(len(S)), size=samples)
        for l in lam:
            x = l @ V[S]
            out[k] = max(out[k], abs(pl_eval(witness, tri, x) - l @ w[S]))
    return out


def volume_defect(tri: Triangulation) -> float:
    """``|sum of simplex volumes - hull volume|``."""
    return abs(float(tri.volumes().sum()) - ConvexHull(tri.vertices).volume)


def pl_eval(witness: ConvexPLWitness, tri: Triangulation, x, tol: float = 1e-9) -> float:
    """Evaluate the PL interpolant at ``x`` by barycentric coordinates in its simplex.

    Raises
    ------
    StructureError
        If ``x`` lies outside the triangulated polytope.
    """
    x = np.asarray(x, dtype=float)
    P = tri.vertices[tri.simplices]  # (n, d+1, d)
    T = np.transpose(P[:, 1:] - P[:, :1], (0, 2, 1))
    lam = np.linalg.solve(T, (x - P[:, 0])[..., None])[..., 0]
    lam = np.concatenate([1.0 - lam.sum(axis=1, keepdims=True), lam], axis=1)
    worst = lam.min(axis=1)
    k = int(np.argmax(worst))
    if worst[k] >= -tol:
        return float(lam[k] @ witness.values[tri.simplices[k]])
    raise StructureError("point lies outside the triangulated polytope")


# -- refinement near a face ------------------------------------------------------------------


@dataclass
class Refinement:
    """Refined triangulation together with the data that define ``B``."""

    triangulation: Triangulation
    witness: ConvexPLWitness
    a: np.ndarray
    b: float
    delta: float
    plain: bool = False
    net_points: int = 0

    def in_B(self, tol: float = 1e-9) -> np.ndarray:
        return self.triangulation.vertices @ self.a <= self.b + tol

    def to_dict(self) -> dict:
        d = self.triangulation.to_dict(self.witness)
        d.update({"halfspace": {"a": self.a.tolist(), "b": float(self.b)}, "delta": self.delta,
                  "plain": self.plain})
        return d


def _faces_of(points: np.ndarray, tol: float = 1e-9):
    """Faces of the polytope ``conv(points)`` as (vertex-index set, affine dimension)."""
    d = points.shape[1]
    hull = ConvexHull(points)
    verts = list(hull.vertices)
    planes = []
    for eq in hull.equations:
        if not any(np.allclose(eq, q, atol=1e-10) for q in planes):
            planes.append(eq)
    on = [frozenset(v for v in verts if abs(pl[:-1] @ points[v] + pl[-1]) <= tol) for pl in planes]
    faces = {frozenset(verts): d}
    frontier = set(on)
    level = d - 1
    while frontier and level >= 0:
        for f in frontier:
            faces[f] = level
        nxt = set()
        for f, g in itertools.combinations(frontier, 2):
            h = f & g
            if h and h not in faces:
                nxt.add(h)
        # keep only maximal intersections
        frontier = {h for h in nxt if not any(h < k for k in nxt)}
        level -= 1
    for v in verts:
        faces[frozenset([v])] = 0
    return faces


def _face_net(P: np.ndarray, k: int, h: float, rng) -> list:
    """Points in the relative interior of ``conv(P)`` (affine dim ``k``) on a grid of spacing ``h``."""
    if k == 0:
        return []
    c0 = P.mean(axis=0)
    basis = np.linalg.svd(P - c0)[2][:k]  # orthonormal rows spanning the face
    Q = (P - c0) @ basis.T
    lo, hi = Q.min(axis=0), Q.max(axis=0)
    axes = []
    for i in range(k):
        n = max(1, int(math.ceil((hi[i] - lo[i]) / h)))
        step = (hi[i] - lo[i]) / n
        axes.append(lo[i] + step * np.arange(n + 1))
    grid = np.array(list(itertools.product(*axes)))
    grid = grid + rng.uniform(-0.01, 0.01, size=grid.shape) * h
    if k == 1:
        inside = (grid[:, 0] > lo[0] + 1e-9) & (grid[:, 0] < hi[0] - 1e-9)
    else:
        hull = ConvexHull(Q)
        inside = np.all(grid @ hull.equations[:, :-1].T + hull.equations[:, -1] < -1e-9, axis=1)
    return [c0 + q @ basis for q in grid[inside]]


def refine_near_face(C_vertices, face, a, b, delta: float, seed: int = 0, spacing: float = 0.99):
    """Delaunay triangulation of ``C`` refined inside ``B = C & {a.x <= b}``.

    Parameters
    ----------
    C_vertices : array_like, shape (k, d)
        Vertices of the polytope ``C``.
    face : sequence of int or None
        Indices (into ``C_vertices``) of the face ``B0``.  ``None`` means
        ``B = C`` (the halfspace is ignored).
    a, b : halfspace ``a.x <= b`` containing ``B0`` in its interior; its
        boundary ``H`` must strictly separate ``B0`` from the other vertices.
    delta : float
        Target diameter for simplices with all vertices in ``B``.
    spacing : float
        Net spacing in units of ``delta/2``.

    Returns
    -------
    Refinement

    Raises
    ------
    StructureError
        If ``H`` does not separate, or ``delta/2`` exceeds the distance from
        ``B`` to the vertices of ``C`` outside ``B``.
    VerificationFailed
        If the diameter or separation property fails on the result.
    """
    X = np.array(C_vertices, dtype=float)
    d = X.shape[1]
    rng = np.random.default_rng(seed)
    if face is None:
        a = np.zeros(d)
        b = 1.0
        if max(np.linalg.norm(p - q) for p, q in itertools.combinations(X, 2)) <= delta:
            tri, wit = delaunay_lift(X, seed=seed)
            return Refinement(tri, wit, a, b, delta, plain=True)
        Bpts = X
    else:
        a = np.asarray(a, dtype=float)
        b = float(b)
        face = list(face)
        vals = X @ a - b
        others = [i for i in range(len(X)) if i not in face]
        if not (np.all(vals[face] < 0) and np.all(vals[others] > 0)):
            raise StructureError("the hyperplane must strictly separate the face from the other vertices")
        # vertices of B: C-vertices inside plus edge/hyperplane crossings
        cand = [X[i] for i in face]
        for i in face:
            for j in others:
                t = vals[i] / (vals[i] - vals[j])
                cand.append(X[i] + t * (X[j] - X[i]))
        hullB = ConvexHull(np.array(cand))
        Bpts = np.array(cand)[hullB.vertices]
        gap = min(_dist_to_polytope(X[j], Bpts) for j in others)
        if delta / 2 > gap:
            raise StructureError(f"delta/2 = {delta / 2:g} exceeds the distance {gap:g} from B to the vertices outside it")
    h = spacing * delta / 2
    norm_a = np.linalg.norm(a) if np.any(a) else 1.0
    new = []
    for fset, k in _faces_of(Bpts).items():
        P = Bpts[sorted(fset)]
        on_H = face is not None and np.all(np.abs(P @ a - b) <= 1e-9)
        for z in _face_net(P, k, h, rng):
            if not on_H and face is not None and (b - z @ a) / norm_a < delta / 2:
                continue
            new.append(z)
    pts = [p for p in X] + [p for p in Bpts if not any(np.allclose(p, x) for x in X)] + new
    pts = np.array(pts)
    cons = None if face is None else np.append(a, -b)[None, :]
    tri, wit = delaunay_lift(pts, seed=seed, constraints=cons)
    ref = Refinement(tri, wit, a, b, delta, plain=False, net_points=len(new))
    ok_i, ok_ii = check_refinement(ref)
    if not (ok_i and ok_ii):
        raise VerificationFailed(f"refinement properties failed: diameter={ok_i}, separation={ok_ii}")
    return ref


def _dist_to_polytope(p, V) -> float:
    """Euclidean distance from ``p`` to ``conv(V)`` by a small quadratic program."""
    from scipy.optimize import minimize

    k = len(V)
    res = minimize(lambda w: float(np.sum((w @ V - p) ** 2)), np.full(k, 1.0 / k),
                   jac=lambda w: 2 * V @ (w @ V - p), bounds=[(0, 1)] * k,
                   constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1.0}], method="SLSQP",
                   options={"ftol": 1e-14, "maxiter": 500})
    return float(np.sqrt(max(res.fun, 0.0)))


def check_refinement(ref: Refinement, tol: float = 1e-9):
    """Property (i): simplices inside ``B`` have diameter at most ``delta``.
    Property (ii): a simplex with a vertex outside ``B`` misses ``{a.x < b}``.

    Both are checked exhaustively over all simplices.
    """
    tri = ref.triangulation
    V = tri.vertices
    s = V @ ref.a - ref.b  # <= 0 in B
    diam = tri.diameters()
    ok_i, ok_ii = True, True
    for S, dm in zip(tri.simplices, diam):
        vals = s[S]
        if np.all(vals <= tol):
            ok_i &= bool(dm <= ref.delta + tol)
        else:
            ok_ii &= bool(np.all(vals >= -tol))
    return ok_i, ok_ii


# -- the running example's square --------------------------------------------------------------


@dataclass
class SquareTriangulation:
    """Triangulation of the square ``[0,1]^2`` of points ``(x, theta)``.

    ``rho`` is the convex PL witness pulled back through the affine map and
    shifted so that it vanishes on the edge ``theta = 0``.
    """

    points: np.ndarray
    simplices: np.ndarray
    rho: np.ndarray
    image: Refinement
    zeta: float
    theta_h: float
    M: float

    @property
    def num_vertices(self) -> int:
        return len(self.points)

    def faces(self) -> list:
        return Triangulation(self.points, self.simplices).faces()

    def on_top(self, tol: float = 1e-9) -> np.ndarray:
        return np.abs(self.points[:, 1] - 1.0) <= tol

    def to_dict(self) -> dict:
        return {
            "vertices": self.points.tolist(),
            "simplices": self.simplices.tolist(),
            "rho": self.rho.tolist(),
            "zeta": self.zeta,
            "theta_h": self.theta_h,
            "image": self.image.to_dict(),
        }


def square_map(direction=(1.05, 0.93)):
    """Affine map ``F(x, theta) = e2 + x (e1 - e2) + theta * direction`` and its linear part."""
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    A = np.column_stack([e1 - e2, np.asarray(direction, dtype=float)])
    return A, e2


def running_example_triangulation(zeta: float = 0.15, theta_h: float = 0.88, seed: int = 0,
                                  direction=(1.05, 0.93)) -> SquareTriangulation:
    """Triangulate the square for the final game of the running example.

    The square is mapped affinely so the edge ``theta = 0`` becomes the
    segment between the unit vectors ``e1`` and ``e2`` and every other vertex
    has norm above one.  The image is refined near the face ``theta = 1``
    with image spacing ``0.99 zeta / M``, where ``M`` bounds the sup-norm
    distortion of the inverse map; the witness is ``|F|^2 - 1``.

    Raises
    ------
    VerificationFailed
        If the vertex or diameter conditions fail.
    """
    A, o = square_map(direction)
    Ainv = np.linalg.inv(A)
    M = float(np.linalg.norm(Ainv, axis=1).max())
    corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
    C = corners @ A.T + o
    # B = {theta >= theta_h}: theta(y) = Ainv[1] (y - o)
    a = -Ainv[1]
    b = -theta_h - Ainv[1] @ o
    delta = 0.99 * zeta / M
    ref = refine_near_face(C, [2, 3], a, b, delta, seed=seed)
    V = ref.triangulation.vertices
    sq = (V - o) @ Ainv.T
    sq[np.abs(sq) < 1e-12] = 0.0
    sq[np.abs(sq - 1) < 1e-12] = 1.0
    rho = ref.witness.values - 1.0
    out = SquareTriangulation(sq, ref.triangulation.simplices.copy(), rho, ref, zeta, theta_h, M)
    problems = check_square(out)
    if problems:
        raise VerificationFailed("; ".join(problems))
    return out


def check_square(sq: SquareTriangulation, tol: float = 1e-9) -> list:
    """List of violated conditions (empty when all hold)."""
    problems = []
    P = sq.points
    bottom = np.abs(P[:, 1]) <= tol
    got = sorted(map(tuple, np.round(P[bottom], 9)))
    if got != [(0.0, 0.0), (1.0, 0.0)]:
        problems.append(f"vertices on theta = 0 are {got}")
    if np.any(np.abs(sq.rho[bottom]) > 1e-12):
        problems.append("witness does not vanish on theta = 0")
    if np.any(sq.rho[~bottom] <= 0):
        problems.append("witness is not positive off theta = 0")
    top = sq.on_top(tol)
    for S in sq.simplices:
        if top[S].any():
            Q = P[S]
            dm = max(np.abs(p - q).max() for p, q in itertools.combinations(Q, 2))
            if dm >= sq.zeta:
                problems.append(f"simplex {S.tolist()} touching theta = 1 has diameter {dm:.4f}")
    return problems
