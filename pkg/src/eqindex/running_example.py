"""The symmetric 2x2 coordination game carried through the whole construction.

A symmetric profile is one number ``x`` (probability of L).  The steps are:
Nash map ``f`` and its modification ``f0``; the bonus ``g`` that leaves
``x = 1`` as the only symmetric equilibrium of ``G + g(x)``; the isolating
function ``gamma`` on the added coordinate ``theta``; and a finite game whose
pure strategies are the vertices of a triangulation of the square of
``(x, theta)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq, linprog

from .equilibria import EnumerationOptions, enumerate_equilibria
from .errors import StructureError
from .game import Game, bimatrix
from .triangulation import SquareTriangulation, check_square, running_example_triangulation

EPS_STAR = 1.0 / 8.0


# -- one-dimensional maps ---------------------------------------------------------------


def _upper(x):
    return (x - 2 * x**2 + 3 * x - 1) / (1 - 2 * x**2 + 3 * x - 1)


def f_sym(x: float) -> float:
    """Nash map of the coordination game restricted to symmetric profiles."""
    if x <= 0.5:
        return x / (1 - 2 * x**2 + x)
    return _upper(x)


def f0_sym(x: float) -> float:
    """Modified map whose only fixed point is ``x = 1``."""
    return 7.0 / 8.0 if x <= 2.0 / 3.0 else _upper(x)


def v(x: float) -> float:
    """Best payoff in the unperturbed game against ``x``."""
    return 1.0 - x if x <= 0.5 else x


def beta3(x: float) -> float:
    if x <= 2.0 / 3.0:
        return 1.0
    if x < 0.75:
        return -12.0 * x + 9.0
    return 0.0


def g_sym(x: float, delta: float):
    """Bonus pair ``(g_L, g_R)`` against a symmetric opponent playing ``x``."""
    return beta3(x) * (v(x) - x + delta), 0.0


def gamma_sym(theta: float, x: float) -> float:
    """Isolating payoff of the added coordinate: ``theta * (1 - 8x/7)``."""
    return theta * (1.0 - 8.0 * x / 7.0)


def fixed_points(fun, grid: int = 10_001, tol: float = 1e-12) -> list:
    """Fixed points of ``fun`` on [0, 1]: exact grid zeros plus bisection on sign changes."""
    xs = np.linspace(0.0, 1.0, grid)
    d = np.array([x - fun(x) for x in xs])
    out = [float(x) for x, dx in zip(xs, d) if abs(dx) <= tol]
    for i in range(grid - 1):
        if d[i] * d[i + 1] < 0 and abs(d[i]) > tol and abs(d[i + 1]) > tol:
            out.append(float(brentq(lambda t: t - fun(t), xs[i], xs[i + 1], xtol=1e-15)))
    return sorted(out)


def fixed_point_index_1d(fun, x: float, h: float = 1e-4) -> int:
    """Index of a fixed point of a self-map of [0, 1] from the sign change of ``x - f(x)``.

    At an endpoint, the map is extended constantly outside the interval.
    """
    lo = x - h if x - h >= 0 else None
    hi = x + h if x + h <= 1 else None
    dl = -1.0 if lo is None else np.sign(lo - fun(lo))
    dh = 1.0 if hi is None else np.sign(hi - fun(hi))
    return int(round((dh - dl) / 2))


# -- perturbed game -----------------------------------------------------------------------


def _perturbed_gain(x: float, delta: float, bonus: bool = True) -> float:
    """Payoff of L minus payoff of R in ``G + g(x)`` against ``x``."""
    gl = g_sym(x, delta)[0] if bonus else 0.0
    return x + gl - (1.0 - x)


def _gain_lipschitz(delta: float) -> float:
    # slopes: 2 from the game, and |dg_L/dx| <= max(2, 12 delta) piecewise
    return 2.0 + max(2.0, 12.0 * delta)


def verify_perturbed_unique(delta: float, step: float = 1e-4, bonus: bool = True) -> bool:
    """Certify that ``x = 1`` is the only symmetric equilibrium of ``G + g(x)``.

    The gain ``D(x) = u_L + g_L - u_R`` is Lipschitz with a known constant,
    so a grid minimum exceeding ``L * step / 2`` certifies ``D > 0`` on all
    of [0, 1]: no interior point is indifferent, ``x = 0`` is not a best
    reply to itself, and ``x = 1`` is.  The per-piece lower bounds of the
    case analysis are checked as well.
    """
    if bonus and not (0 < delta <= 0.25):
        raise StructureError("delta must lie in (0, 1/4]")
    xs = np.arange(0.0, 1.0 + step / 2, step)
    D = np.array([_perturbed_gain(x, delta, bonus) for x in xs])
    L = _gain_lipschitz(delta) if bonus else 2.0
    grid_ok = D.min() > L * step / 2
    if not bonus:
        return bool(grid_ok)
    # case analysis: analytic lower bound of D on each piece of g
    pieces = [(0.0, 0.5, delta), (0.5, 2.0 / 3.0, delta), (2.0 / 3.0, 0.75, 1.0 / 3.0), (0.75, 1.0, 0.5)]
    cases_ok = True
    for lo, hi, bound in pieces:
        sel = (xs >= lo) & (xs <= hi)
        cases_ok &= bool(D[sel].min() >= bound - 1e-12)
    return bool(grid_ok and cases_ok and D[-1] >= 0)


# -- final game on the triangulated square ----------------------------------------------------


@dataclass
class FinalGame:
    game: Game
    triangulation: SquareTriangulation
    designated: int
    delta: float
    bonus_delta: float
    with_gamma: bool = True

    @property
    def designated_profile(self):
        return self.game.pure_profile((self.designated, self.designated))

    def admissible_supports(self) -> list:
        return [list(f) for f in self.triangulation.faces()]


def final_payoffs(tri: SquareTriangulation, delta: float, bonus_delta: float, with_gamma: bool = True) -> np.ndarray:
    """Player 1's payoff matrix ``A[v, w]`` for own vertex ``v`` against vertex ``w``.

    ``xy + (1-x)(1-y) + xi(w) g_L(y) x + gamma(theta, y) - delta rho(v)`` with
    ``xi(w) = 1`` iff ``w`` lies on ``theta = 1``.
    """
    P = tri.points
    top = tri.on_top()
    n = len(P)
    A = np.empty((n, n))
    for i, (x, th) in enumerate(P):
        for j, (y, _) in enumerate(P):
            val = x * y + (1 - x) * (1 - y)
            if top[j]:
                val += g_sym(y, bonus_delta)[0] * x
            if with_gamma:
                val += gamma_sym(th, y)
            val -= delta * tri.rho[i]
            A[i, j] = val
    return A


def build_final_game(delta: float = 1e-3, tri: Optional[SquareTriangulation] = None,
                     bonus_delta: float = 0.1, with_gamma: bool = True, **tri_opts) -> FinalGame:
    """Symmetric two-player game on the vertices of a triangulated square.

    ``delta`` weights the convex witness ``rho``; ``bonus_delta`` is the
    constant inside the bonus ``g``.

    Raises
    ------
    StructureError
        If the triangulation violates the vertex conditions.
    """
    if tri is None:
        tri = running_example_triangulation(**tri_opts)
    problems = check_square(tri)
    if problems:
        raise StructureError("triangulation rejected: " + "; ".join(problems))
    A = final_payoffs(tri, delta, bonus_delta, with_gamma)
    labels = [f"v{i}({x:.3f},{t:.3f})" for i, (x, t) in enumerate(tri.points)]
    g = bimatrix(A, A.T, labels, labels, name="running-example-final")
    designated = int(np.nonzero((np.abs(tri.points[:, 0] - 1) < 1e-12) & (np.abs(tri.points[:, 1]) < 1e-12))[0][0])
    return FinalGame(g, tri, designated, delta, bonus_delta, with_gamma)


def admissible_equilibria(fg: FinalGame, opts: Optional[EnumerationOptions] = None):
    """Equilibria whose supports are vertex sets of simplices, for both players."""
    faces = fg.admissible_supports()
    supports = [(list(a), list(b)) for a in faces for b in faces]
    opts = opts or EnumerationOptions(sample_components=False)
    opts = replace(opts, supports=supports, sample_components=False)
    return enumerate_equilibria(fg.game, opts)


def verify_final_unique(fg: FinalGame, opts: Optional[EnumerationOptions] = None) -> bool:
    """True iff the only admissible equilibrium is the designated vertex profile."""
    recs = admissible_equilibria(fg, opts)
    if len(recs) != 1:
        return False
    prof = recs[0].profile
    d = fg.designated
    return bool(prof[0][d] > 1 - 1e-9 and prof[1][d] > 1 - 1e-9)


def symmetric_admissible_equilibria(fg: FinalGame, tol: float = 1e-9) -> list:
    """Symmetric equilibria ``(p, p)`` with ``p`` supported in a simplex.

    For each simplex face, a linear feasibility problem decides whether some
    ``p`` on it equalises the payoffs of the face and weakly beats the
    rest; feasible sets are explored coordinatewise, so a non-point set is
    reported by its extreme coordinates.

    Returns
    -------
    list of (face, lower, upper)
        Coordinatewise ranges of ``p`` over the feasible set of each face.
    """
    A = fg.game.payoffs[0]
    n = A.shape[0]
    out = []
    for face in fg.admissible_supports():
        k = len(face)
        rest = [i for i in range(n) if i not in face]
        # variables: p_face (k), v
        A_eq = np.zeros((k + 1, k + 1))
        A_eq[:k, :k] = A[np.ix_(face, face)]
        A_eq[:k, k] = -1.0
        A_eq[k, :k] = 1.0
        b_eq = np.zeros(k + 1)
        b_eq[k] = 1.0
        A_ub = np.hstack([A[np.ix_(rest, face)], -np.ones((len(rest), 1))]) if rest else None
        b_ub = np.full(len(rest), tol) if rest else None
        bounds = [(0, 1)] * k + [(None, None)]
        lo, hi = np.zeros(k), np.zeros(k)
        feasible = True
        for i in range(k):
            for sense, store in ((1.0, lo), (-1.0, hi)):
                c = np.zeros(k + 1)
                c[i] = sense
                res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
                if res.status != 0:
                    feasible = False
                    break
                store[i] = res.x[i]
            if not feasible:
                break
        if feasible and np.all(hi > tol):
            out.append((tuple(face), lo, hi))
    return out


def verify_symmetric_unique_delta0(tri: Optional[SquareTriangulation] = None, bonus_delta: float = 0.1) -> bool:
    """With ``delta = 0``: the only symmetric admissible equilibrium is the designated vertex.

    Faces whose feasible set only contains points supported on a smaller
    face are ignored (that smaller face is scanned on its own).
    """
    fg = build_final_game(0.0, tri=tri, bonus_delta=bonus_delta)
    hits = symmetric_admissible_equilibria(fg)
    if not hits:
        return False
    for face, lo, hi in hits:
        if face == (fg.designated,):
            continue
        return False
    return True


def ablation_without_gamma(delta: float = 1e-3, tri: Optional[SquareTriangulation] = None,
                           bonus_delta: float = 0.1) -> bool:
    """``verify_final_unique`` on the game built without ``gamma`` (expected false)."""
    return verify_final_unique(build_final_game(delta, tri=tri, bonus_delta=bonus_delta, with_gamma=False))


# -- trace ------------------------------------------------------------------------------------


def trace(delta: float = 1e-3, bonus_delta: float = 0.1, seed: int = 0) -> dict:
    """Every step of the running example as plain data."""
    fps = fixed_points(f_sym)
    tri = running_example_triangulation(seed=seed)
    fg = build_final_game(delta, tri=tri, bonus_delta=bonus_delta)
    recs = admissible_equilibria(fg)
    unique = len(recs) == 1 and recs[0].profile[0][fg.designated] > 1 - 1e-9 and recs[0].profile[1][fg.designated] > 1 - 1e-9
    return {
        "f_fixed_points": [round(x, 12) for x in fps],
        "f_indices": [fixed_point_index_1d(f_sym, x) for x in fps],
        "f0_fixed_points": [round(x, 12) for x in fixed_points(f0_sym)],
        "perturbed_unique": verify_perturbed_unique(bonus_delta),
        "triangulation": {"vertices": tri.num_vertices, "simplices": int(len(tri.simplices))},
        "final_game": {
            "delta": delta,
            "bonus_delta": bonus_delta,
            "strategies": fg.game.shape[0],
            "designated": [float(c) for c in tri.points[fg.designated]],
            "equilibria": [
                {"support": [[fg.game.labels[n][i] for i in s] for n, s in enumerate(r.support)],
                 "profile": [[round(float(p), 12) for p in v] for v in r.profile]}
                for r in recs
            ],
        },
        "delta0_symmetric_unique": verify_symmetric_unique_delta0(tri, bonus_delta),
        "unique": bool(unique),
    }
