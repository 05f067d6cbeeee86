"""Best replies, equilibrium checks, support enumeration and component sampling."""
from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import BudgetExceeded, StructureError
from .game import Game, as_profile, flatten, payoff_vector, profile_distance, support, unflatten


@dataclass
class EnumerationOptions:
    """Tuning knobs for :func:`enumerate_equilibria`.

    Attributes
    ----------
    tol : float
        Payoff tolerance of the final equilibrium test.
    support_threshold : float
        A strategy is in the support if its probability exceeds this.
    dedup_radius : float
        Records closer than this (l-infinity) are merged.
    cond_cutoff : float
        Jacobian condition number above which a support is treated as singular.
    newton_starts : int
        Random interior starts per support (three or more players).
    newton_iters : int
    newton_tol : float
        Residual target, scaled by the largest absolute payoff.
    seed : int
    max_support : int
        Budget on the number of support profiles.
    supports : list, optional
        Explicit support profiles to examine instead of all of them.
    sample_components : bool
        Run component sampling from singular seeds.
    component_step : float
    component_budget : int
    """

    tol: float = 1e-9
    support_threshold: float = 1e-9
    dedup_radius: float = 1e-7
    cond_cutoff: float = 1e8
    newton_starts: int = 8
    newton_iters: int = 50
    newton_tol: float = 1e-12
    seed: int = 0
    max_support: int = 10**6
    supports: Optional[list] = None
    sample_components: bool = True
    component_step: float = 0.05
    component_budget: int = 2000


@dataclass(eq=False)
class EquilibriumRecord:
    profile: tuple
    support: tuple
    max_residual: float
    is_isolated: bool
    is_quasi_strict: bool
    jacobian_condition: float
    singular: bool = False

    @property
    def dimension(self) -> int:
        return sum(len(v) - 1 for v in self.profile)

    def to_dict(self, game: Optional[Game] = None) -> dict:
        d = {
            "profile": [[float(x) for x in v] for v in self.profile],
            "support": [list(s) for s in self.support],
            "max_residual": float(self.max_residual),
            "is_isolated": bool(self.is_isolated),
            "is_quasi_strict": bool(self.is_quasi_strict),
            "jacobian_condition": _json_float(self.jacobian_condition),
            "singular": bool(self.singular),
        }
        if game is not None:
            d["support_labels"] = [[game.labels[n][i] for i in s] for n, s in enumerate(self.support)]
        return d


@dataclass(eq=False)
class ComponentRecord:
    members: list
    bounding_radius: float
    index: Optional[int] = None
    records: list = field(default_factory=list)
    partial: bool = False

    @property
    def is_singleton(self) -> bool:
        return len(self.members) <= 1

    def distance_to(self, profile) -> float:
        return min(profile_distance(m, profile) for m in self.members)

    def to_dict(self) -> dict:
        return {
            "num_members": len(self.members),
            "bounding_radius": float(self.bounding_radius),
            "index": self.index,
            "partial": bool(self.partial),
            "representative": [[float(x) for x in v] for v in self.members[0]],
        }


class Enumeration(list):
    """List of :class:`EquilibriumRecord` with the sampled components attached."""

    def __init__(self, records=(), components=None):
        super().__init__(records)
        self.components = components if components is not None else []


def _json_float(x):
    x = float(x)
    return x if math.isfinite(x) else None


# -- best replies --------------------------------------------------------------


def best_reply_value_and_set(game: Game, player: int, opponents, tol: float = 1e-9):
    """Best-reply value ``v_n`` and all pure strategies within ``tol`` of it."""
    u = payoff_vector(game, opponents, player)
    v = float(u.max())
    return v, tuple(int(i) for i in np.flatnonzero(u >= v - tol))


def equilibrium_residual(game: Game, profile) -> float:
    """Largest gap between best-reply value and the payoff of a support strategy.

    Equal to ``max_n (v_n - G_n(sigma))`` weighted by support: we use the
    worst support strategy, which upper-bounds the expected-payoff gap.
    """
    worst = 0.0
    for n in range(game.num_players):
        u = payoff_vector(game, profile, n)
        supp = np.asarray(profile[n]) > 0
        worst = max(worst, float(u.max() - u[supp].min()))
    return worst


def is_equilibrium(game: Game, profile, tol: float = 1e-9):
    """Return ``(ok, max_residual)``; ``ok`` iff every used strategy is a best reply within ``tol``."""
    prof = as_profile(game, profile)
    res = equilibrium_residual(game, prof)
    return res <= tol, res


def is_quasi_strict(game: Game, profile, tol: float = 1e-9, threshold: float = 1e-9) -> bool:
    for n in range(game.num_players):
        _, br = best_reply_value_and_set(game, n, profile, tol)
        if any(profile[n][s] <= threshold for s in br):
            return False
    return True


# -- the indifference system on a support ----------------------------------------------


def _einsum_pair(num_players: int, n: int, m: int, batched: bool) -> str:
    letters = string.ascii_lowercase[:num_players]
    ops = [letters]
    for l in range(num_players):
        if l not in (n, m):
            ops.append(("z" if batched else "") + letters[l])
    out = ("z" if batched else "") + letters[n] + letters[m]
    return ",".join(ops) + "->" + out


def _pair_tensors(payoffs: np.ndarray, vecs, batched: bool = False) -> dict:
    """``P[n, m][..., s, t] = G_n(s, t, sigma_rest)`` for all ordered pairs ``n != m``."""
    N = payoffs.shape[0]
    out = {}
    for n in range(N):
        for m in range(N):
            if m == n:
                continue
            sub = _einsum_pair(N, n, m, batched)
            others = [vecs[l] for l in range(N) if l not in (n, m)]
            if batched and not others:
                bsz = vecs[0].shape[0]
                t = payoffs[n] if n < m else payoffs[n].T
                out[n, m] = np.broadcast_to(t, (bsz,) + t.shape)
            else:
                out[n, m] = np.einsum(sub, payoffs[n], *others)
    return out


def support_system(sub_payoffs: np.ndarray, vecs, batched: bool = False):
    """Indifference residuals and their Jacobian on a support.

    Parameters
    ----------
    sub_payoffs : ndarray
        Payoff tensor restricted to the support, shape ``(N, k_1, ..., k_N)``.
    vecs : sequence of ndarray
        Mixed strategies on the support, each of length ``k_n`` (or
        ``(B, k_n)`` when ``batched``).  The last entry of each is the
        reference strategy.

    Returns
    -------
    E : ndarray, shape ``(m,)`` or ``(B, m)``
        ``G_n(s, sigma_-n) - G_n(r_n, sigma_-n)`` for ``s`` in the support minus ``r_n``.
    D : ndarray, shape ``(m, m)`` or ``(B, m, m)``
        Derivative of ``E`` with respect to the non-reference probabilities.
    """
    N = sub_payoffs.shape[0]
    ks = sub_payoffs.shape[1:]
    m_tot = sum(k - 1 for k in ks)
    offs = np.concatenate([[0], np.cumsum([k - 1 for k in ks])]).astype(int)
    lead = (vecs[0].shape[0],) if batched else ()
    E = np.zeros(lead + (m_tot,))
    D = np.zeros(lead + (m_tot, m_tot))
    if m_tot == 0:
        return E, D
    if N == 1:
        raise StructureError("need at least two players")
    P = _pair_tensors(sub_payoffs, vecs, batched)
    for n in range(N):
        if ks[n] == 1:
            continue
        m0 = (n + 1) % N
        # payoff of each own support strategy
        U = np.einsum("...st,...t->...s", P[n, m0], vecs[m0])
        E[..., offs[n]:offs[n + 1]] = U[..., :-1] - U[..., -1:]
        for m in range(N):
            if m == n or ks[m] == 1:
                continue
            Pn = P[n, m]
            blk = Pn[..., :-1, :-1] - Pn[..., :-1, -1:] - Pn[..., -1:, :-1] + Pn[..., -1:, -1:]
            D[..., offs[n]:offs[n + 1], offs[m]:offs[m + 1]] = blk
    return E, D


def _vecs_from_coords(x, ks, batched=False):
    vecs, i = [], 0
    for k in ks:
        head = x[..., i:i + k - 1]
        last = 1.0 - head.sum(axis=-1, keepdims=True)
        vecs.append(np.concatenate([head, last], axis=-1))
        i += k - 1
    return vecs


def _coords_from_vecs(vecs):
    return np.concatenate([np.asarray(v)[..., :-1] for v in vecs], axis=-1)


def indifference_system(game: Game, profile, supports):
    """Residuals and Jacobian of the indifference system at ``profile`` on ``supports``.

    The reference strategy of each player is the last element of its support.
    """
    supports = [tuple(sorted(int(s) for s in T)) for T in supports]
    sub = game.payoffs[np.ix_(range(game.num_players), *supports)]
    vecs = [np.asarray(profile[n], dtype=float)[list(T)] for n, T in enumerate(supports)]
    return support_system(sub, vecs)


def jacobian_condition(D: np.ndarray) -> float:
    if D.size == 0:
        return 1.0
    s = np.linalg.svd(D, compute_uv=False)
    if s[-1] <= 0 or not np.isfinite(s[-1]):
        return math.inf
    return float(s[0] / s[-1])


# -- enumeration ------------------------------------------------------------------


def _all_supports(k: int):
    for size in range(1, k + 1):
        for c in itertools.combinations(range(k), size):
            yield c


def support_count(game: Game) -> int:
    return int(np.prod([2**k - 1 for k in game.shape], dtype=object))


def _embed(game: Game, supports, sub_vecs):
    out = []
    for n, T in enumerate(supports):
        v = np.zeros(game.shape[n])
        v[list(T)] = sub_vecs[n]
        out.append(v)
    return tuple(out)


def _make_record(game, prof, supports, opts, singular_hint=False):
    ok, res = is_equilibrium(game, prof, opts.tol)
    if not ok:
        return None
    supp = support(prof, opts.support_threshold)
    if tuple(map(tuple, supports)) != supp:
        return None
    _, D = indifference_system(game, prof, supp)
    cond = jacobian_condition(D)
    singular = singular_hint or cond > opts.cond_cutoff
    return EquilibriumRecord(
        profile=prof,
        support=supp,
        max_residual=res,
        is_isolated=not singular,
        is_quasi_strict=is_quasi_strict(game, prof, opts.tol, opts.support_threshold),
        jacobian_condition=cond,
        singular=singular,
    )


def _lp_side(M_eq_rows, M_ineq_rows, tol):
    """Max-min probability point of ``{q >= 0, sum q = 1, rows_eq q = v, rows_ineq q <= v}``.

    Variables are ``(q, v, eps)``; maximise ``eps`` subject to ``q >= eps``.
    Returns ``(eps, q)`` or ``(None, None)`` when infeasible.
    """
    k = M_eq_rows.shape[1]
    nvar = k + 2
    c = np.zeros(nvar)
    c[-1] = -1.0
    A_eq = [np.concatenate([np.ones(k), [0.0, 0.0]])]
    b_eq = [1.0]
    for row in M_eq_rows:
        A_eq.append(np.concatenate([row, [-1.0, 0.0]]))
        b_eq.append(0.0)
    A_ub, b_ub = [], []
    for row in M_ineq_rows:
        A_ub.append(np.concatenate([row, [-1.0, 0.0]]))
        b_ub.append(tol)
    for j in range(k):
        r = np.zeros(nvar)
        r[j] = -1.0
        r[-1] = 1.0
        A_ub.append(r)
        b_ub.append(0.0)
    bounds = [(0, None)] * k + [(None, None), (None, 1.0)]
    res = linprog(
        c,
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq),
        b_eq=np.array(b_eq),
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        return None, None
    return float(-res.fun), res.x[:k]


def _square_side(Msub, scale):
    """Solve ``Msub q = v 1, sum q = 1`` when square; ``None`` if singular."""
    k = Msub.shape[1]
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = Msub
    A[:k, k] = -1.0
    A[k, :k] = 1.0
    b = np.zeros(k + 1)
    b[k] = 1.0
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= s[0] * 1e-12 or s[-1] <= 1e-14 * scale:
        return None
    return np.linalg.solve(A, b)[:k]


def _consistent(Msub, scale, tol=1e-9):
    """Whether ``Msub q = v 1, sum q = 1`` has a solution (least-squares residual check)."""
    r, k = Msub.shape
    A = np.zeros((r + 1, k + 1))
    A[:r, :k] = Msub
    A[:r, k] = -1.0
    A[r, :k] = 1.0
    b = np.zeros(r + 1)
    b[r] = 1.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return np.max(np.abs(A @ sol - b)) <= tol * max(1.0, scale)


def _two_player_support(game, I, J, opts, scale):
    A, B = game.payoffs[0], game.payoffs[1]
    thr = opts.support_threshold
    AIJ = A[np.ix_(I, J)]
    BIJ = B[np.ix_(I, J)]
    if len(I) == len(J):
        p = _square_side(BIJ.T, scale)
        if p is not None:
            if np.any(p <= thr):
                return None
            q = _square_side(AIJ, scale)
            if q is not None:
                if np.any(q <= thr):
                    return None
                prof = _embed(game, (I, J), (p, q))
                return _make_record(game, prof, (I, J), opts)
    # overdetermined side first: cheap rejection
    if len(I) > len(J) and not _consistent(AIJ, scale):
        return None
    if len(J) > len(I) and not _consistent(BIJ.T, scale):
        return None
    restI = [i for i in range(A.shape[0]) if i not in I]
    restJ = [j for j in range(A.shape[1]) if j not in J]
    tol_lp = 1e-10 * max(1.0, scale)
    eps_p, p = _lp_side(BIJ.T, B[np.ix_(I, restJ)].T if restJ else np.zeros((0, len(I))), tol_lp)
    if eps_p is None or eps_p <= thr:
        return None
    eps_q, q = _lp_side(AIJ, A[np.ix_(restI, J)] if restI else np.zeros((0, len(J))), tol_lp)
    if eps_q is None or eps_q <= thr:
        return None
    prof = _embed(game, (I, J), (p / p.sum(), q / q.sum()))
    singular = not _side_unique(AIJ) or not _side_unique(BIJ.T)
    return _make_record(game, prof, (I, J), opts, singular_hint=singular)


def _side_unique(Msub) -> bool:
    r, k = Msub.shape
    A = np.zeros((r + 1, k + 1))
    A[:r, :k] = Msub
    A[:r, k] = -1.0
    A[r, :k] = 1.0
    return np.linalg.matrix_rank(A, tol=1e-10 * max(1.0, np.abs(A).max())) == k + 1


def _newton_support(game, supports, opts, rng, scale):
    ks = [len(T) for T in supports]
    sub = game.payoffs[np.ix_(range(game.num_players), *supports)]
    m = sum(k - 1 for k in ks)
    if m == 0:
        prof = _embed(game, supports, [np.ones(1) for _ in ks])
        rec = _make_record(game, prof, supports, opts)
        return [rec] if rec else []
    B = opts.newton_starts
    x = _coords_from_vecs([rng.dirichlet(np.ones(k), size=B) for k in ks])
    target = opts.newton_tol * scale
    active = np.ones(B, dtype=bool)
    done = np.zeros(B, dtype=bool)
    for _ in range(opts.newton_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa = x[idx]
        E, D = support_system(sub, _vecs_from_coords(xa, ks, True), batched=True)
        err = np.max(np.abs(E), axis=1)
        conv = err <= target
        done[idx[conv]] = True
        active[idx[conv]] = False
        idx, E, D, xa = idx[~conv], E[~conv], D[~conv], xa[~conv]
        if idx.size == 0:
            break
        step = -np.einsum("bij,bj->bi", np.linalg.pinv(D), E)
        norm = np.max(np.abs(step), axis=1, keepdims=True)
        step = step * np.minimum(1.0, 1.0 / np.maximum(norm, 1e-300))
        xn = xa + step
        bad = ~np.all(np.isfinite(xn), axis=1) | (np.max(np.abs(xn), axis=1) > 10.0)
        active[idx[bad]] = False
        x[idx[~bad]] = xn[~bad]
    # polish: a genuine root stays put under further full Newton steps, while
    # iterates creeping toward a degenerate root on a smaller support keep moving
    idx = np.flatnonzero(done)
    if idx.size:
        moved = np.zeros(idx.size)
        xp = x[idx]
        for _ in range(8):
            E, D = support_system(sub, _vecs_from_coords(xp, ks, True), batched=True)
            step = -np.einsum("bij,bj->bi", np.linalg.pinv(D), E)
            xp = xp + step
            moved += np.max(np.abs(step), axis=1)
        keep = moved <= 1e-8
        x[idx] = xp
        done[idx[~keep]] = False
    out = []
    for b in np.flatnonzero(done):
        vecs = _vecs_from_coords(x[b], ks)
        if any(np.any(v <= opts.support_threshold) for v in vecs):
            continue
        prof = _embed(game, supports, vecs)
        rec = _make_record(game, prof, supports, opts)
        if rec is None:
            continue
        if any(profile_distance(rec.profile, r.profile) <= opts.dedup_radius for r in out):
            continue
        out.append(rec)
    return out


def _support_dominated(game, supports, tol) -> bool:
    """Whether some support strategy is strictly beaten by a pure strategy on every
    pure opponent profile drawn from the other supports (so it is never a best reply).
    """
    if all(len(T) == 1 for T in supports) and game.num_players == 2:
        return False
    for n, T in enumerate(supports):
        if game.shape[n] == 1:
            continue
        idx = [list(supports[m]) if m != n else list(range(game.shape[n])) for m in range(game.num_players)]
        sub = np.moveaxis(game.payoffs[n][np.ix_(*idx)], n, 0).reshape(game.shape[n], -1)
        for s in T:
            # strictly dominated by a single pure strategy
            gap = sub - sub[s]
            if np.any(np.all(gap > tol, axis=1)):
                return True
    return False


def _dedup(records, radius):
    kept = []
    for r in records:
        if any(profile_distance(r.profile, k.profile) <= radius for k in kept):
            continue
        kept.append(r)
    return kept


def _sort_key(rec):
    return (tuple(len(s) for s in rec.support), rec.support, tuple(-flatten(rec.profile)))


def enumerate_equilibria(game: Game, opts: Optional[EnumerationOptions] = None, **kw) -> Enumeration:
    """All equilibria of a small game by support enumeration.

    Two-player supports are decided by linear algebra (with an LP fallback
    for singular or non-square supports); for three or more players each
    support's indifference system is solved by damped multistart Newton.
    Singular supports are handed to :func:`sample_component`.

    Raises
    ------
    BudgetExceeded
        If more than ``opts.max_support`` support profiles would be examined;
        ``.partial`` holds the records found within the budget.
    """
    opts = replace(opts or EnumerationOptions(), **kw)
    if opts.supports is not None:
        support_iter = [tuple(tuple(sorted(int(s) for s in T)) for T in sp) for sp in opts.supports]
        total = len(support_iter)
    else:
        support_iter = itertools.product(*(_all_supports(k) for k in game.shape))
        total = support_count(game)
    scale = max(1.0, float(np.abs(game.payoffs).max()))
    records = []
    over = False
    for count, supports in enumerate(support_iter):
        if count >= opts.max_support:
            over = True
            break
        if _support_dominated(game, supports, opts.tol):
            continue
        if game.num_players == 2:
            rec = _two_player_support(game, list(supports[0]), list(supports[1]), opts, scale)
            found = [rec] if rec else []
        else:
            rng = np.random.default_rng([opts.seed, count])
            found = _newton_support(game, supports, opts, rng, scale)
            # one representative suffices for a singular support; the
            # component sampler explores the rest
            sing = [r for r in found if r.singular]
            found = [r for r in found if not r.singular] + sing[:1]
        records.extend(found)
    records = _dedup(records, opts.dedup_radius)
    records.sort(key=_sort_key)
    components = []
    if opts.sample_components:
        components = equilibrium_components(game, records, opts)
    result = Enumeration(records, components)
    if over:
        raise BudgetExceeded(
            f"support budget {opts.max_support} exceeded ({total} support profiles)", partial=result
        )
    return result


# -- components -----------------------------------------------------------------------


def _correct(game, prof, supports, iters=30, tol=1e-13):
    """Gauss-Newton projection of ``prof`` onto the indifference set of ``supports``."""
    supports = [tuple(T) for T in supports]
    ks = [len(T) for T in supports]
    sub = game.payoffs[np.ix_(range(game.num_players), *supports)]
    vecs = [np.asarray(prof[n])[list(T)] for n, T in enumerate(supports)]
    vecs = [v / v.sum() for v in vecs]
    x = _coords_from_vecs(vecs)
    scale = max(1.0, float(np.abs(game.payoffs).max()))
    for _ in range(iters):
        E, D = support_system(sub, _vecs_from_coords(x, ks))
        if E.size == 0 or np.max(np.abs(E)) <= tol * scale:
            break
        x = x - np.linalg.pinv(D, rcond=1e-10) @ E
    return _embed(game, supports, _vecs_from_coords(x, ks))


def _tangent_basis(game, base):
    """Null space of the indifference Jacobian on the current best-reply sets."""
    cand = []
    for n in range(game.num_players):
        _, br = best_reply_value_and_set(game, n, base, 1e-7)
        cand.append(tuple(sorted(set(br) | set(np.flatnonzero(base[n] > 1e-12).tolist()))))
    _, D = indifference_system(game, base, cand)
    if D.size == 0:
        return cand, np.zeros((0, 0))
    _, s, vt = np.linalg.svd(D)
    rank = int(np.sum(s >= 1e-8 * max(1.0, s.max())))
    return cand, vt[rank:]


def _move(game, base, cand, d):
    x = _coords_from_vecs([base[n][list(T)] for n, T in enumerate(cand)]) + d
    vecs = _vecs_from_coords(x, [len(T) for T in cand])
    new = []
    for n, (T, v) in enumerate(zip(cand, vecs)):
        w = np.zeros(game.shape[n])
        w[list(T)] = np.clip(v, 0.0, None)
        if w.sum() <= 0:
            w[list(T)] = 1.0
        new.append(w / w.sum())
    new = _correct(game, tuple(new), support(tuple(new), 1e-12))
    if any(np.any(v < -1e-12) for v in new):
        return None
    return tuple(np.clip(v, 0, None) / np.clip(v, 0, None).sum() for v in new)


def sample_component(game: Game, seed, step: float = 0.05, budget: int = 2000,
                     tol: float = 1e-8, rng_seed: int = 0, max_members: int = 500,
                     tries: int = 8) -> ComponentRecord:
    """Flood-fill sample of the equilibrium set around ``seed``.

    From each member, moves of length ``step`` tangent to the indifference set
    of its best replies are projected back by Gauss-Newton.  A move is kept
    when the result passes :func:`is_equilibrium` and lies at least
    ``0.45 * step`` from every member found so far.

    Returns
    -------
    ComponentRecord
        ``partial`` is set when the budget ran out with unexplored members.
    """
    prof = as_profile(game, seed)
    ok, res = is_equilibrium(game, prof, tol)
    if not ok:
        raise StructureError(f"seed is not an equilibrium (residual {res:.3g})")
    rng = np.random.default_rng(rng_seed)
    members = [prof]
    frontier = [0]
    attempts = 0
    while frontier and attempts < budget and len(members) < max_members:
        base = members[frontier.pop(0)]
        cand, null = _tangent_basis(game, base)
        if null.shape[0] == 0:
            continue
        dirs = [sgn * v for v in null for sgn in (1.0, -1.0)]
        dirs += [rng.standard_normal(null.shape[0]) @ null for _ in range(max(0, tries - len(dirs)))]
        for d in dirs:
            attempts += 1
            d = d * (step / max(np.max(np.abs(d)), 1e-300))
            new = _move(game, base, cand, d)
            if new is None or not is_equilibrium(game, new, tol)[0]:
                continue
            if min(profile_distance(new, mm) for mm in members) < 0.45 * step:
                continue
            members.append(new)
            frontier.append(len(members) - 1)
    flat = np.array([flatten(mm) for mm in members])
    centre = flat.mean(axis=0)
    radius = float(np.max(np.abs(flat - centre))) if len(members) > 1 else 0.0
    return ComponentRecord(members=members, bounding_radius=radius, partial=bool(frontier))


def equilibrium_components(game: Game, records, opts: Optional[EnumerationOptions] = None):
    """Group records into components.

    Singular records seed :func:`sample_component`; records lying within the
    clustering radius (twice the sampling step) of a sampled cloud join that
    cloud.  Every other record is its own singleton component.  Records that
    join a cloud with more than one member are marked non-isolated.
    """
    opts = opts or EnumerationOptions()
    radius = 2 * opts.component_step
    clouds = []
    for k, rec in enumerate(records):
        if not rec.singular:
            continue
        if any(c.distance_to(rec.profile) <= radius for c in clouds):
            continue
        comp = sample_component(game, rec.profile, step=opts.component_step,
                                budget=opts.component_budget, tol=max(opts.tol, 1e-8),
                                rng_seed=opts.seed + k)
        if comp.is_singleton:
            continue
        # merge with clouds it touches
        for c in list(clouds):
            if min(comp.distance_to(m) for m in c.members) <= radius:
                comp = ComponentRecord(c.members + comp.members, 0.0, partial=c.partial or comp.partial)
                clouds.remove(c)
        clouds.append(comp)
    components = []
    for c in clouds:
        flat = np.array([flatten(m) for m in c.members])
        c.bounding_radius = float(np.max(np.abs(flat - flat.mean(axis=0))))
        components.append(c)
    for rec in records:
        home = None
        for c in components:
            if c.distance_to(rec.profile) <= radius:
                home = c
                break
        if home is None:
            components.append(ComponentRecord(members=[rec.profile], bounding_radius=0.0, records=[rec]))
        else:
            home.records.append(rec)
            rec.is_isolated = False
    return components
