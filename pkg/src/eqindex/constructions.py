"""Constructive embeddings and the bundled example corpus.

The strict-dominator embedding adds one strategy ``x_n`` per player so that
a strict pure equilibrium becomes the unique equilibrium of the larger game,
certified both by iterated strict dominance and by exhaustive enumeration.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .equilibria import EnumerationOptions, enumerate_equilibria
from .errors import NotApplicable, StructureError
from .game import (
    Game,
    GameEquilibriumPair,
    add_strategies,
    as_profile,
    delete_strategies,
    pairs_equivalent,
    profile_distance,
)

# the running-example 2x2 game is stored as "coordination"
ALIASES = {"running-example": "coordination", "running-example-2x2": "coordination"}


def corpus_names() -> list:
    root = resources.files("eqindex") / "corpus"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_corpus_game(name: str) -> Game:
    name = ALIASES.get(name, name)
    path = resources.files("eqindex") / "corpus" / f"{name}.json"
    if not path.is_file():
        raise StructureError(f"no corpus game named {name!r}; known: {', '.join(corpus_names())}")
    return Game.from_json(path.read_text(), name=name)


def corpus() -> dict:
    """All bundled example games, keyed by name."""
    return {n: load_corpus_game(n) for n in corpus_names()}


def load_game(spec: str) -> Game:
    """Load a game from a JSON file path or a corpus name."""
    p = Path(spec)
    if p.suffix == ".json" and p.is_file():
        return Game.from_json(p.read_text(), name=p.stem)
    if p.is_file():
        return Game.from_json(p.read_text(), name=p.name)
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    return load_corpus_game(stem)


# -- iterated strict dominance ----------------------------------------------------


def _opponent_slices(game: Game, player: int) -> np.ndarray:
    """Rows: own strategies; columns: opponent pure profiles."""
    return np.moveaxis(game.payoffs[player], player, 0).reshape(game.shape[player], -1)


def strictly_dominated(game: Game, player: int, strategy: int, tol: float = 1e-9) -> bool:
    """Whether ``strategy`` is strictly dominated by a mixture of the player's other strategies.

    Solves ``max eps`` s.t. ``sum_u mu_u G(u, o) - G(t, o) >= eps`` for every
    opponent pure profile ``o``; dominated iff the optimum exceeds ``tol``.
    """
    M = _opponent_slices(game, player)
    others = [u for u in range(M.shape[0]) if u != strategy]
    if not others:
        return False
    A = M[others].T  # (profiles, others)
    b = M[strategy]
    k = len(others)
    # variables: mu (k), eps
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-A, np.ones((A.shape[0], 1))])
    b_ub = -b
    A_eq = np.hstack([np.ones((1, k)), np.zeros((1, 1))])
    scale = max(1.0, float(np.abs(M).max()))
    bounds = [(0, None)] * k + [(None, 2 * scale + 1)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    return bool(res.status == 0 and -res.fun > tol)


def iterated_strict_dominance(game: Game, tol: float = 1e-9):
    """Delete strictly dominated pure strategies round by round until none remain.

    Every round removes all strategies that are currently dominated.

    Returns
    -------
    reduced : Game
    trace : list of list of (player, label)
        Deletions by round, in player order.
    """
    g = game
    trace = []
    while True:
        remove = []
        for n in range(g.num_players):
            dom = [t for t in range(g.shape[n]) if strictly_dominated(g, n, t, tol)]
            if len(dom) == g.shape[n]:  # impossible for strict dominance; guard anyway
                dom = dom[:-1]
            remove.append(dom)
        if not any(remove):
            return g, trace
        trace.append([(n, g.labels[n][t]) for n in range(g.num_players) for t in remove[n]])
        g = delete_strategies(g, remove, name=game.name)


def trace_labels(trace) -> list:
    return [[lab for _, lab in rnd] for rnd in trace]


# -- uniqueness -------------------------------------------------------------------


def verify_unique(game: Game, expected, tol: float = 1e-6,
                  opts: Optional[EnumerationOptions] = None) -> bool:
    """True iff the game has exactly one equilibrium, within ``tol`` of ``expected``.

    Components are sampled, so a continuum through ``expected`` counts as
    non-unique.

    Raises
    ------
    BudgetExceeded
        If support enumeration exceeds its budget.
    """
    prof = as_profile(game, expected)
    opts = opts or EnumerationOptions()
    recs = enumerate_equilibria(game, opts)
    comps = recs.components if recs.components is not None else [None] * len(recs)
    if len(recs) != 1 or len(comps) != 1:
        return False
    if comps[0] is not None and not comps[0].is_singleton:
        return False
    return profile_distance(recs[0].profile, prof) <= tol


# -- strict-dominator embedding -------------------------------------------------------


@dataclass
class EmbeddingReport:
    original: GameEquilibriumPair
    embedded: Game
    added_labels: list
    lifted: tuple
    unique_verified: bool
    equivalence_verified: bool
    dominance_trace: list

    def to_dict(self) -> dict:
        return {
            "original": self.original.game.to_dict(),
            "equilibrium": [[float(x) for x in v] for v in self.original.equilibrium],
            "embedded": self.embedded.to_dict(),
            "added_labels": [list(a) for a in self.added_labels],
            "lifted": [[float(x) for x in v] for v in self.lifted],
            "unique_verified": bool(self.unique_verified),
            "equivalence_verified": bool(self.equivalence_verified),
            "dominance_trace": trace_labels(self.dominance_trace),
        }


def strictness_margin(game: Game, pure) -> float:
    """Smallest loss from a unilateral pure deviation at a pure profile (inf if none exist)."""
    s = tuple(game.index_of(n, p) for n, p in enumerate(pure))
    margin = np.inf
    for n in range(game.num_players):
        for t in range(game.shape[n]):
            if t != s[n]:
                dev = s[:n] + (t,) + s[n + 1:]
                margin = min(margin, game.payoffs[(n,) + s][()] - game.payoffs[(n,) + dev][()])
    return float(margin)


def _new_label(labels, n: int) -> str:
    base = "xyz"[n] if n < 3 else f"x{n + 1}"
    lab, i = base, 1
    while lab in labels:
        lab = f"{base}{i}"
        i += 1
    return lab


def embed_strict_dominators(game: Game, pure_eq, tol: float = 1e-9,
                            opts: Optional[EnumerationOptions] = None) -> EmbeddingReport:
    """Embed a strict pure equilibrium as the unique equilibrium of a larger game.

    Each player with more than one strategy gets one new strategy ``x_n``.
    Against opponent profiles made only of ``s_m`` and ``x_m`` it pays
    ``G_n(s) - c`` with ``c`` half the strictness margin (at most 1/2); against anything
    else it pays ``max G + 1``.  Original strategies treat an opponent's
    ``x_m`` as ``s_m``.  Hence ``x_n`` strictly dominates every ``t_n != s_n``,
    and once those are gone ``s_n`` strictly dominates ``x_n``.

    Raises
    ------
    NotApplicable
        If ``pure_eq`` is not a strict equilibrium.
    """
    s = tuple(game.index_of(n, p) for n, p in enumerate(pure_eq))
    margin = strictness_margin(game, s)
    if not margin > tol:
        raise NotApplicable(f"profile is not a strict equilibrium (margin {margin:g})")
    N = game.num_players
    prof = game.pure_profile(s)
    pair = GameEquilibriumPair(game, prof)
    grow = [n for n in range(N) if game.shape[n] > 1]
    if not grow:
        return EmbeddingReport(pair, game, [[] for _ in range(N)], prof, True, True, [])

    added = [[_new_label(game.labels[n], n)] if n in grow else [] for n in range(N)]
    c = 0.5 * min(margin, 1.0) if np.isfinite(margin) else 0.5
    top = float(game.payoffs.max()) + 1.0
    new_shape = tuple(game.shape[n] + len(added[n]) for n in range(N))
    P = np.empty((N,) + new_shape)
    for prof_idx in itertools.product(*[range(k) for k in new_shape]):
        is_x = [prof_idx[m] >= game.shape[m] for m in range(N)]
        base = tuple(s[m] if is_x[m] else prof_idx[m] for m in range(N))
        for n in range(N):
            if not is_x[n]:
                P[(n,) + prof_idx] = game.payoffs[(n,) + base]
            elif all(is_x[m] or prof_idx[m] == s[m] for m in range(N) if m != n):
                P[(n,) + prof_idx] = game.payoffs[(n,) + s] - c
            else:
                P[(n,) + prof_idx] = top
    embedded = add_strategies(game, added, P, name=f"{game.name}+dominators")
    lifted = tuple(np.concatenate([v, np.zeros(len(added[n]))]) for n, v in enumerate(prof))

    reduced, trace = iterated_strict_dominance(embedded, tol)
    dom_ok = reduced.shape == (1,) * N and all(
        reduced.labels[n][0] == game.labels[n][s[n]] for n in range(N))
    enum_ok = verify_unique(embedded, lifted, opts=opts)
    equiv = pairs_equivalent(pair, GameEquilibriumPair(embedded, lifted))
    return EmbeddingReport(pair, embedded, added, lifted, bool(dom_ok and enum_ok), bool(equiv), trace)
