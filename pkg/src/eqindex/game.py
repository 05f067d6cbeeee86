"""Finite normal-form games.

A :class:`Game` holds per-player strategy labels and a dense payoff tensor of
shape ``(N, |S_1|, ..., |S_N|)``.  Mixed profiles are tuples of 1-D numpy
arrays, one probability vector per player.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import StructureError

Profile = tuple  # tuple[np.ndarray, ...]

FLAT_ORDER = "player-major, profile row-major (last player's strategy fastest)"


@dataclass(frozen=True, eq=False)
class Game:
    """N-player finite game in normal form.

    Parameters
    ----------
    labels : sequence of sequences of str
        Strategy labels per player.
    payoffs : array_like
        Tensor of shape ``(N, |S_1|, ..., |S_N|)``; ``payoffs[n][s]`` is the
        payoff to player ``n`` at pure profile ``s``.
    name : str, optional
    """

    labels: tuple
    payoffs: np.ndarray
    name: str = field(default="")

    def __post_init__(self):
        labels = tuple(tuple(str(s) for s in ls) for ls in self.labels)
        payoffs = np.array(self.payoffs, dtype=float)
        n = len(labels)
        if n < 2:
            raise StructureError("a game needs at least 2 players")
        if any(len(ls) == 0 for ls in labels):
            raise StructureError("every player needs at least one strategy")
        shape = (n,) + tuple(len(ls) for ls in labels)
        if payoffs.shape != shape:
            raise StructureError(f"payoff tensor has shape {payoffs.shape}, expected {shape}")
        if not np.all(np.isfinite(payoffs)):
            raise StructureError("payoffs must be finite")
        payoffs.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "payoffs", payoffs)

    @classmethod
    def from_array(cls, payoffs, name: str = "") -> "Game":
        """Game with default labels ``s0, s1, ...`` from a payoff tensor."""
        payoffs = np.asarray(payoffs, dtype=float)
        labels = [[f"s{i}" for i in range(k)] for k in payoffs.shape[1:]]
        return cls(labels, payoffs, name=name)

    @property
    def num_players(self) -> int:
        return len(self.labels)

    @property
    def shape(self) -> tuple:
        return tuple(len(ls) for ls in self.labels)

    @property
    def payoff_range(self) -> float:
        return float(self.payoffs.max() - self.payoffs.min())

    def index_of(self, player: int, label) -> int:
        if isinstance(label, (int, np.integer)):
            return int(label)
        try:
            return self.labels[player].index(str(label))
        except ValueError:
            raise StructureError(f"player {player} has no strategy {label!r}") from None

    def pure_profile(self, strategies: Sequence) -> Profile:
        """Degenerate mixed profile for a pure profile given by labels or indices."""
        if len(strategies) != self.num_players:
            raise StructureError("pure profile has wrong number of players")
        out = []
        for n, s in enumerate(strategies):
            v = np.zeros(self.shape[n])
            v[self.index_of(n, s)] = 1.0
            out.append(v)
        return tuple(out)

    def uniform_profile(self) -> Profile:
        return tuple(np.full(k, 1.0 / k) for k in self.shape)

    def same_as(self, other: "Game", tol: float = 0.0) -> bool:
        """Same labels and payoffs (within ``tol``)."""
        if self.labels != other.labels:
            return False
        return bool(np.all(np.abs(self.payoffs - other.payoffs) <= tol))

    def __repr__(self):
        dims = "x".join(str(k) for k in self.shape)
        return f"Game({self.name or 'unnamed'}, {dims})"

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "players": self.num_players,
            "strategies": [list(ls) for ls in self.labels],
            "payoffs": {"flat": self.payoffs.ravel().tolist(), "order": FLAT_ORDER},
        }
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: dict, name: str = "") -> "Game":
        for key in ("players", "strategies", "payoffs"):
            if key not in d:
                raise StructureError(f"game JSON is missing field '{key}'")
        labels = d["strategies"]
        if len(labels) != d["players"]:
            raise StructureError(
                f"field 'strategies' lists {len(labels)} players but 'players' is {d['players']}"
            )
        pay = d["payoffs"]
        if not isinstance(pay, dict) or "flat" not in pay:
            raise StructureError("field 'payoffs' must be an object with a 'flat' array")
        flat = np.asarray(pay["flat"], dtype=float)
        shape = (len(labels),) + tuple(len(ls) for ls in labels)
        if flat.size != int(np.prod(shape)):
            raise StructureError(
                f"field 'payoffs.flat' has {flat.size} entries, expected {int(np.prod(shape))}"
            )
        return cls(labels, flat.reshape(shape), name=d.get("name", name))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str, name: str = "") -> "Game":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StructureError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(d, name=name)


def game_from_table(labels, table, name: str = "") -> Game:
    """Build a game from a nested table whose leaves are payoff tuples.

    ``table[s_1][s_2]...[s_N]`` is the tuple ``(u_1, ..., u_N)``.
    """
    arr = np.asarray(table, dtype=float)
    return Game(labels, np.moveaxis(arr, -1, 0), name=name)


def bimatrix(A, B, row_labels=None, col_labels=None, name: str = "") -> Game:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise StructureError("payoff matrices differ in shape")
    rows = row_labels or [f"r{i}" for i in range(A.shape[0])]
    cols = col_labels or [f"c{j}" for j in range(A.shape[1])]
    return Game((rows, cols), np.stack([A, B]), name=name)


# -- profiles ------------------------------------------------------------------


def as_profile(game: Game, profile, normalize: bool = True) -> Profile:
    """Validate a mixed profile against ``game`` and return it as arrays."""
    if len(profile) != game.num_players:
        raise StructureError(
            f"profile has {len(profile)} components, game has {game.num_players} players"
        )
    out = []
    for n, v in enumerate(profile):
        v = np.asarray(v, dtype=float).ravel()
        if v.size != game.shape[n]:
            raise StructureError(
                f"player {n} vector has length {v.size}, expected {game.shape[n]}"
            )
        if normalize:
            total = v.sum()
            if np.any(v < -1e-12) or total <= 0:
                raise StructureError(f"player {n} vector is not a probability vector")
            v = np.clip(v, 0.0, None) / total
        out.append(v)
    return tuple(out)


def flatten(profile) -> np.ndarray:
    return np.concatenate([np.asarray(v, dtype=float) for v in profile])


def unflatten(game: Game, vec) -> Profile:
    vec = np.asarray(vec, dtype=float)
    out, i = [], 0
    for k in game.shape:
        out.append(vec[i:i + k].copy())
        i += k
    return tuple(out)


def profile_distance(p, q) -> float:
    """l-infinity distance between two profiles."""
    return float(np.max(np.abs(flatten(p) - flatten(q))))


def support(profile, threshold: float = 1e-9) -> tuple:
    return tuple(tuple(int(i) for i in np.flatnonzero(np.asarray(v) > threshold)) for v in profile)


# -- payoff evaluation -----------------------------------------------------------


def _contract(tensor: np.ndarray, profile, keep: Iterable[int]) -> np.ndarray:
    """Contract a per-player tensor with every profile component not in ``keep``."""
    keep = set(keep)
    out = tensor
    # contract from the last axis so indices of earlier axes stay valid
    for m in reversed(range(len(profile))):
        if m not in keep:
            out = np.tensordot(out, profile[m], axes=([m], [0]))
    return out


def payoff_vector(game: Game, profile, player: int) -> np.ndarray:
    """Payoffs ``G_n(s_n, sigma_-n)`` of every pure strategy of ``player``."""
    prof = _opponent_profile(game, profile, player)
    return _contract(game.payoffs[player], prof, keep=[player])


def _opponent_profile(game: Game, profile, player: int):
    if len(profile) == game.num_players - 1:
        profile = list(profile[:player]) + [np.zeros(game.shape[player])] + list(profile[player:])
    if len(profile) != game.num_players:
        raise StructureError("profile has the wrong number of players")
    prof = []
    for m, v in enumerate(profile):
        v = np.asarray(v, dtype=float)
        if v.shape != (game.shape[m],):
            raise StructureError(f"player {m} vector has shape {v.shape}, expected ({game.shape[m]},)")
        prof.append(v)
    return prof


def expected_payoff(game: Game, profile, player: int) -> float:
    """Multilinear extension ``G_n(sigma)``."""
    prof = _opponent_profile(game, profile, player)
    return float(payoff_vector(game, prof, player) @ prof[player])


def pure_vs_profile(game: Game, player: int, pure, others) -> float:
    """Expected payoff to ``player`` of a pure strategy against the opponents' mixture.

    ``others`` is either a full profile (the player's own entry is ignored) or
    the list of the ``N - 1`` opponent vectors.
    """
    s = game.index_of(player, pure)
    if not 0 <= s < game.shape[player]:
        raise StructureError(f"strategy index {s} out of range for player {player}")
    return float(payoff_vector(game, others, player)[s])


def pair_payoffs(game: Game, profile, player: int, other: int) -> np.ndarray:
    """Matrix of ``G_player(s, t, sigma_rest)`` over ``s`` of ``player`` and ``t`` of ``other``."""
    out = _contract(game.payoffs[player], profile, keep=[player, other])
    return out if player < other else out.T


# -- transformations ---------------------------------------------------------------


def bonus_apply(game: Game, h) -> Game:
    """The bonus game ``G (+) h``: player n earns ``h[n][s_n]`` extra when playing ``s_n``."""
    if len(h) != game.num_players:
        raise StructureError("bonus vector has the wrong number of players")
    pay = np.array(game.payoffs)
    for n, hn in enumerate(h):
        hn = np.asarray(hn, dtype=float)
        if hn.shape != (game.shape[n],):
            raise StructureError(f"bonus for player {n} has shape {hn.shape}, expected ({game.shape[n]},)")
        if not np.all(np.isfinite(hn)):
            raise StructureError("bonus entries must be finite")
        shape = [1] * game.num_players
        shape[n] = -1
        pay[n] += hn.reshape(shape)
    return Game(game.labels, pay, name=game.name)


def add_strategies(game: Game, additions, payoff_fn=None, name: str = "") -> Game:
    """Embed ``game`` in a larger game with extra strategies appended.

    Parameters
    ----------
    additions : sequence of sequences of str
        New labels per player (possibly empty).
    payoff_fn : callable, optional
        ``payoff_fn(profile_labels) -> sequence of N payoffs`` for every pure
        profile that involves at least one new strategy.  Alternatively pass a
        full tensor for the enlarged game as ``payoff_fn``; its restriction to
        the old strategies must equal the old tensor.
    """
    if len(additions) != game.num_players:
        raise StructureError("additions must list new strategies for every player")
    labels = [list(ls) + [str(a) for a in add] for ls, add in zip(game.labels, additions)]
    shape = tuple(len(ls) for ls in labels)
    if all(len(a) == 0 for a in additions):
        return Game(game.labels, game.payoffs, name=name or game.name)
    old = tuple(slice(0, k) for k in game.shape)
    if payoff_fn is None:
        raise StructureError("payoffs for the new strategies are not specified")
    if callable(payoff_fn):
        pay = np.full((game.num_players,) + shape, np.nan)
        pay[(slice(None),) + old] = game.payoffs
        for prof in itertools.product(*(range(k) for k in shape)):
            if all(s < k for s, k in zip(prof, game.shape)):
                continue
            vals = payoff_fn(tuple(labels[n][s] for n, s in enumerate(prof)))
            if vals is None or len(vals) != game.num_players:
                raise StructureError(f"incomplete payoff specification at profile {prof}")
            pay[(slice(None),) + prof] = vals
    else:
        pay = np.array(payoff_fn, dtype=float)
        if pay.shape != (game.num_players,) + shape:
            raise StructureError(f"payoff tensor has shape {pay.shape}, expected {(game.num_players,) + shape}")
        if not np.array_equal(pay[(slice(None),) + old], game.payoffs):
            raise StructureError("enlarged payoffs do not embed the original game")
    if np.any(np.isnan(pay)):
        raise StructureError("incomplete payoff specification")
    return Game(labels, pay, name=name)


def restrict(game: Game, keep, name: str = "") -> Game:
    """Restriction of ``game`` to the given strategy indices (or labels) per player."""
    idx = [sorted(game.index_of(n, s) for s in ks) for n, ks in enumerate(keep)]
    if any(len(ix) == 0 for ix in idx):
        raise StructureError("cannot delete every strategy of a player")
    pay = game.payoffs[np.ix_(range(game.num_players), *idx)]
    labels = [[game.labels[n][i] for i in ix] for n, ix in enumerate(idx)]
    return Game(labels, pay, name=name or game.name)


def delete_strategies(game: Game, remove, name: str = "") -> Game:
    """Delete the listed strategies (labels or indices) per player."""
    keep = []
    for n in range(game.num_players):
        drop = {game.index_of(n, s) for s in remove[n]}
        keep.append([i for i in range(game.shape[n]) if i not in drop])
    return restrict(game, keep, name=name)


def restrict_profile(game: Game, profile, keep) -> Profile:
    idx = [sorted(game.index_of(n, s) for s in ks) for n, ks in enumerate(keep)]
    return tuple(np.asarray(v, dtype=float)[ix] for v, ix in zip(profile, idx))


# -- equivalence of game-equilibrium pairs --------------------------------------------


@dataclass(frozen=True, eq=False)
class GameEquilibriumPair:
    game: Game
    equilibrium: tuple

    def __post_init__(self):
        # local import: equilibria depends on this module
        from .equilibria import is_equilibrium

        prof = as_profile(self.game, self.equilibrium)
        ok, res = is_equilibrium(self.game, prof, tol=1e-9)
        if not ok:
            raise StructureError(f"profile is not an equilibrium (max residual {res:.3g})")
        object.__setattr__(self, "equilibrium", prof)


def best_reply_sets(game: Game, profile, tol: float = 1e-9) -> list:
    out = []
    for n in range(game.num_players):
        u = payoff_vector(game, profile, n)
        out.append([int(i) for i in np.flatnonzero(u >= u.max() - tol)])
    return out


def delete_inferior_replies(pair: GameEquilibriumPair, tol: float = 1e-9) -> GameEquilibriumPair:
    """Restrict the game to the best replies against the pair's equilibrium.

    A single pass: strategies whose payoff is more than ``tol`` below the
    best-reply value are removed; the support is always kept.
    """
    game, eq = pair.game, pair.equilibrium
    keep = best_reply_sets(game, eq, tol)
    for n, v in enumerate(eq):
        keep[n] = sorted(set(keep[n]) | set(np.flatnonzero(v > 0).tolist()))
    reduced = restrict(game, keep)
    return GameEquilibriumPair(reduced, restrict_profile(game, eq, keep))


def _slice_signature(game: Game, player: int, s: int) -> np.ndarray:
    sl = np.take(game.payoffs, s, axis=player + 1)
    return np.sort(sl.ravel())


def pairs_equivalent(p1: GameEquilibriumPair, p2: GameEquilibriumPair, tol: float = 1e-9) -> bool:
    """Equivalence of game-equilibrium pairs up to relabelling players and strategies.

    Both pairs are first reduced to the best replies against their equilibria;
    the search over relabellings is exhaustive, pruned by probability and
    payoff-multiset signatures.
    """
    r1, r2 = delete_inferior_replies(p1, tol), delete_inferior_replies(p2, tol)
    g1, g2 = r1.game, r2.game
    if g1.num_players != g2.num_players:
        return False
    if sorted(g1.shape) != sorted(g2.shape):
        return False
    n = g1.num_players
    for perm in itertools.permutations(range(n)):
        # player n of g1 plays the role of player perm[n] of g2
        if any(g1.shape[i] != g2.shape[perm[i]] for i in range(n)):
            continue
        candidates = []
        for i in range(n):
            j = perm[i]
            cand = []
            for s in range(g1.shape[i]):
                sig1 = _slice_signature(g1, i, s)
                ok = []
                for t in range(g2.shape[j]):
                    if abs(r1.equilibrium[i][s] - r2.equilibrium[j][t]) > tol:
                        continue
                    if np.max(np.abs(sig1 - _slice_signature(g2, j, t))) > tol:
                        continue
                    ok.append(t)
                if not ok:
                    break
                cand.append(ok)
            if len(cand) != g1.shape[i]:
                break
            candidates.append(cand)
        if len(candidates) != n:
            continue
        if _search_strategy_maps(g1, g2, perm, candidates, tol):
            return True
    return False


def _search_strategy_maps(g1, g2, perm, candidates, tol) -> bool:
    n = g1.num_players
    per_player = []
    for i in range(n):
        maps = [
            m for m in itertools.product(*candidates[i]) if len(set(m)) == len(m)
        ]
        if not maps:
            return False
        per_player.append(maps)
    for maps in itertools.product(*per_player):
        # permute g2 into g1's labelling: axis i of result = player perm[i] of g2
        t = g2.payoffs[[perm[i] for i in range(n)]]
        t = np.transpose(t, [0] + [perm[i] + 1 for i in range(n)])
        idx = np.ix_(range(n), *[list(maps[i]) for i in range(n)])
        if np.max(np.abs(t[idx] - g1.payoffs)) <= tol:
            return True
    return False
