import numpy as np
import pytest

from eqindex import (
    Game,
    GameEquilibriumPair,
    NotApplicable,
    StructureError,
    embed_strict_dominators,
    enumerate_equilibria,
    iterated_strict_dominance,
    load_game,
    pairs_equivalent,
    verify_unique,
)
from eqindex.constructions import (
    corpus_names,
    strictly_dominated,
    strictness_margin,
    trace_labels,
)
from eqindex.game import game_from_table


def test_corpus_names():
    names = corpus_names()
    for n in ["BoS", "G-hat", "G1", "G1-hat", "G2", "G3", "game1-2x2", "three-player",
              "brandt-fischer", "coordination", "trivial-1x1"]:
        assert n in names


def test_load_game_by_name_and_path(tmp_path, games):
    assert load_game("BoS").same_as(games["BoS"])
    assert load_game("running-example").same_as(games["coordination"])
    p = tmp_path / "g.json"
    p.write_text(games["G1"].to_json())
    assert load_game(str(p)).same_as(games["G1"])
    with pytest.raises(StructureError):
        load_game("no-such-game")


def test_ghat_dominance_trace(games):
    reduced, trace = iterated_strict_dominance(games["G-hat"])
    assert trace_labels(trace) == [["b", "r"], ["x", "y"]]
    assert reduced.labels == (("t",), ("l",))


def test_no_dominated_strategies_identity(games):
    g = games["BoS"]
    reduced, trace = iterated_strict_dominance(g)
    assert trace == [] and reduced.same_as(g)


def test_g1hat_needs_enumeration(games):
    g = games["G1-hat"]
    reduced, _ = iterated_strict_dominance(g)
    assert reduced.shape != (1, 1)
    uni = (np.ones(3) / 3, np.r_[np.ones(3) / 3, np.zeros(3)])
    assert verify_unique(g, uni)


def test_mixed_dominance():
    # the middle row is dominated only by the half-half mixture of the others
    g = game_from_table([["a", "b", "c"], ["l", "r"]],
                        [[(3, 0), (0, 0)], [(1, 0), (1, 0)], [(0, 0), (3, 0)]])
    assert strictly_dominated(g, 0, 1)
    assert not strictly_dominated(g, 0, 0)


def test_verify_unique(games):
    ghat = games["G-hat"]
    assert verify_unique(ghat, ghat.pure_profile(("t", "l")))
    bos = games["BoS"]
    assert not verify_unique(bos, bos.pure_profile(("t", "l")))
    # a continuum is never unique
    assert not verify_unique(games["G2"], games["G2"].pure_profile(("T", "L", "W")))


def test_embed_bos(games):
    bos = games["BoS"]
    rep = embed_strict_dominators(bos, ("t", "l"))
    assert rep.embedded.shape == (3, 3)
    assert rep.unique_verified and rep.equivalence_verified
    recs = enumerate_equilibria(rep.embedded)
    assert len(recs) == 1
    assert np.allclose(np.concatenate(recs[0].profile), np.concatenate(rep.lifted))
    assert rep.to_dict()["added_labels"] == [["x"], ["y"]]


def test_embed_trivial(games):
    g = games["trivial-1x1"]
    rep = embed_strict_dominators(g, ("s", "t"))
    assert rep.embedded is g and rep.unique_verified


def test_embed_three_player_coordination():
    pay = np.zeros((3, 2, 2, 2))
    pay[:, 0, 0, 0] = 2.0
    pay[:, 1, 1, 1] = 1.0
    g = Game([["a", "b"]] * 3, pay)
    rep = embed_strict_dominators(g, (0, 0, 0))
    assert rep.embedded.shape == (3, 3, 3)
    assert rep.unique_verified and rep.equivalence_verified


def test_embed_refuses_non_strict(games):
    bos = games["BoS"]
    with pytest.raises(NotApplicable):
        embed_strict_dominators(bos, ("t", "r"))
    g2 = games["brandt-fischer"]
    assert strictness_margin(g2, (0, 0, 0)) == 0
    with pytest.raises(NotApplicable):
        embed_strict_dominators(g2, ("T", "L", "W"))


def test_equivalence_lifted(games):
    bos = games["BoS"]
    rep = embed_strict_dominators(bos, ("b", "r"))
    p1 = GameEquilibriumPair(bos, bos.pure_profile(("b", "r")))
    p2 = GameEquilibriumPair(rep.embedded, rep.lifted)
    assert pairs_equivalent(p1, p2) and pairs_equivalent(p2, p1)


def test_dominance_keeps_equilibrium_supports(games):
    for name, g in games.items():
        recs = enumerate_equilibria(g)
        reduced, _ = iterated_strict_dominance(g)
        for r in recs:
            for n, supp in enumerate(r.support):
                for s in supp:
                    assert g.labels[n][s] in reduced.labels[n], (name, n, s)
