import numpy as np
import pytest

from eqindex import (
    NotApplicable,
    classify,
    component_index,
    enumerate_equilibria,
    index_isolated,
    index_regular,
    indifference_jacobian,
    local_degree_oracle,
    is_equilibrium,
    nash_map,
)
from eqindex.game import profile_distance, restrict, restrict_profile
from eqindex.index import is_regular, oracle_radius, perturbation_degrees
from eqindex.running_example import f_sym, fixed_point_index_1d

BOS_MIX = ((0.6, 0.4), (0.4, 0.6))


# -- Jacobian route ------------------------------------------------------------------


def test_bos_jacobian(games):
    g = games["BoS"]
    D = indifference_jacobian(g, BOS_MIX)
    assert np.allclose(D, [[0, 5], [5, 0]], atol=1e-12)
    assert indifference_jacobian(g, g.pure_profile(("t", "l"))).shape == (0, 0)


def test_g1_uniform_jacobian(games):
    g = games["G1"]
    D = indifference_jacobian(g, g.uniform_profile())
    assert D.shape == (4, 4)
    assert np.all(D[:2, :2] == 0) and np.all(D[2:, 2:] == 0)
    assert np.linalg.matrix_rank(D) == 4


def test_jacobian_refuses_non_quasi_strict(games):
    g = games["brandt-fischer"]
    with pytest.raises(NotApplicable):
        indifference_jacobian(g, g.pure_profile(("T", "L", "W")))


def test_index_regular_examples(games):
    g = games["BoS"]
    assert index_regular(g, g.pure_profile(("t", "l"))) == 1
    assert index_regular(g, g.pure_profile(("b", "r"))) == 1
    assert index_regular(g, BOS_MIX) == -1
    assert index_regular(games["G1"], games["G1"].uniform_profile()) == 1


def test_g3_sigma_on_support(games):
    g = games["G3"]
    keep = [["C", "D"], ["L", "M"], ["W"]]
    sigma = (np.array([0, 0, 0.5, 0.5, 0]), np.array([0.5, 0.5, 0]), np.array([1.0, 0]))
    sub = restrict(g, keep)
    assert index_regular(sub, restrict_profile(g, sigma, keep)) == -1


def test_sign_convention_calibration(games):
    # the Jacobian sign convention is frozen only because it agrees with the
    # combinatorial degree at both signs and with the degree-sum theorem
    g = games["BoS"]
    recs = enumerate_equilibria(g)
    signs = set()
    for r in recs:
        others = [o.profile for o in recs if o is not r]
        deg = local_degree_oracle(g, r, radius=oracle_radius(r.profile, others))
        assert deg == index_regular(g, r)
        signs.add(deg)
    assert signs == {1, -1}
    for name in ["BoS", "G1", "G-hat", "G1-hat", "coordination", "trivial-1x1"]:
        assert sum(index_regular(games[name], r) for r in enumerate_equilibria(games[name])) == 1


def test_strict_pure_index_plus_one(games):
    for name in ["BoS", "G1", "coordination", "game1-2x2"]:
        g = games[name]
        for r in enumerate_equilibria(g):
            if all(len(s) == 1 for s in r.support) and is_regular(g, r):
                assert index_regular(g, r) == 1


# -- oracle ----------------------------------------------------------------------------


def test_oracle_examples(games):
    g = games["BoS"]
    assert local_degree_oracle(g, BOS_MIX, radius=0.05) == -1
    assert local_degree_oracle(g, g.pure_profile(("t", "l")), radius=0.05) == 1


def test_coordination_middle_point(games):
    g = games["coordination"]
    half = (np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    assert local_degree_oracle(g, half, radius=0.05) == -1
    assert fixed_point_index_1d(f_sym, 0.5) == -1


def test_oracle_three_free_coordinates(games):
    g = games["brandt-fischer"]
    assert local_degree_oracle(g, g.pure_profile(("T", "L", "W")), radius=0.05) == 1


def test_oracle_dimension_limit(games):
    g = games["G1"]
    with pytest.raises(NotApplicable):
        local_degree_oracle(g, g.uniform_profile())


# -- Nash map ---------------------------------------------------------------------------


def test_nash_map_running_example(games):
    g = games["coordination"]
    q = (np.array([0.25, 0.75]), np.array([0.25, 0.75]))
    assert nash_map(g, q)[0][0] == pytest.approx(2 / 9, abs=1e-12)
    half = (np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    assert nash_map(g, half)[0][0] == pytest.approx(0.5, abs=1e-12)


def test_nash_map_fixes_equilibria(games):
    g = games["BoS"]
    for r in enumerate_equilibria(g):
        f = nash_map(g, r.profile)
        assert profile_distance(f, r.profile) < 1e-10


# -- perturbation degree ---------------------------------------------------------------


def test_index_isolated_matches_regular(games):
    g = games["BoS"]
    recs = enumerate_equilibria(g)
    for r in recs:
        assert index_isolated(g, r, records=recs) == index_regular(g, r)


def test_three_player_index_reversal(games):
    g = games["three-player"]
    recs = enumerate_equilibria(g)
    assert len(recs) == 1
    assert not is_regular(g, recs[0])
    assert index_isolated(g, recs[0], records=recs) == 1
    keep = [["Tt", "Tb"], ["Ll", "Lr"], ["W"]]
    sub = restrict(g, keep)
    assert index_regular(sub, restrict_profile(g, recs[0].profile, keep)) == -1


def test_g2_component_index(games):
    g = games["G2"]
    comps = enumerate_equilibria(g).components
    assert len(comps) == 1
    assert component_index(g, comps[0], components=comps) == 1


def test_component_index_regular_game(games):
    g = games["G1"]
    comps = enumerate_equilibria(g).components
    for c in comps:
        assert component_index(g, c, components=comps) == index_regular(g, c.records[0])


def test_perturbation_degrees_returns_delta(games):
    g = games["BoS"]
    recs = enumerate_equilibria(g)
    degs, used = perturbation_degrees(g, [[r.profile] for r in recs])
    assert degs == [index_regular(g, r) for r in recs]
    assert used == pytest.approx(1e-4)


# -- classification --------------------------------------------------------------------


def test_classify_bos(games):
    g = games["BoS"]
    res = classify(g)
    star = sorted(tuple(np.round(np.concatenate(r.profile), 9)) for r in res.solutions.phi_star)
    assert star == [(0, 1, 0, 1), (1, 0, 1, 0)]
    for rep in res.reports:
        assert rep.is_sustainable == (rep.equilibrium.is_isolated and rep.index == 1)
        if rep.is_regular:
            assert rep.index in (1, -1)


def test_classify_trivial(games):
    res = classify(games["trivial-1x1"])
    assert len(res.solutions.phi_star) == 1 and len(res.solutions.phi_plus) == 1


@pytest.mark.parametrize("name", ["BoS", "G1", "G-hat", "G1-hat", "G2", "game1-2x2",
                                  "brandt-fischer", "three-player", "coordination",
                                  "trivial-1x1"])
def test_corpus_degree_sum(games, name):
    res = classify(games[name])
    assert sum(c.index for c in res.components) == 1
    assert res.solutions.phi_plus


def test_classify_g3_as_tabulated(games):
    # the table as printed has a third isolated equilibrium rho with support
    # {B,C,D} x {L,M,R} x {W,O}, and tau lies on a continuum of equilibria
    g = games["G3"]
    res = classify(g)
    assert sum(c.index for c in res.components) == 1
    tau = g.pure_profile(("B", "R", "W"))
    sigma = (np.array([0, 0, 0.5, 0.5, 0]), np.array([0.5, 0.5, 0]), np.array([1.0, 0]))
    assert is_equilibrium(g, tau)[0]
    # tau is matched within the clustering radius of the sampled cloud
    tau_comp = [c for c in res.components if c.distance_to(tau) <= 0.1]
    sig_comp = [c for c in res.components if c.distance_to(sigma) <= 1e-7]
    assert len(tau_comp) == 1 and not tau_comp[0].is_singleton
    assert len(sig_comp) == 1 and sig_comp[0].index == -1
    others = [c for c in res.components if c is not tau_comp[0] and c is not sig_comp[0]]
    assert [c.index for c in others] == [1]
    assert [len(s) for s in others[0].records[0].support] == [3, 3, 2]
    assert tau_comp[0].index == 1
    assert any(c is tau_comp[0] for c in res.solutions.phi_plus)
