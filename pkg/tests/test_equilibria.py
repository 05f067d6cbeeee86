import numpy as np
import pytest

from eqindex import (
    BudgetExceeded,
    EnumerationOptions,
    StructureError,
    enumerate_equilibria,
    is_equilibrium,
    sample_component,
)
from eqindex.equilibria import best_reply_value_and_set, support_count
from eqindex.game import flatten, profile_distance

from conftest import random_game


def symmetric(x):
    return (np.array([x, 1 - x]), np.array([x, 1 - x]))


def test_best_reply_running_example(games):
    g = games["coordination"]
    v, br = best_reply_value_and_set(g, 0, symmetric(0.0))
    assert v == pytest.approx(1.0) and br == (1,)
    v, br = best_reply_value_and_set(g, 0, symmetric(0.75))
    assert v == pytest.approx(0.75) and br == (0,)


def test_best_reply_dominant_strategy():
    from eqindex import bimatrix

    g = bimatrix([[2, 3], [0, 1]], [[1, 0], [1, 0]])
    for q in np.linspace(0, 1, 11):
        assert best_reply_value_and_set(g, 0, (np.ones(2) / 2, np.array([q, 1 - q])))[1] == (0,)


def test_is_equilibrium_bos(games):
    g, ghat = games["BoS"], games["G-hat"]
    assert is_equilibrium(g, ((0.6, 0.4), (0.4, 0.6)))[0]
    ok, res = is_equilibrium(g, ((1, 0), (0, 1)))
    # at (t,r) each player gains 2 by switching
    assert not ok and res == pytest.approx(2.0)
    assert is_equilibrium(ghat, ghat.pure_profile(("t", "l")))[0]


def test_enumerate_bos(games):
    recs = enumerate_equilibria(games["BoS"])
    assert len(recs) == 3
    profs = sorted(tuple(np.round(flatten(r.profile), 9)) for r in recs)
    expected = sorted([(1, 0, 1, 0), (0, 1, 0, 1), (0.6, 0.4, 0.4, 0.6)])
    assert np.allclose(profs, expected, atol=1e-9)
    assert all(r.is_isolated and r.max_residual <= 1e-9 for r in recs)


def test_enumerate_ghat_g1hat(games):
    ghat = games["G-hat"]
    recs = enumerate_equilibria(ghat)
    assert len(recs) == 1
    assert profile_distance(recs[0].profile, ghat.pure_profile(("t", "l"))) < 1e-9
    g1h = games["G1-hat"]
    recs = enumerate_equilibria(g1h)
    assert len(recs) == 1
    uni = (np.ones(3) / 3, np.r_[np.ones(3) / 3, np.zeros(3)])
    assert profile_distance(recs[0].profile, uni) < 1e-9


def test_enumerate_g1(games):
    recs = enumerate_equilibria(games["G1"])
    assert len(recs) == 7
    sizes = sorted(len(r.support[0]) for r in recs)
    assert sizes == [1, 1, 1, 2, 2, 2, 3]
    assert all(r.is_isolated for r in recs)


def test_enumerate_deterministic(games):
    a = enumerate_equilibria(games["brandt-fischer"], seed=3)
    b = enumerate_equilibria(games["brandt-fischer"], seed=3)
    assert [flatten(r.profile).tolist() for r in a] == [flatten(r.profile).tolist() for r in b]


def test_budget(games):
    g = games["G1-hat"]
    assert support_count(g) == 7 * 63
    with pytest.raises(BudgetExceeded) as exc:
        enumerate_equilibria(g, max_support=10)
    assert exc.value.partial is not None


def test_component_g2(games):
    g = games["G2"]
    recs = enumerate_equilibria(g)
    comps = recs.components
    assert len(comps) == 1
    assert not comps[0].is_singleton and comps[0].bounding_radius > 0.1
    assert all(is_equilibrium(g, m, 1e-8)[0] for m in comps[0].members)


def test_component_singletons(games):
    g = games["BoS"]
    for rec in enumerate_equilibria(g):
        assert sample_component(g, rec.profile).is_singleton


def test_sample_component_needs_equilibrium(games):
    g = games["BoS"]
    with pytest.raises(StructureError):
        sample_component(g, ((1, 0), (0, 1)))


def grid_hits(game, step, thresh):
    """Grid points that are well-supported ``thresh``-equilibria."""
    k = game.shape
    ticks = np.arange(0, 1 + step / 2, step)
    def simplex_grid(m):
        if m == 2:
            return np.stack([ticks, 1 - ticks], axis=1)
        pts = [(a, b, 1 - a - b) for a in ticks for b in ticks if a + b <= 1 + 1e-12]
        return np.clip(np.array(pts), 0, 1)
    P, Q = simplex_grid(k[0]), simplex_grid(k[1])
    A, B = game.payoffs
    U1 = Q @ A.T  # (nq, k0): payoff of each row against q
    U2 = P @ B    # (np, k1)
    # well-supported gap: best reply value minus the worst strategy in use
    big = 1e30
    w1 = np.where(P[:, None, :] > 0, U1[None, :, :], big).min(axis=2)
    w2 = np.where(Q[None, :, :] > 0, U2[:, None, :], big).min(axis=2)
    gap1 = U1.max(axis=1)[None, :] - w1
    gap2 = U2.max(axis=1)[:, None] - w2
    ii, jj = np.nonzero((gap1 <= thresh) & (gap2 <= thresh))
    return [(P[i], Q[j]) for i, j in zip(ii, jj)]


@pytest.mark.parametrize("shape,step", [((2, 2), 1e-3), ((3, 3), 1 / 40)])
def test_completeness_against_grid(shape, step):
    rng = np.random.default_rng(7)
    for _ in range(10):
        g = random_game(rng, shape)
        recs = enumerate_equilibria(g)
        hits = grid_hits(g, step, thresh=0.1 * step)
        for h in hits:
            assert min(profile_distance(h, r.profile) for r in recs) <= 1e-2


def test_every_record_verifies(rng):
    for shape in [(2, 2), (3, 3), (2, 2, 2), (3, 2, 2)]:
        for _ in range(5):
            g = random_game(rng, shape)
            for r in enumerate_equilibria(g, EnumerationOptions(seed=1)):
                assert is_equilibrium(g, r.profile, 1e-9)[0]
