"""Property-based checks of the invariants, driven by hypothesis."""
import itertools

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from eqindex import (
    Game,
    GameEquilibriumPair,
    NotApplicable,
    add_strategies,
    bonus_apply,
    embed_strict_dominators,
    enumerate_equilibria,
    index_regular,
    iterated_strict_dominance,
    local_degree_oracle,
    pairs_equivalent,
)
from eqindex.constructions import strictness_margin
from eqindex.equilibria import indifference_system
from eqindex.game import expected_payoff, restrict
from eqindex.index import is_regular, oracle_radius
from eqindex.running_example import f0_sym, f_sym, g_sym
from eqindex.triangulation import circumball_margins, delaunay_lift, volume_defect

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

seeds = st.integers(min_value=0, max_value=2**32 - 1)
shapes = st.sampled_from([(2, 2), (2, 3), (3, 3), (2, 2, 2)])


def make_game(seed, shape, integer=False):
    rng = np.random.default_rng(seed)
    size = (len(shape),) + tuple(shape)
    pay = rng.integers(-5, 6, size=size).astype(float) if integer else rng.normal(size=size)
    return Game.from_array(pay)


def rand_profile(rng, shape):
    return tuple(rng.dirichlet(np.ones(k)) for k in shape)


@SETTINGS
@given(seeds, shapes, st.floats(0, 1))
def test_multilinear(seed, shape, lam):
    g = make_game(seed, shape)
    rng = np.random.default_rng(seed + 1)
    a, b = rand_profile(rng, shape), rand_profile(rng, shape)
    n = int(rng.integers(len(shape)))
    mix = tuple(lam * a[n] + (1 - lam) * b[n] if m == n else a[m] for m in range(len(shape)))
    other = tuple(b[n] if m == n else a[m] for m in range(len(shape)))
    for p in range(len(shape)):
        lhs = expected_payoff(g, mix, p)
        rhs = lam * expected_payoff(g, a, p) + (1 - lam) * expected_payoff(g, other, p)
        assert abs(lhs - rhs) <= 1e-12


@SETTINGS
@given(seeds, shapes)
def test_embedding_round_trip(seed, shape):
    g = make_game(seed, shape)
    rng = np.random.default_rng(seed)
    add = [["new"] if rng.random() < 0.6 else [] for _ in shape]
    big_shape = tuple(k + len(a) for k, a in zip(shape, add))
    pay = rng.normal(size=(len(shape),) + big_shape)
    pay[(slice(None),) + tuple(slice(0, k) for k in shape)] = g.payoffs
    big = add_strategies(g, add, pay)
    back = restrict(big, g.labels)
    assert back.labels == g.labels and np.array_equal(back.payoffs, g.payoffs)


@SETTINGS
@given(seeds, shapes)
def test_bonus_own_term(seed, shape):
    g = make_game(seed, shape)
    rng = np.random.default_rng(seed)
    h = [rng.normal(size=k) for k in shape]
    prof = rand_profile(rng, shape)
    gh = bonus_apply(g, h)
    for n in range(len(shape)):
        assert abs(expected_payoff(gh, prof, n) - expected_payoff(g, prof, n) - h[n] @ prof[n]) <= 1e-12


@SETTINGS
@given(seeds, st.sampled_from([(2, 2), (3, 3), (2, 3)]))
def test_pairs_equivalent_reflexive_symmetric(seed, shape):
    g = make_game(seed, shape, integer=True)
    recs = enumerate_equilibria(g)
    rng = np.random.default_rng(seed)
    # a relabelled copy: swap the players and permute strategies
    perms = [rng.permutation(k) for k in shape]
    pay = g.payoffs[np.ix_(range(2), perms[0], perms[1])]
    h = Game.from_array(np.transpose(pay[::-1], (0, 2, 1)))
    for r in recs:
        p = GameEquilibriumPair(g, r.profile)
        assert pairs_equivalent(p, p)
        q = GameEquilibriumPair(h, (r.profile[1][perms[1]], r.profile[0][perms[0]]))
        assert pairs_equivalent(p, q) and pairs_equivalent(q, p)


@SETTINGS
@given(seeds, shapes)
def test_degree_sum(seed, shape):
    g = make_game(seed, shape)
    recs = enumerate_equilibria(g)
    assume(all(is_regular(g, r) for r in recs))
    assert sum(index_regular(g, r) for r in recs) == 1


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_oracle_agrees_2x2(seed):
    g = make_game(seed, (2, 2))
    recs = enumerate_equilibria(g)
    for r in recs:
        if not is_regular(g, r):
            continue
        rad = oracle_radius(r.profile, [o.profile for o in recs if o is not r])
        assert local_degree_oracle(g, r, radius=rad) == index_regular(g, r)


@SETTINGS
@given(seeds, shapes)
def test_jacobian_finite_differences(seed, shape):
    g = make_game(seed, shape)
    rng = np.random.default_rng(seed)
    supports = [tuple(sorted(rng.choice(k, size=rng.integers(1, k + 1), replace=False))) for k in shape]
    prof = []
    for k, T in zip(shape, supports):
        v = np.zeros(k)
        v[list(T)] = rng.dirichlet(np.ones(len(T)))
        prof.append(v)
    _, D = indifference_system(g, prof, supports)
    h = 1e-6
    fd = np.zeros_like(D)
    col = 0
    for n, T in enumerate(supports):
        for s in T[:-1]:
            for sgn in (1, -1):
                q = [v.copy() for v in prof]
                q[n][s] += sgn * h
                q[n][T[-1]] -= sgn * h  # the reference strategy absorbs the change
                E, _ = indifference_system(g, q, supports)
                fd[:, col] += sgn * E / (2 * h)
            col += 1
    if D.size:
        assert np.max(np.abs(fd - D)) / max(1.0, np.max(np.abs(D))) < 1e-6


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([(2, 2), (3, 3), (2, 2, 2)]))
def test_index_invariant_under_dominated_addition(seed, shape):
    g = make_game(seed, shape)
    recs = enumerate_equilibria(g)
    rng = np.random.default_rng(seed)
    n = int(rng.integers(len(shape)))
    # a new strategy for player n paying less than its worst payoff everywhere
    big_shape = tuple(k + (m == n) for m, k in enumerate(shape))
    pay = rng.normal(size=(len(shape),) + big_shape)
    pay[(slice(None),) + tuple(slice(0, k) for k in shape)] = g.payoffs
    idx = [slice(None)] * (len(shape) + 1)
    idx[0], idx[n + 1] = n, shape[n]
    pay[tuple(idx)] = g.payoffs[n].min() - 1 - rng.random(size=pay[tuple(idx)].shape)
    big = add_strategies(g, [["d"] if m == n else [] for m in range(len(shape))], pay)
    for r in recs:
        if not is_regular(g, r):
            continue
        lifted = tuple(np.append(v, 0.0) if m == n else v for m, v in enumerate(r.profile))
        assert index_regular(big, lifted) == index_regular(g, r)


@SETTINGS
@given(seeds, shapes)
def test_index_invariant_under_affine_rescaling(seed, shape):
    g = make_game(seed, shape)
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 10, size=len(shape))
    b = rng.normal(size=len(shape))
    h = Game(g.labels, g.payoffs * a.reshape((-1,) + (1,) * len(shape)) + b.reshape((-1,) + (1,) * len(shape)))
    for r in enumerate_equilibria(g):
        if is_regular(g, r):
            assert index_regular(h, r) == index_regular(g, r)


@SETTINGS
@given(seeds, st.sampled_from([(2, 2), (2, 3), (3, 3)]))
def test_strict_embedding_unique(seed, shape):
    g = make_game(seed, shape, integer=True)
    found = False
    for s in itertools.product(*(range(k) for k in shape)):
        if strictness_margin(g, s) > 0.1:
            found = True
            rep = embed_strict_dominators(g, s)
            assert rep.unique_verified and rep.equivalence_verified
            lifted_idx = index_regular(rep.embedded, rep.lifted)
            assert lifted_idx == index_regular(g, g.pure_profile(s)) == 1
    assume(found)


@SETTINGS
@given(seeds, shapes)
def test_dominance_keeps_supports(seed, shape):
    g = make_game(seed, shape, integer=True)
    reduced, _ = iterated_strict_dominance(g)
    for r in enumerate_equilibria(g):
        for n, T in enumerate(r.support):
            assert all(g.labels[n][s] in reduced.labels[n] for s in T)


@SETTINGS
@given(seeds, shapes)
def test_json_round_trip(seed, shape):
    g = make_game(seed, shape)
    back = Game.from_json(g.to_json())
    assert np.array_equal(back.payoffs, g.payoffs)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.75, 1.0))
def test_f0_agrees_with_f_on_upper_piece(x):
    assert abs(f0_sym(x) - f_sym(x)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(1e-4, 0.25))
def test_bonus_nonnegative(x, d):
    gl, gr = g_sym(x, d)
    assert gl >= 0 and gr == 0
    if x >= 0.75:
        assert gl == 0


@SETTINGS
@given(seeds, st.sampled_from([2, 3]), st.integers(8, 40))
def test_delaunay_oracles(seed, d, k):
    pts = np.random.default_rng(seed).uniform(size=(k, d))
    tri, wit = delaunay_lift(pts, seed=seed)
    assert circumball_margins(tri).min() > 1e-10
    assert volume_defect(tri) < 1e-9
