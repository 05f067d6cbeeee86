"""Command-line front end.

Exit codes: 0 success or verified, 1 verification failed, 2 input error,
3 budget exceeded.  Every common flag can also be set through an
environment variable (``EQIDX_TOL``, ``EQIDX_DELTA``, ``EQIDX_SEED``,
``EQIDX_MAX_SUPPORT``, ``EQIDX_JSON``).
"""
from __future__ import annotations

import hashlib
import json
import re
import sys
import time
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .constructions import embed_strict_dominators, load_game, verify_unique
from .equilibria import EnumerationOptions
from .errors import BudgetExceeded, EqIndexError, IndexDisagreement, NotApplicable, StructureError
from .game import Game
from .index import classify

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


def _r(x: float) -> float:
    return float(round(float(x), 12)) + 0.0


def _common(f):
    f = click.option("--json", "as_json", is_flag=True, envvar="EQIDX_JSON", help="Emit JSON.")(f)
    f = click.option("--max-support", type=int, default=10**6, show_default=True, envvar="EQIDX_MAX_SUPPORT",
                     help="Budget on support combinations.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True, envvar="EQIDX_SEED")(f)
    f = click.option("--delta", type=float, default=1e-4, show_default=True, envvar="EQIDX_DELTA",
                     help="Perturbation size for degree computations.")(f)
    f = click.option("--tol", type=float, default=1e-9, show_default=True, envvar="EQIDX_TOL")(f)
    return f


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load(spec: str) -> Game:
    try:
        return load_game(spec)
    except StructureError as exc:
        _fail(EXIT_INPUT, str(exc))


def _opts(tol, seed, max_support, **kw) -> EnumerationOptions:
    return EnumerationOptions(tol=tol, seed=seed, max_support=max_support, **kw)


def game_hash(game: Game) -> str:
    blob = json.dumps(game.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def parse_profile(game: Game, text: str):
    """Parse ``(t,l)`` (pure, labels or indices), ``uniform``, or a JSON nested list.

    JSON entries may be numbers or fraction strings such as ``"1/3"``.
    """
    text = text.strip()
    if text == "uniform":
        return game.uniform_profile()
    if text.startswith("[["):
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StructureError(f"invalid profile JSON at column {exc.colno}: {exc.msg}") from None
        if len(rows) != game.num_players:
            raise StructureError(f"profile lists {len(rows)} players, game has {game.num_players}")
        out = []
        for n, row in enumerate(rows):
            if len(row) != game.shape[n]:
                raise StructureError(f"player {n} profile has {len(row)} entries, expected {game.shape[n]}")
            out.append(np.array([float(Fraction(str(x))) for x in row]))
        return tuple(out)
    m = re.fullmatch(r"\(?\s*(.*?)\s*\)?", text)
    parts = [p.strip() for p in m.group(1).split(",")] if m else []
    if len(parts) != game.num_players:
        raise StructureError(f"pure profile {text!r} must name one strategy per player")
    idx = []
    for n, p in enumerate(parts):
        if p in game.labels[n]:
            idx.append(p)
        elif p.isdigit() and int(p) < game.shape[n]:
            idx.append(int(p))
        else:
            raise StructureError(f"player {n} has no strategy {p!r}")
    return game.pure_profile(idx)


def _fmt(x: float) -> str:
    s = f"{x:.6g}"
    return "0" if s == "-0" else s


def render_game(game: Game) -> str:
    """Aligned bimatrix table for two players, flat listing otherwise."""
    lines = [f"game {game.name or '(unnamed)'}: {' x '.join(map(str, game.shape))}"]
    if game.num_players == 2:
        cells = [[f"({_fmt(game.payoffs[0][i, j])}, {_fmt(game.payoffs[1][i, j])})"
                  for j in range(game.shape[1])] for i in range(game.shape[0])]
        rw = max(len(l) for l in game.labels[0])
        cw = [max(len(game.labels[1][j]), *(len(cells[i][j]) for i in range(game.shape[0])))
              for j in range(game.shape[1])]
        lines.append(" " * rw + " | " + " | ".join(l.center(w) for l, w in zip(game.labels[1], cw)))
        lines.append("-" * rw + "-+-" + "-+-".join("-" * w for w in cw))
        for i, lab in enumerate(game.labels[0]):
            lines.append(lab.ljust(rw) + " | " + " | ".join(c.rjust(w) for c, w in zip(cells[i], cw)))
    else:
        import itertools

        for prof in itertools.product(*(range(k) for k in game.shape)):
            labs = ",".join(game.labels[n][s] for n, s in enumerate(prof))
            vals = ", ".join(_fmt(game.payoffs[(n,) + prof]) for n in range(game.num_players))
            lines.append(f"  ({labs}) -> ({vals})")
    return "\n".join(lines)


def _profile_str(game: Game, prof) -> str:
    parts = []
    for n, v in enumerate(prof):
        items = [f"{game.labels[n][i]}:{_fmt(p)}" for i, p in enumerate(v) if p > 1e-9]
        parts.append("{" + ", ".join(items) + "}")
    return " ; ".join(parts)


@click.group()
@click.version_option(__version__, prog_name="eqindex")
def main():
    """Equilibria of finite games, their fixed-point indices, and unique-equilibrium embeddings."""


@main.command()
@click.argument("game")
@_common
@click.option("--timing", is_flag=True, help="Include wall-clock timing (breaks byte-identical output).")
def analyze(game, tol, delta, seed, max_support, as_json, timing):
    """Enumerate, index and classify every equilibrium of GAME (file or corpus name)."""
    g = _load(game)
    t0 = time.perf_counter()
    try:
        res = classify(g, _opts(tol, seed, max_support), delta=delta, seed=seed)
    except BudgetExceeded as exc:
        _fail(EXIT_BUDGET, str(exc))
    except IndexDisagreement as exc:
        _fail(EXIT_FAIL, str(exc))
    elapsed = time.perf_counter() - t0
    if as_json:
        report = {
            "tool": "eqindex",
            "version": __version__,
            "game": {"name": g.name, "hash": game_hash(g), "shape": list(g.shape)},
            "seed": seed,
            "tol": tol,
            "delta": delta,
            "equilibria": [
                {
                    "profile": [[_r(p) for p in v] for v in rep.equilibrium.profile],
                    "support": [[g.labels[n][i] for i in s] for n, s in enumerate(rep.equilibrium.support)],
                    "index": rep.index,
                    "method": rep.method,
                    "is_regular": rep.is_regular,
                    "is_isolated": bool(rep.equilibrium.is_isolated),
                    "is_sustainable": rep.is_sustainable,
                }
                for rep in res.reports
            ],
            "components": [
                {"size": len(c.members), "index": c.index, "bounding_radius": _r(c.bounding_radius),
                 "partial": bool(c.partial)}
                for c in res.components
            ],
            "phi_star": [k for k, r in enumerate(res.reports) if r.is_sustainable],
            "phi_plus": [i for i, c in enumerate(res.components) if c.index is not None and c.index > 0],
        }
        if timing:
            report["timing_s"] = round(elapsed, 3)
        click.echo(json.dumps(report, indent=2, sort_keys=True))
        return
    click.echo(render_game(g))
    click.echo(f"\n{len(res.records)} equilibria")
    for k, rep in enumerate(res.reports):
        tag = " sustainable" if rep.is_sustainable else ""
        click.echo(f"  [{k}] {_profile_str(g, rep.equilibrium.profile)}  index {rep.index:+d} "
                   f"({rep.method}){tag}")
    click.echo(f"{len(res.components)} components")
    for k, c in enumerate(res.components):
        kind = "point" if c.is_singleton else f"{len(c.members)} sampled points"
        click.echo(f"  C{k}: {kind}, index {c.index:+d}")
    click.echo("Phi*: " + (", ".join(f"[{k}]" for k, r in enumerate(res.reports) if r.is_sustainable) or "none"))
    click.echo("Phi+: " + (", ".join(f"C{i}" for i, c in enumerate(res.components) if c.index and c.index > 0) or "none"))
    if timing:
        click.echo(f"time: {elapsed:.3f}s")


@main.command("embed-strict")
@click.argument("game")
@click.argument("eq")
@_common
def embed_strict(game, eq, tol, delta, seed, max_support, as_json):
    """Embed the strict pure equilibrium EQ of GAME as a unique equilibrium."""
    g = _load(game)
    try:
        prof = parse_profile(g, eq)
        pure = tuple(int(np.argmax(v)) for v in prof)
        rep = embed_strict_dominators(g, pure, tol=tol, opts=_opts(tol, seed, max_support))
    except (StructureError, NotApplicable) as exc:
        _fail(EXIT_INPUT, str(exc))
    except BudgetExceeded as exc:
        _fail(EXIT_BUDGET, str(exc))
    ok = rep.unique_verified and rep.equivalence_verified
    if as_json:
        click.echo(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
    else:
        click.echo(render_game(rep.embedded))
        click.echo(f"added: {rep.added_labels}")
        click.echo(f"dominance trace: {[[l for _, l in r] for r in rep.dominance_trace]}")
        click.echo(f"unique: {str(rep.unique_verified).lower()}")
        click.echo(f"equivalent: {str(rep.equivalence_verified).lower()}")
    sys.exit(EXIT_OK if ok else EXIT_FAIL)


@main.command("verify-unique")
@click.argument("game")
@click.argument("eq")
@_common
def verify_unique_cmd(game, eq, tol, delta, seed, max_support, as_json):
    """Exit 0 iff EQ is the unique equilibrium of GAME."""
    g = _load(game)
    try:
        prof = parse_profile(g, eq)
        ok = verify_unique(g, prof, opts=_opts(tol, seed, max_support))
    except StructureError as exc:
        _fail(EXIT_INPUT, str(exc))
    except BudgetExceeded as exc:
        _fail(EXIT_BUDGET, str(exc))
    if as_json:
        click.echo(json.dumps({"game": g.name, "hash": game_hash(g), "unique": ok}, sort_keys=True))
    else:
        click.echo(f"unique: {str(ok).lower()}")
    sys.exit(EXIT_OK if ok else EXIT_FAIL)


@main.command("running-example")
@click.option("--delta", type=float, default=1e-3, show_default=True, envvar="EQIDX_DELTA",
              help="Weight of the convex witness in the final game.")
@click.option("--bonus-delta", type=float, default=0.1, show_default=True, help="Constant inside the bonus g.")
@click.option("--seed", type=int, default=0, show_default=True, envvar="EQIDX_SEED")
@click.option("--json", "as_json", is_flag=True, envvar="EQIDX_JSON")
def running_example_cmd(delta, bonus_delta, seed, as_json):
    """Run the coordination-game construction end to end and print its trace."""
    from .running_example import trace

    try:
        tr = trace(delta=delta, bonus_delta=bonus_delta, seed=seed)
    except (StructureError, EqIndexError) as exc:
        _fail(EXIT_FAIL, str(exc))
    if as_json:
        click.echo(json.dumps(tr, indent=2, sort_keys=True))
    else:
        click.echo(f"f fixed points: {tr['f_fixed_points']} (indices {tr['f_indices']})")
        click.echo(f"f0 fixed points: {tr['f0_fixed_points']}")
        click.echo(f"perturbed game (bonus delta {bonus_delta}): x = 1 unique: {str(tr['perturbed_unique']).lower()}")
        t = tr["triangulation"]
        click.echo(f"triangulation: {t['vertices']} vertices, {t['simplices']} simplices")
        fg = tr["final_game"]
        click.echo(f"final game: {fg['strategies']} strategies per player, delta {delta}")
        for e in fg["equilibria"]:
            click.echo(f"  equilibrium on supports {e['support']}")
        click.echo(f"delta = 0 symmetric scan unique: {str(tr['delta0_symmetric_unique']).lower()}")
        click.echo(f"unique: {str(tr['unique']).lower()}")
    sys.exit(EXIT_OK if tr["unique"] else EXIT_FAIL)


@main.command()
@click.argument("spec", default="running-example")
@click.option("--zeta", type=float, default=0.15, show_default=True)
@click.option("--theta-h", type=float, default=0.88, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, envvar="EQIDX_SEED")
def triangulate(spec, zeta, theta_h, seed):
    """Triangulation JSON for SPEC: ``running-example`` or a JSON file.

    The file holds either ``{"points": [...]}`` (plain Delaunay) or
    ``{"polytope": [...], "face": [...], "a": [...], "b": ..., "delta": ...}``
    (refinement near a face).
    """
    from .triangulation import (check_refinement, circumball_margins, delaunay_lift, refine_near_face,
                                running_example_triangulation)

    try:
        if spec == "running-example":
            sq = running_example_triangulation(zeta=zeta, theta_h=theta_h, seed=seed)
            click.echo(json.dumps(sq.to_dict(), indent=2, sort_keys=True))
            return
        p = Path(spec)
        if not p.is_file():
            _fail(EXIT_INPUT, f"no such file: {spec}")
        try:
            d = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            _fail(EXIT_INPUT, f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
        if "points" in d:
            tri, wit = delaunay_lift(d["points"], seed=seed)
            out = tri.to_dict(wit)
            out["min_circumball_margin"] = float(circumball_margins(tri).min())
            click.echo(json.dumps(out, indent=2, sort_keys=True))
            return
        for key in ("polytope", "face", "a", "b", "delta"):
            if key not in d:
                _fail(EXIT_INPUT, f"triangulation spec is missing field '{key}'")
        ref = refine_near_face(d["polytope"], d["face"], d["a"], d["b"], d["delta"], seed=seed)
        out = ref.to_dict()
        out["properties"] = dict(zip(("diameter", "separation"), check_refinement(ref)))
        click.echo(json.dumps(out, indent=2, sort_keys=True))
    except StructureError as exc:
        _fail(EXIT_INPUT, str(exc))
    except EqIndexError as exc:
        _fail(EXIT_FAIL, str(exc))


if __name__ == "__main__":
    main()
