"""Regenerate the bundled corpus JSON files from the payoff tables below."""
import json
import pathlib

from eqindex.game import game_from_table

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "eqindex" / "corpus"


def tables():
    yield "BoS", [["t", "b"], ["l", "r"]], [
        [(3, 2), (0, 0)],
        [(0, 0), (2, 3)],
    ]
    yield "G-hat", [["t", "b", "x"], ["l", "r", "y"]], [
        [(3, 2), (0, 0), (0, 1)],
        [(0, 0), (2, 3), (-2, 4)],
        [(1, 0), (4, -2), (-1, -1)],
    ]
    yield "G1", [["t", "m", "b"], ["l", "m", "r"]], [
        [(10, 10), (0, 0), (0, 0)],
        [(0, 0), (10, 10), (0, 0)],
        [(0, 0), (0, 0), (10, 10)],
    ]
    yield "G1-hat", [["t", "m", "b"], ["l", "m", "r", "x", "y", "z"]], [
        [(10, 10), (0, 0), (0, 0), (0, 11), (10, 5), (0, -10)],
        [(0, 0), (10, 10), (0, 0), (0, -10), (0, 11), (10, 5)],
        [(0, 0), (0, 0), (10, 10), (10, 5), (0, -10), (0, 11)],
    ]
    yield "coordination", [["L", "R"], ["L", "R"]], [
        [(1, 1), (0, 0)],
        [(0, 0), (1, 1)],
    ]
    yield "game1-2x2", [["t", "b"], ["l", "r"]], [
        [(1, 1), (0, 0)],
        [(0, 0), (0, 0)],
    ]
    # three players: rows (Tt, Tb, B), columns (Ll, Lr, R), matrices (W, Ew, Ee)
    W = [
        [(6, 6, 1), (0, 0, 1), (3, 3, 0)],
        [(0, 0, 1), (6, 6, 1), (3, 3, 0)],
        [(3, 0, 1), (3, 0, 1), (0, 3, 1)],
    ]
    Ew = [
        [(-3, 0, 4), (1, 4, 0), (1, 0, 1)],
        [(1, 4, 0), (1, 4, 0), (1, 0, 1)],
        [(3, 0, 0), (3, 0, 0), (0, 3, 0)],
    ]
    Ee = [
        [(1, 4, 0), (1, 4, 0), (3, 0, 1)],
        [(1, 4, 0), (-3, 0, 4), (3, 0, 1)],
        [(3, 0, 0), (3, 0, 0), (0, 3, 0)],
    ]
    yield "three-player", [["Tt", "Tb", "B"], ["Ll", "Lr", "R"], ["W", "Ew", "Ee"]], _stack3(W, Ew, Ee)
    W = [[(1, 1, 1), (1, 1, 0)], [(1, 0, 1), (0, 1, 1)]]
    E = [[(0, 1, 1), (1, 0, 1)], [(1, 0, 0), (0, 1, 0)]]
    yield "brandt-fischer", [["T", "B"], ["L", "R"], ["W", "E"]], _stack3(W, E)
    yield "G2", [["T"], ["L", "R"], ["W"]], [[[(1, 1, 1)], [(0, 1, 0)]]]
    W = [
        [(0, 3, 3), (0, 3, 3), (3, 0, 3)],
        [(3, 3, 0), (3, 3, 0), (3, 3, 3)],
        [(6, 6, 3), (2, 2, 3), (0, 7, 3)],
        [(2, 2, 3), (6, 6, 3), (0, 0, 3)],
        [(0, 0, 3), (7, 0, 3), (1, 1, 3)],
    ]
    O = [
        [(0, 3, 3), (0, 3, 3), (3, 0, 0)],
        [(3, 0, 3), (3, 0, 3), (0, 3, 3)],
        [(6, 6, 0), (2, 2, 0), (0, 7, 0)],
        [(2, 2, 0), (6, 6, 0), (0, 0, 0)],
        [(0, 0, 0), (7, 0, 0), (1, 1, 0)],
    ]
    yield "G3", [["A", "B", "C", "D", "E"], ["L", "M", "R"], ["W", "O"]], _stack3(W, O)
    yield "trivial-1x1", [["s"], ["t"]], [[(0, 0)]]


def _stack3(*mats):
    """Tables indexed [matrix][row][col] -> nested [row][col][matrix]."""
    rows, cols = len(mats[0]), len(mats[0][0])
    return [[[mats[k][i][j] for k in range(len(mats))] for j in range(cols)] for i in range(rows)]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, labels, table in tables():
        g = game_from_table(labels, table, name=name)
        (OUT / f"{name}.json").write_text(json.dumps(g.to_dict(), indent=1) + "\n")
        print(name, g.shape)


if __name__ == "__main__":
    main()
