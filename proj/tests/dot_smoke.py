"""Parse every DOT file produced by the CLI export with pydot."""
import pathlib
import subprocess
import sys
import tempfile

import pydot


def main() -> int:
    cli, data = sys.argv[1], sys.argv[2]
    with tempfile.TemporaryDirectory() as out:
        subprocess.run(
            [cli, "export", "--input", data, "--model", '[["Order"],["Invoice"]]',
             "--out", out],
            check=True,
        )
        files = sorted(pathlib.Path(out).glob("ekg_*.dot"))
        if not files:
            print("no DOT files written")
            return 1
        for path in files:
            graphs = pydot.graph_from_dot_file(str(path))
            if not graphs:
                print(f"{path.name}: parse failed")
                return 1
            g = graphs[0]
            nodes = [n for n in g.get_nodes() if n.get_name() not in ("node", "edge", "graph")]
            edges = g.get_edges()
            print(f"{path.name}: {len(nodes)} nodes, {len(edges)} edges")
            if len(nodes) != 14 or len(edges) != 8:
                return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
