"""Abstract schema graph: one node per table, one edge per FK constraint.

Edges are undirected for path-finding but each keeps its originating
FkConstraint so view emission knows which key columns to join on. Parallel
edges (distinct FKs between the same pair) stay distinct; adjacency treats
them as one neighbor and the solver picks the constraint with the
lexicographically smallest column names.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ModelError
from .model import DatabaseModel, FkConstraint, TreePattern, classify_table, validate_model


@dataclass(frozen=True)
class SchemaGraph:
    nodes: tuple[str, ...]
    edges: tuple[FkConstraint, ...]
    # adjacency: node -> sorted neighbor names (parallel edges collapsed)
    _adj: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False, compare=False)
    # (a, b) -> chosen constraint for join emission
    _edge_pick: dict[tuple[str, str], FkConstraint] = field(
        default_factory=dict, repr=False, compare=False)

    def neighbors(self, node):
        return self._adj.get(node, ())

    def degree(self, node):
        return len(self._adj.get(node, ()))

    def has_edge(self, a, b):
        return (a, b) in self._edge_pick

    def edge_constraint(self, a, b) -> FkConstraint:
        try:
            return self._edge_pick[(a, b)]
        except KeyError:
            raise ModelError(f"no edge between {a!r} and {b!r}") from None


def _index(nodes, edges) -> SchemaGraph:
    adj: dict[str, set[str]] = {n: set() for n in nodes}
    pick: dict[tuple[str, str], FkConstraint] = {}
    for c in edges:
        adj[c.from_table].add(c.to_table)
        adj[c.to_table].add(c.from_table)
        for key in ((c.from_table, c.to_table), (c.to_table, c.from_table)):
            prev = pick.get(key)
            if prev is None or c.sort_key() < prev.sort_key():
                pick[key] = c
    return SchemaGraph(
        nodes=tuple(sorted(nodes)),
        edges=tuple(sorted(edges, key=lambda c: c.sort_key())),
        _adj={n: tuple(sorted(s)) for n, s in adj.items()},
        _edge_pick=pick)


def build_graph(model: DatabaseModel) -> SchemaGraph:
    diags = validate_model(model)
    if diags:
        raise ModelError("invalid model: " + "; ".join(diags))
    return _index(list(model.tables), model.constraints)


def core_subgraph(g: SchemaGraph, model: DatabaseModel) -> SchemaGraph:
    core = {t for t in g.nodes if "core" in classify_table(model, t)}
    edges = [c for c in g.edges if c.from_table in core and c.to_table in core]
    return _index(core, edges)


def pattern_tree(model: DatabaseModel, root: str) -> TreePattern:
    tree = model.pattern_with_root(root)
    if tree is None:
        raise ModelError(f"table {root!r} is not a pattern root")
    return tree


def dump_graph(g: SchemaGraph) -> str:
    """Line-oriented edge-list dump (node count, then one edge per line)."""
    lines = [f"nodes {len(g.nodes)}", *g.nodes, f"edges {len(g.edges)}"]
    for c in g.edges:
        lines.append(f"{c.from_table} -- {c.to_table} "
                     f"[{', '.join(c.fk_columns)} -> {', '.join(c.pk_columns)}]")
    return "\n".join(lines) + "\n"
