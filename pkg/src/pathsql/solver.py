"""Minimum-cost constrained walk search over the schema graph.

Finds a walk that (C1) follows FK edges, (C2) visits all relevant tables,
(C3) crosses many-to-many join tables exactly once, directly between their
side tables, (C4) uses lookup tables only as enter-and-return detours, and
(C5) minimizes occurrences of tables outside the relevant set. Realized as
a layered branch-and-bound with cost pruning; `check_walk` is the
independent declarative checker the search results must satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Infeasible, ModelError
from .graph import SchemaGraph, build_graph
from .model import DatabaseModel, FkConstraint, M2MTriplet


@dataclass(frozen=True)
class PathProblem:
    graph: SchemaGraph
    targets: frozenset[str]
    m2m: tuple[M2MTriplet, ...] = ()
    lookup: frozenset[str] = frozenset()
    max_len: int | None = None

    def __post_init__(self):
        missing = self.targets - set(self.graph.nodes)
        if missing:
            raise ModelError(f"target tables absent from graph: {sorted(missing)}")
        if self.max_len is not None and self.max_len < len(self.targets):
            raise ModelError(f"max_len {self.max_len} < number of targets {len(self.targets)}")

    def triggered_m2m(self):
        """Triplets whose exactly-once constraint is active: both sides
        relevant, or the join table itself relevant."""
        return [t for t in self.m2m
                if (t.left in self.targets and t.right in self.targets)
                or t.join_table in self.targets]


@dataclass(frozen=True)
class Walk:
    steps: tuple[str, ...]
    cost: int
    edges: tuple[FkConstraint, ...] = ()


Branch = tuple[str, tuple[str, ...]]  # (root table, root-to-inner sequence, root exclusive)


@dataclass(frozen=True)
class DecomposedPlan:
    core_walk: Walk
    branches: tuple[Branch, ...] = ()


@dataclass
class SolveStats:
    nodes_expanded: int = 0
    depth_reached: int = 0
    horizon: int = 0


def formulate_csp(relta, model: DatabaseModel, max_len: int | None = None,
                  graph: SchemaGraph | None = None) -> PathProblem:
    """Build the walk problem for a relevance set over the (full) schema graph."""
    if graph is None:
        graph = build_graph(model)
    tables = list(relta.entries) if hasattr(relta, "entries") else list(relta)
    missing = [t for t in tables if t not in graph.nodes]
    if missing:
        raise ModelError(f"target tables absent from graph: {missing}")
    nodes = set(graph.nodes)
    m2m = tuple(t for t in model.m2m
                if {t.left, t.right, t.join_table} <= nodes)
    lookup = frozenset(t for t in model.lookup if t in nodes)
    return PathProblem(graph=graph, targets=frozenset(tables), m2m=m2m,
                       lookup=lookup, max_len=max_len)


# ---------------------------------------------------------------------------
# Declarative checker (conformance authority, independent of the search)


def check_walk(w: Walk, p: PathProblem) -> list[tuple[str, str]]:
    """Return violations as (constraint, message) pairs; empty list = ok."""
    violations = []
    steps = list(w.steps)
    n = len(steps)
    if n == 0:
        return [("C1", "walk is empty")]

    for a, b in zip(steps, steps[1:]):
        if not p.graph.has_edge(a, b):
            violations.append(("C1", f"no edge between {a} and {b}"))

    for t in sorted(p.targets):
        if t not in steps:
            violations.append(("C2", f"relevant table {t} not visited"))

    triggered = {t.join_table: t for t in p.triggered_m2m()}
    sides = {}
    for t in p.m2m:
        sides.setdefault(t.join_table, []).append({t.left, t.right})
    for k, side_sets in sides.items():
        occs = [r for r, s in enumerate(steps) if s == k]
        for r in occs:
            if 0 < r < n - 1:
                around = {steps[r - 1], steps[r + 1]}
                for expected in side_sets:
                    if around != expected:
                        violations.append((
                            "C3", f"join table {k} at step {r + 1} is not between "
                                  f"its side tables {sorted(expected)}"))
            elif k in triggered and n > 1:
                violations.append(("C3", f"join table {k} occurs at a walk end"))
        if k in triggered and len(occs) != 1:
            violations.append(("C3", f"join table {k} occurs {len(occs)} times, expected 1"))

    for t in sorted(p.lookup):
        occs = [r for r, s in enumerate(steps) if s == t]
        for r in occs:
            if n == 1:
                continue  # a lookup may stand alone as the whole walk
            if r == 0 or r == n - 1:
                violations.append(("C4", f"lookup {t} at a walk end (no return)"))
            elif steps[r - 1] != steps[r + 1]:
                violations.append(("C4", f"lookup {t} at step {r + 1}: predecessor "
                                         f"{steps[r - 1]} != successor {steps[r + 1]}"))

    true_cost = sum(1 for s in steps if s not in p.targets)
    if w.cost != true_cost:
        violations.append(("C5", f"cost {w.cost} != recomputed cost {true_cost}"))

    if p.max_len is not None and n > p.max_len:
        violations.append(("C1", f"walk length {n} exceeds max_len {p.max_len}"))

    if w.edges:
        if len(w.edges) != n - 1:
            violations.append(("C1", f"{len(w.edges)} edges for {n} steps"))
        else:
            for (a, b), e in zip(zip(steps, steps[1:]), w.edges):
                if e.pair() != frozenset((a, b)):
                    violations.append(("C1", f"edge {e.from_table}->{e.to_table} does not "
                                             f"connect {a} and {b}"))
    return violations


# ---------------------------------------------------------------------------
# Branch-and-bound search


class _Search:
    def __init__(self, p: PathProblem, horizon: int):
        self.p = p
        self.horizon = horizon
        self.targets = p.targets
        self.lookup = p.lookup
        self.triggered = {t.join_table for t in p.triggered_m2m()}
        self.sides = {}
        for t in p.m2m:
            self.sides.setdefault(t.join_table, []).append({t.left, t.right})
        self.best_key = None  # (cost, length, reversed steps)
        self.best_steps = None
        self.stats = SolveStats(horizon=horizon)

    def _complete_ok(self, steps):
        n = len(steps)
        if not self.targets <= set(steps):
            return False
        if n > 1:
            first, last = steps[0], steps[-1]
            if first in self.lookup or last in self.lookup:
                return False
            if first in self.triggered or last in self.triggered:
                return False
        for k in self.triggered:
            if steps.count(k) != 1:
                return False
        # interior side/return rules are enforced incrementally while extending
        return True

    def _may_extend(self, steps, counts, nxt):
        """Constraints on the past that adding `nxt` would violate."""
        prev = steps[-1]
        if len(steps) >= 2:
            if prev in self.lookup and steps[-2] != nxt:
                return False
            for expected in self.sides.get(prev, ()):
                if {steps[-2], nxt} != expected:
                    return False
        if nxt in self.triggered and counts.get(nxt, 0) >= 1:
            return False
        return True

    def run(self):
        nodes = self.p.graph.nodes  # already sorted
        for start in nodes:
            self._extend([start], {start: 1}, 0 if start in self.targets else 1)
        return self.best_steps, self.stats

    def _extend(self, steps, counts, cost):
        self.stats.nodes_expanded += 1
        self.stats.depth_reached = max(self.stats.depth_reached, len(steps))
        if self.best_key is not None and cost > self.best_key[0]:
            return
        if self._complete_ok(steps):
            key = (cost, len(steps), tuple(reversed(steps)))
            if self.best_key is None or key < self.best_key:
                self.best_key = key
                self.best_steps = tuple(steps)
        remaining = self.horizon - len(steps)
        if remaining <= 0:
            return
        needed = sum(1 for t in self.targets if counts.get(t, 0) == 0)
        needed += sum(1 for k in self.triggered
                      if k not in self.targets and counts.get(k, 0) == 0)
        if needed > remaining:
            return
        for nxt in self.p.graph.neighbors(steps[-1]):
            step_cost = 0 if nxt in self.targets else 1
            if self.best_key is not None and cost + step_cost > self.best_key[0]:
                continue
            if not self._may_extend(steps, counts, nxt):
                continue
            steps.append(nxt)
            counts[nxt] = counts.get(nxt, 0) + 1
            self._extend(steps, counts, cost + step_cost)
            counts[nxt] -= 1
            steps.pop()


def _edges_for(steps, graph):
    return tuple(graph.edge_constraint(a, b) for a, b in zip(steps, steps[1:]))


def solve_path_detailed(p: PathProblem) -> tuple[Walk, SolveStats]:
    """Optimal walk plus search statistics; raises Infeasible."""
    if p.max_len is not None:
        horizons = [p.max_len]
    else:
        # iterative deepening: shortest feasible horizon first
        start = max(1, len(p.targets)
                    + sum(1 for t in p.triggered_m2m() if t.join_table not in p.targets))
        bound = len(p.graph.nodes) + len(p.targets)
        horizons = list(range(start, max(start, bound) + 1))

    stats_total = SolveStats()
    for horizon in horizons:
        steps, stats = _Search(p, horizon).run()
        stats_total.nodes_expanded += stats.nodes_expanded
        stats_total.depth_reached = max(stats_total.depth_reached, stats.depth_reached)
        stats_total.horizon = horizon
        if steps is not None:
            cost = sum(1 for s in steps if s not in p.targets)
            return Walk(steps=steps, cost=cost, edges=_edges_for(steps, p.graph)), stats_total
    raise Infeasible(horizons[-1])


def solve_path(p: PathProblem) -> Walk:
    """Minimum-cost feasible walk (ties: shortest, then reversed-sequence order)."""
    walk, _ = solve_path_detailed(p)
    return walk


# ---------------------------------------------------------------------------
# Pattern decomposition: solve among core tables, attach tree branches


def decompose_solve(relta, model: DatabaseModel, max_len: int | None = None) -> DecomposedPlan:
    """Solve over core tables only; relevant pattern-inner tables become
    left-join branches from their pattern roots."""
    g = build_graph(model)
    from .graph import core_subgraph
    core = core_subgraph(g, model)

    tables = list(relta.entries) if hasattr(relta, "entries") else list(relta)
    targets = []
    raw_branches = []
    for t in tables:
        if t in core.nodes:
            if t not in targets:
                targets.append(t)
            continue
        pattern = model.pattern_containing_inner(t)
        if pattern is None:
            raise ModelError(f"relevant table {t!r} is neither core nor pattern-inner")
        if pattern.root not in core.nodes:
            raise ModelError(f"pattern root {pattern.root!r} for relevant table {t!r} "
                             "is unreachable in the core graph")
        if pattern.root not in targets:
            targets.append(pattern.root)
        raw_branches.append((pattern.root, tuple(pattern.branch_to(t))))

    nodes = set(core.nodes)
    problem = PathProblem(
        graph=core,
        targets=frozenset(targets),
        m2m=tuple(t for t in model.m2m if {t.left, t.right, t.join_table} <= nodes),
        lookup=frozenset(t for t in model.lookup if t in nodes),
        max_len=max_len)
    core_walk = solve_path(problem)

    # drop duplicates and branches that are prefixes of a longer branch
    unique = sorted(set(raw_branches))
    branches = tuple(
        (root, seq) for root, seq in unique
        if not any(root == r2 and len(seq) < len(s2) and s2[:len(seq)] == seq
                   for r2, s2 in unique))
    return DecomposedPlan(core_walk=core_walk, branches=branches)
