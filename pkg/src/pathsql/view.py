"""Summary-view construction: join along the walk, project under aliases.

Core-walk tables are combined with inner joins in walk order; pattern
branches hang off their roots as chains of left joins. Every visit of a
table becomes a distinct occurrence with its own alias so repeated tables
(e.g. the same fact table reached through two branches) stay distinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PathsqlError
from .model import DatabaseModel
from .solver import DecomposedPlan, Walk


@dataclass(frozen=True)
class OccRef:
    table: str
    index: int  # 1-based occurrence index

    def alias(self):
        name = self.table.lower()
        return name if self.index == 1 else f"{name}_{self.index}"


@dataclass(frozen=True)
class JoinSpec:
    target: OccRef
    kind: str  # "inner" | "left"
    # equality pairs of qualified columns, pk side first: ((occ, col), (occ, col))
    on: tuple[tuple[tuple[OccRef, str], tuple[OccRef, str]], ...]


@dataclass(frozen=True)
class ViewPlan:
    base_table: OccRef
    joins: tuple[JoinSpec, ...]
    projections: tuple[tuple[OccRef, str, str], ...]  # (occurrence, attribute, alias)

    def occurrences(self):
        return [self.base_table] + [j.target for j in self.joins]


@dataclass(frozen=True)
class ViewSql:
    view_name: str
    sql_text: str


def make_alias(table: str, occurrence: int, attribute: str,
               max_len: int = 64, taken: set | None = None) -> str:
    """Collision-free alias: table_attribute, with an occurrence suffix for
    repeat visits and a numeric disambiguator when truncation collides."""
    if max_len < 8:
        raise PathsqlError(f"alias max_len {max_len} < 8")
    base = f"{table}_{attribute}".lower()
    if occurrence > 1:
        base += f"_{occurrence}"
    alias = base[:max_len]
    if taken is not None:
        k = 2
        while alias in taken:
            suffix = f"_{k}"
            alias = base[:max_len - len(suffix)] + suffix
            k += 1
        taken.add(alias)
    return alias


def _pick_constraint(model, a, b):
    cons = model.constraints_between(a, b)
    if not cons:
        raise PathsqlError(f"internal error: no FK between consecutive tables {a} and {b}")
    return min(cons, key=lambda c: c.sort_key())


def _on_pairs(constraint, prev_occ: OccRef, new_occ: OccRef):
    """Qualified equality pairs for joining new_occ to prev_occ, pk side first."""
    if constraint.from_table == prev_occ.table and constraint.to_table == new_occ.table:
        fk_occ, pk_occ = prev_occ, new_occ
    elif constraint.to_table == prev_occ.table and constraint.from_table == new_occ.table:
        fk_occ, pk_occ = new_occ, prev_occ
    elif constraint.from_table == constraint.to_table:  # self-referential FK
        fk_occ, pk_occ = prev_occ, new_occ
    else:
        raise PathsqlError(f"internal error: constraint {constraint.from_table}->"
                           f"{constraint.to_table} does not join {prev_occ.table} "
                           f"and {new_occ.table}")
    return tuple(((pk_occ, pk_col), (fk_occ, fk_col))
                 for fk_col, pk_col in zip(constraint.fk_columns, constraint.pk_columns))


def plan_view(plan_input, relta, model: DatabaseModel) -> ViewPlan:
    """Turn a solved walk (or decomposed plan) plus the relevance set into a
    join/projection plan for the summary view."""
    if isinstance(plan_input, Walk):
        plan_input = DecomposedPlan(core_walk=plan_input, branches=())
    walk = plan_input.core_walk

    occ_count: dict[str, int] = {}

    def new_occ(table):
        occ_count[table] = occ_count.get(table, 0) + 1
        return OccRef(table, occ_count[table])

    walk_occs = [new_occ(walk.steps[0])]
    joins: list[JoinSpec] = []
    for i, table in enumerate(walk.steps[1:]):
        prev = walk_occs[-1]
        occ = new_occ(table)
        constraint = walk.edges[i] if walk.edges else _pick_constraint(model, prev.table, table)
        joins.append(JoinSpec(target=occ, kind="inner",
                              on=_on_pairs(constraint, prev, occ)))
        walk_occs.append(occ)

    root_occ = {o.table: o for o in reversed(walk_occs)}  # first occurrence wins
    for root, seq in plan_input.branches:
        if root not in root_occ:
            raise PathsqlError(f"internal error: branch root {root} not in core walk")
        prev = root_occ[root]
        for table in seq:
            occ = new_occ(table)
            constraint = _pick_constraint(model, prev.table, table)
            joins.append(JoinSpec(target=occ, kind="left",
                                  on=_on_pairs(constraint, prev, occ)))
            prev = occ

    entries = relta.entries if hasattr(relta, "entries") else relta
    taken: set[str] = set()
    projections = []
    for occ in [walk_occs[0]] + [j.target for j in joins]:
        if occ.table not in entries:
            continue
        tdef = model.table(occ.table)
        cols = list(tdef.primary_key)
        cols += [a for a in entries[occ.table] if a not in cols]
        for col in cols:
            alias = make_alias(occ.table, occ.index, col, taken=taken)
            projections.append((occ, col, alias))

    return ViewPlan(base_table=walk_occs[0], joins=tuple(joins),
                    projections=tuple(projections))


def emit_view_sql(plan: ViewPlan, view_name: str, dialect: str = "ansi") -> ViewSql:
    """Render CREATE VIEW text; identifiers are lowercase, MySQL adds backticks."""
    if dialect not in ("ansi", "mysql"):
        raise PathsqlError(f"unknown dialect {dialect!r}")
    limit = 64
    if len(view_name) > limit:
        raise PathsqlError(f"view name {view_name!r} exceeds the {limit}-char identifier limit")

    def q(identifier):
        identifier = identifier.lower()
        return f"`{identifier}`" if dialect == "mysql" else identifier

    def qualified(occ_col):
        occ, col = occ_col
        return f"{q(occ.alias())}.{q(col)}"

    def table_ref(occ):
        name = q(occ.table)
        return name if occ.index == 1 else f"{name} as {q(occ.alias())}"

    for _, _, alias in plan.projections:
        if len(alias) > limit:
            raise PathsqlError(f"alias {alias!r} exceeds the {limit}-char identifier limit")

    select_lines = [f"  {qualified((occ, col))} as {q(alias)}"
                    for occ, col, alias in plan.projections]
    if not select_lines:  # no projected tables: fall back to everything
        select_lines = [f"  {q(plan.base_table.alias())}.*"]

    lines = [f"create view {q(view_name)} as select", ",\n".join(select_lines),
             f"from {table_ref(plan.base_table)}"]
    for j in plan.joins:
        kw = "join" if j.kind == "inner" else "left join"
        conds = " and ".join(f"{qualified(a)} = {qualified(b)}" for a, b in j.on)
        lines.append(f"{kw} {table_ref(j.target)} on {conds}")
    return ViewSql(view_name=view_name, sql_text="\n".join(lines) + "\n")
