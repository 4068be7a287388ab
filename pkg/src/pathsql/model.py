"""Database model: tables, key constraints, and relationship-pattern annotations.

The model aggregates everything the rest of the pipeline needs to know about
a database: the schema (tables, primary/foreign keys), many-to-many join
tables, lookup tables, and star/snowflake pattern trees. It is loaded from
DDL text (see :mod:`pathsql.ddl`) and/or JSON documents, and is immutable
after construction.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace

from .errors import ModelError

log = logging.getLogger(__name__)

ROLE_CORE = "core"
ROLE_STAR_ROOT = "star_root"
ROLE_STAR_INNER = "star_inner"
ROLE_SNOWFLAKE_ROOT = "snowflake_root"
ROLE_SNOWFLAKE_INNER = "snowflake_inner"
ROLE_LOOKUP = "lookup"
ROLE_M2M_JOIN = "m2m_join"

# Meta keys in per-table JSON documents that are not attribute names.
_META_KEYS = {"NameField", "DescriptionField"}
_TABLE_ENTRY_KEYS = {"type", "primary", "path", "path_to_types", "NameField",
                     "DescriptionField", "columns"}
_RELATION_ENTRY_KEYS = {"type", "description", "sqlrelation", "foreign_relation",
                        "m2m_relation"}


@dataclass(frozen=True)
class AttributeDef:
    name: str
    sql_type: str = ""
    nullability_default: str = ""
    description: str = ""


@dataclass(frozen=True)
class TableDef:
    name: str
    attributes: tuple[AttributeDef, ...]
    primary_key: tuple[str, ...]
    description: str = ""

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if not self.name:
            raise ModelError("table name must be non-empty")
        if len(set(names)) != len(names):
            raise ModelError(f"table {self.name}: duplicate attribute names")
        if not self.primary_key:
            raise ModelError(f"table {self.name}: primary key must be non-empty")
        missing = [c for c in self.primary_key if c not in names]
        if missing:
            raise ModelError(f"table {self.name}: primary key columns {missing} not in attributes")

    def attribute_names(self):
        return [a.name for a in self.attributes]

    def attribute(self, name):
        for a in self.attributes:
            if a.name == name:
                return a
        raise ModelError(f"table {self.name}: no attribute {name!r}")


@dataclass(frozen=True)
class FkConstraint:
    from_table: str
    fk_columns: tuple[str, ...]
    to_table: str
    pk_columns: tuple[str, ...]
    kind: str = "many-to-one"  # or "one-to-one"

    def __post_init__(self):
        if len(self.fk_columns) != len(self.pk_columns) or not self.fk_columns:
            raise ModelError(
                f"constraint {self.from_table}->{self.to_table}: fk/pk column lists "
                "must be non-empty and of equal length")
        if self.kind not in ("many-to-one", "one-to-one"):
            raise ModelError(f"constraint {self.from_table}->{self.to_table}: bad kind {self.kind!r}")

    def pair(self):
        return frozenset((self.from_table, self.to_table))

    def sort_key(self):
        return (self.from_table, self.to_table, self.fk_columns, self.pk_columns)


@dataclass(frozen=True)
class M2MTriplet:
    left: str
    right: str
    join_table: str


@dataclass(frozen=True)
class TreePattern:
    kind: str  # "star" | "snowflake"
    root: str
    children: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("star", "snowflake"):
            raise ModelError(f"pattern {self.root}: bad kind {self.kind!r}")
        # structural check: rooted tree, every non-root has exactly one parent
        parents = {}
        for parent, kids in self.children.items():
            for k in kids:
                if k in parents:
                    raise ModelError(f"pattern {self.root}: {k} has two parents")
                parents[k] = parent
        if self.root in parents:
            raise ModelError(f"pattern {self.root}: root has a parent")
        # reachability from root (acyclicity follows from single-parent + rootedness)
        seen = {self.root}
        frontier = [self.root]
        while frontier:
            node = frontier.pop()
            for k in self.children.get(node, ()):
                if k in seen:
                    raise ModelError(f"pattern {self.root}: cycle through {k}")
                seen.add(k)
                frontier.append(k)
        unreachable = set(parents) - seen
        if unreachable:
            raise ModelError(f"pattern {self.root}: nodes not reachable from root: {sorted(unreachable)}")

    def nodes(self):
        out = [self.root]
        i = 0
        while i < len(out):
            out.extend(self.children_of(out[i]))
            i += 1
        return out

    def inner_tables(self):
        return [t for t in self.nodes() if t != self.root]

    def children_of(self, table):
        return list(self.children.get(table, ()))

    def leaf(self, table):
        return not self.children.get(table)

    def parent_of(self, table):
        for parent, kids in self.children.items():
            if table in kids:
                return parent
        return None

    def contains(self, table):
        return table == self.root or self.parent_of(table) is not None

    def branch_to(self, table):
        """Table sequence from the root (exclusive) down to `table` (inclusive)."""
        if table == self.root:
            return []
        chain = []
        node = table
        while node != self.root:
            chain.append(node)
            node = self.parent_of(node)
            if node is None:
                raise ModelError(f"pattern {self.root}: {table} not in pattern")
        chain.reverse()
        return chain


@dataclass(frozen=True)
class DatabaseModel:
    tables: dict[str, TableDef] = field(default_factory=dict)
    constraints: tuple[FkConstraint, ...] = ()
    m2m: tuple[M2MTriplet, ...] = ()
    lookup: tuple[str, ...] = ()
    patterns: tuple[TreePattern, ...] = ()

    def table(self, name):
        try:
            return self.tables[name]
        except KeyError:
            raise ModelError(f"unknown table {name!r}") from None

    def has_table(self, name):
        return name in self.tables

    def pattern_with_root(self, root):
        for p in self.patterns:
            if p.root == root:
                return p
        return None

    def pattern_containing_inner(self, table):
        for p in self.patterns:
            if table != p.root and p.contains(table):
                return p
        return None

    def m2m_join_tables(self):
        return {t.join_table for t in self.m2m}

    def constraints_between(self, a, b):
        """All FK constraints connecting tables a and b, either direction."""
        pair = frozenset((a, b))
        return [c for c in self.constraints if c.pair() == pair]

    def core_tables(self):
        return [t for t in self.tables if ROLE_CORE in classify_table(self, t)]


def classify_table(model: DatabaseModel, name: str) -> set[str]:
    """Role set for a table: pattern roots/inners, lookup, m2m join, core.

    A table is core iff it is not an inner table of any star/snowflake
    pattern; join tables and lookups remain core unless pattern-inner.
    """
    if not model.has_table(name):
        raise ModelError(f"unknown table {name!r}")
    roles = set()
    for p in model.patterns:
        if p.root == name:
            roles.add(ROLE_STAR_ROOT if p.kind == "star" else ROLE_SNOWFLAKE_ROOT)
        elif p.contains(name):
            roles.add(ROLE_STAR_INNER if p.kind == "star" else ROLE_SNOWFLAKE_INNER)
    if name in model.lookup:
        roles.add(ROLE_LOOKUP)
    if name in model.m2m_join_tables():
        roles.add(ROLE_M2M_JOIN)
    if ROLE_STAR_INNER not in roles and ROLE_SNOWFLAKE_INNER not in roles:
        roles.add(ROLE_CORE)
    return roles


def validate_model(model: DatabaseModel) -> list[str]:
    """Check all cross-entity invariants; returns diagnostics (empty = valid)."""
    diags = []

    def dangling(name, context):
        if not model.has_table(name):
            diags.append(f"dangling reference: {context} refers to unknown table {name!r}")
            return True
        return False

    for c in model.constraints:
        bad = dangling(c.from_table, f"constraint {c.from_table}->{c.to_table}")
        bad |= dangling(c.to_table, f"constraint {c.from_table}->{c.to_table}")
        if bad:
            continue
        src = model.table(c.from_table)
        dst = model.table(c.to_table)
        for col in c.fk_columns:
            if col not in src.attribute_names():
                diags.append(f"constraint {c.from_table}->{c.to_table}: unknown fk column {col!r}")
        for col in c.pk_columns:
            if col not in dst.attribute_names():
                diags.append(f"constraint {c.from_table}->{c.to_table}: unknown pk column {col!r}")

    for t in model.m2m:
        ok = True
        for name in (t.left, t.right, t.join_table):
            ok &= not dangling(name, f"m2m ({t.left}, {t.right}, {t.join_table})")
        if not ok:
            continue
        for side in (t.left, t.right):
            if not model.constraints_between(side, t.join_table):
                diags.append(
                    f"m2m pair not covered by constraints: ({side}, {t.join_table}) "
                    f"in triplet ({t.left}, {t.right}, {t.join_table})")

    inner_owner = {}
    for p in model.patterns:
        for name in p.nodes():
            dangling(name, f"pattern rooted at {p.root}")
        for name in p.inner_tables():
            if name in inner_owner and inner_owner[name] != p.root:
                diags.append(f"table {name} is inner in two patterns "
                             f"({inner_owner[name]} and {p.root})")
            inner_owner[name] = p.root
        for parent, kids in p.children.items():
            for kid in kids:
                if model.has_table(parent) and model.has_table(kid) \
                        and not model.constraints_between(parent, kid):
                    diags.append(f"pattern edge not covered by constraints: "
                                 f"({parent}, {kid}) in pattern rooted at {p.root}")

    for name in model.lookup:
        if dangling(name, "lookup set"):
            continue
        if name in inner_owner:
            diags.append(f"lookup table {name} is also pattern-inner (in {inner_owner[name]})")

    return diags


# ---------------------------------------------------------------------------
# JSON loading (DBM documents)


def _parse_table_entry(name, entry, base_dir):
    if not isinstance(entry, dict):
        raise ModelError(f"table entry {name!r} must be an object")
    for key in entry:
        if key not in _TABLE_ENTRY_KEYS:
            log.warning("table entry %s: ignoring unknown key %r", name, key)
    if "primary" not in entry:
        raise ModelError(f"table entry {name!r}: missing required key 'primary'")
    primary = tuple(entry["primary"])

    description = entry.get("DescriptionField", "")
    columns = {}  # name -> (type, default, description), insertion-ordered

    if "columns" in entry:  # merged layout
        for col, info in entry["columns"].items():
            columns[col] = (info.get("type", ""), info.get("default", ""),
                            info.get("description", ""))
    elif "path" in entry:  # split layout: annotations reference DDL files
        if base_dir is None:
            raise ModelError(f"table entry {name!r}: split layout needs a base directory")
        with open(os.path.join(base_dir, entry["path"]), encoding="utf-8") as fh:
            desc_doc = json.load(fh)
        description = description or desc_doc.get("DescriptionField", "")
        types_doc = {}
        types_path = entry.get("path_to_types", "")
        if types_path:
            with open(os.path.join(base_dir, types_path), encoding="utf-8") as fh:
                types_doc = json.load(fh)
        for col, desc in desc_doc.items():
            if col in _META_KEYS:
                continue
            tinfo = types_doc.get(col, {})
            columns[col] = (tinfo.get("type", ""), tinfo.get("default", ""), str(desc))
    else:
        raise ModelError(f"table entry {name!r}: missing required key 'columns' or 'path'")

    attrs = tuple(AttributeDef(col, sql_type=t, nullability_default=d, description=desc)
                  for col, (t, d, desc) in columns.items())
    return TableDef(name=name, attributes=attrs, primary_key=primary, description=description)


def _parse_relationship(key, entry, fks, m2ms):
    for k in entry:
        if k not in _RELATION_ENTRY_KEYS:
            log.warning("relationship %s: ignoring unknown key %r", key, k)
    if "sqlrelation" not in entry:
        raise ModelError(f"relationship {key!r}: missing required key 'sqlrelation'")
    rel = entry["sqlrelation"]
    names = [part.strip() for part in key.split(",")]
    if rel in ("M:1", "1:1"):
        fr = entry.get("foreign_relation")
        if fr is None:
            raise ModelError(f"relationship {key!r}: missing required key 'foreign_relation'")
        fks.append(FkConstraint(
            from_table=names[0],
            fk_columns=tuple(fr["FOREIGN"]),
            to_table=fr["foreign_relation_ref_table"],
            pk_columns=tuple(fr["foreign_relation_ref_table_keys"]),
            kind="one-to-one" if rel == "1:1" else "many-to-one"))
    elif rel == "M:M":
        mr = entry.get("m2m_relation")
        if mr is None:
            raise ModelError(f"relationship {key!r}: missing required key 'm2m_relation'")
        if "m2m_middle_table" not in mr:
            raise ModelError(f"relationship {key!r}: missing required key 'm2m_middle_table'")
        if len(names) != 2:
            raise ModelError(f"relationship {key!r}: M:M key must name two tables")
        m2ms.append(M2MTriplet(left=names[0], right=names[1],
                               join_table=mr["m2m_middle_table"]))
    else:
        raise ModelError(f"relationship {key!r}: unknown sqlrelation {rel!r}")


def _parse_pattern(entry):
    if "NameField" not in entry:
        raise ModelError("pattern entry: missing required key 'NameField'")
    root = entry["NameField"]
    children = {}
    if "children" in entry:  # flat parent -> child-list map
        for parent, kids in entry["children"].items():
            children[parent] = tuple(kids)
    else:  # nested form: child names are keys, values are sub-objects
        def walk(node_name, obj):
            kids = [k for k in obj if k not in _META_KEYS and k not in ("pattern",)]
            if kids:
                children[node_name] = tuple(kids)
            for k in kids:
                sub = obj[k]
                if isinstance(sub, dict):
                    walk(k, sub)
                elif isinstance(sub, (list, tuple)):
                    children[k] = tuple(sub)
        walk(root, entry)
    kind = entry.get("pattern")
    if kind is None:
        # no explicit tag: depth-1 trees are stars, deeper ones snowflakes
        depth2 = any(parent != root for parent in children)
        kind = "snowflake" if depth2 else "star"
    return TreePattern(kind=kind, root=root, children=children)


def load_dbm(documents, base_dir=None) -> DatabaseModel:
    """Build a DatabaseModel from DBM JSON documents.

    `documents` is a dict (or JSON text) with optional top-level keys
    "tables", "relationships", "patterns", and "lookup", using the key names
    of the per-table / relationship / pattern JSON formats ("primary",
    "sqlrelation", "foreign_relation", "m2m_middle_table", "m2m_side_tables",
    "NameField", "DescriptionField"). Tables may use the split layout
    (entries with "path"/"path_to_types" resolved against `base_dir`) or a
    merged layout with an inline "columns" map.
    """
    if isinstance(documents, (str, bytes)):
        documents = json.loads(documents)

    tables = {}
    for name, entry in documents.get("tables", {}).items():
        if name in tables:
            raise ModelError(f"duplicate table name {name!r}")
        tables[name] = _parse_table_entry(name, entry, base_dir)

    fks, m2ms = [], []
    for key, entry in documents.get("relationships", {}).items():
        _parse_relationship(key, entry, fks, m2ms)

    patterns = tuple(_parse_pattern(e) for e in documents.get("patterns", []))
    lookup = tuple(documents.get("lookup", []))

    model = DatabaseModel(tables=tables, constraints=tuple(fks), m2m=tuple(m2ms),
                          lookup=lookup, patterns=patterns)
    for c in model.constraints:
        for name in (c.from_table, c.to_table):
            if not model.has_table(name):
                raise ModelError(f"dangling table reference {name!r} in relationship "
                                 f"{c.from_table}->{c.to_table}")
    return model


def dump_dbm(model: DatabaseModel) -> dict:
    """Model as a merged-layout DBM document; inverse of load_dbm."""
    tables = {}
    for name, tdef in model.tables.items():
        entry = {
            "primary": list(tdef.primary_key),
            "columns": {a.name: {"type": a.sql_type, "default": a.nullability_default,
                                 "description": a.description}
                        for a in tdef.attributes},
        }
        if tdef.description:
            entry["DescriptionField"] = tdef.description
        tables[name] = entry

    relationships = {}
    for c in model.constraints:
        key = f"{c.from_table}, {c.to_table}"
        if key in relationships:  # parallel edges: keep the first, note the rest
            log.warning("dump_dbm: dropping parallel relationship %s", key)
            continue
        relationships[key] = {
            "sqlrelation": "1:1" if c.kind == "one-to-one" else "M:1",
            "foreign_relation": {
                "FOREIGN": list(c.fk_columns),
                "foreign_relation_ref_table": c.to_table,
                "foreign_relation_ref_table_keys": list(c.pk_columns),
            },
        }
    for t in model.m2m:
        relationships[f"{t.left}, {t.right}"] = {
            "sqlrelation": "M:M",
            "m2m_relation": {"m2m_middle_table": t.join_table},
        }

    patterns = [{"NameField": p.root, "pattern": p.kind,
                 "children": {parent: list(kids) for parent, kids in p.children.items()}}
                for p in model.patterns]
    return {"tables": tables, "relationships": relationships,
            "patterns": patterns, "lookup": list(model.lookup)}


def load_dbm_dir(path) -> DatabaseModel:
    """Load a DBM from a directory containing dbm.json plus per-table files."""
    with open(os.path.join(path, "dbm.json"), encoding="utf-8") as fh:
        doc = json.load(fh)
    return load_dbm(doc, base_dir=path)


def merge_schema(model: DatabaseModel, schema: DatabaseModel) -> DatabaseModel:
    """Overlay a DDL-derived schema (tables + constraints) onto DBM annotations.

    Tables and constraints from `schema` win; pattern/m2m/lookup annotations
    and any table descriptions present only in `model` are preserved.
    """
    tables = dict(schema.tables)
    for name, tdef in model.tables.items():
        if name not in tables:
            tables[name] = tdef
        elif tdef.description and not tables[name].description:
            tables[name] = replace(tables[name], description=tdef.description)
    seen = {c.sort_key() for c in schema.constraints}
    constraints = list(schema.constraints)
    constraints += [c for c in model.constraints if c.sort_key() not in seen]
    return DatabaseModel(tables=tables, constraints=tuple(constraints),
                         m2m=model.m2m, lookup=model.lookup, patterns=model.patterns)


# ---------------------------------------------------------------------------
# Table descriptions via LLM (column-sheet summarization)


def render_description_prompt(table: TableDef) -> str:
    lines = [f"Give me a very brief description of the {table.name} table.", ""]
    for a in table.attributes:
        lines.append(f"{a.name},,{a.description},{a.sql_type},")
    return "\n".join(lines)


def build_descriptions(model: DatabaseModel, llm) -> DatabaseModel:
    """Fill in missing table descriptions using the LLM; existing ones are kept."""
    from .llm import CompletionRequest  # local import to avoid a cycle

    tables = {}
    for name, tdef in model.tables.items():
        if tdef.description:
            tables[name] = tdef
            continue
        try:
            responses = llm.complete(CompletionRequest(
                prompt=render_description_prompt(tdef), n_samples=1))
        except Exception as exc:
            raise ModelError(f"description generation failed for table {name}: {exc}") from exc
        tables[name] = replace(tdef, description=responses[0].strip())
    return replace(model, tables=tables)
