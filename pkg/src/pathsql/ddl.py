"""Parser and emitter for the supported CREATE TABLE dialect subset.

Supported statements: CREATE TABLE with column definitions (name, type,
optional NOT NULL/NULL/DEFAULT, optional COMMENT), a PRIMARY KEY clause, and
FOREIGN KEY ... REFERENCES clauses. Column definitions and key clauses each
occupy one line; unquoted COMMENT text runs to the end of the line (quoted
comments are also accepted). Anything else is rejected.
"""

from __future__ import annotations

import re

from .errors import DdlError
from .model import AttributeDef, DatabaseModel, FkConstraint, TableDef

_CREATE_RE = re.compile(r"^\s*CREATE\s+TABLE\s+(\w+)\s*(\()?\s*$", re.IGNORECASE)
_PK_RE = re.compile(r"^PRIMARY\s+KEY\s*\(([^)]*)\)\s*$", re.IGNORECASE)
_FK_RE = re.compile(
    r"^FOREIGN\s+KEY\s*\(([^)]*)\)\s*REFERENCES\s+(\w+)\s*\(([^)]*)\)\s*$",
    re.IGNORECASE)
_COLUMN_RE = re.compile(r"^(\w+)\s+([A-Za-z_]\w*(?:\s*\([\d\s,]*\))?)\s*(.*)$")
_COMMENT_SPLIT_RE = re.compile(r"\bCOMMENT\b\s*", re.IGNORECASE)


def _split_columns(text):
    return tuple(c.strip().split()[0] for c in text.split(",") if c.strip())


def _parse_comment(rest, lineno):
    """Split 'NOT NULL COMMENT ...' into (nullability/default part, comment)."""
    m = _COMMENT_SPLIT_RE.search(rest)
    if not m:
        return rest.strip(), ""
    head = rest[:m.start()].strip()
    tail = rest[m.end():].strip()
    if tail.startswith("'"):
        end = tail.find("'", 1)
        while end != -1 and tail[end:end + 2] == "''":
            end = tail.find("'", end + 2)
        if end == -1:
            raise DdlError("unterminated comment string", line=lineno)
        comment = tail[1:end].replace("''", "'")
    else:
        comment = tail
    return head, comment


def parse_ddl(ddl_text: str) -> DatabaseModel:
    """Parse CREATE TABLE statements into a partial model (tables + constraints).

    Forward references to tables defined later (or not at all) are not
    rejected here; validate_model reports dangling references.
    """
    tables: dict[str, TableDef] = {}
    constraints: list[FkConstraint] = []

    lines = ddl_text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line or line == ";":
            i += 1
            continue
        m = _CREATE_RE.match(lines[i])
        if not m:
            raise DdlError(f"expected CREATE TABLE, got {line!r}", line=i + 1, column=1)
        name = m.group(1)
        if name in tables:
            raise DdlError(f"duplicate table name {name!r}", line=i + 1)
        i += 1
        if not m.group(2):  # opening paren on its own line
            while i < len(lines) and not lines[i].strip():
                i += 1
            if i >= len(lines) or not lines[i].strip().startswith("("):
                raise DdlError(f"table {name}: expected '('", line=i + 1)
            i += 1

        attrs: list[AttributeDef] = []
        pk: tuple[str, ...] = ()
        fks: list[FkConstraint] = []
        closed = False
        while i < len(lines):
            body = lines[i].strip()
            i += 1
            if not body:
                continue
            if body.startswith(")"):
                closed = True
                break
            if body.endswith(","):
                body = body[:-1].rstrip()
            if pm := _PK_RE.match(body):
                cols = tuple(c.strip().split()[0] for c in pm.group(1).split(","))
                pk = cols  # strip ASC/DESC ordering suffixes
            elif fm := _FK_RE.match(body):
                fks.append(FkConstraint(
                    from_table=name,
                    fk_columns=_split_columns(fm.group(1)),
                    to_table=fm.group(2),
                    pk_columns=_split_columns(fm.group(3))))
            elif cm := _COLUMN_RE.match(body):
                col, sql_type, rest = cm.groups()
                nullability, comment = _parse_comment(rest, i)
                attrs.append(AttributeDef(name=col, sql_type=re.sub(r"\s+", "", sql_type),
                                          nullability_default=nullability,
                                          description=comment))
            else:
                raise DdlError(f"table {name}: cannot parse {body!r}", line=i, column=1)
        if not closed:
            raise DdlError(f"table {name}: unterminated CREATE TABLE", line=i)
        if not pk:
            raise DdlError(f"table {name}: missing PRIMARY KEY clause", line=i)
        try:
            tables[name] = TableDef(name=name, attributes=tuple(attrs), primary_key=pk)
        except Exception as exc:
            raise DdlError(f"table {name}: {exc}", line=i) from exc
        constraints.extend(fks)

    return DatabaseModel(tables=tables, constraints=tuple(constraints))


def emit_ddl(model: DatabaseModel) -> str:
    """Render tables + constraints back to DDL text; inverse of parse_ddl."""
    out = []
    by_table: dict[str, list[FkConstraint]] = {}
    for c in model.constraints:
        by_table.setdefault(c.from_table, []).append(c)

    for name, tdef in model.tables.items():
        body = []
        for a in tdef.attributes:
            parts = [a.name, a.sql_type or "varchar(100)"]
            if a.nullability_default:
                parts.append(a.nullability_default)
            if a.description:
                escaped = a.description.replace("'", "''")
                parts.append(f"COMMENT '{escaped}'")
            body.append("\t" + " ".join(parts))
        body.append("\t PRIMARY KEY (" + ", ".join(tdef.primary_key) + ")")
        for c in by_table.get(name, []):
            body.append("\t FOREIGN KEY (" + ", ".join(c.fk_columns) + ") REFERENCES "
                        + c.to_table + "(" + ", ".join(c.pk_columns) + ")")
        out.append(f"CREATE TABLE {name}\n(\n" + ",\n".join(body) + "\n)")
    return "\n\n".join(out) + ("\n" if out else "")
