"""Bundled example database: a small cloud/datacenter domain.

Twenty tables covering clients, datacenters, compute resources with a
many-to-many client assignment, a shared location lookup, two star patterns
(retention strategies with gift/bonus children; payments with typed payment
amounts) and one snowflake (resource pool configuration/runtime subtrees).
Ships with deterministic seed rows and three benchmark questions whose
ground-truth SQL is hand-checkable on the seed.
"""

from __future__ import annotations

import json
from importlib import resources

from .ddl import parse_ddl
from .model import DatabaseModel, load_dbm, merge_schema


def _data(name: str) -> str:
    return resources.files("pathsql").joinpath(f"data/cdd/{name}").read_text(encoding="utf-8")


def load_cdd() -> tuple[DatabaseModel, str, list[dict]]:
    """(model, seed SQL script, questions) for the bundled example database."""
    schema = parse_ddl(_data("cdd.ddl"))
    annotations = load_dbm(_data("dbm.json"))
    model = merge_schema(annotations, schema)
    seed = _data("seed.sql")
    questions = [json.loads(line) for line in _data("questions.jsonl").splitlines() if line.strip()]
    return model, seed, questions


def sqlite_schema(model: DatabaseModel) -> str:
    """Plain CREATE TABLE script (no comments) runnable on sqlite."""
    stmts = []
    by_table = {}
    for c in model.constraints:
        by_table.setdefault(c.from_table, []).append(c)
    for name, tdef in model.tables.items():
        body = [f"  {a.name} {a.sql_type or 'varchar(100)'}" for a in tdef.attributes]
        body.append(f"  primary key ({', '.join(tdef.primary_key)})")
        for c in by_table.get(name, []):
            body.append(f"  foreign key ({', '.join(c.fk_columns)}) "
                        f"references {c.to_table}({', '.join(c.pk_columns)})")
        stmts.append(f"create table {name} (\n" + ",\n".join(body) + "\n);")
    return "\n".join(stmts) + "\n"


def setup_script() -> str:
    """Schema plus seed rows, ready for sqlite executescript."""
    model, seed, _ = load_cdd()
    return sqlite_schema(model) + "\n" + seed
