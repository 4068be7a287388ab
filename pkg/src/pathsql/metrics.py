"""Result-set and SQL-footprint metrics for evaluating generated queries.

Execution accuracy (EX) compares row multisets under column permutation;
subset accuracy (ESX) asks whether some column injection of the ground truth
into the candidate reproduces the ground-truth rows. Coverage measures how
much of the ground-truth SQL's tables/attributes the candidate SQL mentions.
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations

from .errors import PathsqlError


class _Null:
    """Sentinel making NULL compare equal to NULL inside result sets."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NULL"


NULL = _Null()


def _canon(value):
    return NULL if value is None else value


@dataclass(frozen=True)
class ResultSet:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise PathsqlError(f"row arity {len(row)} != column count "
                                   f"{len(self.columns)}")
        object.__setattr__(self, "rows",
                           tuple(tuple(_canon(v) for v in row) for row in self.rows))

    def row_multiset(self):
        return Counter(self.rows)

    @classmethod
    def from_csv(cls, path):
        """CSV with a header row; empty cells become NULL, numerics are parsed."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [tuple(_parse_cell(c) for c in row) for row in reader]
        return cls(columns=tuple(header), rows=tuple(rows))


def _parse_cell(cell):
    if cell == "":
        return None
    for cast in (int, float):
        try:
            return cast(cell)
        except ValueError:
            pass
    return cell


def execution_match(f: ResultSet, g: ResultSet) -> bool:
    """EX: some column permutation of f yields g's row multiset."""
    if len(f.columns) != len(g.columns):
        return False
    if len(f.rows) != len(g.rows):
        return False
    g_rows = g.row_multiset()
    n = len(f.columns)
    if n == 0:
        return len(f.rows) == len(g.rows)
    # per-column value multisets must match under the permutation; prune with them
    f_cols = [Counter(row[i] for row in f.rows) for i in range(n)]
    g_cols = [Counter(row[j] for row in g.rows) for j in range(n)]
    candidates = [[i for i in range(n) if f_cols[i] == g_cols[j]] for j in range(n)]
    if any(not c for c in candidates):
        return False

    def assign(j, used):
        if j == n:
            return True
        for i in candidates[j]:
            if i not in used:
                if assign(j + 1, used | {i}):
                    return True
        return False

    if not assign(0, frozenset()):
        return False
    for perm in permutations(range(n)):
        if all(perm[j] in candidates[j] for j in range(n)):
            if Counter(tuple(row[perm[j]] for j in range(n)) for row in f.rows) == g_rows:
                return True
    return False


def subset_match(f: ResultSet, g: ResultSet) -> bool:
    """ESX: some injection of g's columns into f's projects f onto g's rows."""
    nf, ng = len(f.columns), len(g.columns)
    if ng > nf:
        return False
    if len(f.rows) != len(g.rows):
        return False
    if ng == 0:
        return True
    g_rows = g.row_multiset()
    f_cols = [Counter(row[i] for row in f.rows) for i in range(nf)]
    g_cols = [Counter(row[j] for row in g.rows) for j in range(ng)]
    candidates = [[i for i in range(nf) if f_cols[i] == g_cols[j]] for j in range(ng)]
    if any(not c for c in candidates):
        return False

    def search(j, used):
        if j == ng:
            proj = Counter(tuple(row[used[k]] for k in range(ng)) for row in f.rows)
            return proj == g_rows
        for i in candidates[j]:
            if i not in used:
                if search(j + 1, used + [i]):
                    return True
        return False

    return search(0, [])


# ---------------------------------------------------------------------------
# SQL footprint and coverage


@dataclass(frozen=True)
class SqlFootprint:
    tables: frozenset[str]
    attributes: frozenset[str]  # qualified "table.column" after alias resolution


_FROM_JOIN_RE = re.compile(
    r"\b(?:from|join)\s+`?(\w+)`?(?:\s+(?:as\s+)?`?(?!on\b|where\b|join\b|left\b|"
    r"right\b|inner\b|cross\b|group\b|order\b|limit\b|union\b)(\w+)`?)?",
    re.IGNORECASE)
_QUALIFIED_RE = re.compile(r"`?(\w+)`?\.`?(\w+)`?")
_STRING_RE = re.compile(r"'(?:[^']|'')*'")


def sql_footprint(sql: str) -> SqlFootprint:
    """Tables named in FROM/JOIN plus qualified attributes, aliases resolved."""
    if not sql or not sql.strip():
        raise PathsqlError("cannot take the footprint of empty SQL")
    text = _STRING_RE.sub("''", sql)
    tables = set()
    aliases = {}
    for m in _FROM_JOIN_RE.finditer(text):
        name, alias = m.group(1).lower(), m.group(2)
        tables.add(name)
        aliases[name] = name
        if alias:
            aliases[alias.lower()] = name
    attributes = set()
    for m in _QUALIFIED_RE.finditer(text):
        qualifier, col = m.group(1).lower(), m.group(2).lower()
        resolved = aliases.get(qualifier)
        if resolved:
            attributes.add(f"{resolved}.{col}")
    return SqlFootprint(tables=frozenset(tables), attributes=frozenset(attributes))


def coverage(f: SqlFootprint, g: SqlFootprint) -> tuple[float, float]:
    """(cover_t, cover_a): fraction of ground-truth tables/attributes mentioned."""
    if not g.tables:
        raise PathsqlError("ground-truth footprint has no tables")
    cover_t = len(f.tables & g.tables) / len(g.tables)
    cover_a = (len(f.attributes & g.attributes) / len(g.attributes)
               if g.attributes else 1.0)
    return cover_t, cover_a
