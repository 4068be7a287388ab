"""Final-query generation over the summary view.

Renders the view-plus-question prompt, samples several completions, extracts
the SQL from each, and selects by majority vote on normalized query text so
the result is deterministic and permutation-invariant.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources

from .errors import ExtractionError, PathsqlError
from .llm import CompletionRequest
from .retrieve import Question
from .view import ViewSql

DEFAULT_SAMPLES = 20
DEFAULT_TEMPERATURE = 0.2


@dataclass(frozen=True)
class FinalQuery:
    sql_text: str
    vote_count: int
    sample_total: int

    def __post_init__(self):
        if self.vote_count > self.sample_total:
            raise PathsqlError(f"vote_count {self.vote_count} > "
                               f"sample_total {self.sample_total}")


def _template(name):
    return resources.files("pathsql").joinpath(f"prompts/{name}").read_text(encoding="utf-8")


def render_prompt_c(q: Question, view: ViewSql, evidence: str | None = None,
                    schema_excerpt: str | None = None) -> str:
    """Question + view prompt; evidence/schema switch to the extended variant."""
    if evidence is None and schema_excerpt is None:
        return _template("prompt_c.txt").format(
            view_name=view.view_name, view_sql=view.sql_text, question=q.text)
    schema_section = (f"Here is a SQL schema for in MySQL: {schema_excerpt}\n"
                      if schema_excerpt else "")
    evidence_section = (f"Additional knowledge to answer: {evidence} "
                        if evidence else "")
    return _template("prompt_c_prime.txt").format(
        schema_section=schema_section, evidence_section=evidence_section,
        view_name=view.view_name, view_sql=view.sql_text, question=q.text)


_FENCE_RE = re.compile(r"```sql\s*\n?(.*?)```", re.DOTALL | re.IGNORECASE)
_BARE_FENCE_RE = re.compile(r"```\s*\n?(select\b.*?)```", re.DOTALL | re.IGNORECASE)


def extract_sql(raw: str) -> str:
    """First fenced sql block; failing that, a bare SELECT body."""
    m = _FENCE_RE.search(raw) or _BARE_FENCE_RE.search(raw)
    if m:
        sql = m.group(1).strip()
        if sql:
            return sql
    stripped = raw.strip()
    if re.match(r"select\b", stripped, re.IGNORECASE):
        return stripped
    raise ExtractionError(raw)


_KEYWORDS = frozenset("""
    select from where group by having order limit offset join inner left right
    full outer cross on as and or not in is null like between exists union all
    distinct case when then else end asc desc count sum avg min max ifnull
    coalesce round cast create view insert into values update set delete with
""".split())

_QUOTE_SPLIT_RE = re.compile(r"('(?:[^']|'')*')")


def normalize_sql(sql: str) -> str:
    """Collapse whitespace and lowercase keywords, leaving quoted strings alone."""
    parts = _QUOTE_SPLIT_RE.split(sql)
    out = []
    for i, part in enumerate(parts):
        if i % 2:  # quoted string
            out.append(part)
            continue
        part = re.sub(r"\s+", " ", part)
        part = re.sub(r"[A-Za-z_]\w*",
                      lambda m: m.group(0).lower()
                      if m.group(0).lower() in _KEYWORDS else m.group(0),
                      part)
        out.append(part)
    return "".join(out).strip().rstrip(";").rstrip()


def generate_query(q: Question, view: ViewSql, llm, samples: int = DEFAULT_SAMPLES,
                   temperature: float = DEFAULT_TEMPERATURE,
                   evidence: str | None = None,
                   schema_excerpt: str | None = None) -> FinalQuery:
    """Sample completions and return the modal normalized SQL (ties: smallest)."""
    if samples < 1:
        raise PathsqlError(f"samples must be >= 1, got {samples}")
    prompt = render_prompt_c(q, view, evidence=evidence, schema_excerpt=schema_excerpt)
    responses = llm.complete(CompletionRequest(
        prompt=prompt, n_samples=samples, temperature=temperature))
    extracted = []
    failures = []
    for r in responses:
        try:
            extracted.append(normalize_sql(extract_sql(r)))
        except ExtractionError as exc:
            failures.append(exc)
    if not extracted:
        raise ExtractionError(
            f"no SQL extracted from any of {samples} samples; "
            f"first raw answer: {failures[0].raw_text[:200]!r}")
    counts = Counter(extracted)
    best = min(counts, key=lambda s: (-counts[s], s))
    return FinalQuery(sql_text=best, vote_count=counts[best], sample_total=samples)
