"""Relevance retrieval: which tables and attributes does the question need?

Core tables are offered to the LLM as a JSON map of summaries; selected
pattern roots are explored breadth-first (each tree level asks the LLM
which children matter before descending). Every call draws several samples
and keeps the most frequently named elements, so single-sample noise is
smoothed out. Names the LLM invents are dropped with a warning.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from importlib import resources

from .errors import ModelError, PathsqlError, RetrievalEmptyError
from .llm import CompletionRequest
from .model import DatabaseModel, TableDef

log = logging.getLogger(__name__)

DESCRIPTION_KEY = "DescriptionField"

DEFAULT_SAMPLES = 5
DEFAULT_CAP = 8
DEFAULT_TEMPERATURE = 0.2


def _template(name):
    return resources.files("pathsql").joinpath(f"prompts/{name}").read_text(encoding="utf-8")


@dataclass(frozen=True)
class Question:
    text: str
    evidence: str | None = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise PathsqlError("question text must be non-empty")


@dataclass(frozen=True)
class RelevanceSet:
    # table name -> ordered attribute names (may be empty for tables picked
    # without specific attributes)
    entries: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def relevant_tables(self):
        return tuple(self.entries)

    def merged_with(self, other: "RelevanceSet") -> "RelevanceSet":
        entries = {t: attrs for t, attrs in self.entries.items()}
        for t, attrs in other.entries.items():
            seen = entries.get(t, ())
            entries[t] = seen + tuple(a for a in attrs if a not in seen)
        return RelevanceSet(entries=entries)


@dataclass(frozen=True)
class SampleAggregate:
    counts: dict[str, int]
    ranked: tuple[str, ...]
    cap: int


def aggregate_samples(samples, cap: int = DEFAULT_CAP) -> SampleAggregate:
    """Rank items by occurrence count across samples (desc), name (asc), keep cap."""
    if not samples:
        raise PathsqlError("aggregate_samples needs at least one sample")
    counts = Counter()
    for sample in samples:
        counts.update(sample)
    ranked = sorted(counts, key=lambda item: (-counts[item], item))[:cap]
    return SampleAggregate(counts=dict(counts), ranked=tuple(ranked), cap=cap)


def render_prompt_a(q: Question, tables: dict, attributes: dict) -> str:
    """Relevance prompt over table summaries and/or attribute descriptions.

    The special DescriptionField entry of `attributes` is shown in the JSON
    but never offered as a selectable element.
    """
    if not tables and not attributes:
        raise PathsqlError("render_prompt_a: tables and attributes are both empty")
    payload: dict[str, str] = {}
    payload.update(tables)
    payload.update(attributes)
    elements = list(tables) + [a for a in attributes if a != DESCRIPTION_KEY]
    return _template("prompt_a.txt").format(
        json_payload=json.dumps(payload, indent=2),
        question=q.text,
        element_list="[" + ", ".join(elements) + "]")


_LIST_RE = re.compile(r"\[([^\[\]]*)\]")


def parse_elements(raw: str, known) -> list[str]:
    """Pull the first bracketed list out of an LLM answer; keep known names only."""
    m = _LIST_RE.search(raw)
    body = m.group(1) if m else raw
    items = []
    for piece in body.split(","):
        item = piece.strip().strip("'\"").strip()
        if not item:
            continue
        if item in known:
            if item not in items:
                items.append(item)
        else:
            log.warning("dropping unknown element %r from LLM answer", item)
    return items


def _ask_elements(llm, prompt, known, n_samples, cap, temperature):
    responses = llm.complete(CompletionRequest(
        prompt=prompt, n_samples=n_samples, temperature=temperature))
    samples = [parse_elements(r, known) for r in responses]
    return aggregate_samples(samples, cap=cap).ranked


def table_summary(model: DatabaseModel, tdef: TableDef) -> str:
    """One-line table summary with its property names; pattern roots also
    list inner-table properties in dotted form so tree relevance is visible."""
    props = list(tdef.attribute_names())
    pattern = model.pattern_with_root(tdef.name)
    if pattern is not None:
        for inner in pattern.inner_tables():
            props.extend(f"{inner}.{a}" for a in model.table(inner).attribute_names())
    desc = tdef.description.rstrip()
    if desc and not desc.endswith("."):
        desc += "."
    head = f"{desc} " if desc else ""
    return f"{head}Properties of {tdef.name}: {', '.join(props)}. "


def _pattern_node_summary(model: DatabaseModel, pattern, table: str) -> str:
    """Summary of a pattern node including its subtree's dotted properties,
    so subtree relevance is judgeable before descending."""
    tdef = model.table(table)
    props = list(tdef.attribute_names())
    frontier = pattern.children_of(table)
    while frontier:
        inner = frontier.pop(0)
        props.extend(f"{inner}.{a}" for a in model.table(inner).attribute_names())
        frontier.extend(pattern.children_of(inner))
    desc = tdef.description.rstrip()
    if desc and not desc.endswith("."):
        desc += "."
    head = f"{desc} " if desc else ""
    return f"{head}Properties of {table}: {', '.join(props)}. "


def _attribute_payload(tdef: TableDef) -> dict:
    payload = {}
    if tdef.description:
        payload[DESCRIPTION_KEY] = tdef.description
    for a in tdef.attributes:
        payload[a.name] = a.description
    return payload


def _select_attributes(q, tdef, llm, n_samples, cap, temperature):
    prompt = render_prompt_a(q, {}, _attribute_payload(tdef))
    return _ask_elements(llm, prompt, set(tdef.attribute_names()),
                         n_samples, cap, temperature)


def dive(q: Question, root: str, llm, model: DatabaseModel, *,
         n_samples: int = DEFAULT_SAMPLES, cap: int = DEFAULT_CAP,
         temperature: float = DEFAULT_TEMPERATURE) -> RelevanceSet:
    """Breadth-first exploration of the pattern tree rooted at `root`.

    Internal nodes are asked for relevant children and own attributes in one
    call; leaves are asked for attributes only. Only LLM-selected children
    are expanded, and only nodes with selected attributes enter the result.
    """
    pattern = model.pattern_with_root(root)
    if pattern is None:
        raise ModelError(f"table {root!r} is not a pattern root")
    entries: dict[str, tuple[str, ...]] = {}
    queue = deque([root])
    while queue:
        r = queue.popleft()
        tdef = model.table(r)
        children = pattern.children_of(r)
        if not children:
            attrs = _select_attributes(q, tdef, llm, n_samples, cap, temperature)
        else:
            tables = {c: _pattern_node_summary(model, pattern, c) for c in children}
            prompt = render_prompt_a(q, tables, _attribute_payload(tdef))
            known = set(children) | set(tdef.attribute_names())
            selected = _ask_elements(llm, prompt, known, n_samples, cap, temperature)
            attrs = tuple(s for s in selected if s in set(tdef.attribute_names()))
            # expand selected children in the pattern's declared order
            queue.extend(c for c in children if c in selected)
        if attrs:
            entries[r] = tuple(attrs)
    return RelevanceSet(entries=entries)


def retrieve_relevant(q: Question, model: DatabaseModel, llm, *,
                      n_samples: int = DEFAULT_SAMPLES, cap: int = DEFAULT_CAP,
                      temperature: float = DEFAULT_TEMPERATURE) -> RelevanceSet:
    """Full retrieval: pick relevant core tables, then attributes per table,
    diving into pattern trees where the selected table is a pattern root."""
    core = model.core_tables()
    summaries = {t: table_summary(model, model.table(t)) for t in core}
    prompt = render_prompt_a(q, summaries, {})
    selected = _ask_elements(llm, prompt, set(core), n_samples, cap, temperature)

    result = RelevanceSet()
    for t in selected:
        if model.pattern_with_root(t) is not None:
            sub = dive(q, t, llm, model, n_samples=n_samples, cap=cap,
                       temperature=temperature)
            if t not in sub.entries:
                sub = RelevanceSet(entries={t: (), **sub.entries})
            result = result.merged_with(sub)
        else:
            attrs = _select_attributes(q, model.table(t), llm,
                                       n_samples, cap, temperature)
            result = result.merged_with(RelevanceSet(entries={t: tuple(attrs)}))
    if not result.entries:
        raise RetrievalEmptyError(q.text)
    return result
