"""End-to-end orchestration: retrieve relevance, solve the walk, write SQL.

Each phase failure is wrapped with the phase name and whatever earlier
phases produced, and phase artifacts can be persisted to a run directory
(relevance JSON, walk text, view SQL, final SQL) for offline inspection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import PathsqlError, PhaseError
from .model import DatabaseModel
from .retrieve import Question, RelevanceSet, retrieve_relevant
from .solver import DecomposedPlan, decompose_solve
from .tosql import FinalQuery, generate_query
from .view import ViewSql, emit_view_sql, plan_view

DEFAULT_VIEW_NAME = "v_answer"


@dataclass(frozen=True)
class PipelineConfig:
    retrieve_samples: int = 5
    answer_samples: int = 20
    temperature: float = 0.2
    max_len: int | None = None
    view_name: str = DEFAULT_VIEW_NAME
    dialect: str = "ansi"
    run_dir: str | None = None


@dataclass
class PipelineResult:
    relevance: RelevanceSet | None = None
    plan: DecomposedPlan | None = None
    view: ViewSql | None = None
    query: FinalQuery | None = None
    phase_log: list[str] = field(default_factory=list)


def _persist(run_dir, name, text):
    if run_dir is None:
        return
    path = Path(run_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text, encoding="utf-8")


def format_walk(plan: DecomposedPlan) -> str:
    lines = [f"walk: {' -> '.join(plan.core_walk.steps)}",
             f"cost: {plan.core_walk.cost}"]
    for root, seq in plan.branches:
        lines.append(f"branch: {root} -> {' -> '.join(seq)}")
    return "\n".join(lines) + "\n"


def answer_question(q: Question, model: DatabaseModel, llm,
                    config: PipelineConfig | None = None) -> PipelineResult:
    """Run retrieve, solve, and to-sql in order; failures raise PhaseError
    carrying the partial result so earlier phase outputs stay inspectable."""
    config = config or PipelineConfig()
    result = PipelineResult()

    try:
        result.relevance = retrieve_relevant(
            q, model, llm, n_samples=config.retrieve_samples,
            temperature=config.temperature)
    except PathsqlError as exc:
        raise PhaseError("retrieve", exc, partial=result) from exc
    result.phase_log.append(
        "retrieve: " + ", ".join(
            f"{t}({', '.join(a)})" if a else t
            for t, a in result.relevance.entries.items()))
    _persist(config.run_dir, "relevance.json",
             json.dumps({t: list(a) for t, a in result.relevance.entries.items()},
                        indent=2) + "\n")

    try:
        result.plan = decompose_solve(result.relevance, model, max_len=config.max_len)
    except PathsqlError as exc:
        raise PhaseError("solve", exc, partial=result) from exc
    result.phase_log.append(f"solve: {' -> '.join(result.plan.core_walk.steps)} "
                            f"(cost {result.plan.core_walk.cost}, "
                            f"{len(result.plan.branches)} branches)")
    _persist(config.run_dir, "walk.txt", format_walk(result.plan))

    try:
        view_plan = plan_view(result.plan, result.relevance, model)
        result.view = emit_view_sql(view_plan, config.view_name, dialect=config.dialect)
    except PathsqlError as exc:
        raise PhaseError("solve", exc, partial=result) from exc
    _persist(config.run_dir, "view.sql", result.view.sql_text)

    try:
        result.query = generate_query(q, result.view, llm,
                                      samples=config.answer_samples,
                                      temperature=config.temperature,
                                      evidence=q.evidence)
    except PathsqlError as exc:
        raise PhaseError("to-sql", exc, partial=result) from exc
    result.phase_log.append(f"to-sql: {result.query.vote_count}/"
                            f"{result.query.sample_total} votes")
    _persist(config.run_dir, "final.sql", result.query.sql_text + "\n")
    return result
