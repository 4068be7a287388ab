"""Benchmark runner and report writer.

Per question the pipeline builds the view once, then draws S answer samples;
the question counts as solved when more than the threshold of those samples
execution-match the ground truth (default S=20, threshold 5). Reports are
written as JSON, an aligned text table, CSV, and matplotlib figures.
"""

from __future__ import annotations

import json
import sqlite3
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import PathsqlError
from .llm import CompletionRequest
from .metrics import ResultSet, coverage, execution_match, sql_footprint, subset_match
from .model import DatabaseModel
from .pipeline import PipelineConfig
from .retrieve import Question, retrieve_relevant
from .solver import decompose_solve
from .tosql import extract_sql, normalize_sql, render_prompt_c
from .view import emit_view_sql, plan_view

DEFAULT_SAMPLES = 20
DEFAULT_THRESHOLD = 5


class SqliteExecutor:
    """Runs SQL against a sqlite database and returns ResultSets."""

    def __init__(self, connection: sqlite3.Connection):
        self.conn = connection

    @classmethod
    def in_memory(cls, setup_script: str = ""):
        conn = sqlite3.connect(":memory:", check_same_thread=False)
        if setup_script:
            conn.executescript(setup_script)
        return cls(conn)

    def run_script(self, sql: str):
        self.conn.executescript(sql)

    def execute(self, sql: str) -> ResultSet:
        cur = self.conn.execute(sql)
        columns = tuple(d[0] for d in cur.description) if cur.description else ()
        return ResultSet(columns=columns, rows=tuple(tuple(r) for r in cur.fetchall()))


@dataclass
class QuestionRecord:
    question: str
    cover_t: float = 0.0
    cover_a: float = 0.0
    ex_votes: int = 0
    esx_votes: int = 0
    ex_solved: bool = False
    esx_solved: bool = False
    error: str | None = None


@dataclass
class BenchmarkReport:
    records: list[QuestionRecord] = field(default_factory=list)
    samples: int = DEFAULT_SAMPLES
    threshold: int = DEFAULT_THRESHOLD

    @property
    def aggregates(self):
        scored = [r for r in self.records if r.error is None]
        n = len(scored)
        return {
            "questions": len(self.records),
            "errored": len(self.records) - n,
            "cover_t": sum(r.cover_t for r in scored) / n if n else 0.0,
            "cover_a": sum(r.cover_a for r in scored) / n if n else 0.0,
            "ex_solved": sum(r.ex_solved for r in scored),
            "esx_solved": sum(r.esx_solved for r in scored),
        }

    def to_json(self) -> str:
        return json.dumps({
            "samples": self.samples,
            "threshold": self.threshold,
            "records": [vars(r) for r in self.records],
            "aggregates": self.aggregates,
        }, indent=2) + "\n"

    def to_text_table(self) -> str:
        headers = ["question", "cover_t", "cover_a", "EX", "ESX", "votes"]
        rows = []
        for r in self.records:
            if r.error is not None:
                rows.append([r.question, "-", "-", "err", "err", "-"])
            else:
                rows.append([r.question, f"{r.cover_t:.2f}", f"{r.cover_a:.2f}",
                             "yes" if r.ex_solved else "no",
                             "yes" if r.esx_solved else "no",
                             f"{r.ex_votes}/{self.samples}"])
        agg = self.aggregates
        rows.append(["mean/total", f"{agg['cover_t']:.2f}", f"{agg['cover_a']:.2f}",
                     f"{agg['ex_solved']}/{agg['questions']}",
                     f"{agg['esx_solved']}/{agg['questions']}", ""])
        widths = [max(len(headers[i]), *(len(row[i]) for row in rows))
                  for i in range(len(headers))]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        lines = [fmt.format(*headers), fmt.format(*("-" * w for w in widths))]
        lines += [fmt.format(*row) for row in rows]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["question,cover_t,cover_a,ex_solved,esx_solved,ex_votes,esx_votes,error"]
        for r in self.records:
            q = '"' + r.question.replace('"', '""') + '"'
            err = '"' + (r.error or "").replace('"', '""') + '"'
            lines.append(f"{q},{r.cover_t:.4f},{r.cover_a:.4f},{int(r.ex_solved)},"
                         f"{int(r.esx_solved)},{r.ex_votes},{r.esx_votes},{err}")
        return "\n".join(lines) + "\n"


def _evaluate_one(index, item, model, llm, executor, samples, threshold, config):
    record = QuestionRecord(question=item.get("name") or f"q{index + 1}")
    try:
        gt = executor.execute(item["gt_sql"])
        q = Question(text=item["question"], evidence=item.get("evidence"))
        relevance = retrieve_relevant(q, model, llm,
                                      n_samples=config.retrieve_samples,
                                      temperature=config.temperature)
        plan = decompose_solve(relevance, model, max_len=config.max_len)
        view_name = f"{config.view_name}_{index + 1}"
        view = emit_view_sql(plan_view(plan, relevance, model), view_name,
                             dialect=config.dialect)
        executor.run_script(f"drop view if exists {view_name};\n" + view.sql_text)

        record.cover_t, record.cover_a = coverage(
            sql_footprint(view.sql_text), sql_footprint(item["gt_sql"]))

        prompt = render_prompt_c(q, view, evidence=q.evidence)
        responses = llm.complete(CompletionRequest(
            prompt=prompt, n_samples=samples, temperature=config.temperature))
        for raw in responses:
            try:
                candidate = executor.execute(normalize_sql(extract_sql(raw)))
            except (PathsqlError, sqlite3.Error):
                continue
            if execution_match(candidate, gt):
                record.ex_votes += 1
            if subset_match(candidate, gt):
                record.esx_votes += 1
        record.ex_solved = record.ex_votes > threshold
        record.esx_solved = record.esx_votes > threshold
    except (PathsqlError, sqlite3.Error, KeyError) as exc:
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def run_benchmark(dataset, model: DatabaseModel, llm, executor,
                  samples: int = DEFAULT_SAMPLES, threshold: int = DEFAULT_THRESHOLD,
                  jobs: int = 1, config: PipelineConfig | None = None) -> BenchmarkReport:
    """Evaluate each dataset item ({question, evidence?, gt_sql, name?})."""
    config = config or PipelineConfig()
    report = BenchmarkReport(samples=samples, threshold=threshold)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_evaluate_one, i, item, model, llm, executor,
                                   samples, threshold, config)
                       for i, item in enumerate(dataset)]
            report.records = [f.result() for f in futures]
    else:
        report.records = [_evaluate_one(i, item, model, llm, executor,
                                        samples, threshold, config)
                          for i, item in enumerate(dataset)]
    return report


def load_dataset(path) -> list[dict]:
    """JSON lines of {question, evidence?, gt_sql, name?}."""
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                items.append(json.loads(line))
    return items


def render_figures(report: BenchmarkReport, out_dir) -> list[str]:
    """Coverage and vote-count bar charts as PNG files; returns written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scored = [r for r in report.records if r.error is None]
    labels = [r.question for r in scored]
    positions = range(len(scored))
    written = []

    fig, ax = plt.subplots(figsize=(max(4, len(scored) * 1.2), 3.5))
    ax.bar([p - 0.2 for p in positions], [r.cover_t for r in scored],
           width=0.4, label="cover_t")
    ax.bar([p + 0.2 for p in positions], [r.cover_a for r in scored],
           width=0.4, label="cover_a")
    ax.set_xticks(list(positions), labels, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("coverage")
    ax.legend()
    fig.tight_layout()
    path = out / "coverage.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(str(path))

    fig, ax = plt.subplots(figsize=(max(4, len(scored) * 1.2), 3.5))
    ax.bar([p - 0.2 for p in positions], [r.ex_votes for r in scored],
           width=0.4, label="EX votes")
    ax.bar([p + 0.2 for p in positions], [r.esx_votes for r in scored],
           width=0.4, label="ESX votes")
    ax.axhline(report.threshold, linestyle="--", linewidth=1, color="gray",
               label=f"threshold ({report.threshold})")
    ax.set_xticks(list(positions), labels, rotation=30, ha="right")
    ax.set_ylabel(f"matching samples (of {report.samples})")
    ax.legend()
    fig.tight_layout()
    path = out / "votes.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(str(path))
    return written


def write_report(report: BenchmarkReport, out_dir, figures: bool = True) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in (("report.json", report.to_json()),
                       ("report.txt", report.to_text_table()),
                       ("report.csv", report.to_csv())):
        (out / name).write_text(text, encoding="utf-8")
        written.append(str(out / name))
    if figures:
        written += render_figures(report, out_dir)
    return written
