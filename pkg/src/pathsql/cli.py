"""Command-line interface.

Subcommands: `dbm build|validate` (model ingestion), `solve` (walk search),
`view` (summary view only), `ask` (full pipeline), `eval` (benchmark run
with report files and figures), and `explain` (dump run-dir artifacts).
Settings come from an optional key=value config file; flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import cdd
from .bench import SqliteExecutor, load_dataset, run_benchmark, write_report
from .errors import PathsqlError
from .graph import build_graph, dump_graph
from .llm import HttpLlm, ReplayLlm, Transcript
from .model import dump_dbm, load_dbm_dir, merge_schema, validate_model
from .pipeline import PipelineConfig, answer_question, format_walk
from .retrieve import Question, RelevanceSet
from .solver import check_walk, formulate_csp, solve_path_detailed
from .view import emit_view_sql, plan_view


def _read_config_file(path):
    """TOML-like key = value lines; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PathsqlError(f"config {path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value.strip("'\"")
    return values


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pathsql",
        description="Constraint-guided text-to-SQL over annotated schemas.")
    parser.add_argument("--config", help="key=value settings file (flags win)")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="DDL file describing the schema")
    common.add_argument("--dbm", help="directory with dbm.json annotations")
    common.add_argument("--mock", help="replay LLM transcript (JSON)")
    common.add_argument("--endpoint", help="chat-completion endpoint URL")
    common.add_argument("--llm-model", default="gpt-4-0125-preview",
                        help="model name for the HTTP endpoint")
    common.add_argument("--samples", type=int, help="answer samples (default 20)")
    common.add_argument("--retrieve-samples", type=int, default=5,
                        help="samples per relevance prompt (default 5)")
    common.add_argument("--temperature", type=float, default=0.2)
    common.add_argument("--max-len", type=int, help="walk length bound")
    common.add_argument("--run-dir", help="directory for phase artifacts")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dbm", parents=[common], help="build or validate a model")
    p.add_argument("action", choices=["build", "validate"])
    p.add_argument("--out", help="output JSON path for `build` (default stdout)")

    p = sub.add_parser("solve", parents=[common], help="solve a walk for given tables")
    p.add_argument("--tables", required=True, help="comma-separated target tables")

    p = sub.add_parser("view", parents=[common], help="build the summary view")
    p.add_argument("question", nargs="?", help="natural-language question")
    p.add_argument("--tables", help="skip retrieval: comma-separated tables")
    p.add_argument("--dialect", default="ansi", choices=["ansi", "mysql"])

    p = sub.add_parser("ask", parents=[common], help="answer a question end to end")
    p.add_argument("question")
    p.add_argument("--dialect", default="ansi", choices=["ansi", "mysql"])

    p = sub.add_parser("eval", parents=[common], help="run a benchmark and write reports")
    p.add_argument("--questions", help="JSONL dataset (default: bundled example)")
    p.add_argument("--db", help="sqlite database file to evaluate against")
    p.add_argument("--threshold", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("explain", parents=[common], help="dump run-dir phase artifacts")
    p.add_argument("--graph", action="store_true", help="also dump the schema graph")
    return parser


def _load_model(args):
    if not args.model and not args.dbm:
        model, _, _ = cdd.load_cdd()
        return model
    from .ddl import parse_ddl
    schema = None
    if args.model:
        schema = parse_ddl(Path(args.model).read_text(encoding="utf-8"))
    annotations = load_dbm_dir(args.dbm) if args.dbm else None
    if schema is not None and annotations is not None:
        return merge_schema(annotations, schema)
    return schema if schema is not None else annotations


def _make_llm(args):
    if args.mock and args.endpoint:
        raise PathsqlError("--mock and --endpoint are mutually exclusive")
    if args.mock:
        return ReplayLlm(Transcript.load(args.mock), mode="ordered")
    if args.endpoint:
        return HttpLlm(endpoint=args.endpoint, model=args.llm_model)
    raise PathsqlError("no LLM configured: pass --mock <transcript> or --endpoint <url>")


def _pipeline_config(args, dialect="ansi"):
    return PipelineConfig(
        retrieve_samples=args.retrieve_samples,
        answer_samples=args.samples or 20,
        temperature=args.temperature,
        max_len=args.max_len,
        dialect=dialect,
        run_dir=args.run_dir)


def _cmd_dbm(args):
    model = _load_model(args)
    if args.action == "validate":
        diags = validate_model(model)
        print(f"{len(diags)} diagnostics")
        for d in diags:
            print(f"  {d}")
        return 0 if not diags else 1
    text = json.dumps(dump_dbm(model), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_solve(args):
    model = _load_model(args)
    tables = [t.strip() for t in args.tables.split(",") if t.strip()]
    problem = formulate_csp(tables, model, max_len=args.max_len)
    walk, stats = solve_path_detailed(problem)
    print("walk: " + " -> ".join(walk.steps))
    print(f"cost: {walk.cost}")
    violations = check_walk(walk, problem)
    if violations:
        for code, message in violations:
            print(f"violation {code}: {message}")
    else:
        print("check: ok (C1-C5 satisfied)")
    print(f"stats: nodes_expanded={stats.nodes_expanded} "
          f"depth_reached={stats.depth_reached} horizon={stats.horizon}")
    return 0


def _cmd_view(args):
    model = _load_model(args)
    if args.tables:
        from .solver import decompose_solve
        tables = [t.strip() for t in args.tables.split(",") if t.strip()]
        relevance = RelevanceSet(entries={t: () for t in tables})
        plan = decompose_solve(relevance, model, max_len=args.max_len)
    else:
        if not args.question:
            print("error: `view` needs a question or --tables", file=sys.stderr)
            return 2
        from .retrieve import retrieve_relevant
        from .solver import decompose_solve
        llm = _make_llm(args)
        relevance = retrieve_relevant(Question(args.question), model, llm,
                                      n_samples=args.retrieve_samples,
                                      temperature=args.temperature)
        plan = decompose_solve(relevance, model, max_len=args.max_len)
    view = emit_view_sql(plan_view(plan, relevance, model), "v_answer",
                         dialect=args.dialect)
    sys.stdout.write(format_walk(plan))
    sys.stdout.write(view.sql_text)
    return 0


def _cmd_ask(args):
    model = _load_model(args)
    llm = _make_llm(args)
    result = answer_question(Question(args.question), model, llm,
                             _pipeline_config(args, dialect=args.dialect))
    sys.stdout.write(result.view.sql_text)
    print(result.query.sql_text)
    print(f"-- votes: {result.query.vote_count}/{result.query.sample_total}")
    return 0


def _cmd_eval(args):
    if args.questions:
        model = _load_model(args)
        dataset = load_dataset(args.questions)
    else:
        model, seed, dataset = cdd.load_cdd()
    if args.db:
        import sqlite3
        executor = SqliteExecutor(sqlite3.connect(args.db, check_same_thread=False))
    elif args.questions:
        executor = SqliteExecutor.in_memory()
    else:
        executor = SqliteExecutor.in_memory(cdd.setup_script())
    llm = _make_llm(args)
    report = run_benchmark(dataset, model, llm, executor,
                           samples=args.samples or 20, threshold=args.threshold,
                           jobs=args.jobs, config=_pipeline_config(args))
    sys.stdout.write(report.to_text_table())
    out_dir = args.run_dir or "report"
    written = write_report(report, out_dir, figures=not args.no_figures)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_explain(args):
    if args.graph:
        sys.stdout.write(dump_graph(build_graph(_load_model(args))))
    if not args.run_dir:
        if args.graph:
            return 0
        print("error: `explain` needs --run-dir or --graph", file=sys.stderr)
        return 2
    run_dir = Path(args.run_dir)
    found = False
    for name in ("relevance.json", "walk.txt", "view.sql", "final.sql"):
        path = run_dir / name
        if path.exists():
            found = True
            print(f"== {name} ==")
            sys.stdout.write(path.read_text(encoding="utf-8"))
    if not found:
        print(f"error: no phase artifacts in {run_dir}", file=sys.stderr)
        return 1
    return 0


_COMMANDS = {
    "dbm": _cmd_dbm,
    "solve": _cmd_solve,
    "view": _cmd_view,
    "ask": _cmd_ask,
    "eval": _cmd_eval,
    "explain": _cmd_explain,
}


def run_cli(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            given = set(argv if argv is not None else sys.argv[1:])
            for key, value in _read_config_file(args.config).items():
                if not hasattr(args, key):
                    raise PathsqlError(f"config {args.config}: unknown setting {key!r}")
                if "--" + key.replace("_", "-") in given:
                    continue  # explicit flags beat config values
                if key in ("samples", "retrieve_samples", "threshold",
                           "jobs", "max_len"):
                    value = int(value)
                elif key == "temperature":
                    value = float(value)
                setattr(args, key, value)
        return _COMMANDS[args.command](args)
    except PathsqlError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
