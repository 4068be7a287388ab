"""Constraint-guided text-to-SQL over annotated schema graphs.

The pipeline answers a natural-language question in three phases: retrieve
the relevant tables and attributes, solve a constrained minimum-cost walk
over the schema graph to connect them, and ask the LLM for the final query
against a summary view built from that walk.
"""

from .errors import (DdlError, ExtractionError, Infeasible, LlmError, ModelError,
                     PathsqlError, PhaseError, RetrievalEmptyError)
from .model import (AttributeDef, DatabaseModel, FkConstraint, M2MTriplet,
                    TableDef, TreePattern, load_dbm, load_dbm_dir, merge_schema,
                    validate_model)
from .ddl import emit_ddl, parse_ddl
from .graph import SchemaGraph, build_graph, core_subgraph
from .solver import (DecomposedPlan, PathProblem, Walk, check_walk,
                     decompose_solve, formulate_csp, solve_path)
from .view import ViewPlan, ViewSql, emit_view_sql, make_alias, plan_view
from .retrieve import (Question, RelevanceSet, SampleAggregate,
                       aggregate_samples, dive, render_prompt_a, retrieve_relevant)
from .tosql import FinalQuery, extract_sql, generate_query, render_prompt_c
from .llm import (CompletionRequest, HttpLlm, RecordingLlm, ReplayLlm,
                  ScriptedLlm, Transcript, prompt_digest)
from .pipeline import PipelineConfig, PipelineResult, answer_question
from .metrics import (ResultSet, SqlFootprint, coverage, execution_match,
                      sql_footprint, subset_match)
from .bench import BenchmarkReport, SqliteExecutor, run_benchmark, write_report
from .cdd import load_cdd

__version__ = "0.1.0"
