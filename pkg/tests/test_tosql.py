import random

import pytest

from pathsql.errors import ExtractionError, PathsqlError
from pathsql.llm import ScriptedLlm
from pathsql.retrieve import Question
from pathsql.tosql import (FinalQuery, extract_sql, generate_query,
                           normalize_sql, render_prompt_c)
from pathsql.view import ViewSql

VIEW = ViewSql(view_name="v_answer",
               sql_text="create view v_answer as select\n  client.name as "
                        "client_name\nfrom client\n")
Q = Question("List client names.")


def test_prompt_c_contains_fixed_sentences():
    prompt = render_prompt_c(Q, VIEW)
    assert "I created a view table v_answer" in prompt
    assert "Absolutely NO columns renaming." in prompt
    assert "Absolutely NO HAVING operators." in prompt
    assert "Absolutely NO COUNT(*)." in prompt
    assert "Output '```sql...'. Do not explain." in prompt
    assert VIEW.sql_text in prompt
    assert Q.text in prompt


def test_prompt_c_prime_sections():
    base = render_prompt_c(Q, VIEW)
    with_evidence = render_prompt_c(Q, VIEW, evidence="names are lowercase")
    assert "Additional knowledge to answer: names are lowercase" in with_evidence
    assert "Additional knowledge" not in base
    with_schema = render_prompt_c(Q, VIEW, schema_excerpt="create table client (...)")
    assert with_schema.startswith("Here is a SQL schema for in MySQL:")
    # determinism: same arguments give byte-identical text
    assert render_prompt_c(Q, VIEW) == base


def test_extract_fenced_block():
    assert extract_sql("```sql\nselect 1\n```") == "select 1"


def test_extract_ignores_surrounding_prose():
    raw = "Sure! Here you go:\n```sql\nselect a from v\n```\nHope that helps."
    assert extract_sql(raw) == "select a from v"
    multi = "```sql\nselect 1\n```\n```sql\nselect 2\n```"
    assert extract_sql(multi) == "select 1"


def test_extract_bare_select():
    assert extract_sql("  SELECT a FROM v  ") == "SELECT a FROM v"


def test_extract_failure_carries_raw_text():
    with pytest.raises(ExtractionError) as err:
        extract_sql("I cannot answer")
    assert err.value.raw_text == "I cannot answer"


def test_normalize_collapses_and_lowercases_keywords():
    assert normalize_sql("SELECT  a\nFROM v  ;") == "select a from v"
    assert normalize_sql("select A From v where B LIKE 'Dev%'") == \
        "select A from v where B like 'Dev%'"


def test_normalize_idempotent_under_refencing():
    raw = "```sql\nSELECT a  FROM v\n```"
    once = normalize_sql(extract_sql(raw))
    again = normalize_sql(extract_sql(f"```sql\n{once}\n```"))
    assert once == again


def test_majority_vote_counts():
    answers = ["```sql\nselect a from v\n```"] * 11 + \
              ["```sql\nselect b from v\n```"] * 9
    llm = ScriptedLlm([answers])
    fq = generate_query(Q, VIEW, llm, samples=20)
    assert fq.sql_text == "select a from v"
    assert fq.vote_count == 11
    assert fq.sample_total == 20


def test_vote_is_permutation_invariant():
    answers = ["```sql\nselect a from v\n```"] * 8 + \
              ["```sql\nselect b from v\n```"] * 12
    rng = random.Random(5)
    results = set()
    for _ in range(5):
        shuffled = answers[:]
        rng.shuffle(shuffled)
        fq = generate_query(Q, VIEW, ScriptedLlm([shuffled]), samples=20)
        results.add((fq.sql_text, fq.vote_count))
    assert results == {("select b from v", 12)}


def test_vote_tie_breaks_lexicographically():
    answers = ["```sql\nselect b from v\n```", "```sql\nselect a from v\n```"]
    fq = generate_query(Q, VIEW, ScriptedLlm([answers]), samples=2)
    assert fq.sql_text == "select a from v"


def test_equivalent_formatting_votes_together():
    answers = ["```sql\nSELECT a FROM v\n```",
               "```sql\nselect a\nfrom v;\n```",
               "```sql\nselect zz from v\n```"]
    fq = generate_query(Q, VIEW, ScriptedLlm([answers]), samples=3)
    assert fq.sql_text == "select a from v"
    assert fq.vote_count == 2


def test_failed_extractions_are_skipped():
    answers = ["no idea", "```sql\nselect a from v\n```", "really no idea"]
    fq = generate_query(Q, VIEW, ScriptedLlm([answers]), samples=3)
    assert fq.sql_text == "select a from v"
    assert fq.vote_count == 1


def test_all_extractions_failing_raises():
    llm = ScriptedLlm([["nope", "still nope"]])
    with pytest.raises(ExtractionError):
        generate_query(Q, VIEW, llm, samples=2)


def test_final_query_invariant():
    with pytest.raises(PathsqlError):
        FinalQuery(sql_text="select 1", vote_count=3, sample_total=2)
    with pytest.raises(PathsqlError):
        generate_query(Q, VIEW, ScriptedLlm([]), samples=0)
