"""Regenerate the recorded LLM transcripts and golden SQL files.

Run from the repository root: python3 tests/make_fixtures.py
"""
import json
from pathlib import Path

from pathsql.cdd import load_cdd
from pathsql.llm import RecordingLlm, ScriptedLlm
from pathsql.pipeline import PipelineConfig, answer_question
from pathsql.retrieve import Question

HERE = Path(__file__).parent

SCRIPTS = {
    "q1": [
        ["['client', 'datacenter']"],
        ["[name, gender]"],
        ["[name]"],
        ["```sql\nselect client_name, datacenter_name from v_answer "
         "where datacenter_name like 'dev%'\n```"],
    ],
    "q2": [
        ["['resource_pool']"],
        ["[config, runtime, name]"],
        ["[configcpu]"],
        ["[runtimecpu]"],
        ["[overheadlimit]"],
        ["[overallusage]"],
        ["```sql\nselect distinct resource_pool_name from v_answer "
         "where configcpu_overheadlimit > runtimecpu_overallusage + 100\n```"],
    ],
    "q3": [
        ["['payment']"],
        ["[payment_amount]"],
        ["[amount, supercharge, tax]"],
        ["[pama_id]"],
        ["[pama_id]"],
        ["```sql\nselect sum(ifnull(payment_amount_amount, 0)) + "
         "sum(ifnull(payment_amount_amount_2, 0)) from v_answer\n```"],
    ],
}


def main():
    model, _, questions = load_cdd()
    by_name = {q["name"]: q for q in questions}
    for name, script in SCRIPTS.items():
        llm = RecordingLlm(ScriptedLlm(script))
        result = answer_question(Question(by_name[name]["question"]), model, llm,
                                 PipelineConfig())
        llm.transcript.save(HERE / "transcripts" / f"{name}.json")
        (HERE / "goldens" / f"{name}_view.sql").write_text(result.view.sql_text)
        (HERE / "goldens" / f"{name}_final.sql").write_text(result.query.sql_text + "\n")
        print(name, "->", result.query.sql_text)


if __name__ == "__main__":
    main()
