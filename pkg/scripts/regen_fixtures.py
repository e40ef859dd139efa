"""Regenerate the regression fixtures from the current pipeline.

    python3 scripts/regen_fixtures.py

Writes ``<name>.report.json`` next to every bundled protocol and the
fixed-seed transcript under ``tests/fixtures``.  Review the diff before
committing: the tests treat these files as ground truth.
"""
import json
from pathlib import Path

from kwhcheck.corpus import load_corpus
from kwhcheck.render import report_to_json
from kwhcheck.simulator import run_once
from kwhcheck.verifier import full_report

ROOT = Path(__file__).resolve().parent.parent


def main():
    for entry in load_corpus():
        entry.report_path.write_text(report_to_json(full_report(entry.ast())), encoding="utf-8")
        print("wrote", entry.report_path.name)
    four = next(e for e in load_corpus() if e.name == "four_card_and").ast()
    transcript = run_once(four, (0, 0), 42)
    out = ROOT / "tests" / "fixtures" / "four_card_and_00_seed42.json"
    out.write_text(json.dumps(transcript.to_dict(), indent=2) + "\n", encoding="utf-8")
    print("wrote", out.relative_to(ROOT))


if __name__ == "__main__":
    main()
