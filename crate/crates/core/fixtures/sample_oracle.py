#!/usr/bin/env python3
"""Independent reference scores for sample_responses.csv.

Exact rational arithmetic; missing answers exclude the participant.
Prints the general score, key-goal and sub-goal aggregates.
"""
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

here = Path(__file__).parent
structure = json.loads((here / "pharmacy_structure.json").read_text())
questionnaire = json.loads((here / "pharmacy_questionnaire.json").read_text())
top = len(questionnaire["scale"]) - 1

by_sub = {}
for q in questionnaire["questions"]:
    by_sub.setdefault(q["sub_goal"], []).append(q["id"])

path = Path(sys.argv[1]) if len(sys.argv) > 1 else here / "sample_responses.csv"
rows = [r for r in csv.DictReader(path.open()) if all(r[q] != "" for qs in by_sub.values() for q in qs)]

totals = {"general": Fraction(0)}
n_max = n_zero = 0
for row in rows:
    overall = Fraction(1)
    for key in structure["key_goals"]:
        miss = Fraction(1)
        for sub in key["sub_goals"]:
            qs = by_sub[sub["id"]]
            value = sum(Fraction(int(row[q]), top) for q in qs) / len(qs)
            totals[sub["id"]] = totals.get(sub["id"], 0) + value
            miss *= 1 - value
        totals[key["id"]] = totals.get(key["id"], 0) + (1 - miss)
        overall *= 1 - miss
    totals["general"] += overall
    n_max += overall == 1
    n_zero += overall == 0

n = len(rows)
print(f"participants {n}")
print(f"n_max {n_max}")
print(f"n_zero {n_zero}")
for name, total in totals.items():
    print(f"{name} {float(total / n)!r}")
