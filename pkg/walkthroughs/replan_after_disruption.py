"""Execute the bus plan step by step, knock the bus back a stop, and watch it recover.

A second run drops the bus capacity to zero, which no plan can get around,
so the run ends with a diagnosis of the goals it could not reach.

Run: python3 walkthroughs/replan_after_disruption.py
"""

import json
from pathlib import Path

import kmf
from kmf.runtime import advance, perturb, start_run
from kmf.syntax import parse_model

SCENARIOS = Path(kmf.__file__).resolve().parent / "data" / "scenarios"


def drive(run):
    while run.status in ("running", "replanning"):
        run = advance(run)
    return run


def show(run, since=0):
    for rec in run.log[since:]:
        extra = {k: v for k, v in rec.items() if k not in ("seq", "run", "before", "after")}
        print("  " + json.dumps(extra))


def main():
    model = parse_model((SCENARIOS / "bus.kmf").read_text())

    print("== displaced bus")
    run = start_run(model, "demo-1")
    run = advance(advance(run))  # pick up p1, drive to poi2
    run = perturb(run, add=["at(bus1, poi1)"], delete=["at(bus1, poi2)"])
    run = drive(run)
    show(run)
    print(f"  finished {run.status} after {run.executed} transitions")

    print("\n== bus with no seats")
    run = start_run(model, "demo-2")
    run = perturb(run, add=["capacity(bus1, 0)"], delete=["capacity(bus1, 2)"])
    run = drive(run)
    show(run)
    print(f"  finished {run.status}; unreachable: {', '.join(map(str, run.diagnosis.unsatisfied))}")


if __name__ == "__main__":
    main()
