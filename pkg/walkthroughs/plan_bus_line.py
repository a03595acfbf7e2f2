"""Plan the bundled bus scenario, then check the plan and its PDDL twin.

Run: python3 walkthroughs/plan_bus_line.py
"""

from pathlib import Path

import kmf
from kmf.engine import successors
from kmf.ontology import default_library, default_taxonomy, reusability_report, validate_against_taxonomy
from kmf.pddl import check_pair, generate
from kmf.planner import find_plan, validate_plan
from kmf.syntax import parse_model

SCENARIOS = Path(kmf.__file__).resolve().parent / "data" / "scenarios"


def main():
    model = parse_model((SCENARIOS / "bus.kmf").read_text())
    start = model.initial_state

    print("== moves available from the start state")
    for step in successors(start, list(model.transitions.values())):
        binding = ", ".join(f"{k}={v}" for k, v in sorted((str(k), str(v)) for k, v in step.substitution.items()))
        print(f"  {step.transition}({binding})")

    print("\n== shortest plan")
    plan = find_plan(model)
    for i, step in enumerate(plan.steps, 1):
        print(f"  {i}. {step.transition}")
    validate_plan(model, plan)  # raises if any step does not replay
    print(f"  cost {plan.cost}, replays cleanly")

    print("\n== taxonomy check")
    report = validate_against_taxonomy(model, default_taxonomy())
    print(f"  {len(report.violations)} violations, {len(report.warnings)} warnings")

    print("\n== reuse against the bundled library")
    reuse = reusability_report(model, default_library())
    print(f"  {reuse.reused}/{reuse.total} entities already in the library ({float(reuse.index):.2f})")

    print("\n== PDDL")
    domain, problem = generate(model, name="bus")
    check_pair(domain.text, problem.text)
    print(f"  domain  sha256 {domain.hash[:16]}... ({len(domain.text.splitlines())} lines)")
    print(f"  problem sha256 {problem.hash[:16]}... ({len(problem.text.splitlines())} lines)")


if __name__ == "__main__":
    main()
