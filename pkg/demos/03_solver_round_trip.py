"""What travels between ucflex and an external solver.

A small PCUC model is written to MPS, read back, and solved through the
command-template bridge. The demo prints the first lines of the file, shows
that writing twice gives identical bytes, and then tampers with a solution
file to show the bridge refusing a point that breaks a row.

Run:  python3 demos/03_solver_round_trip.py
"""

import tempfile
from pathlib import Path

from ucflex import VariantId, build_formulation, generate_random_instance, model_statistics
from ucflex.instance import GeneratorConfig
from ucflex.milp import evaluate_point
from ucflex.solver_bridge import SolverConfig, mps_text, read_mps, solve_model

instance = generate_random_instance(GeneratorConfig(seed=5, n_clusters=1, units_per_cluster=3, horizon=4))
model = build_formulation(instance, VariantId.PCUC)
print(model_statistics(model))

text = mps_text(model)
print("\n".join(text.splitlines()[:8]), "\n...")
print("byte-identical on rewrite:", text == mps_text(build_formulation(instance, VariantId.PCUC)))
back = read_mps(text)
print("variables and rows survive the round trip:",
      len(back.variables) == len(model.variables) and len(back.constraints) == len(model.constraints))

solver = SolverConfig.from_env()
out = solve_model(model, solver)
print(f"\nsubprocess solve: {out.status.value}, objective {out.objective:.2f}, solver said {out.reported_objective}")

# A solver that lies about a value. The bridge re-evaluates every point, so a
# row violation turns into an error status instead of a silent wrong answer.
with tempfile.TemporaryDirectory() as tmp:
    fake = Path(tmp) / "fake_solver.py"
    bad = dict(out.point)
    name = next(n for n in bad if n.startswith("p["))
    bad[name] += 1000.0
    body = "".join(f"{k} {v!r}\n" for k, v in bad.items())
    fake.write_text(
        "import sys\n"
        f"open(sys.argv[2], 'w').write('=status= optimal\\n' + {body!r})\n"
    )
    liar = SolverConfig(command=f"python3 {fake} {{model_path}} {{solution_path}}")
    rejected = solve_model(model, liar)
    print(f"tampered solution: {rejected.status.value} ({rejected.message[:80]})")
    broken = evaluate_point(model, bad).violations
    print("rows broken by the edit:", ", ".join(name for name, _ in broken[:4]))
