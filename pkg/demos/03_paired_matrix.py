"""A small paired experiment matrix, written out and rendered.

The full preset is 3 floors x {50,100,150,200} students x {6,7,8,9} min with
100 seeds per cell (about a minute on one core). This demo uses 20 seeds.
Run with ``python3 demos/03_paired_matrix.py [out_dir]``.
"""

import sys
from pathlib import Path

from egress_sim import MatrixSpec, run_matrix, summarize_direction
from egress_sim.experiment import read_results, write_batch
from egress_sim.report import render_markdown, render_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")

spec = MatrixSpec.preset(student_counts=(50, 150), runtimes=(360, 540), seeds_per_cell=20)
print(f"{spec.cell_count} cells x {spec.seeds_per_cell} seeds x 2 arms")
report = run_matrix(spec)

results, runs = write_batch(report, out)
print("wrote", results, "and", runs)

cells = read_results(results.read_text())
md = render_markdown(cells)
print("\n".join(md.split("\n\n")[:2]))  # heading and first table

summary = summarize_direction(cells)
for d in summary.layouts:
    print(
        f"{d.layout:12s} casualty change {d.mean_casualty_change:+6.2f} pp "
        f"(down in {d.casualty_down_fraction:.0%} of cells), "
        f"evacuation change {d.mean_evacuation_change:+6.2f} pp (up in {d.evacuation_up_fraction:.0%})"
    )

(out / "results.md").write_text(md)
(out / "results.svg").write_text(render_svg(cells))
print("rendered", out / "results.md", "and", out / "results.svg")
