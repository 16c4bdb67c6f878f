"""
Scoring a question-answering run
================================

The harness consumes QA records plus model replies (both JSON-lines) and
reports accuracy, frame budgets, and how much of each annotated target the
stage-1 selection covered.  Here we simulate the whole thing end to end on
seeded synthetic fixtures, once with the oracle localizer and once with a
random one, to show coverage separating the two.
"""

from pathlib import Path

from framesampler.simulate import SimulationConfig, simulate, write_outputs

out_dir = Path(__file__).parent / "output"

for localizer in ("oracle", "random"):
    output = simulate(
        SimulationConfig(
            n_items=20,
            seed=42,
            localizer=localizer,
            answerer="oracle",
            stage2_fps=0.5,
        )
    )
    report = output.report
    print(f"localizer = {localizer}")
    print(f"  accuracy      {report.accuracy:.3f}")
    print(f"  mean frames   {report.mean_total_frames:.1f}")
    print(f"  mean SD       {report.mean_sd:.4f} f/s")
    print(f"  mean coverage {report.mean_coverage:.3f}")
    run_dir = out_dir / f"qa_run_{localizer}"
    files = write_outputs(output, run_dir, timelines=False)
    print(f"  wrote {len(files)} files under {run_dir}\n")

# replies that cannot be parsed count as wrong, never as excluded
from framesampler import parse_choice

for reply in ["The answer is (B).", "C", "I am not sure."]:
    print(f"parse_choice({reply!r}) -> {parse_choice(reply)!r}")
