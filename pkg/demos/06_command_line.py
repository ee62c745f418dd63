"""The toggleflow command line, driven from Python.

The same calls work from a shell, e.g. ``toggleflow solve --algo kosz ...``.
Run with ``python demos/06_command_line.py``.
"""

# %% Generate a graph, solve it twice and compare the reports
import json
import tempfile
from pathlib import Path

from toggleflow.cli import main

work = Path(tempfile.mkdtemp())
prefix = str(work / "net")
main(["generate", "random-gnm", "--n", "50", "--m", "150", "--seed", "4", "--rmax", "10", "--out", prefix])

for algo in ("kosz", "dual-kosz", "batched"):
    out = work / f"{algo}.json"
    code = main(["solve", "--algo", algo, "--graph", prefix + ".graph", "--supply", prefix + ".supply",
                 "--eps", "0.1", "--seed", "1", "--oracle", "--out", str(out)])
    rep = json.loads(out.read_text())
    print(f"{algo:>9}: exit {code}, K={rep['K']}, energy excess over optimum {rep['oracle_gap']:.2e}")

# %% A capped p-norm run reports non-convergence with exit code 2
code = main(["solve", "--algo", "pnorm-cycle", "--p", "3", "--max-iters", "10",
             "--graph", prefix + ".graph", "--supply", prefix + ".supply", "--out", str(work / "cap.json")])
print(f"pnorm-cycle capped at 10 iterations: exit {code}")

# %% Bench sweeps write CSV
main(["bench", "--sweep", "l:1,sqrt,K", "--kind", "grid", "--n", "15", "--algos", "batched,dual-kosz-naive"])
