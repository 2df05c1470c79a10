"""
A reduced end-to-end benchmark
==============================

The same pipeline the command line runs, on smaller LUTs so that it ends
in about a minute. ``lutbench run --generate`` with no config is the
full-size version.
"""

import tempfile
from pathlib import Path

from lutbench.experiment import ExperimentConfig, run

cfg = ExperimentConfig(lut_sizes=[100, 300], reference_size=1000,
                       components=[5, 10], restarts=2)

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp)
    run(cfg, out, generate_missing=True)
    print((out / "summary.txt").read_text())
    print("written:", sorted(str(p.relative_to(out)) for p in out.rglob("*.svg")))
