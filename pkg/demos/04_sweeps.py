"""
Degrading two thirds of the relays
==================================

Two thirds of the terminals are forced to the same packet loss rate and
everything is rerun: new records, a new graph, a freshly trained model and
fresh plans. A coarse grid keeps this demo to a few minutes. The full grids
are the defaults of ``SweepConfig`` and ``cste sweep-plr``.

Sweeps score devices with the expected trust bin rather than the top-class
probability. A model that is sure a relay is bad gives that relay a high
top-class probability, which would mask the decline.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

from cste.experiment import ExperimentConfig, SweepConfig, sweep_plr

cfg = ExperimentConfig()
cfg = replace(
    cfg,
    gnn=replace(cfg.gnn, epochs=30),
    eval=replace(cfg.eval, n_tasks=20),
    sweep=SweepConfig(plr_grid=(0.0, 0.08, 0.16)),
)

with tempfile.TemporaryDirectory() as tmp:
    rows = sweep_plr(cfg, Path(tmp) / "plr_sweep.csv")
print(f"{'plr':>5}  {'planner':15s} mean avg trust")
for r in rows:
    print(f"{r['plr']:5.2f}  {r['planner']:15s} {r['mean_avg_trust']:.4f} +/- {r['std']:.4f}")
