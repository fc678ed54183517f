"""
Growing and dividing bacteria
=============================

Under the scaling semantics each bacterium grows by 10% whenever it moves
(up to its max-size of 1.1), secretes hydronium ions and divides into two
half-size daughters placed ``rB * s`` away from the parent.
"""
import numpy as np

from lbs import programs
from lbs.runtime import Simulator, load

model = load(programs.source("bacteria"))
sim = Simulator(model, seed=7)

divisions = []
for r in sim.run(max_steps=2000):
    bacs = [e for e in r.produced if e.name == "Bac"]
    if r.event.kind == "delay" and len(bacs) == 2:
        (parent,) = r.consumed
        divisions.append((r.time, parent.scale, bacs[0].scale))

print(f"t={sim.state.time:.2f}: {sim.state.counts()} after {sim.state.steps} steps")
print(f"{len(divisions)} divisions; first few (t, parent scale, daughter scale):")
for t, sp, sd in divisions[:5]:
    print(f"  {t:7.3f}  {sp:.4f} -> {sd:.4f}")

# %%
# Scales spread out as lineages divide: daughters start at half their
# parent's scale and each move multiplies by 1.1.
scales = np.array([e.scale for e in sim.state.entities if e.name == "Bac"])
if len(scales):
    hist, edges = np.histogram(np.log2(scales), bins=6)
    for n, lo in zip(hist, edges):
        print(f"  scale >= {2**lo:8.4f}: {n:4d}")
