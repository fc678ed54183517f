"""
Microtubule assembly
====================

Ten free parts sit on a grid in the cytosol. Neighbours are close enough to
talk on ``MTConstruction``; each successful exchange glues the receiver to
the sender and threads a private channel between them, so chains
``MTRight - MTMiddle* - MTLeft`` grow and fall apart again.
"""
from collections import Counter

from lbs import programs
from lbs.runtime import Simulator, load

model = load(programs.source("microtubules"))
sim = Simulator(model, seed=2)
print("start:", sim.state.counts())

# Follow one run and tally what happens on each channel kind.
tally = Counter()
for r in sim.run(max_time=40.0):
    ev = r.event
    if ev.kind == "com":
        who = " -> ".join(e.name for e in r.consumed)
        label = "construction" if ev.channel == "MTConstruction" else f"disassembly ({who})"
        tally[label] += 1
    else:
        tally[ev.kind] += 1

print(f"stopped at t={sim.state.time:.2f} after {sim.state.steps} steps ({sim.halt})")
for k, n in sorted(tally.items()):
    print(f"  {k:40s} {n:5d}")
print("end:", sim.state.counts())

# %%
# Chains are held together by private channels: every pair of entities that
# shares one is in contact.
from lbs import geometry

links = {}
for e in sim.state.entities:
    for v in e.arg if isinstance(e.arg, tuple) else (e.arg,):
        links.setdefault(v.name, []).append(e)
for name, pair in sorted(links.items()):
    if len(pair) == 2:
        a, b = pair
        gap = geometry.min_distance(model.placed(a), model.placed(b))
        print(f"{name:8s} {a.name:8s} -- {b.name:8s} gap {gap:.2e}")
