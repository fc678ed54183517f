"""
Waiting times
=============

A single entity firing ``delay@2.0`` forever: inter-event times are
exponential with mean 1/2. Two competing delays at rates 1 and 3 are
chosen in the ratio 1:3.
"""
import numpy as np

from lbs.runtime import CanonicalConfig, ChannelEnv, LocatedEntity, Simulator, load, step

clock = load("#mode base\nlet A()@world,0.0,sphere(1.0) = do delay@2.0; A()\nrun A()_<0.0,0.0,0.0>\n")
dts = np.array([r.dt for r in Simulator(clock, seed=1).run(max_steps=5000)])
print(f"mean {dts.mean():.4f} (expected 0.5), std {dts.std():.4f} (expected 0.5)")

race = load(
    "#mode base\n"
    "let A()@world,0.0,sphere(1.0) = do delay@1.0; S() or delay@3.0; F()\n"
    "and S()@world,0.0,sphere(1.0) = do delay@1.0; S()\n"
    "and F()@world,0.0,sphere(1.0) = do delay@1.0; F()\n"
    "run A()_<0.0,0.0,0.0>\n"
)
rng = np.random.default_rng(2)
wins = 0
for _ in range(4000):
    state = CanonicalConfig(ChannelEnv({}), [LocatedEntity(0, "A", (), (0.0, 0.0, 0.0))], 0.0, 1)
    step(state, rng, race)
    wins += state.entities[0].name == "F"
print(f"faster branch chosen {wins / 4000:.3f} of the time (expected 0.75)")
