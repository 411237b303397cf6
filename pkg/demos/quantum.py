"""Quantum values: Tsirelson's bound, chained correlations and an entanglement-assisted message."""

import math

from bellcomm.inequalities import get_functional, make_chained, model_bound
from bellcomm.models import ModelSpec
from bellcomm.quantum import augmented_protocol_value, chained_optimal_behavior, chsh_optimal_behavior
from bellcomm.scenario import Scenario

fb = chsh_optimal_behavior()
E = [[fb.correlator(x, y) for y in range(2)] for x in range(2)]
print("CHSH correlator:", E[0][0] + E[0][1] + E[1][0] - E[1][1], "vs 2 sqrt 2 =", 2 * math.sqrt(2))

f = make_chained(3, "cod_valid")
q = chained_optimal_behavior(3, "cod_valid")
val = sum(float(w) * q.correlator(x, y) for (x, y), w in f.correlators.items())
print(f"chained n=3 correlator sum {val:.6f}; outcome communication allows at most 4")

r = augmented_protocol_value()
bound = model_bound(get_functional("M332"), ModelSpec.mcpd(Scenario.uniform(3, 2), 2)).value
print(f"one bit plus entanglement: {r.value:.6f} > classical {bound}, message entropy {r.message_entropy:.4f}")
