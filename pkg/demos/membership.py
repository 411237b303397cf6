"""Decide membership of the PR box in several causal models and read the certificates."""

from fractions import Fraction

from bellcomm.lp import membership
from bellcomm.models import ModelSpec
from bellcomm.polytope import simulate_uniform_marginal_vertex
from bellcomm.scenario import Scenario, make_pr_box, mix, uniform_behavior

s = Scenario.uniform(2, 2)
pr = make_pr_box()

# no local model reproduces the PR box; the LP returns a separating functional
res = membership(pr, ModelSpec.lhv(s))
print("LHV member:", res.member)
print("  separating functional violation:", res.certificate.violation)

# a noisy PR box at visibility 1/2 is local again
print("LHV member at v = 1/2:", membership(mix(pr, uniform_behavior(s), Fraction(1, 2)), ModelSpec.lhv(s)).member)

# letting Alice's output reach Bob is enough
res = membership(pr, ModelSpec.cod(s))
print("COD member:", res.member, "with", len(res.weights), "deterministic strategies")

# the same decomposition written down in closed form: Alice's marginal is uniform
dec = simulate_uniform_marginal_vertex(pr)
for (f, g), w in sorted(dec.cod_weights().items()):
    print(f"  weight {w}: a(x) = {f}, b(a, y) = {dict(g)}")
