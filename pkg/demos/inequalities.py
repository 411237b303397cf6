"""Bounds of Bell functionals under local, communication and no-signalling models."""

from bellcomm.inequalities import get_functional, make_chained, make_Mnd, mnd_formula, model_bound, ns_max
from bellcomm.models import ModelSpec
from bellcomm.scenario import Scenario

s33 = Scenario.uniform(3, 2)
f = make_chained(3)
print("chained n=3: LHV", model_bound(f, ModelSpec.lhv(s33)).value,
      " COD", model_bound(f, ModelSpec.cod(s33)).value, " NS", ns_max(f))

g = get_functional("I_AB")
for name, m in (("A->B", ModelSpec.cod(s33)), ("B->A", ModelSpec.cod(s33, "ba")), ("mixture", ModelSpec.cod_mix(s33))):
    print(f"I_AB under COD {name}: {model_bound(g, m).value}")

print("\nstaircase family, MCPD(d) bound vs closed form")
for n in (3, 4, 5):
    for d in (1, 2, 3):
        fm = make_Mnd(n, d, normalized=False)
        got = model_bound(fm, ModelSpec.mcpd(fm.scenario, d)).value
        print(f"  n={n} d={d}: {got}  (closed form {mnd_formula(n, d)})")
