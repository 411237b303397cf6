"""Minimum direct causal influence of one party's input on the other's output."""

from fractions import Fraction

from bellcomm.inequalities import get_functional
from bellcomm.measures import min_causal_influence, min_causal_influence_given_value, value_curve_breakpoints
from bellcomm.models import ModelSpec
from bellcomm.scenario import Scenario, make_I3322_pr, make_pr_box

s22, s33 = Scenario.uniform(2, 2), Scenario.uniform(3, 2)

pr = make_pr_box()
print("PR box, X -> B:", min_causal_influence(pr, ModelSpec.cpd(s22)).value)
print("PR box, A -> B:", min_causal_influence(pr, ModelSpec.cod(s22)).value)

# the I3322 family: full behavior versus only its Bell value
f = get_functional("I3322")
m = ModelSpec.cpd(s33)
print("\n   I   full   value-only")
for k in range(0, 11, 2):
    t = Fraction(k, 10)
    full = min_causal_influence(make_I3322_pr((t + 1) / 2), m).value
    part = min_causal_influence_given_value(f, t, m).value
    print(f"{float(t):4.1f}  {str(full):5}  {part}")

print("\nvalue-only breakpoints:", [(str(t), str(v)) for t, v in value_curve_breakpoints(f, m, 0, 1)])
