"""Communication cost and message entropy needed for nonlocal correlations."""

from fractions import Fraction

from bellcomm.inequalities import get_functional
from bellcomm.measures import ValueTarget, message_polytope, min_average_communication, min_message_entropy
from bellcomm.quantum import binary_entropy
from bellcomm.scenario import make_I3322_pr, make_pr_box

pr = make_pr_box()
r = min_average_communication(pr, 2)
print("PR box average communication:", r.value, "bits")

# I3322 at its no-signalling maximum needs a third message
r = min_average_communication(make_I3322_pr(1), 3)
print("I3322 = 1 with three messages:", r.value, "bits, weight by message count", r.weight_by_messages)

poly = message_polytope(pr, 3)
print("PR box message polytope at d = 3:", len(poly.vertices), "vertices")

chsh = get_functional("CHSH")
print("\n   I    H(m)    h(I)")
for k in range(0, 6):
    t = Fraction(k, 10)
    hm = min_message_entropy(ValueTarget(chsh, t), 2).value
    print(f"{float(t):4.1f}  {hm:.4f}  {binary_entropy(float(t)):.4f}")
