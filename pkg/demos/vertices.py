"""Enumerate no-signalling vertices and test which of them outcome communication reproduces."""

from bellcomm.experiments import table1
from bellcomm.models import ModelSpec
from bellcomm.polytope import cod_reproducibility_sweep, format_table, ns_vertices
from bellcomm.scenario import Scenario

for text in ("[(2,2)(2,2)]", "[(2,2)(3,3)]", "[(3,2)(2,2,2)]"):
    s = Scenario.parse(text)
    vs = ns_vertices(s)
    rep = cod_reproducibility_sweep(s, ModelSpec.cod(s))
    print(f"{text}: {len(vs)} vertices, {len(vs.local())} local, dimension {vs.dimension}, "
          f"irreproducible under COD {len(rep.failures)}")

# larger scenario with Alice holding three ternary inputs: one vertex class resists
rep = table1()
print()
print(format_table(rep.vertex))
for line in rep.lines():
    print(line)
