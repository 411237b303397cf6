import csv
import io
from fractions import Fraction

import pytest

from bellcomm.experiments import (
    FIGURES,
    find_up_to_relabeling,
    figure_rows,
    grid,
    run_figure,
    table1_vertex,
)
from bellcomm.lp import membership
from bellcomm.models import ModelSpec, decode_strategy
from bellcomm.polytope import ns_vertices
from bellcomm.scenario import is_no_signalling, relabel, validate_behavior


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_grid():
    assert grid(0, 1, 3) == [0, Fraction(1, 2), 1]
    assert grid(0, Fraction(2, 3), 11)[-1] == Fraction(2, 3)
    assert len(grid(0, 1, 101)) == 101


def test_fig2_small():
    rows = _rows(run_figure("fig2", points=3, exact=True))
    got = {(r["param"], r["measure"]): r["value"] for r in rows}
    assert got["1/2", "C_X->B_full"] == "1/4"
    assert got["1/2", "C_X->B_value"] == "1/5"
    assert got["1", "C_X->B_full"] == "1/2"
    assert got["0", "C_X->B_value"] == "0"
    assert {r["model"] for r in rows} == {"cpd(ab)[(2,2,2)(2,2,2)]"}


def test_fig3a_endpoints():
    rows = _rows(run_figure("fig3a", points=2))
    for r in rows:
        want = 1.0 if r["param"] == "0.5" else 0.0
        assert float(r["value"]) == pytest.approx(want, abs=1e-12)
    assert sorted({r["d"] for r in rows}) == ["2", "3", "4"]


def test_unreachable_points_omitted():
    # I3322 = 1 is out of reach with two messages but reachable with three
    rows = _rows(run_figure("fig3b", points=2))
    keys = {(r["param"], r["d"]) for r in rows}
    assert ("1.0", "2") not in keys
    assert ("1.0", "3") in keys


def test_output_is_byte_stable(tmp_path):
    a = run_figure("fig2", points=3)
    b = run_figure("fig2", points=3, path=tmp_path / "fig2.csv")
    assert a == b == (tmp_path / "fig2.csv").read_text()
    assert not (tmp_path / "fig2.csv.partial").exists()


def test_resume_reuses_partial(tmp_path):
    out = tmp_path / "fig2.csv"
    part = tmp_path / "fig2.csv.partial"
    # a finished row already on disk is taken as is
    part.write_text('param,value,measure,model,d\n0.5,0.123,C_X->B_full,"cpd(ab)[(2,2,2)(2,2,2)]",\n')
    text = run_figure("fig2", points=3, path=out)
    rows = _rows(text)
    got = {(r["param"], r["measure"]): r["value"] for r in rows}
    assert got["0.5", "C_X->B_full"] == "0.123"
    assert got["0.5", "C_X->B_value"] == "0.2"
    assert not part.exists()


def test_figure_rows_unknown():
    with pytest.raises(KeyError):
        figure_rows("fig9")
    assert set(FIGURES) == {"fig2", "fig3a", "fig3b", "fig3c"}


def test_table1_vertex_is_ns_vertex():
    v = table1_vertex()
    assert validate_behavior(v).valid and is_no_signalling(v).ok
    vs = ns_vertices(v.scenario)
    assert vs.index_of(v) is not None
    # a scrambled copy is located together with the relabeling that maps it onto a listed vertex
    scrambled = relabel(v, inputs_a=[1, 2, 0], outputs_b=[[2, 0, 1], [1, 0]])
    i, rl = find_up_to_relabeling(scrambled, vs.vertices)
    assert vs.vertices[i] == relabel(scrambled, *rl)


def test_table1_vertex_not_cod():
    v = table1_vertex()
    res = membership(v, ModelSpec.cod(v.scenario))
    assert not res.member
    assert res.certificate.violation > 0


@pytest.mark.parametrize("kind", ["ba", "mix"])
def test_table1_vertex_reproduced_by_reverse_direction(kind):
    # only the A->B direction fails; the reverse arrow (and so the mixture) reproduces the vertex
    v = table1_vertex()
    m = ModelSpec.cod_mix(v.scenario) if kind == "mix" else ModelSpec.cod(v.scenario, "ba")
    res = membership(v, m)
    assert res.member and sum(res.weights.values()) == 1
    acc = [Fraction(0)] * v.scenario.size
    for label, w in res.weights.items():
        for i, p in enumerate(decode_strategy(m, label).behavior().probs):
            acc[i] += w * p
    assert tuple(acc) == v.probs
