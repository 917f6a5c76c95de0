import json
import math

import numpy as np
import pytest

from quantum_slide import build_chain, build_gate_circuit, load_widget, shipped_widget
from quantum_slide.assembly import minimum_wire_length, scaled_wire_lengths, validate_widget
from quantum_slide.errors import ConfigurationError, WidgetMismatchError


def test_ub_layout():
    g = build_gate_circuit("ub")
    assert g.n_sites == 508
    assert list(g.window("slide")) == list(range(200))
    assert g.window("input_wire") == range(200, 351)
    assert list(g.sites("widget")) == list(range(351, 356))
    assert g.window("output_wire") == range(356, 508)
    assert g.wire_coupling == 200 and g.rails == 1
    assert g.is_connected()


def test_uc_layout():
    g = build_gate_circuit("uc")
    assert g.n_sites == 200 + 2 * 151 + 6 + 2 * 152
    assert g.rails == 2
    assert len(g.window("output_wire", 1)) == 152


def test_reference_layout():
    g = build_gate_circuit("reference")
    assert g.n_sites == 505
    assert g.path_length(350, 353) == 3


def test_slide_block_matches_half_slide_chain():
    g = build_gate_circuit("ub")
    chain = build_chain("half_slide", 200, a=-2)
    h = g.matrix(True)
    assert np.allclose(h[:200, :200], chain.matrix())
    assert h[199, 200] == 200
    off = g.matrix(False)
    assert np.all(np.diag(off) == 0) and np.allclose(off - np.diag(np.diag(off)), h - np.diag(np.diag(h)))
    assert np.allclose(g.sparse_matrix(True).toarray(), h)


def test_graph_export_roundtrip():
    g = build_gate_circuit("uc", slide_len=24, input_len=40, output_len=40)
    text = g.to_text()
    h = np.zeros((g.n_sites, g.n_sites))
    for line in text.splitlines():
        parts = line.split()
        if parts[0] == "site":
            h[int(parts[1]), int(parts[1])] = float(parts[2])
        elif parts[0] == "edge":
            u, v, c = int(parts[1]), int(parts[2]), float(parts[3])
            h[u, v] = h[v, u] = c
    assert np.array_equal(h, g.matrix(True))
    assert text == build_gate_circuit("uc", slide_len=24, input_len=40, output_len=40).to_text()


def test_wire_length_rules():
    assert scaled_wire_lengths(200) == (151, 152)
    assert scaled_wire_lengths(2000) == (376, 377)
    need = minimum_wire_length(200, -2)
    assert 0 < need <= 151
    with pytest.raises(ConfigurationError, match="too short"):
        build_gate_circuit("ub", input_len=need - 1)


def test_bad_gate_and_widget_rails():
    with pytest.raises(ConfigurationError):
        build_gate_circuit("xx")
    with pytest.raises(ConfigurationError, match="ports"):
        build_gate_circuit("ub", widget=shipped_widget("uc"))


def test_shipped_widgets_validate():
    for name in ("ub", "uc", "link"):
        assert validate_widget(shipped_widget(name)) < 1e-6
    with pytest.raises(ConfigurationError):
        shipped_widget("nope")


def _ub_dict():
    return {"name": "ub", "sites": 5,
            "edges": [[0, 1, 1.0], [1, 3, 1.0], [1, 4, 1.0], [2, 3, 1.0], [2, 4, 1.0]],
            "ports": [{"site": 0, "direction": "in", "rail": 0}, {"site": 0, "direction": "out", "rail": 0}],
            "reference_sites": 2, "validation": "transmission_b"}


def test_load_widget_sources(tmp_path):
    d = _ub_dict()
    path = tmp_path / "w.json"
    path.write_text(json.dumps(d))
    for src in (d, json.dumps(d), path, str(path)):
        w = load_widget(src)
        assert w.n_sites == 5 and w.in_ports == (0,) and w.out_ports == (0,)


def test_widget_validation_failure():
    d = _ub_dict()
    d["edges"][1][2] = 1.1
    with pytest.raises(WidgetMismatchError) as info:
        load_widget(d)
    assert info.value.max_deviation > 1e-9
    assert load_widget(d, validate=False).edges[1][2] == 1.1


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("edges"),
    lambda d: d["edges"].append([0, 0, 1.0]),
    lambda d: d["edges"].append([0, 9, 1.0]),
    lambda d: d["edges"].__setitem__(0, [0, 1, -1.0]),
    lambda d: d["ports"].pop(),
    lambda d: d["ports"].append({"site": 1, "direction": "in", "rail": 0}),
    lambda d: d.__setitem__("validation", "magic"),
])
def test_malformed_widgets(mutate):
    d = _ub_dict()
    mutate(d)
    with pytest.raises(ConfigurationError):
        load_widget(d)


def test_junction_coupling_used_everywhere():
    g = build_gate_circuit("uc", slide_len=40, input_len=60, output_len=60)
    widget = set(g.sites("widget").tolist())
    inner = sorted(c for (u, v), c in zip(g.edges, g.couplings) if u in widget and v in widget)
    assert inner == sorted(40 * c for _, _, c in shipped_widget("uc").edges)
    for (u, v), c in zip(g.edges, g.couplings):
        if u >= 39 and not (u in widget and v in widget):
            assert c == 40
