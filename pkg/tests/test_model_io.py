import json

import pytest
from hypothesis import given, settings, strategies as st

from episbn.errors import EvidenceError, FormatError
from episbn.model_io import (parse_evidence, parse_network, serialize_evidence,
                             serialize_network)
from episbn.netgen import GenSpec, generate_network
from episbn.network import Network, make_node, validate


def chain3_doc():
    return {
        "name": "chain3",
        "nodes": [
            {"id": "A", "states": ["0", "1"], "parents": [], "cpt": [[0.8, 0.2]]},
            {"id": "B", "states": ["0", "1"], "parents": ["A"], "cpt": [[0.9, 0.1], [0.2, 0.8]]},
            {"id": "C", "states": ["0", "1"], "parents": ["B"], "cpt": [[0.8, 0.2], [0.1, 0.9]]},
        ],
    }


class TestParseNetwork:
    def test_chain3(self, chain3):
        net = parse_network(json.dumps(chain3_doc()))
        assert net == chain3
        assert validate(net) == []

    def test_row_count(self):
        doc = chain3_doc()
        doc["nodes"][1]["cpt"] = [[0.9, 0.1]]
        with pytest.raises(FormatError, match="row count") as info:
            parse_network(json.dumps(doc))
        assert info.value.node == "B"
        assert info.value.kind == "semantic"

    def test_unknown_parent(self):
        doc = chain3_doc()
        doc["nodes"][2]["parents"] = ["Z"]
        with pytest.raises(FormatError, match="unknown parent"):
            parse_network(json.dumps(doc))

    def test_row_sum(self):
        doc = chain3_doc()
        doc["nodes"][1]["cpt"][1] = [0.5, 0.6]
        with pytest.raises(FormatError, match="row sum"):
            parse_network(json.dumps(doc))

    def test_syntax_error_has_position(self):
        with pytest.raises(FormatError) as info:
            parse_network('{"name": "x", "nodes": [}')
        assert info.value.kind == "syntax"
        assert info.value.line == 1 and info.value.column is not None

    @pytest.mark.parametrize("bad", ["1.5", "-0.1", "NaN", "Infinity", '"0.5"'])
    def test_bad_numbers(self, bad):
        text = '{"name": "x", "nodes": [{"id": "A", "states": ["0", "1"], "parents": [], "cpt": [[%s, 0.5]]}]}' % bad
        with pytest.raises(FormatError):
            parse_network(text)

    def test_scientific_notation(self):
        text = '{"name": "x", "nodes": [{"id": "A", "states": ["a", "b"], "parents": [], "cpt": [[1e-3, 9.99E-1]]}]}'
        assert parse_network(text)["A"].cpt[0, 0] == 0.001


class TestSerialize:
    def test_round_trip_chain3(self, chain3):
        text = serialize_network(chain3)
        assert parse_network(text) == chain3
        assert serialize_network(parse_network(text)) == text

    def test_third_round_trips_bit_exact(self):
        net = Network("thirds", [make_node("A", [], [[1 / 3, 2 / 3]])])
        back = parse_network(serialize_network(net))
        assert back["A"].cpt[0, 0] == 1 / 3
        assert back["A"].cpt[0, 1] == 2 / 3

    def test_empty_name(self):
        net = Network("", [make_node("A", [], [[1.0]])])
        text = serialize_network(net)
        assert '"name": ""' in text
        assert parse_network(text).name == ""

    def test_key_order(self, chain3):
        text = serialize_network(chain3)
        assert text.index('"name"') < text.index('"nodes"')
        first = text[text.index("{", 1):]
        keys = [first.index(f'"{k}"') for k in ("id", "states", "parents", "cpt")]
        assert keys == sorted(keys)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), nodes=st.integers(1, 12),
           topology=st.sampled_from(["dag", "polytree"]), p_ext=st.floats(0, 0.5))
    def test_round_trip_property(self, seed, nodes, topology, p_ext):
        net = generate_network(GenSpec(nodes=nodes, max_parents=3, min_states=1, max_states=4,
                                       topology=topology, p_ext=p_ext, seed=seed))
        assert parse_network(serialize_network(net)) == net


class TestEvidence:
    def test_pair_form(self, chain3):
        assert parse_evidence("C=1", chain3) == {"C": 1}

    def test_json_form(self, chain3):
        assert parse_evidence('{"C": "1", "A": "0"}', chain3) == {"C": 1, "A": 0}

    def test_unknown_state(self, chain3):
        with pytest.raises(EvidenceError, match="unknown state"):
            parse_evidence("C=true", chain3)

    def test_unknown_node(self, chain3):
        with pytest.raises(EvidenceError, match="unknown node"):
            parse_evidence('{"Q": "1"}', chain3)

    def test_empty(self, chain3):
        assert parse_evidence("", chain3) == {}
        assert parse_evidence("{}", chain3) == {}

    def test_round_trip(self, chain3):
        ev = {"C": 1, "A": 0}
        assert parse_evidence(serialize_evidence(ev, chain3), chain3) == ev
