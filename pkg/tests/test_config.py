import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgecrack.config import (
    PRESET_D_OVER_L,
    PRESET_ELL_OVER_L,
    PRESET_M,
    PRESET_QUADRATURE,
    PRESET_R_OVER_ELL,
    RunConfig,
    from_dict,
    load_config,
    parse_json,
)
from sgecrack.errors import ConfigurationError


class TestParsing:
    def test_defaults(self):
        cfg = from_dict({})
        assert cfg == RunConfig()

    def test_nested_values(self):
        cfg = from_dict({"mode": "II", "material": {"ell": 0.05}, "geometry": {"d": 0.4, "M": 6},
                         "quadrature": 25})
        assert cfg.mode == "II" and cfg.material.ell == 0.05
        assert cfg.geometry.d == 0.4 and cfg.geometry.M == 6 and cfg.quadrature == 25

    @pytest.mark.parametrize("data, message", [
        ({"bogus": 1}, "unknown key"),
        ({"geometry": {"radius": 1}}, "unknown key"),
        ({"mode": "III"}, "mode"),
        ({"quadrature": 12}, "quadrature"),
        ({"load": -1.0}, "load"),
        ({"load": True}, "number"),
        ({"geometry": {"M": 4.5}}, "integer"),
        ({"material": {"nu": 0.5}}, None),
        ({"material": {"ell": -0.1}}, None),
        ({"geometry": {"R": 0.5}}, None),
        ({"enrichment": "yes"}, "true or false"),
        ({"study": {"kind": "other"}}, "study.kind"),
        ({"study": {"kind": "convergence", "sweep": "grading"}}, "study.sweep"),
        ({"study": {"kind": "convergence", "sweep": "quadrature", "values": [13, 14]}}, "quadrature"),
        ({"study": {"kind": "convergence", "values": [0.1, -0.1]}}, "positive"),
        ({"study": {"kind": "size-effect", "d_over_L": [1.5]}}, "d_over_L"),
        ({"study": {"R_over_ell": 0.0}}, "positive"),
        ([1, 2], "object"),
    ])
    def test_rejected(self, data, message):
        with pytest.raises(ConfigurationError, match=message):
            from_dict(data)

    def test_presets(self):
        conv = from_dict({"study": {"kind": "convergence"}})
        assert conv.study.values == PRESET_R_OVER_ELL
        assert from_dict({"study": {"kind": "convergence", "sweep": "M"}}).study.values == PRESET_M
        quad = from_dict({"study": {"kind": "convergence", "sweep": "quadrature"}})
        assert quad.study.values == PRESET_QUADRATURE
        size = from_dict({"study": {"kind": "size-effect"}})
        assert size.study.d_over_L == PRESET_D_OVER_L and size.study.ell_over_L == PRESET_ELL_OVER_L

    def test_files(self, tmp_path):
        path = tmp_path / "case.json"
        path.write_text(json.dumps({"mode": "II"}))
        assert load_config(path).mode == "II"
        with pytest.raises(ConfigurationError, match="cannot read"):
            load_config(tmp_path / "missing.json")
        path.write_text("{not json")
        with pytest.raises(ConfigurationError, match="not valid JSON"):
            load_config(path)
        with pytest.raises(ConfigurationError):
            parse_json("[")


class TestRoundTrip:
    def test_default(self):
        cfg = RunConfig()
        assert parse_json(cfg.to_json()) == cfg

    @settings(max_examples=50, deadline=None)
    @given(
        mode=st.sampled_from(["I", "II"]),
        ell=st.floats(1e-4, 0.05),
        d=st.floats(0.05, 0.9),
        M=st.integers(2, 12),
        rule=st.sampled_from([13, 25, 30, 37]),
        enrichment=st.booleans(),
        kind=st.sampled_from(["single", "convergence", "size-effect"]),
        values=st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=5),
    )
    def test_parse_serialize_parse(self, mode, ell, d, M, rule, enrichment, kind, values):
        data = {
            "mode": mode, "material": {"ell": ell}, "geometry": {"d": d, "M": M, "R": 1e-3 * d},
            "quadrature": rule, "enrichment": enrichment,
            "study": {"kind": kind, "values": values, "d_over_L": [0.1, 0.2], "ell_over_L": [0.01]},
        }
        cfg = from_dict(data)
        assert parse_json(cfg.to_json()) == cfg
        assert from_dict(json.loads(cfg.to_json())).to_json() == cfg.to_json()
