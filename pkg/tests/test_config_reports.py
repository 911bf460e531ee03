import json
import math

import pytest

from jetconj.config import (BasinConfig, ConfigError, PipelineConfig, SolveConfig, config_hash, derive_seed,
                            from_dict, load_config, to_dict)
from jetconj.reports import csv_text, heatmap_svg, json_text, line_svg


def test_defaults_and_nested_tables():
    cfg = from_dict(PipelineConfig, {"d": 2, "basin": {"eps_conv": 1e-8, "sampling": {"radius": 2}}})
    assert cfg.basin.eps_conv == 1e-8 and cfg.basin.sampling.radius == 2.0
    assert isinstance(cfg.basin.sampling.radius, float)
    assert cfg.horizon == PipelineConfig().horizon


@pytest.mark.parametrize("data,msg", [
    ({"bogus": 1}, "unknown keys"),
    ({"d": "two"}, "expected a number"),
    ({"d": 2.5}, "expected an integer"),
    ({"basin": {"sampling": {"nope": 1}}}, "basin.sampling: unknown keys"),
    ({"basin": 3}, "expected a table"),
])
def test_strict_validation(data, msg):
    with pytest.raises(ConfigError, match=msg):
        from_dict(PipelineConfig, data)


def test_explicit_jets_need_linear_part():
    with pytest.raises(ConfigError, match="missing keys"):
        from_dict(SolveConfig, {"jets": [{"quad_re": [0, 0]}]})
    cfg = from_dict(SolveConfig, {"jets": [{"linear_re": [1, 0, 0, 1]}]})
    assert cfg.jets[0].linear_im is None


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml", BasinConfig)
    bad = tmp_path / "bad.toml"
    bad.write_text("d = = 2\n")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(bad, BasinConfig)


def test_hash_and_seed_are_stable():
    assert config_hash(PipelineConfig()) == config_hash(PipelineConfig())
    assert config_hash(PipelineConfig()) != config_hash(PipelineConfig(seed=2))
    assert derive_seed(1, "maps") == derive_seed(1, "maps") != derive_seed(1, "sampling")
    assert to_dict(BasinConfig())["sampling"]["radius"] == 5.0


def test_json_text_is_canonical():
    text = json_text({"b": 1, "a": [math.inf, float("nan"), 1 + 2j]})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text)["a"] == ["inf", "nan", [1.0, 2.0]]


def test_empty_csv_has_header():
    assert csv_text([], ["n", "value"]) == "n,value\n"


def test_svg_cells():
    svg = heatmap_svg([0, 1, -1, 3], 2, 2, "t", missing=-1)
    assert svg.count("<rect") == 4 and "#d62728" in svg
    assert line_svg({"a": [(0, 1.0), (1, 2.0)]}).count("<polyline") == 1
    assert line_svg({}).startswith("<svg") and line_svg({}).rstrip().endswith("</svg>")
