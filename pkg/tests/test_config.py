import json

import pytest

from physiotrust.cli import build_parser, effective_config
from physiotrust.config import DEFAULTS, load_config, make_config, parse_set_items, section
from physiotrust.errors import ConfigInvalid


def test_defaults_and_coercion():
    cfg = make_config({"model.n_trees": "30", "run.exclude_fa": "yes", "eda.tau_rise": 1})
    assert cfg["model.n_trees"] == 30 and cfg["run.exclude_fa"] is True and cfg["eda.tau_rise"] == 1.0
    assert make_config() == DEFAULTS
    for bad in ({"model.n_trees": "3.5"}, {"run.exclude_fa": "maybe"}, {"model.treez": 1}):
        with pytest.raises(ConfigInvalid):
            make_config(bad)
    assert section(cfg, "eda")["tau_rise"] == 1.0


def test_set_items():
    assert parse_set_items(["a.b=1", "c = x=y"]) == {"a.b": "1", "c": "x=y"}
    with pytest.raises(ConfigInvalid):
        parse_set_items(["novalue"])


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"run.seed": 5}))
    assert load_config(p)["run.seed"] == 5
    p.write_text("[1]")
    with pytest.raises(ConfigInvalid):
        load_config(p)
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "none.json")


def test_precedence(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"run.seed": 5, "window.width_s": 20, "model.eta": 0.2}))
    args = build_parser().parse_args(["train", "--features", "f", "--out", "o", "--config", str(p),
                                      "--set", "run.seed=6", "--set", "model.eta=0.3", "--seed", "7",
                                      "--window-s", "30"])
    cfg = effective_config(args)
    assert cfg["run.seed"] == 7
    assert cfg["model.eta"] == 0.3
    assert cfg["window.width_s"] == 30.0
