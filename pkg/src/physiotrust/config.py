"""Run configuration: flat dotted keys with typed defaults.

Precedence is defaults < config file < ``--set`` overrides < dedicated flags.
Unknown keys are rejected so that a typo never silently falls back to a
default.
"""

import json
from pathlib import Path

from .errors import ConfigInvalid

DEFAULTS = {
    "run.seed": 0,
    "run.threads": 1,
    "run.exclude_fa": False,
    "run.nested_cv": False,
    "run.folds": 10,
    "run.search_iter": 0,
    "run.search_folds": 5,
    "window.width_s": 25.0,
    "window.min_coverage": 0.8,
    "eda.tau_rise": 0.75,
    "eda.tau_decay": 2.0,
    "eda.downsample_hz": 16.0,
    "eda.tonic_grid_s": 10.0,
    "eda.smooth_sigma_s": 0.2,
    "cardio.refractory_s": 0.33,
    "cardio.prominence_frac": 0.3,
    "cardio.min_intervals": 3,
    "gaze.dispersion_threshold": 0.05,
    "gaze.min_duration_s": 0.2,
    "gaze.duration_agg": "mean",
    "model.n_trees": 100,
    "model.max_depth": 4,
    "model.eta": 0.1,
    "model.lambda": 1.0,
    "model.gamma": 0.0,
    "model.subsample": 1.0,
    "model.colsample": 1.0,
    "model.min_child_weight": 1.0,
    "synth.participants_per_condition": 20,
    "synth.drive_length_s": 600.0,
    "synth.prompt_interval_s": 25.0,
    "synth.gsr_rate": 128.0,
    "synth.ppg_rate": 128.0,
    "synth.gaze_rate": 15.0,
    "synth.miss_drop": 3.0,
    "synth.fa_drop": 0.5,
    "synth.true_alarm_gain": 0.2,
    "synth.recovery_half_life_s": 100.0,
    "synth.initial_trust": 8.0,
    "synth.label_noise": 1,
    "synth.signal_noise": 1.0,
    "synth.participant_sd": 1.0,
    "synth.link.hr_max": 1.0,
    "synth.link.hrv": -0.8,
    "synth.link.ibi_mean": 0.0,
    "synth.link.fix_count_center": -1.2,
    "synth.link.gsr_phasic_mean": 0.5,
}


def _coerce(key, value):
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered in ("1", "true", "yes", "on"):
                    return True
                if lowered in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{key}: cannot interpret {value!r} as {type(default).__name__}")


def make_config(overrides=None):
    """Return a full config dict with ``overrides`` validated and applied."""
    cfg = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigInvalid(f"unknown config key: {key}")
        cfg[key] = _coerce(key, value)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"{path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path}: top level must be an object")
    return make_config(data)


def parse_set_items(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigInvalid(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def dump_config(cfg, path):
    Path(path).write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def section(cfg, prefix):
    """Sub-dict for ``prefix.`` keys with the prefix stripped."""
    prefix = prefix + "."
    return {k[len(prefix):]: v for k, v in cfg.items() if k.startswith(prefix)}
