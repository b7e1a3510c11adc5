"""Synthetic cohorts: latent trust trajectories with physiological channels coupled to trust.

Every participant gets a trust trajectory driven by eight takeover requests.
The channels are then generated from primitive schedules (beat times, skin
conductance response onsets, gaze dwells) whose parameters depend linearly on
``u = (trust - 5) / 5`` through signed link strengths.  All primitives are
returned as ground truth so downstream extractors can be checked against them.
"""

import json
from dataclasses import dataclass, asdict, fields
from pathlib import Path

import numpy as np

from .config import DEFAULTS, section
from .errors import ConfigInvalid
from .streams import CONDITIONS, SCREENS, SampleStream, assemble_session

N_TORS = 8
FAULT_EVENTS = (2, 3, 5, 6)  # 1-based positions of the faulty takeover requests

# how strongly a unit link moves each physical parameter at |u| = 1
_HRV_SCALE = 0.8
_BURST_SCALE = 0.6
_CENTER_SCALE = 0.6
_SCR_SCALE = 0.6
_IBI_SCALE = 0.06
# bursts ramp in and out so they lift the peak rate without dominating RMSSD
_BURST_SHAPE = (0.25, 0.5, 0.75, 1.0, 0.75, 0.5, 0.25)

# AOI centres in normalised coordinates; each screen has its own coordinate frame
_OTHER_SCREENS = {"left": 0.2, "right": 0.2, "ndrt": 0.6}


@dataclass(frozen=True)
class CohortConfig:
    participants_per_condition: int = 20
    drive_length_s: float = 600.0
    prompt_interval_s: float = 25.0
    gsr_rate: float = 128.0
    ppg_rate: float = 128.0
    gaze_rate: float = 15.0
    miss_drop: float = 3.0
    fa_drop: float = 0.5
    true_alarm_gain: float = 0.2
    recovery_half_life_s: float = 100.0
    initial_trust: float = 8.0
    label_noise: int = 1
    signal_noise: float = 1.0
    participant_sd: float = 1.0
    link_hr_max: float = 1.0
    link_hrv: float = -0.8
    link_ibi_mean: float = 0.0
    link_fix_count_center: float = -1.2
    link_gsr_phasic_mean: float = 0.5

    def __post_init__(self):
        if self.participants_per_condition < 1:
            raise ConfigInvalid("synth.participants_per_condition must be >= 1")
        for name in ("drive_length_s", "prompt_interval_s", "gsr_rate", "ppg_rate", "gaze_rate",
                     "recovery_half_life_s"):
            if not getattr(self, name) > 0:
                raise ConfigInvalid(f"synth.{name} must be positive")
        if self.prompt_interval_s > self.drive_length_s:
            raise ConfigInvalid("synth.prompt_interval_s exceeds the drive length")
        if not 0 <= self.initial_trust <= 10:
            raise ConfigInvalid("synth.initial_trust must lie in 0-10")
        for name in ("label_noise", "signal_noise", "participant_sd", "miss_drop", "fa_drop"):
            if getattr(self, name) < 0:
                raise ConfigInvalid(f"synth.{name} must be non-negative")

    @classmethod
    def from_config(cls, cfg=None):
        s = section(cfg or DEFAULTS, "synth")
        kw = {k.replace("link.", "link_"): v for k, v in s.items()}
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in kw.items() if k in names})

    def links(self):
        return {"hr_max": self.link_hr_max, "hrv": self.link_hrv, "ibi_mean": self.link_ibi_mean,
                "fix_count_center": self.link_fix_count_center,
                "gsr_phasic_mean": self.link_gsr_phasic_mean}


def tor_times(drive_length_s):
    """Eight evenly spaced takeover requests, each centred in its eighth of the drive."""
    return drive_length_s * (np.arange(N_TORS) + 0.5) / N_TORS


def tor_effects(condition, cfg):
    if condition not in CONDITIONS:
        raise ConfigInvalid(f"unknown condition {condition!r}")
    out = np.full(N_TORS, cfg.true_alarm_gain)
    fault = {"control": cfg.true_alarm_gain, "fa": -cfg.fa_drop, "miss": -cfg.miss_drop}[condition]
    for k in FAULT_EVENTS:
        out[k - 1] = fault
    return out


def trust_trajectory(t, condition, cfg, initial=None, effects=None):
    """Latent trust at times ``t``: each event's effect decays with the recovery half-life."""
    t = np.asarray(t, dtype=np.float64)
    events = tor_times(cfg.drive_length_s)
    effects = tor_effects(condition, cfg) if effects is None else effects
    trust = np.full(t.shape, cfg.initial_trust if initial is None else initial, dtype=np.float64)
    for te, e in zip(events, effects):
        after = t >= te
        trust[after] += e * np.exp2(-(t[after] - te) / cfg.recovery_half_life_s)
    return np.clip(trust, 0.0, 10.0)


def _u(trust):
    return (np.asarray(trust) - 5.0) / 5.0


# ---------------------------------------------------------------- waveform generators

def _grid(duration, rate):
    return np.arange(int(np.floor(duration * rate + 1e-9))) / rate


def generate_ppg(beat_times, rate=128.0, duration=None, seed=0, noise=0.0, width=0.08, wander=0.0):
    """Gaussian pulse per beat plus optional slow baseline wander and white noise."""
    beats = np.asarray(beat_times, dtype=np.float64)
    if duration is None:
        duration = (beats[-1] if beats.size else 0.0) + 1.0
    t = _grid(duration, rate)
    x = np.zeros(t.size)
    half = int(np.ceil(5 * width * rate))
    for b in beats:
        c = int(round(b * rate))
        lo, hi = max(0, c - half), min(t.size, c + half + 1)
        x[lo:hi] += np.exp(-0.5 * ((t[lo:hi] - b) / width) ** 2)
    rng = np.random.default_rng(seed)
    if wander:
        phase = rng.uniform(0, 2 * np.pi)
        x += wander * np.sin(2 * np.pi * 0.05 * t + phase)
    if noise:
        x += noise * rng.standard_normal(t.size)
    return SampleStream("ppg", rate, t, x)


def bateman(t, tau_rise=0.75, tau_decay=2.0):
    """Bateman response normalised to a peak of 1 (zero for t <= 0)."""
    t = np.asarray(t, dtype=np.float64)
    tp = np.log(tau_decay / tau_rise) * tau_rise * tau_decay / (tau_decay - tau_rise)
    peak = np.exp(-tp / tau_decay) - np.exp(-tp / tau_rise)
    tt = np.maximum(t, 0.0)
    return np.where(t > 0, (np.exp(-tt / tau_decay) - np.exp(-tt / tau_rise)) / peak, 0.0)


def generate_gsr(pulse_times, amplitudes, tonic=2.0, rate=128.0, duration=None, seed=0, noise=0.0,
                 tau_rise=0.75, tau_decay=2.0):
    """Tonic level plus Bateman responses with the given onsets and peak amplitudes (uS).

    ``tonic`` is a constant or a callable of time.
    """
    pulses = np.asarray(pulse_times, dtype=np.float64)
    amps = np.broadcast_to(np.asarray(amplitudes, dtype=np.float64), pulses.shape)
    if duration is None:
        duration = (pulses[-1] if pulses.size else 0.0) + 10 * tau_decay
    t = _grid(duration, rate)
    x = tonic(t) if callable(tonic) else np.full(t.size, float(tonic))
    x = np.array(x, dtype=np.float64)
    span = int(np.ceil(10 * tau_decay * rate))
    for p, a in zip(pulses, amps):
        lo = max(0, int(np.floor(p * rate)))
        hi = min(t.size, lo + span)
        x[lo:hi] += a * bateman(t[lo:hi] - p, tau_rise, tau_decay)
    if noise:
        x += noise * np.random.default_rng(seed).standard_normal(t.size)
    return SampleStream("gsr", rate, t, x)


def generate_gaze(dwells, rate=15.0, duration=None, seed=0, jitter=0.005):
    """Gaze samples from a dwell plan of ``(start, end, screen, x, y)`` tuples.

    Samples inside a dwell scatter uniformly within +-jitter of its point;
    samples outside every dwell land at uniformly random places on random
    screens.
    """
    dwells = sorted(dwells, key=lambda d: d[0])
    if duration is None:
        duration = dwells[-1][1] if dwells else 1.0
    t = _grid(duration, rate)
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, t.size)
    y = rng.uniform(0, 1, t.size)
    screen = rng.integers(0, len(SCREENS), t.size).astype(np.float64)
    jx = rng.uniform(-jitter, jitter, t.size)
    jy = rng.uniform(-jitter, jitter, t.size)
    for start, end, scr, cx, cy in dwells:
        lo = int(np.searchsorted(t, start, side="left"))
        hi = int(np.searchsorted(t, end, side="left"))
        x[lo:hi] = cx + jx[lo:hi]
        y[lo:hi] = cy + jy[lo:hi]
        screen[lo:hi] = SCREENS.index(scr) if isinstance(scr, str) else scr
    return SampleStream("gaze", rate, t, np.column_stack([np.clip(x, 0, 1), np.clip(y, 0, 1), screen]))


# ---------------------------------------------------------------- primitive schedules

def _beat_schedule(rng, cfg, trust_at, z):
    links = cfg.links()
    base = 0.85 + 0.06 * cfg.participant_sd * z[0]
    sd_mult = np.exp(0.2 * cfg.participant_sd * z[1])
    depth0 = 0.10 + 0.02 * cfg.participant_sd * z[2]
    beats = [rng.uniform(0.1, 0.6)]
    burst_left = 0
    burst_depth = 0.0
    while beats[-1] < cfg.drive_length_s + 1.0:
        u = float(_u(trust_at(beats[-1])))
        mean = base * (1 - _IBI_SCALE * links["ibi_mean"] * u)
        sd = 0.03 * sd_mult * max(0.1, 1 + _HRV_SCALE * links["hrv"] * u)
        if burst_left == 0 and rng.random() < 0.05:
            burst_left = len(_BURST_SHAPE)
            burst_depth = max(0.0, depth0 * (1 + _BURST_SCALE * links["hr_max"] * u))
        ibi = mean + sd * rng.standard_normal()
        if burst_left:
            ibi *= 1 - burst_depth * _BURST_SHAPE[len(_BURST_SHAPE) - burst_left]
            burst_left -= 1
        beats.append(beats[-1] + float(np.clip(ibi, 0.4, 1.6)))
    return np.array(beats[:-1])


def _scr_schedule(rng, cfg, trust_at, z):
    link = cfg.link_gsr_phasic_mean
    rate_mult = np.exp(0.2 * cfg.participant_sd * z[3])
    onsets, amps = [], []
    t = 0.0
    while True:
        u = float(_u(trust_at(t)))
        per_min = 4.0 * rate_mult * max(0.1, 1 + _SCR_SCALE * link * u)
        t += rng.exponential(60.0 / per_min)
        if t >= cfg.drive_length_s:
            break
        onsets.append(t)
        amps.append(0.3 * float(np.exp(0.3 * rng.standard_normal())))
    return np.array(onsets), np.array(amps)


def _screen_probs(cfg, u, z):
    p_center = 0.35 * np.exp(0.2 * cfg.participant_sd * z[4]) * (1 + _CENTER_SCALE * cfg.link_fix_count_center * u)
    p_center = float(np.clip(p_center, 0.05, 0.9))
    rest = 1.0 - p_center
    total = sum(_OTHER_SCREENS.values())
    return [p_center] + [rest * _OTHER_SCREENS[s] / total for s in SCREENS[1:]]


def _dwell_plan(rng, cfg, trust_at, z):
    dwells = []
    t = 0.0
    prev = (None, -1.0, -1.0)
    dt = 1.0 / cfg.gaze_rate
    while t < cfg.drive_length_s:
        u = float(_u(trust_at(t)))
        scr = SCREENS[rng.choice(len(SCREENS), p=_screen_probs(cfg, u, z))]
        dur = min(2.0, 0.25 + rng.exponential(0.5))
        while True:
            cx, cy = rng.uniform(0.1, 0.9, 2)
            if scr != prev[0] or abs(cx - prev[1]) + abs(cy - prev[2]) > 0.1:
                break
        end = min(cfg.drive_length_s, t + dur)
        dwells.append((float(t), float(end), scr, float(cx), float(cy)))
        prev = (scr, cx, cy)
        # a short saccade of 0-2 samples separates dwells
        t = end + dt * rng.integers(0, 3)
    return dwells


def participant_seed(seed, index):
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def generate_participant(cfg, condition, index, seed=0):
    """One synthetic session and its ground-truth record."""
    rng = np.random.default_rng(participant_seed(seed, index))
    z = rng.standard_normal(7)
    initial = float(np.clip(cfg.initial_trust + 3.0 * cfg.participant_sd * z[5], 0, 10))
    effects = tor_effects(condition, cfg)
    # participants differ in how hard a fault hits them
    effects = np.where(effects < 0, effects * np.exp(0.3 * cfg.participant_sd * z[6]), effects)

    def trust_at(t):
        return trust_trajectory(t, condition, cfg, initial, effects)

    prompts = np.arange(1, int(np.floor(cfg.drive_length_s / cfg.prompt_interval_s + 1e-9)) + 1) * cfg.prompt_interval_s
    latent = trust_at(prompts)
    noise = rng.integers(-cfg.label_noise, cfg.label_noise + 1, prompts.size) if cfg.label_noise else 0
    ratings = np.clip(np.round(latent) + noise, 0, 10).astype(np.int64)

    beats = _beat_schedule(rng, cfg, trust_at, z)
    onsets, amps = _scr_schedule(rng, cfg, trust_at, z)
    dwells = _dwell_plan(rng, cfg, trust_at, z)

    tonic0 = 2.0 + 3.0 * rng.random()
    drift = 0.3 * rng.standard_normal()
    tonic = lambda t: tonic0 + drift * t / cfg.drive_length_s + 0.1 * np.sin(2 * np.pi * t / 180.0)
    sn = cfg.signal_noise
    sub = rng.integers(0, 2**31, 3)
    ppg = generate_ppg(beats, cfg.ppg_rate, cfg.drive_length_s, int(sub[0]), noise=0.01 * sn, wander=0.1 * sn)
    gsr = generate_gsr(onsets, amps, tonic, cfg.gsr_rate, cfg.drive_length_s, int(sub[1]), noise=0.002 * sn)
    gaze = generate_gaze(dwells, cfg.gaze_rate, cfg.drive_length_s, int(sub[2]), jitter=0.005 * sn)
    labels = SampleStream("label", 1.0 / cfg.prompt_interval_s, prompts, ratings)

    pid = f"P{index + 1:03d}"
    session = assemble_session({"gsr": gsr, "ppg": ppg, "gaze": gaze, "label": labels}, pid, condition,
                               {"drive": 1})
    truth = {
        "participant_id": pid,
        "condition": condition,
        "seed": participant_seed(seed, index),
        "initial_trust": initial,
        "tor_times": tor_times(cfg.drive_length_s).tolist(),
        "tor_effects": effects.tolist(),
        "prompt_times": prompts.tolist(),
        "latent_trust": latent.tolist(),
        "ratings": ratings.tolist(),
        "beat_times": beats.tolist(),
        "scr_onsets": onsets.tolist(),
        "scr_amplitudes": amps.tolist(),
        "dwells": [list(d) for d in dwells],
        "participant_effects": z.tolist(),
    }
    return session, truth


def generate_cohort(cfg=None, seed=0):
    """``[(session, ground_truth), ...]`` for every condition, participants numbered consecutively."""
    if cfg is None or isinstance(cfg, dict):
        cfg = CohortConfig.from_config(cfg)
    out = []
    index = 0
    for condition in CONDITIONS:
        for _ in range(cfg.participants_per_condition):
            out.append(generate_participant(cfg, condition, index, seed))
            index += 1
    return out


def write_cohort(cohort, out_dir):
    from .dataset import write_session

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dirs = []
    for session, truth in cohort:
        d = out / f"{session.participant_id}_{session.condition}"
        write_session(session, d)
        (d / "ground_truth.json").write_text(json.dumps(truth, indent=1) + "\n", encoding="utf-8")
        dirs.append(d)
    return dirs


def config_dict(cfg):
    return asdict(cfg)


def separable_matrix(n=2000, d=17, informative=3, seed=0, missing=0.0, margin=0.5):
    """``(X, y)`` labelled by the sign of a fixed linear rule on the first
    ``informative`` columns; the rest is noise.

    Rows whose standardised score lies within ``margin`` of the boundary are
    redrawn, so the classes are separated by a gap.  ``missing`` then blanks
    that fraction of cells completely at random.
    """
    rng = np.random.default_rng(seed)
    w = np.where(np.arange(informative) % 2 == 0, 1.0, -1.0) / np.sqrt(informative)
    kept = []
    total = 0
    while total < n:
        Z = rng.normal(size=(n, d))
        Z = Z[np.abs(Z[:, :informative] @ w) >= margin]
        kept.append(Z)
        total += Z.shape[0]
    X = np.concatenate(kept)[:n]
    y = (X[:, :informative] @ w > 0).astype(np.int64)
    if missing > 0:
        X[rng.random(X.shape) < missing] = np.nan
    return X, y
