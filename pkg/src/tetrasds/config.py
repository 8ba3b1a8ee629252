"""Scenario configuration: defaults, validation, and the flat file format.

Scenario files are plain text with dotted keys, one ``key = value`` per
line, ``#`` comments allowed.  Every key has a default matching the
evaluation setup, so an empty file is a valid scenario.  The same format
serves as the reproducibility sidecar written next to every result file;
feeding a sidecar back through ``--scenario`` replays the exact run.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

from . import channel
from .ms_mac import ACCESS_CODES
from .traffic import TrafficConfig

HOLDING_NONE = "none"
HOLDING_AUTO = "auto"

ENGINE_KERNEL = "kernel"
ENGINE_REFERENCE = "reference"


class ConfigError(ValueError):
    """Validation failure carrying every offending field at once."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration: " + "; ".join(problems))


@dataclass(frozen=True)
class ScenarioConfig:
    # traffic
    n_responders: int = 10
    n_background: int = 100
    lambda_report_per_s: float = 0.1
    lambda_sds_per_hour: float = 10.0
    lambda_voice_per_hour: float = 3.0
    lambda_feedback_per_s: float | None = None  # None derives n_responders/60
    call_duration_min_s: float = 20.0
    call_duration_max_s: float = 40.0
    holding_timer_mode: str = HOLDING_NONE  # none | auto | fixed
    holding_timer_s: float = 0.0
    background_forwarded: bool = False
    # access
    wt_frames: int = 5
    nu_max: int = 5
    code_pattern: str = "A"
    retry_spread_frames: int | None = None  # None takes the built-in default
    alignment_frames: int = 3
    # channel
    model: str = "TU"
    cell_radius_m: float = 2000.0
    tx_margin_db: float = channel.LinkBudget().tx_margin_db
    reference_distance_m: float = channel.LinkBudget().reference_distance_m
    path_loss_exponent: float | None = None
    shadowing_sigma_db: float | None = None
    error_midpoint_db: float | None = None
    error_slope_per_db: float | None = None
    perfect_channel: bool = False
    # mac
    subslot_capacity_bits: int = 92
    sds_retry_limit: int = 3
    ack_wait_frames: int = 4
    frame18_access: bool = False
    # run
    length_multiframes: int = 1000
    warmup_multiframes: int = 50
    replications: int = 30
    master_seed: int = 1
    confidence: float = 0.95
    paoi_closure: str = "ack"
    engine: str = ENGINE_KERNEL

    def resolved_holding_timer(self) -> float | None:
        if self.holding_timer_mode == HOLDING_NONE:
            return None
        if self.holding_timer_mode == HOLDING_AUTO:
            return 1.0 / self.lambda_report_per_s
        return self.holding_timer_s

    def traffic_config(self) -> TrafficConfig:
        return TrafficConfig(
            n_responders=self.n_responders,
            n_background=self.n_background,
            lambda_report_per_s=self.lambda_report_per_s,
            lambda_sds_per_hour=self.lambda_sds_per_hour,
            lambda_voice_per_hour=self.lambda_voice_per_hour,
            lambda_feedback_per_s=self.lambda_feedback_per_s,
            call_duration_min_s=self.call_duration_min_s,
            call_duration_max_s=self.call_duration_max_s,
            holding_timer_s=self.resolved_holding_timer(),
            background_forwarded=self.background_forwarded,
        )

    def propagation_model(self) -> channel.PropagationModel:
        base = channel.DEFAULT_MODELS[self.model]
        return channel.PropagationModel(
            kind=base.kind,
            path_loss_exponent=self.path_loss_exponent if self.path_loss_exponent is not None else base.path_loss_exponent,
            shadowing_sigma_db=self.shadowing_sigma_db if self.shadowing_sigma_db is not None else base.shadowing_sigma_db,
            error_curve_midpoint_db=self.error_midpoint_db if self.error_midpoint_db is not None else base.error_curve_midpoint_db,
            error_curve_slope_per_db=self.error_slope_per_db if self.error_slope_per_db is not None else base.error_curve_slope_per_db,
        )

    def link_budget(self) -> channel.LinkBudget:
        return channel.LinkBudget(self.tx_margin_db, self.reference_distance_m)

    def validate(self) -> None:
        problems = []
        if self.n_responders < 0:
            problems.append(f"traffic.n_responders must be >= 0, got {self.n_responders}")
        if self.n_background < 0:
            problems.append(f"traffic.n_background must be >= 0, got {self.n_background}")
        if self.n_background > 500:
            problems.append(f"traffic.n_background exceeds the 500-user bound, got {self.n_background}")
        if self.lambda_report_per_s < 0 or (
            self.n_responders > 0 and self.holding_timer_mode == HOLDING_AUTO and self.lambda_report_per_s <= 0
        ):
            problems.append(f"traffic.lambda_report_per_s invalid: {self.lambda_report_per_s}")
        for name in ("lambda_sds_per_hour", "lambda_voice_per_hour"):
            if getattr(self, name) < 0:
                problems.append(f"traffic.{name} must be >= 0")
        if self.lambda_feedback_per_s is not None and self.lambda_feedback_per_s < 0:
            problems.append("traffic.lambda_feedback_per_s must be >= 0 or auto")
        if not 0 < self.call_duration_min_s <= self.call_duration_max_s:
            problems.append("traffic.call_duration bounds must satisfy 0 < min <= max")
        if self.holding_timer_mode not in (HOLDING_NONE, HOLDING_AUTO, "fixed"):
            problems.append(f"traffic.holding_timer_s mode invalid: {self.holding_timer_mode}")
        if self.holding_timer_mode == "fixed" and self.holding_timer_s <= 0:
            problems.append("traffic.holding_timer_s must be positive when fixed")
        if not 1 <= self.wt_frames <= 15:
            problems.append(f"access.wt_frames must be in 1..15, got {self.wt_frames}")
        if not 1 <= self.nu_max <= 15:
            problems.append(f"access.nu_max must be in 1..15, got {self.nu_max}")
        if not self.code_pattern or any(c not in ACCESS_CODES for c in self.code_pattern):
            problems.append(f"access.code_pattern must be a nonempty string over A-D, got {self.code_pattern!r}")
        if self.retry_spread_frames is not None and self.retry_spread_frames < 1:
            problems.append("access.retry_spread_frames must be >= 1 or auto")
        if self.alignment_frames < 0:
            problems.append("access.alignment_frames must be >= 0")
        if self.model not in channel.DEFAULT_MODELS:
            problems.append(f"channel.model must be RA, TU or HT, got {self.model!r}")
        if self.cell_radius_m <= 0:
            problems.append("channel.cell_radius_m must be positive")
        if self.reference_distance_m <= 0:
            problems.append("channel.reference_distance_m must be positive")
        if self.subslot_capacity_bits < 1:
            problems.append("mac.subslot_capacity_bits must be >= 1")
        if self.sds_retry_limit < 0:
            problems.append("mac.sds_retry_limit must be >= 0")
        if self.ack_wait_frames < 1:
            problems.append("mac.ack_wait_frames must be >= 1")
        if self.length_multiframes < 1:
            problems.append("run.length_multiframes must be >= 1")
        if not 0 <= self.warmup_multiframes < self.length_multiframes:
            problems.append("run.warmup_multiframes must be in [0, run.length_multiframes)")
        if self.replications < 2:
            problems.append("run.replications must be >= 2 (aggregation needs at least two)")
        if not 0.0 < self.confidence < 1.0:
            problems.append("run.confidence must be in (0,1)")
        if self.paoi_closure not in ("ack", "forward"):
            problems.append(f"run.paoi_closure must be ack or forward, got {self.paoi_closure!r}")
        if self.engine not in (ENGINE_KERNEL, ENGINE_REFERENCE):
            problems.append(f"run.engine must be kernel or reference, got {self.engine!r}")
        if problems:
            raise ConfigError(problems)


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _identity(raw: str) -> str:
    return raw.strip()


# key -> (config field, parser). Holding timer and the auto-able floats get
# special treatment in apply_value.
KEY_FIELDS: dict[str, tuple[str, object]] = {
    "traffic.n_responders": ("n_responders", int),
    "traffic.n_background": ("n_background", int),
    "traffic.lambda_report_per_s": ("lambda_report_per_s", float),
    "traffic.lambda_sds_per_hour": ("lambda_sds_per_hour", float),
    "traffic.lambda_voice_per_hour": ("lambda_voice_per_hour", float),
    "traffic.lambda_feedback_per_s": ("lambda_feedback_per_s", float),
    "traffic.call_duration_min_s": ("call_duration_min_s", float),
    "traffic.call_duration_max_s": ("call_duration_max_s", float),
    "traffic.holding_timer_s": ("holding_timer_s", float),
    "traffic.background_forwarded": ("background_forwarded", _parse_bool),
    "access.wt_frames": ("wt_frames", int),
    "access.nu_max": ("nu_max", int),
    "access.code_pattern": ("code_pattern", _identity),
    "access.retry_spread_frames": ("retry_spread_frames", int),
    "access.alignment_frames": ("alignment_frames", int),
    "channel.model": ("model", _identity),
    "channel.cell_radius_m": ("cell_radius_m", float),
    "channel.tx_margin_db": ("tx_margin_db", float),
    "channel.reference_distance_m": ("reference_distance_m", float),
    "channel.path_loss_exponent": ("path_loss_exponent", float),
    "channel.shadowing_sigma_db": ("shadowing_sigma_db", float),
    "channel.error_midpoint_db": ("error_midpoint_db", float),
    "channel.error_slope_per_db": ("error_slope_per_db", float),
    "channel.perfect": ("perfect_channel", _parse_bool),
    "mac.subslot_capacity_bits": ("subslot_capacity_bits", int),
    "mac.sds_retry_limit": ("sds_retry_limit", int),
    "mac.ack_wait_frames": ("ack_wait_frames", int),
    "mac.frame18_access": ("frame18_access", _parse_bool),
    "run.length_multiframes": ("length_multiframes", int),
    "run.warmup_multiframes": ("warmup_multiframes", int),
    "run.replications": ("replications", int),
    "run.master_seed": ("master_seed", int),
    "run.confidence": ("confidence", float),
    "run.paoi_closure": ("paoi_closure", _identity),
    "run.engine": ("engine", _identity),
}

_AUTO_NONE_KEYS = {
    "traffic.lambda_feedback_per_s",
    "access.retry_spread_frames",
    "channel.path_loss_exponent",
    "channel.shadowing_sigma_db",
    "channel.error_midpoint_db",
    "channel.error_slope_per_db",
}

SWEEPABLE_AXES = (
    "traffic.n_background",
    "traffic.n_responders",
    "traffic.lambda_report_per_s",
    "access.wt_frames",
    "access.nu_max",
    "channel.model",
    "traffic.holding_timer_s",
)


def parse_value(key: str, raw: str):
    """Parse one raw string for a dotted key into its field value."""
    raw = raw.strip()
    if key == "traffic.holding_timer_s":
        low = raw.lower()
        if low == HOLDING_NONE:
            return ("holding", HOLDING_NONE, 0.0)
        if low == HOLDING_AUTO:
            return ("holding", HOLDING_AUTO, 0.0)
        return ("holding", "fixed", float(raw))
    if key not in KEY_FIELDS:
        raise ConfigError([f"unknown configuration key {key!r}"])
    field_name, parser = KEY_FIELDS[key]
    if key in _AUTO_NONE_KEYS and raw.lower() in ("auto", HOLDING_NONE):
        return (field_name, None)
    try:
        return (field_name, parser(raw))
    except (ValueError, TypeError) as exc:
        raise ConfigError([f"bad value for {key}: {raw!r} ({exc})"]) from exc


def apply_values(cfg: ScenarioConfig, pairs: dict[str, str]) -> ScenarioConfig:
    """Overlay raw key/value strings on a configuration."""
    updates = {}
    problems = []
    for key, raw in pairs.items():
        try:
            parsed = parse_value(key, raw)
        except ConfigError as exc:
            problems.extend(exc.problems)
            continue
        if parsed[0] == "holding":
            updates["holding_timer_mode"] = parsed[1]
            updates["holding_timer_s"] = parsed[2]
        else:
            updates[parsed[0]] = parsed[1]
    if problems:
        raise ConfigError(problems)
    return dataclasses.replace(cfg, **updates)


def set_axis_value(cfg: ScenarioConfig, axis: str, raw: str) -> ScenarioConfig:
    if axis not in SWEEPABLE_AXES:
        raise ConfigError([f"axis {axis!r} is not sweepable (choose from {', '.join(SWEEPABLE_AXES)})"])
    return apply_values(cfg, {axis: raw})


def parse_scenario_text(text: str) -> dict[str, str]:
    """Key/value pairs from flat scenario text; later lines win."""
    pairs: dict[str, str] = {}
    problems: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, _, raw = stripped.partition("=")
        pairs[key.strip()] = raw.strip()
    if problems:
        raise ConfigError(problems)
    return pairs


def load_scenario_file(path: str | os.PathLike) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())


def config_from_pairs(pairs: dict[str, str]) -> ScenarioConfig:
    sweep_pairs = {k: v for k, v in pairs.items() if k.startswith("sweep.")}
    plain = {k: v for k, v in pairs.items() if not k.startswith("sweep.")}
    cfg = apply_values(ScenarioConfig(), plain)
    cfg.validate()
    del sweep_pairs  # sweep keys are interpreted by the caller
    return cfg


def sweep_from_pairs(pairs: dict[str, str]) -> tuple[str, list[str]] | None:
    axis = pairs.get("sweep.axis")
    values = pairs.get("sweep.values")
    if axis is None and values is None:
        return None
    if axis is None or values is None:
        raise ConfigError(["sweep.axis and sweep.values must be given together"])
    parts = [v.strip() for v in values.split(",") if v.strip()]
    if not parts:
        raise ConfigError(["sweep.values must list at least one value"])
    return axis, parts


def dump_config(cfg: ScenarioConfig, sweep: tuple[str, list[str]] | None = None) -> str:
    """Canonical flat-text form: every key, stable order."""
    lines = []
    for key, (field_name, _) in KEY_FIELDS.items():
        if key == "traffic.holding_timer_s":
            if cfg.holding_timer_mode == "fixed":
                lines.append(f"{key} = {cfg.holding_timer_s!r}")
            else:
                lines.append(f"{key} = {cfg.holding_timer_mode}")
            continue
        value = getattr(cfg, field_name)
        if value is None:
            rendered = "auto"
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{key} = {rendered}")
    if sweep is not None:
        lines.append(f"sweep.axis = {sweep[0]}")
        lines.append("sweep.values = " + ",".join(sweep[1]))
    return "\n".join(lines) + "\n"
