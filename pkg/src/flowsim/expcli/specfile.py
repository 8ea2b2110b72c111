"""Parser for experiment spec files.

The format is line oriented::

    # comment
    [scenario]
    name = inter_network
    nodes = 100

    [sweep]
    kind = tx_power
    values = -14:-2:1        # start:stop:step, inclusive
    groups = 1, 2, 3, 4

Sections are ``[scenario]``, ``[radio]``, ``[sweep]``, ``[runs]`` and the
optional ``[gateway]``. Unknown sections or keys are errors, reported with
their line number.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError, InvalidParameterError
from ..radio import DEFAULT_RADIO, RadioParams
from ..simengine import TRAFFIC_MODES, ScenarioKind

SWEEP_KINDS = ("tx_power", "side", "nodes", "density")

_SCENARIO_KEYS = {
    "name", "nodes", "side", "networks", "traffic", "acks", "destructive_collisions", "slot_s",
}
_SWEEP_KEYS = {"kind", "values", "groups"}
_RUNS_KEYS = {"runs", "base_seed"}
_GATEWAY_KEYS = {"features", "threshold", "accepted"}
# radio keys are the RadioParams field names plus a short alias for the override
_RADIO_ALIASES = {"tx_range_m": "tx_range_override_m"}
_RADIO_FIELDS = {f.name: f for f in dataclasses.fields(RadioParams)}
_OPTIONAL_RADIO = {"tx_range_override_m", "range_anchor_dbm", "interference_range_m"}
_INT_RADIO = {"packet_size_bytes", "max_retransmissions"}


@dataclass(frozen=True)
class GatewaySpec:
    features: int = 4
    threshold: float = 0.5
    accepted: frozenset[int] | None = None

    @property
    def accepted_ids(self) -> frozenset[int]:
        return frozenset(range(self.features)) if self.accepted is None else self.accepted


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: ScenarioKind = ScenarioKind.INTER_NETWORK
    n_sensors: int = 100
    side: float = 100.0
    n_networks: int = 4
    traffic: str = "staggered"
    acks: bool = False
    destructive_collisions: bool = False
    slot_s: float | None = None
    radio: RadioParams = DEFAULT_RADIO
    sweep_kind: str = "tx_power"
    sweep_values: tuple[float, ...] = (-10.45,)
    groups: tuple[int, ...] = (1, 2, 3, 4)
    runs: int = 70
    base_seed: int = 0
    gateway: GatewaySpec | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ConfigError("runs must be >= 1", field="runs")
        if not self.sweep_values:
            raise ConfigError("sweep values must be non-empty", field="values")
        if any(b <= a for a, b in zip(self.sweep_values, self.sweep_values[1:])):
            raise ConfigError("sweep values must be strictly increasing", field="values")
        if self.sweep_kind not in SWEEP_KINDS:
            raise ConfigError(f"sweep kind must be one of {SWEEP_KINDS}", field="kind")
        if not self.groups or any(not 1 <= g <= self.n_networks for g in self.groups):
            raise ConfigError(f"groups must lie in 1..{self.n_networks}", field="groups")


def _number(raw: str, line: int, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}", line=line, field=key) from None


def _integer(raw: str, line: int, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}", line=line, field=key) from None


def _boolean(raw: str, line: int, key: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected true/false, got {raw!r}", line=line, field=key)


def _values(raw: str, line: int, key: str) -> list[float]:
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError("range must be start:stop:step", line=line, field=key)
        start, stop, step = (_number(p.strip(), line, key) for p in parts)
        if not step > 0:
            raise ConfigError("range step must be > 0", line=line, field=key)
        count = math.floor((stop - start) / step + 1e-9) + 1
        return [round(start + i * step, 9) for i in range(max(count, 0))]
    return [_number(p.strip(), line, key) for p in raw.split(",") if p.strip()]


def parse_spec(text: str, name: str = "") -> ExperimentSpec:
    kwargs: dict[str, object] = {"name": name}
    radio: dict[str, object] = {}
    gateway: dict[str, object] | None = None
    section = None
    seen: dict[tuple[str, str], int] = {}

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("scenario", "radio", "sweep", "runs", "gateway"):
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            if section == "gateway" and gateway is None:
                gateway = {}
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        if section is None:
            raise ConfigError("key outside of any section", line=lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if (section, key) in seen:
            raise ConfigError(f"duplicate key (first on line {seen[section, key]})", line=lineno, field=key)
        seen[section, key] = lineno

        if section == "scenario":
            if key not in _SCENARIO_KEYS:
                raise ConfigError("unknown key in [scenario]", line=lineno, field=key)
            if key == "name":
                try:
                    kwargs["scenario"] = ScenarioKind(value)
                except ValueError:
                    choices = [s.value for s in ScenarioKind]
                    raise ConfigError(f"scenario must be one of {choices}", line=lineno, field=key) from None
            elif key == "nodes":
                kwargs["n_sensors"] = _integer(value, lineno, key)
            elif key == "side":
                kwargs["side"] = _number(value, lineno, key)
            elif key == "networks":
                kwargs["n_networks"] = _integer(value, lineno, key)
            elif key == "traffic":
                if value not in TRAFFIC_MODES:
                    raise ConfigError(f"traffic must be one of {TRAFFIC_MODES}", line=lineno, field=key)
                kwargs["traffic"] = value
            elif key == "slot_s":
                kwargs["slot_s"] = None if value.lower() == "auto" else _number(value, lineno, key)
            else:
                kwargs[key] = _boolean(value, lineno, key)

        elif section == "radio":
            fname = _RADIO_ALIASES.get(key, key)
            if fname not in _RADIO_FIELDS:
                raise ConfigError("unknown key in [radio]", line=lineno, field=key)
            if fname in _OPTIONAL_RADIO and value.lower() == "none":
                radio[fname] = None
            elif fname in _INT_RADIO:
                radio[fname] = _integer(value, lineno, key)
            else:
                radio[fname] = _number(value, lineno, key)

        elif section == "sweep":
            if key not in _SWEEP_KEYS:
                raise ConfigError("unknown key in [sweep]", line=lineno, field=key)
            if key == "kind":
                if value not in SWEEP_KINDS:
                    raise ConfigError(f"sweep kind must be one of {SWEEP_KINDS}", line=lineno, field=key)
                kwargs["sweep_kind"] = value
            elif key == "values":
                vals = _values(value, lineno, key)
                if not vals:
                    raise ConfigError("sweep values must be non-empty", line=lineno, field=key)
                if any(b <= a for a, b in zip(vals, vals[1:])):
                    raise ConfigError("sweep values must be strictly increasing", line=lineno, field=key)
                kwargs["sweep_values"] = tuple(vals)
            else:
                kwargs["groups"] = tuple(_integer(p.strip(), lineno, key) for p in value.split(",") if p.strip())

        elif section == "runs":
            if key not in _RUNS_KEYS:
                raise ConfigError("unknown key in [runs]", line=lineno, field=key)
            n = _integer(value, lineno, key)
            if key == "runs" and n < 1:
                raise ConfigError("runs must be >= 1", line=lineno, field=key)
            if key == "base_seed" and n < 0:
                raise ConfigError("base_seed must be >= 0", line=lineno, field=key)
            kwargs[key] = n

        else:
            if key not in _GATEWAY_KEYS:
                raise ConfigError("unknown key in [gateway]", line=lineno, field=key)
            assert gateway is not None
            if key == "features":
                gateway[key] = _integer(value, lineno, key)
            elif key == "threshold":
                gateway[key] = _number(value, lineno, key)
            else:
                gateway[key] = frozenset(_integer(p.strip(), lineno, key) for p in value.split(",") if p.strip())

    try:
        kwargs["radio"] = DEFAULT_RADIO.replace(**radio)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), field="radio") from None
    if gateway is not None:
        kwargs["gateway"] = GatewaySpec(**gateway)
    return ExperimentSpec(**kwargs)


def load_spec(path: str | Path) -> ExperimentSpec:
    """Load a spec file; a bare name like ``fig13`` resolves to a shipped spec."""
    p = Path(path)
    if not p.exists():
        shipped = shipped_spec_path(str(path))
        if shipped is None:
            raise ConfigError(f"no such spec file: {path}")
        p = shipped
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from None
    return parse_spec(text, name=p.stem)


SPEC_DIR = Path(__file__).resolve().parent.parent / "specs"


def shipped_specs() -> list[Path]:
    return sorted(SPEC_DIR.glob("*.spec"))


def shipped_spec_path(name: str) -> Path | None:
    stem = name[:-5] if name.endswith(".spec") else name
    candidate = SPEC_DIR / f"{stem}.spec"
    return candidate if candidate.exists() else None
