"""Pipeline configuration and its key-value file format.

The file is INI-style with a single ``[pipeline]`` section; every key is
optional and falls back to its default::

    [pipeline]
    kernel_half_width = 4
    modified_daniell = true
    bands = Delta:0.5:4.0,Theta:4.0:8.0,Alpha:8.0:12.0,Beta:12.0:30.0,Gamma:30.0:50.0
    grid_start = 0.0
    grid_step = 0.00392156862745098
    grid_size = 256
    levels = 6
    permutations = 1000
    seed = 0
    homology_dim = 0
    pooling = per-study
    apnea_patterns = obstructive apnea,central apnea,...
    notch_centers = 60.0,120.0
    notch_half_width = 1.25
    filter_order = 3
    zero_phase = false
    exclude_awake = true
    essential = drop
    signed_statistic = false

List values are comma separated, so apnea patterns cannot contain commas.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, fields

from .cohort import DEFAULT_APNEA_PATTERNS
from .dsp import BANDS, FILTER_ORDER, NOTCH_CENTERS, NOTCH_HALF_WIDTH
from .errors import ValidationError
from .landscape import GRID_SIZE, GRID_START, GRID_STEP, N_LEVELS

SECTION = "pipeline"
POOLING_MODES = ("per-study", "per-epoch")


@dataclass(frozen=True)
class PipelineConfig:
    kernel_half_width: int = 4
    modified_daniell: bool = True
    bands: dict = field(default_factory=lambda: dict(BANDS))
    grid_start: float = GRID_START
    grid_step: float = GRID_STEP
    grid_size: int = GRID_SIZE
    levels: int = N_LEVELS
    permutations: int = 1000
    seed: int = 0
    homology_dim: int = 0
    pooling: str = "per-study"
    apnea_patterns: tuple = DEFAULT_APNEA_PATTERNS
    notch_centers: tuple = NOTCH_CENTERS
    notch_half_width: float = NOTCH_HALF_WIDTH
    filter_order: int = FILTER_ORDER
    zero_phase: bool = False
    exclude_awake: bool = True
    essential: str = "drop"
    signed_statistic: bool = False

    def __post_init__(self):
        if self.kernel_half_width < 0:
            raise ValidationError("kernel_half_width must be >= 0")
        if self.grid_size < 1 or not self.grid_step > 0:
            raise ValidationError("grid needs grid_size >= 1 and grid_step > 0")
        if self.levels < 1 or self.permutations < 1:
            raise ValidationError("levels and permutations must be >= 1")
        if self.homology_dim not in (0, 1):
            raise ValidationError("homology_dim must be 0 or 1")
        if self.pooling not in POOLING_MODES:
            raise ValidationError(f"pooling must be one of {POOLING_MODES}")
        if self.essential not in ("drop", "cap"):
            raise ValidationError("essential must be 'drop' or 'cap'")
        if not self.apnea_patterns:
            raise ValidationError("apnea_patterns must not be empty")
        for name, (lo, hi) in self.bands.items():
            if not 0 <= lo < hi:
                raise ValidationError(f"band {name} has invalid edges [{lo}, {hi})")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    # ------------------------------------------------------------- file format

    def to_text(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp[SECTION] = {f.name: _dump(getattr(self, f.name)) for f in fields(self)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text):
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ValidationError(f"config: {exc}") from None
        if not cp.has_section(SECTION):
            raise ValidationError(f"config: missing [{SECTION}] section")
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in cp[SECTION].items():
            if key not in known:
                raise ValidationError(f"config: unknown key {key!r}")
            try:
                kwargs[key] = _load(key, raw, cls.__dataclass_fields__[key])
            except ValueError as exc:
                raise ValidationError(f"config: bad value for {key}: {raw!r} ({exc})") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())


def _dump(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return ",".join(f"{k}:{float(lo)!r}:{float(hi)!r}" for k, (lo, hi) in value.items())
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    return str(value)


def _parse_bool(raw):
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected true/false")


def _load(key, raw, f):
    raw = raw.strip()
    default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
    if isinstance(default, bool):
        return _parse_bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, dict):
        bands = {}
        for item in filter(None, (s.strip() for s in raw.split(","))):
            name, lo, hi = item.split(":")
            bands[name.strip()] = (float(lo), float(hi))
        return bands
    if isinstance(default, tuple):
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if key == "notch_centers":
            return tuple(float(s) for s in items)
        return tuple(items)
    return raw
