"""Study records: loading, writing, apnea grouping and synthetic cohorts.

On-disk layout of one study::

    manifest.json      {"study_id", "sample_rate_hz",
                        "channels": [{"id", "path", "format"}],
                        "annotations_path"}
    <channel files>    raw little-endian float32 ("f32le") or one value per line ("csv")
    annotations.csv    onset_s,duration_s,kind,label   (kind is "stage" or "event")

Paths inside the manifest are relative to the manifest's directory.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsp import BANDS, EPOCH_SECONDS, STAGES, Annotation, MultichannelSignal, as_annotation
from .errors import (AnnotationError, AnnotationRangeError, ChannelLengthError, MissingFileError,
                     NonFiniteSampleError, StudyFormatError, ValidationError)

log = logging.getLogger(__name__)

APNEA, NO_APNEA, UNASSIGNED = "Apnea", "NoApnea", "Unassigned"
GROUPS = (APNEA, NO_APNEA, UNASSIGNED)

# Explicit event names rather than a bare "apnea": any event text containing
# one of these (case-insensitive) puts the whole study in the Apnea group.
DEFAULT_APNEA_PATTERNS = (
    "obstructive apnea",
    "central apnea",
    "mixed apnea",
    "apnea obstructive",
    "apnea central",
    "apnea mixed",
)

SIGNAL_FORMATS = ("f32le", "csv")
ANNOTATION_HEADER = ["onset_s", "duration_s", "kind", "label"]


@dataclass
class StudyRecord:
    study_id: str
    signal: MultichannelSignal
    stage_annotations: list = field(default_factory=list)
    event_annotations: list = field(default_factory=list)
    group: str = UNASSIGNED

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValidationError(f"unknown group {self.group!r}")
        self.stage_annotations = [as_annotation(a) for a in self.stage_annotations]
        self.event_annotations = [as_annotation(a) for a in self.event_annotations]


def matches_apnea(label, patterns=DEFAULT_APNEA_PATTERNS):
    text = label.casefold()
    return any(p.casefold() in text for p in patterns)


def assign_group(study, apnea_patterns=DEFAULT_APNEA_PATTERNS):
    """Return a copy of ``study`` placed in the Apnea or NoApnea group.

    A single matching event anywhere in the recording is enough for Apnea.
    """
    patterns = list(apnea_patterns)
    if not patterns:
        raise ValidationError("at least one apnea pattern is required")
    hit = any(matches_apnea(a.label, patterns) for a in study.event_annotations)
    return dataclasses.replace(study, group=APNEA if hit else NO_APNEA)


# ------------------------------------------------------------------------ I/O

def _read_channel(path, fmt):
    if not path.exists():
        raise MissingFileError(f"signal file not found: {path}")
    if fmt == "f32le":
        raw = path.read_bytes()
        if len(raw) % 4:
            raise StudyFormatError(f"{path}: size {len(raw)} is not a multiple of 4 bytes")
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if fmt == "csv":
        values = []
        with path.open(newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or not row[0].strip():
                    continue
                try:
                    values.append(float(row[0]))
                except ValueError:
                    if lineno == 1:  # header line
                        continue
                    raise StudyFormatError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
        return np.asarray(np.float32(values), dtype=np.float64)
    raise StudyFormatError(f"{path}: unknown signal format {fmt!r}")


def read_annotations(path, duration_s=None):
    """Parse an annotation CSV into (stage annotations, event annotations)."""
    if not path.exists():
        raise MissingFileError(f"annotation file not found: {path}")
    stages, events = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ANNOTATION_HEADER:
            raise AnnotationError(1, f"header must be {','.join(ANNOTATION_HEADER)}")
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise AnnotationError(lineno, f"expected 4 fields, got {len(row)}")
            try:
                onset, dur = float(row[0]), float(row[1])
            except ValueError:
                raise AnnotationError(lineno, "onset/duration must be numbers") from None
            kind, label = row[2].strip(), row[3].strip()
            if onset < 0 or dur < 0 or not np.isfinite([onset, dur]).all():
                raise AnnotationError(lineno, "onset and duration must be finite and >= 0")
            if duration_s is not None and onset + dur > duration_s + 1e-9:
                raise AnnotationRangeError(
                    lineno, f"interval ends at {onset + dur}s, after signal end {duration_s}s")
            if kind == "stage":
                if label not in STAGES:
                    raise AnnotationError(lineno, f"unknown sleep stage {label!r}")
                stages.append(Annotation(onset, dur, label))
            elif kind == "event":
                events.append(Annotation(onset, dur, label))
            else:
                raise AnnotationError(lineno, f"kind must be 'stage' or 'event', not {kind!r}")
    return stages, events


def load_study(manifest_path, *, allow_nonfinite=False):
    """Read a study from its JSON manifest.

    Raises
    ------
    MissingFileError
        Manifest, signal or annotation file does not exist.
    ChannelLengthError
        Channels differ in length; the message names the offending channel.
    AnnotationError, AnnotationRangeError
        Malformed annotation row, or one reaching past the end of the signal.
    NonFiniteSampleError
        A channel holds NaN/inf samples (unless ``allow_nonfinite``).
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise MissingFileError(f"manifest not found: {manifest_path}")
    try:
        m = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise StudyFormatError(f"{manifest_path}: invalid JSON ({exc})") from None
    for key in ("study_id", "sample_rate_hz", "channels", "annotations_path"):
        if key not in m:
            raise StudyFormatError(f"{manifest_path}: missing field {key!r}")
    base = manifest_path.parent
    chans = m["channels"]
    if not isinstance(chans, list) or len(chans) < 2:
        raise StudyFormatError(f"{manifest_path}: need a list of at least two channels")

    ids, data = [], []
    for ch in chans:
        try:
            cid, rel, fmt = ch["id"], ch["path"], ch.get("format", "f32le")
        except (KeyError, TypeError):
            raise StudyFormatError(f"{manifest_path}: channel entries need 'id' and 'path'") from None
        x = _read_channel(base / rel, fmt)
        if data and len(x) != len(data[0]):
            raise ChannelLengthError(cid, len(x), len(data[0]))
        bad = int(np.count_nonzero(~np.isfinite(x)))
        if bad and not allow_nonfinite:
            raise NonFiniteSampleError(cid, bad)
        ids.append(str(cid))
        data.append(x)

    signal = MultichannelSignal(np.vstack(data), m["sample_rate_hz"], tuple(ids))
    stages, events = read_annotations(base / m["annotations_path"], signal.duration_s)
    return StudyRecord(str(m["study_id"]), signal, stages, events)


def _fmt(x):
    return repr(float(x))


def write_study(study, directory, *, signal_format="f32le"):
    """Write ``study`` under ``directory`` and return the manifest path.

    Samples are stored as float32, so a study read by :func:`load_study`
    and written again reproduces its ``f32le`` payloads byte for byte.
    """
    if signal_format not in SIGNAL_FORMATS:
        raise ValidationError(f"signal_format must be one of {SIGNAL_FORMATS}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    channels = []
    for i, (cid, x) in enumerate(zip(study.signal.channel_ids, study.signal.samples)):
        x32 = x.astype("<f4")
        if signal_format == "f32le":
            name = f"ch{i:02d}.f32"
            (directory / name).write_bytes(x32.tobytes())
        else:
            name = f"ch{i:02d}.csv"
            (directory / name).write_text("".join(f"{v}\n" for v in x32))
        channels.append({"id": cid, "path": name, "format": signal_format})

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ANNOTATION_HEADER)
    for a in study.stage_annotations:
        w.writerow([_fmt(a.onset), _fmt(a.duration), "stage", a.label])
    for a in study.event_annotations:
        w.writerow([_fmt(a.onset), _fmt(a.duration), "event", a.label])
    (directory / "annotations.csv").write_text(buf.getvalue())

    manifest = {
        "study_id": study.study_id,
        "sample_rate_hz": study.signal.sample_rate,
        "channels": channels,
        "annotations_path": "annotations.csv",
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


# ------------------------------------------------------------------ synthetic

@dataclass(frozen=True)
class SyntheticCohortConfig:
    """Parameters of the synthetic two-group cohort.

    Every channel is ``coupling * s(t) + noise_level * n_i(t)``, with ``s``
    a latent source shared by all channels of a study and ``n_i`` white.
    """

    n_studies_per_group: int = 20
    channels: int = 7
    sample_rate: int = 256
    duration_s: float = 300.0
    coupling_apnea: float = 0.8
    coupling_control: float = 0.2
    noise_level: float = 1.0
    seed: int = 0
    mains_amplitude: float = 0.0
    stages: tuple = ("NREM1", "NREM2", "NREM3", "REM")

    def __post_init__(self):
        for name in ("coupling_apnea", "coupling_control"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")
        if self.channels < 2:
            raise ValidationError("need at least two channels")
        if not self.noise_level > 0:
            raise ValidationError("noise_level must be positive")
        if self.n_studies_per_group < 1:
            raise ValidationError("need at least one study per group")
        if self.duration_s <= 0 or self.sample_rate <= 0:
            raise ValidationError("duration and sample rate must be positive")
        bad = [s for s in self.stages if s not in STAGES]
        if bad or not self.stages:
            raise ValidationError(f"invalid stage list {self.stages!r}")


def band_limited_source(rng, n_samples, sample_rate, bands=BANDS):
    """Sum of independent Gaussian components, one per band, each of unit variance.

    Each component has a flat random spectrum on the Fourier bins of its band
    and nothing elsewhere, so every band carries the shared signal.
    """
    freqs = np.fft.rfftfreq(n_samples, 1.0 / sample_rate)
    s = np.zeros(n_samples)
    for lo, hi in bands.values():
        mask = (freqs >= lo) & (freqs < hi)
        coef = np.zeros(len(freqs), dtype=np.complex128)
        k = int(mask.sum())
        coef[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        comp = np.fft.irfft(coef, n_samples)
        sd = comp.std()
        if sd > 0:
            s += comp / sd
    return s


def generate_study(config, group_index, study_index):
    """One synthetic study; ``group_index`` 0 is the apnea arm, 1 the control arm."""
    rng = np.random.default_rng([config.seed, group_index, study_index])
    n = int(round(config.duration_s * config.sample_rate))
    coupling = config.coupling_apnea if group_index == 0 else config.coupling_control
    latent = band_limited_source(rng, n, config.sample_rate)
    noise = rng.standard_normal((config.channels, n))
    x = coupling * latent[None, :] + config.noise_level * noise
    if config.mains_amplitude:
        t = np.arange(n) / config.sample_rate
        phase = rng.uniform(0, 2 * np.pi, size=(config.channels, 1))
        x += config.mains_amplitude * np.sin(2 * np.pi * 60.0 * t[None, :] + phase)

    n_epochs = int(config.duration_s // EPOCH_SECONDS)
    stages = [Annotation(j * EPOCH_SECONDS, EPOCH_SECONDS, config.stages[j % len(config.stages)])
              for j in range(n_epochs)]
    onset = float(rng.integers(0, max(1, int(config.duration_s) - 10)))
    if group_index == 0:
        events = [Annotation(onset, 10.0, "Obstructive Apnea")]
    else:
        events = [Annotation(onset, 3.0, "Arousal")]
    prefix = "apnea" if group_index == 0 else "control"
    ids = tuple(f"EEG{c + 1}" for c in range(config.channels))
    return StudyRecord(f"syn-{prefix}-{study_index:03d}",
                       MultichannelSignal(x, config.sample_rate, ids), stages, events)


def generate_synthetic_cohort(config):
    """All studies of both arms, apnea arm first.

    Groups are left Unassigned; the apnea arm carries an "Obstructive Apnea"
    event so :func:`assign_group` recovers the arms. Each study draws from
    its own seed derived from ``(config.seed, arm, index)``.
    """
    return [generate_study(config, g, i)
            for g in (0, 1) for i in range(config.n_studies_per_group)]
