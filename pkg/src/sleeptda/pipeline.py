"""Staged pipeline over on-disk archives.

An archive is a directory::

    index.tsv                  first line "# sleeptda-archive <kind> 1", then a
                               header row and one row per record:
                               study_id  epoch_index  band  stage  group  path
    records/<study>/e<NNNN>_<band>.txt

``kind`` is ``matrices``, ``diagrams`` or ``landscapes``. Records are text:

matrices
    first line ``n``, then n rows of n distances
diagrams
    ``# dim birth death`` then one bar per line, ``inf`` for essential classes
landscapes
    ``start step G K`` then K rows of G values

Floats are written with ``repr`` so archives are exact and byte-reproducible.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import cohort, dsp
from .errors import ArchiveError, InvalidInputError, MissingFileError, ValidationError
from .inference import LabeledLandscapeSet, stratified_test_matrix
from .landscape import PersistenceLandscape, average_landscapes, landscape_from_diagram, make_grid
from .persistence import PersistenceDiagram, rips_persistence

log = logging.getLogger(__name__)

KINDS = ("matrices", "diagrams", "landscapes")
INDEX_COLUMNS = ("study_id", "epoch_index", "band", "stage", "group", "path")


class RecordKey(NamedTuple):
    study_id: str
    epoch_index: int
    band: str
    stage: str

    def __str__(self):
        return f"{self.study_id}:{self.epoch_index}:{self.band}"

    @classmethod
    def parse(cls, text, stage=""):
        try:
            study, epoch, band = text.rsplit(":", 2)
            return cls(study, int(epoch), band, stage)
        except ValueError:
            raise ValidationError(f"record key must be 'study_id:epoch:band', got {text!r}") from None


@dataclass
class Entry:
    key: RecordKey
    group: str
    path: str


class Archive:
    """Index plus text records on disk."""

    def __init__(self, root, kind, entries=None):
        if kind not in KINDS:
            raise ValidationError(f"unknown archive kind {kind!r}")
        self.root = Path(root)
        self.kind = kind
        self.entries = list(entries or [])

    # ----------------------------------------------------------- writing
    @classmethod
    def create(cls, root, kind):
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        return cls(root, kind)

    def add(self, key, group, text):
        if any(c in key.study_id + key.band for c in "/\\\t\n:") or key.study_id in ("", ".", ".."):
            raise ArchiveError(key, "study_id and band must be plain names")
        rel =f"records/{key.study_id}/e{key.epoch_index:04d}_{key.band}.txt"
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.entries.append(Entry(key, group, rel))

    def save(self):
        keys = [e.key[:3] for e in self.entries]
        dup = [k for k, c in Counter(keys).items() if c > 1]
        if dup:
            raise ArchiveError(dup[0], "duplicate record key")
        self.entries.sort(key=lambda e: (e.key.study_id, e.key.epoch_index, e.key.band))
        lines = [f"# sleeptda-archive {self.kind} 1", "\t".join(INDEX_COLUMNS)]
        for e in self.entries:
            k = e.key
            lines.append("\t".join([k.study_id, str(k.epoch_index), k.band, k.stage, e.group, e.path]))
        (self.root / "index.tsv").write_text("\n".join(lines) + "\n")

    # ----------------------------------------------------------- reading
    @classmethod
    def open(cls, root, kind=None):
        root = Path(root)
        index = root / "index.tsv"
        if not index.exists():
            raise MissingFileError(f"no archive index at {index}")
        lines = index.read_text().splitlines()
        if not lines or not lines[0].startswith("# sleeptda-archive "):
            raise ArchiveError(str(index), "not a sleeptda archive index")
        found = lines[0].split()[2]
        if kind is not None and found != kind:
            raise ValidationError(f"{root} holds {found}, expected {kind}")
        if len(lines) < 2 or tuple(lines[1].split("\t")) != INDEX_COLUMNS:
            raise ArchiveError(str(index), "bad index header")
        entries = []
        for lineno, line in enumerate(lines[2:], 3):
            parts = line.split("\t")
            if len(parts) != len(INDEX_COLUMNS):
                raise ArchiveError(f"{index}:{lineno}", "wrong number of columns")
            study, epoch, band, stage, group, rel = parts
            try:
                key = RecordKey(study, int(epoch), band, stage)
            except ValueError:
                raise ArchiveError(f"{index}:{lineno}", "epoch_index is not an integer") from None
            entries.append(Entry(key, group, rel))
        return cls(root, found, entries)

    def find(self, key):
        if isinstance(key, str):
            key = RecordKey.parse(key)
        for e in self.entries:
            if e.key[:3] == tuple(key)[:3]:
                return e
        raise KeyError(f"no record {key} in {self.root}")

    def read_text(self, entry):
        path = self.root / entry.path
        try:
            return path.read_text()
        except OSError as exc:
            raise ArchiveError(entry.key, f"cannot read {path} ({exc})") from None

    def load(self, entry):
        """Parse the record of ``entry`` into its in-memory type."""
        text = self.read_text(entry)
        try:
            if self.kind == "matrices":
                return matrix_from_text(text)
            if self.kind == "diagrams":
                return PersistenceDiagram.from_text(text)
            return PersistenceLandscape.from_text(text)
        except (ValueError, IndexError) as exc:
            raise ArchiveError(entry.key, f"corrupt record ({exc})") from None

    def __len__(self):
        return len(self.entries)


def matrix_to_text(d):
    d = np.asarray(d, dtype=np.float64)
    rows = [" ".join(repr(float(v)) for v in row) for row in d]
    return f"{d.shape[0]}\n" + "\n".join(rows) + "\n"


def matrix_from_text(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n = int(lines[0])
    d = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    if d.shape != (n, n):
        raise ValueError(f"expected {n}x{n} matrix, got shape {d.shape}")
    return d


def _map(fn, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ------------------------------------------------------------ preprocessing

def study_matrices(study, config):
    """Group, filter, epoch and reduce one study to band distance matrices.

    Returns
    -------
    group : str
    matrices : list of BandDistanceMatrix
        Ordered by epoch, then band.
    dropped : int
        Epochs discarded for non-finite samples.
    """
    study = cohort.assign_group(study, config.apnea_patterns)
    raw = study.signal
    bad = ~np.isfinite(raw.samples)
    if bad.any():
        # an IIR filter would smear NaN over the rest of the record
        raw = raw.with_samples(np.where(bad, 0.0, raw.samples))
    sig = dsp.bandstop_filter(raw, config.notch_centers,
                              half_width=config.notch_half_width, order=config.filter_order,
                              zero_phase=config.zero_phase)
    if bad.any():
        sig = sig.with_samples(np.where(bad, np.nan, sig.samples))
    epochs, dropped = dsp.segment_epochs(sig, study.stage_annotations, return_dropped=True)
    if config.exclude_awake:
        epochs = [e for e in epochs if e.stage != "Awake"]
    kernel = dsp.daniell_kernel(config.kernel_half_width, config.modified_daniell)
    mats = []
    for ep in epochs:
        mats.extend(dsp.epoch_distance_matrices(ep, kernel, bands=config.bands))
    return study.group, mats, dropped


def preprocess(studies, out_dir, config, *, jobs=1):
    """Write a matrix archive for ``studies`` and return it with per-(stage, band) counts."""
    archive = Archive.create(out_dir, "matrices")

    def work(study):
        try:
            return study_matrices(study, config)
        except ValidationError as exc:
            raise ValidationError(f"study {study.study_id}: {exc}") from exc

    counts = Counter()
    for study, (group, mats, dropped) in zip(studies, _map(work, studies, jobs)):
        if dropped:
            log.warning("study %s: dropped %d epoch(s) with non-finite samples",
                        study.study_id, dropped)
        for m in mats:
            archive.add(RecordKey(study.study_id, m.epoch_index, m.band, m.stage), group,
                        matrix_to_text(m.values))
            counts[(m.stage, m.band)] += 1
    archive.save()
    if not archive.entries:
        log.warning("no distance matrices produced (all epochs excluded or unlabeled)")
    return archive, counts


# ------------------------------------------------------- persistence stages

def persist(matrix_archive, out_dir, *, jobs=1, max_dim=1):
    """Rips diagrams (dimensions 0 and 1) for every matrix record."""
    src = Archive.open(matrix_archive, "matrices") if not isinstance(matrix_archive, Archive) \
        else matrix_archive
    dst = Archive.create(out_dir, "diagrams")
    dgms = _map(lambda e: rips_persistence(src.load(e), max_dim=max_dim), src.entries, jobs)
    for e, dgm in zip(src.entries, dgms):
        dst.add(e.key, e.group, dgm.to_text())
    dst.save()
    return dst


def build_landscapes(diagram_archive, out_dir, config, *, jobs=1):
    """Landscapes of dimension ``config.homology_dim`` for every diagram record."""
    src = Archive.open(diagram_archive, "diagrams") if not isinstance(diagram_archive, Archive) \
        else diagram_archive
    dst = Archive.create(out_dir, "landscapes")
    grid = make_grid(config.grid_start, config.grid_step, config.grid_size)

    def work(e):
        return landscape_from_diagram(src.load(e), config.homology_dim, grid, config.levels,
                                      essential=config.essential)

    for e, ls in zip(src.entries, _map(work, src.entries, jobs)):
        dst.add(e.key, e.group, ls.to_text())
    dst.save()
    return dst


# --------------------------------------------------------------- inference

def landscape_cells(archive, pooling="per-study"):
    """Arrange landscape records into ``(band, stage) -> (apnea list, control list)``.

    With ``per-study`` pooling each study contributes the mean of its epoch
    landscapes in that cell; with ``per-epoch`` every epoch is its own unit.
    """
    by_unit = defaultdict(list)
    for e in archive.entries:
        if e.group not in (cohort.APNEA, cohort.NO_APNEA):
            raise InvalidInputError(f"record {e.key} has no group label ({e.group!r})")
        unit = e.key.study_id if pooling == "per-study" else (e.key.study_id, e.key.epoch_index)
        by_unit[(e.key.band, e.key.stage, e.group, unit)].append(archive.load(e))
    cells = defaultdict(lambda: ([], []))
    for (band, stage, group, _unit), items in sorted(by_unit.items(), key=lambda kv: str(kv[0])):
        ls = average_landscapes(items) if len(items) > 1 else items[0]
        cells[(band, stage)][0 if group == cohort.APNEA else 1].append(ls)
    return dict(cells)


def permutation_table(landscape_archive, config, *, jobs=1, seed=None):
    """Band-by-stage permutation tests; returns a :class:`PTable`."""
    src = Archive.open(landscape_archive, "landscapes") if not isinstance(landscape_archive, Archive) \
        else landscape_archive
    groups = {e.group for e in src.entries}
    if not {cohort.APNEA, cohort.NO_APNEA} <= groups:
        raise InvalidInputError(f"need both Apnea and NoApnea records, found {sorted(groups)}")
    cells = landscape_cells(src, config.pooling)
    cells = {k: LabeledLandscapeSet(*v, {"band": k[0], "stage": k[1]})
             for k, v in cells.items() if v[0] and v[1]}
    return stratified_test_matrix(cells, config.permutations,
                                  config.seed if seed is None else seed,
                                  signed=config.signed_statistic, jobs=jobs,
                                  bands=tuple(config.bands))


def run_all(studies, out_dir, config, *, jobs=1):
    """Every stage in sequence under ``out_dir``; returns the p-value table."""
    out_dir = Path(out_dir)
    mats, _ = preprocess(studies, out_dir / "matrices", config, jobs=jobs)
    dgms = persist(mats, out_dir / "diagrams", jobs=jobs)
    lss = build_landscapes(dgms, out_dir / "landscapes", config, jobs=jobs)
    table = permutation_table(lss, config, jobs=jobs)
    (out_dir / "ptable.csv").write_text(table.to_text())
    (out_dir / "ptable_details.tsv").write_text(table.details_text())
    return table
