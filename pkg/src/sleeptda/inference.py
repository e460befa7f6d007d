"""Two-group permutation test on persistence landscapes.

The statistic is the sup-norm of the difference between the two group-mean
landscapes. Each replicate shuffles the pooled landscapes (Fisher-Yates),
gives the first n1 to group 1 and recomputes the statistic; replicates at
least as extreme as the observed value are counted and ``p = S / B``.
"""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dsp import BAND_NAMES
from .errors import InvalidInputError
from .landscape import _check_compatible, average_landscapes, shifted_mean, sup_difference

log = logging.getLogger(__name__)

TEST_STAGES = ("NREM1", "NREM2", "NREM3", "REM")
DEFAULT_B = 1000


@dataclass
class LabeledLandscapeSet:
    group1: list
    group2: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.group1, self.group2 = list(self.group1), list(self.group2)
        if not self.group1 or not self.group2:
            raise InvalidInputError(
                f"both groups need at least one landscape (got {len(self.group1)}, {len(self.group2)})")
        _check_compatible(self.group1 + self.group2)

    def swapped(self):
        return LabeledLandscapeSet(self.group2, self.group1, dict(self.meta))


@dataclass(frozen=True)
class PermutationTestResult:
    observed_stat: float
    b: int
    significant: int
    p_value: float
    seed: int

    @property
    def p_value_corrected(self):
        """``(S + 1) / (B + 1)``, which never returns zero."""
        return (self.significant + 1) / (self.b + 1)


def _replicate_stats(X, n1, perms, signed):
    out = np.empty(len(perms))
    for r, perm in enumerate(perms):
        # sorted indices make each group mean depend only on the set drawn
        m1 = shifted_mean(X[np.sort(perm[:n1])])
        m2 = shifted_mean(X[np.sort(perm[n1:])])
        diff = m1 - m2
        out[r] = diff.max() if signed else np.abs(diff).max()
    return out


def permutation_test(data, B=DEFAULT_B, seed=0, *, signed=False, jobs=1):
    """Permutation test of equal landscape distributions in two groups.

    Parameters
    ----------
    data : LabeledLandscapeSet
    B : int
        Number of random relabelings.
    seed : int
        Seed for the relabelings; equal inputs and seed give equal results.
    signed : bool
        Use ``max(mean1 - mean2)`` instead of ``max |mean1 - mean2|``.
    jobs : int
        Worker threads used to evaluate replicates. All permutations are
        drawn up front from one stream, so the result does not depend on it.

    Returns
    -------
    PermutationTestResult
    """
    if not isinstance(data, LabeledLandscapeSet):
        data = LabeledLandscapeSet(*data)
    if B < 1:
        raise InvalidInputError("B must be at least 1")
    g1, g2 = data.group1, data.group2
    observed = sup_difference(average_landscapes(g1), average_landscapes(g2), signed=signed)

    X1 = np.stack([l.levels for l in g1])
    X2 = np.stack([l.levels for l in g2])
    if not signed and (len(g2), X2.tobytes()) < (len(g1), X1.tobytes()):
        # canonical pooled order: relabeling the groups cannot change the result
        X1, X2 = X2, X1
    n1 = len(X1)
    X = np.concatenate([X1, X2])
    N = len(X)

    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(np.arange(N), (B, 1)), axis=1)
    if jobs > 1 and B > 1:
        chunks = np.array_split(perms, min(jobs, B))
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda p: _replicate_stats(X, n1, p, signed), chunks))
        stats = np.concatenate(parts)
    else:
        stats = _replicate_stats(X, n1, perms, signed)
    # compare against the identity relabeling computed on the same path, so
    # replicates that redraw the observed partition always count as ties
    threshold = _replicate_stats(X, n1, [np.arange(N)], signed)[0]
    S = int(np.count_nonzero(stats >= threshold))
    return PermutationTestResult(float(observed), int(B), S, S / B, int(seed))


# --------------------------------------------------------- stratified table

def cell_seed(seed, band, stage):
    """Independent seed for one (band, stage) cell, derived from the run seed."""
    bi = BAND_NAMES.index(band) if band in BAND_NAMES else zlib.crc32(band.encode())
    si = TEST_STAGES.index(stage) if stage in TEST_STAGES else zlib.crc32(stage.encode())
    return int(np.random.SeedSequence([int(seed), bi, si]).generate_state(1)[0])


@dataclass
class PTable:
    """p-values per (band, stage) cell; ``None`` marks a cell without data."""

    results: dict
    bands: tuple = BAND_NAMES
    stages: tuple = TEST_STAGES

    def p_values(self):
        out = np.full((len(self.bands), len(self.stages)), np.nan)
        for i, b in enumerate(self.bands):
            for j, s in enumerate(self.stages):
                r = self.results.get((b, s))
                if r is not None:
                    out[i, j] = r.p_value
        return out

    def present(self):
        return [k for k, v in self.results.items() if v is not None]

    def to_text(self, delimiter=","):
        lines = [delimiter.join(["band", *self.stages])]
        for b in self.bands:
            cells = []
            for s in self.stages:
                r = self.results.get((b, s))
                cells.append("NA" if r is None else f"{r.p_value:.3f}")
            lines.append(delimiter.join([b, *cells]))
        return "\n".join(lines) + "\n"

    def details_text(self):
        """One tab-separated row per populated cell with the full result."""
        lines = ["band\tstage\tobserved_stat\tB\tS\tp_value\tp_value_corrected\tseed"]
        for b in self.bands:
            for s in self.stages:
                r = self.results.get((b, s))
                if r is not None:
                    lines.append(f"{b}\t{s}\t{r.observed_stat!r}\t{r.b}\t{r.significant}\t"
                                 f"{r.p_value!r}\t{r.p_value_corrected!r}\t{r.seed}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse_text(text, delimiter=","):
        """Read a table written by :meth:`to_text` into ``{(band, stage): p or None}``."""
        rows = [ln.split(delimiter) for ln in text.strip().splitlines()]
        stages = rows[0][1:]
        out = {}
        for row in rows[1:]:
            for s, v in zip(stages, row[1:]):
                out[(row[0], s)] = None if v == "NA" else float(v)
        return out


def stratified_test_matrix(cells, B=DEFAULT_B, seed=0, *, signed=False, jobs=1,
                           bands=BAND_NAMES, stages=TEST_STAGES):
    """Run one permutation test per (band, stage) cell.

    Parameters
    ----------
    cells : mapping
        ``(band, stage) -> LabeledLandscapeSet`` or ``(group1, group2)``.
        Cells that are missing, or where either group is empty, are
        reported as absent.
    """
    results = {}
    for band in bands:
        for stage in stages:
            item = cells.get((band, stage))
            if item is None:
                results[(band, stage)] = None
                continue
            g1, g2 = (item.group1, item.group2) if isinstance(item, LabeledLandscapeSet) else item
            if not g1 or not g2:
                results[(band, stage)] = None
                continue
            data = LabeledLandscapeSet(g1, g2, {"band": band, "stage": stage})
            results[(band, stage)] = permutation_test(
                data, B, cell_seed(seed, band, stage), signed=signed, jobs=jobs)
    if not any(v is not None for v in results.values()):
        log.warning("no (band, stage) cell has data in both groups")
    return PTable(results, tuple(bands), tuple(stages))
