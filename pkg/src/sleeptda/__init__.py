"""Topological comparison of EEG coherence networks between two cohorts.

Pipeline: notch-filtered multichannel EEG -> per-epoch, per-band coherence
distance matrices -> Vietoris-Rips persistence -> persistence landscapes ->
two-group permutation tests, one per (band, sleep stage) cell.
"""

from .cohort import (StudyRecord, SyntheticCohortConfig, assign_group, generate_synthetic_cohort,
                     load_study, write_study)
from .config import PipelineConfig
from .dsp import (BANDS, BandDistanceMatrix, Epoch, MultichannelSignal, band_average,
                  bandstop_filter, coherence_distance, daniell_kernel, fourier_coefficients,
                  segment_epochs, smoothed_cross_spectrum, squared_coherence)
from .inference import (LabeledLandscapeSet, PermutationTestResult, permutation_test,
                        stratified_test_matrix)
from .kernels import BACKEND
from .landscape import (PersistenceLandscape, average_landscapes, landscape_from_diagram,
                        sup_difference)
from .persistence import (FiniteMetric, PersistenceDiagram, brute_force_persistence, rips_h0,
                          rips_h1, rips_persistence)

__version__ = "0.1.0"
