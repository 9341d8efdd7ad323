"""Unsupervised Bayesian image segmentation on a contextual Hilbert-type scan.

Square images are linearized by a space-filling scan, each scan point
augmented with its off-scan neighbors, and exact marginal-mode
segmentations computed under plain, contextual and evidential hidden
Markov chain models, with parameters estimated by stochastic EM.
"""

from ._backend import backend_name
from .chain import (DegenerateChain, PosteriorChain, PotentialChain,
                    backward_pass, chain_from_potentials, mpm_decode,
                    sample_path)
from .estimation import (InsufficientData, SemConfig, kmeans_init,
                         kmeans_init_evidential, sem_run, sem_step_evidential,
                         sem_step_hmc, trace_to_csv)
from .imaging import (BadFormat, BadShape, LabelImage, ObservedImage,
                      TooManyClasses, TooManyLevels, error_rate,
                      load_grayscale, load_labels, save_segmentation,
                      synth_noise)
from .models import (Bba, EmcChain, EvidentialParams, EvidentialStateSpace,
                     HmcParams, ZeroRow, build_hemc_cps, build_hmc_cps,
                     build_hmc_ps, contextual_likelihood, emc_from_bba,
                     evidential_states, gaussian_density,
                     marginalize_evidential, site_emission_cps)
from .scan import (HORIZONTAL, VERTICAL, CapacityError, ContextMap, GridShape,
                   ScanLayout, build_context, build_scan)

__version__ = "0.1.0"

__all__ = [
    "BadFormat", "BadShape", "Bba", "CapacityError", "ContextMap",
    "DegenerateChain", "EmcChain", "EvidentialParams", "EvidentialStateSpace",
    "GridShape", "HORIZONTAL", "HmcParams", "InsufficientData", "LabelImage",
    "ObservedImage", "PosteriorChain", "PotentialChain", "ScanLayout",
    "SemConfig", "TooManyClasses", "TooManyLevels", "VERTICAL", "ZeroRow",
    "backend_name", "backward_pass", "build_context", "build_hemc_cps",
    "build_hmc_cps", "build_hmc_ps", "build_scan", "chain_from_potentials",
    "contextual_likelihood", "emc_from_bba", "error_rate", "evidential_states",
    "gaussian_density", "kmeans_init", "kmeans_init_evidential",
    "load_grayscale", "load_labels", "marginalize_evidential", "mpm_decode",
    "sample_path", "save_segmentation", "sem_run", "sem_step_evidential",
    "sem_step_hmc", "site_emission_cps", "synth_noise", "trace_to_csv",
]
