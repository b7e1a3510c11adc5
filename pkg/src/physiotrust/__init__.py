"""Trust classification from skin conductance, PPG and gaze recordings.

Pipeline: windowed feature extraction (:mod:`eda`, :mod:`cardio`, :mod:`gaze`,
:mod:`dataset`), second-order boosted trees (:mod:`models`), exact tree
Shapley attributions (:mod:`explain`), condition statistics (:mod:`stats`) and
a synthetic cohort generator (:mod:`synth`).
"""

from . import kernels
from .errors import PhysioTrustError

__version__ = "0.1.0"
BACKEND = kernels.BACKEND

__all__ = ["kernels", "PhysioTrustError", "BACKEND", "__version__"]
