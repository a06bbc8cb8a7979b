"""Peptide function and PTM site classification.

Hybrid pretrained/learned embeddings, a parallel transformer/CNN
feature extractor, an information-maximization training objective, and
the full evaluation suite, all on a small tape-based autodiff engine.
"""

from .kernels import BACKEND as KERNEL_BACKEND
from .tensor import Tape, Tensor, backward

__version__ = "0.1.0"

__all__ = ["Tensor", "Tape", "backward", "KERNEL_BACKEND", "__version__"]
