"""Random explicit feature maps for the Log-Euclidean kernel on SPD matrices.

The package covers the SPD utilities (Jacobi eigensolver, matrix logarithm,
covariance descriptors), four randomized feature maps, exact and induced
Gram matrices, a Monte-Carlo estimator lab, a dual coordinate descent SVM
and the skeleton-sequence data pipeline.
"""

__version__ = "0.1.0"

from .errors import LogEucError  # noqa: E402
from .kernels import exact_gram, induced_gram, log_euclidean_kernel  # noqa: E402
from .maps import SCHEMES, DegreeDistribution, sample_map  # noqa: E402
from .spd import LogDescriptor, covariance_descriptor, eig_sym, matrix_log, normalize_log  # noqa: E402

__all__ = [
    "LogEucError", "exact_gram", "induced_gram", "log_euclidean_kernel", "SCHEMES",
    "DegreeDistribution", "sample_map", "LogDescriptor", "covariance_descriptor", "eig_sym",
    "matrix_log", "normalize_log", "__version__",
]
