"""covspectra: simulation and verification of sample-covariance spectra.

The toolkit generates seeded random-matrix ensembles (i.i.d., martingale
difference, banded linear process), couples each to its Gaussian companion,
and measures how close their empirical spectral distributions and Stieltjes
transforms are, with the Marchenko-Pastur law as the identity-covariance
reference.  Companion modules verify quadratic-form concentration bounds by
Monte Carlo and fuzz a battery of resolvent inequalities.
"""

__version__ = "0.1.0"

from .concentration import BoundCheckReport, TestMatrixFamily  # noqa: F401
from .ensembles import EnsembleConfig, EntryLaw, sample_matrix  # noqa: F401
from .errors import CovspectraError, InvalidInput  # noqa: F401
from .linalg import SymMatrix, UpperHalfPoint  # noqa: F401
from .mp import MPLaw  # noqa: F401
from .spectra import ks_distance, sample_cov_spectrum, stieltjes_gap  # noqa: F401
