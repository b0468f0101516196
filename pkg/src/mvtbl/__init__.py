"""Time-band limiting for 2x2 matrix-valued Gegenbauer-type orthogonal polynomials."""
from .errors import (CertificationError, ConvergenceError, DegenerateParametersError,
                     InvalidParametersError)
from .mvop import Params

__all__ = ["Params", "InvalidParametersError", "DegenerateParametersError",
           "ConvergenceError", "CertificationError"]
__version__ = "0.1.0"
