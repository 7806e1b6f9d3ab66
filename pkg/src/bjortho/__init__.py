"""Birkhoff-James orthogonality and Birkhoff-James extensions on finite metric spaces."""

from .errors import (
    BJError,
    ConvergenceError,
    DomainError,
    InputError,
    NonConvexError,
    NumericalError,
)
from .kernels import BACKEND

__version__ = "0.1.0"
