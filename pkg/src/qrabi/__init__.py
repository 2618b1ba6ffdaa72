"""Spectral solvers for the two-qubit quantum Rabi and Jaynes-Cummings models.

Submodules: :mod:`~qrabi.model` (parameters, basis, parity), :mod:`~qrabi.fock`
(truncated Fock diagonalization), :mod:`~qrabi.quasi` (finite-photon
eigenstates), :mod:`~qrabi.jc` (Jaynes-Cummings blocks), :mod:`~qrabi.gfunc`
(G-function root finding) and :mod:`~qrabi.cli`.
"""

from .errors import ConditionError, MethodNotApplicable, NumericalFailure, PoleError, QRabiError, RadiusError
from .model import BasisState, ModelParams, Parity, Qubit, SpectrumRecord, normalize

__all__ = [
    "BasisState",
    "ConditionError",
    "MethodNotApplicable",
    "ModelParams",
    "NumericalFailure",
    "Parity",
    "PoleError",
    "QRabiError",
    "Qubit",
    "RadiusError",
    "SpectrumRecord",
    "normalize",
]
__version__ = "0.1.0"
