"""Numerical lab for heat and Schrodinger propagators of scaling-critical operators.

The operator is L = (i grad + A(x_hat)/|x|)^2 + a(x_hat)/|x|^2 on R^n.  Its
angular part is diagonalized on S^{n-1}, each angular mode is diagonalized
by a Hankel transform, and kernels are assembled from the Weber closed form.
"""

from .angular import (PotentialPair, SpectrumSummary, builtin_potential, closed_form_spectrum,
                      potential_from_coefficients, spectrum_for)
from .errors import (DomainError, LabError, ParameterError, PositivityError, PotentialError,
                     ScenarioError, UnsupportedOrderError)
from .estimates import (AdmissiblePair, ScanReport, counterexample_blowup, dispersive_scan_localized,
                        dispersive_scan_small, enumerate_pairs, heat_bound_scan, strichartz_norm,
                        tnu_decay_check)
from .hankel import ModeCoefficient, RadialGrid, apply_multiplier, evolve, hankel_forward
from .propagator import KernelField, PairGrid, full_kernel, radial_mode_kernel

__version__ = "0.1.0"

__all__ = [
    "AdmissiblePair", "DomainError", "KernelField", "LabError", "ModeCoefficient", "PairGrid",
    "ParameterError", "PositivityError", "PotentialError", "PotentialPair", "RadialGrid", "ScanReport",
    "ScenarioError", "SpectrumSummary", "UnsupportedOrderError", "apply_multiplier", "builtin_potential",
    "closed_form_spectrum", "counterexample_blowup", "dispersive_scan_localized", "dispersive_scan_small",
    "enumerate_pairs", "evolve", "full_kernel", "hankel_forward", "heat_bound_scan",
    "potential_from_coefficients", "radial_mode_kernel", "spectrum_for", "strichartz_norm", "tnu_decay_check",
]
