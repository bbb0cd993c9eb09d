"""Physical constants shared across the package (SI units)."""

from scipy.constants import e as E_CHARGE
from scipy.constants import h as PLANCK
from scipy.constants import k as BOLTZMANN

# Magnetic flux quantum h/(2e), in Wb.
PHI0 = PLANCK / (2.0 * E_CHARGE)

__all__ = ["E_CHARGE", "PLANCK", "BOLTZMANN", "PHI0"]
