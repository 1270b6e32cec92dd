"""Physical constants (CODATA 2018, exact SI values where defined)."""

from scipy import constants as _c

H = _c.h  # J s
HBAR = _c.hbar  # J s
K_B = _c.k  # J / K
STEFAN_BOLTZMANN = _c.sigma  # W / (m^2 K^4)

#: quadrature variance of the vacuum in the I/Q convention used throughout
VACUUM_VARIANCE = 0.25

#: carrier frequency of the cryolink experiment
SIGNAL_FREQUENCY_HZ = 5.65e9

#: measured NbTi cable attenuation at the carrier frequency
CABLE_ATTENUATION_DB_PER_KM = 1.01

#: superconducting gap frequency of NbTi
NBTI_GAP_FREQUENCY_HZ = 370e9
