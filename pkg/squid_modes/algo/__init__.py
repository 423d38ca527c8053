import math

from scipy import constants as _sc

HBAR = _sc.hbar
E_CHARGE = _sc.e
PLANCK = _sc.h
# magnetic flux quantum h/2e (Wb)
PHI0 = _sc.h / (2 * _sc.e)
PHI0_REDUCED = PHI0 / (2 * math.pi)

# unit factors at the configuration boundary
GHZ = 2 * math.pi * 1e9      # rad/s per GHz
MHZ = 2 * math.pi * 1e6
KHZ = 2 * math.pi * 1e3
NS = 1e-9
US = 1e-6
CM = 1e-2
FF = 1e-15

# exit codes of the command line front end
EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_SOLVER_FAILURE = 2
EXIT_CALIBRATION_FAILURE = 3
