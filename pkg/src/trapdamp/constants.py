"""Physical constants (SI, CODATA 2018 exact or recommended values)."""
import math

H = 6.626_070_15e-34  # Planck constant, J s (exact)
HBAR = H / (2.0 * math.pi)
K_B = 1.380_649e-23  # Boltzmann constant, J/K (exact)
E_CHARGE = 1.602_176_634e-19  # elementary charge, C (exact)
M_ELECTRON = 9.109_383_7015e-31  # electron mass, kg

TWO_PI = 2.0 * math.pi
