"""Frozen reference values computed once, independently of the package.

Hypergeometric values come from the complete elliptic integral identity and
from mpmath at 40 digits; kernel values evaluate the literal kernel formulas
(complex arithmetic, no regrouping) at 40 digits; the estimate integrals use
mpmath tanh-sinh quadrature.
"""
import math

# 2F1(1/2, 1/2; 1; 1/2) = (2/pi) K(k^2 = 1/2)
F_HALF_HALF_AT_HALF = 1.1803405990160962
# Gamma(2) / Gamma(3/2)^2
FOUR_OVER_PI = 1.2732395447351628
F_HALF_HALF_AT_03 = 1.0910959103627813
F_DIFF_AT_03 = -0.20890408963721843

# literal kernel formulas
E_R03_T1_B02_MU1_IMAG = 0.81159677308177774  # M = -i
E_R03_T1_B02_M1 = 0.97350901042113556
K1_Z02_T1_M1118 = 1.0149270808227147  # M = sqrt(1.25)
K0_HALFPHI_T1_M1 = -0.11014016909030105
K0_Z03_T2_M07 = -0.49196657285688542
K0_Z02_T1_CRIT = -0.41218031767503204  # = -e^{1/2}/4

# estimate integrals at z = 2
LOG_KERNEL_A0_Z2 = 0.34657359027997265  # equals ln(2)/2
BRACKET_A0_MU1_Z2 = 0.32248733050456146

SQRT2 = math.sqrt(2.0)
