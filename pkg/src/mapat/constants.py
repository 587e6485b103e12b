"""Physical and numerical constants."""

import math

#: Speed of light in vacuum, m/s.
SPEED_OF_LIGHT = 299_792_458.0

#: Point/segment coincidence tolerance, meters.
GEOM_EPS = 1e-9

#: Tolerance on the segment parameter of an intersection (closed segments).
PARAM_EPS = 1e-12

TWO_PI = 2.0 * math.pi
