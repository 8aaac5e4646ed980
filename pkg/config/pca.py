# Ĉ_d is rejected as singular above this condition number
CONDITION_LIMIT = 1e10

# Error variances below VARIANCE_FLOOR_RATIO * max are clamped to that floor
VARIANCE_FLOOR_RATIO = 1e-12
ABSOLUTE_VARIANCE_FLOOR = 1e-12

# Rounding margins at or below this are reported as ties
AMBIGUITY_TOLERANCE = 1e-12
