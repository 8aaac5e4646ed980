# Measurement-noise defaults for simulated smart-meter readings.

ACCURACY_CLASS_PCT = 0.5
INTERVAL_MINUTES = 15
LOSS_PCT_RANGE = (5.0, 10.0)

# Relative consumer-to-source distances are drawn from this set
DISTANCE_CHOICES = tuple(range(1, 11))
