# Default RBTS-Bus-2-scale profile: 1 substation (3 phase meters), 4 feeders
# (3 phase meters each), 22 distribution transformers (3 phase meters each)
# and 1923 consumer meters, 2004 meters in total.

# Per-consumer-meter (average kW, peak kW)
LOAD_CLASSES = {
    "residential": (2.548, 4.128),
    "commercial": (15.13, 25.0),
    "institutional": (188.7, 305.6),
    "small_user": (333.3, 543.3),
}

# Transformers per feeder: (load class, consumers on phase A, B, C)
FEEDERS = [
    [
        ("residential", (69, 69, 69)),
        ("residential", (69, 69, 69)),
        ("residential", (69, 69, 69)),
        ("institutional", (1, 1, 1)),
        ("institutional", (1, 1, 1)),
        ("commercial", (2, 2, 2)),
        ("commercial", (2, 2, 2)),
    ],
    [
        ("small_user", (1, 1, 1)),
        ("small_user", (1, 1, 1)),
    ],
    [
        ("residential", (69, 69, 69)),
        ("residential", (69, 69, 69)),
        ("residential", (69, 69, 69)),
        ("institutional", (1, 1, 1)),
        ("institutional", (1, 1, 1)),
        ("commercial", (2, 2, 2)),
    ],
    [
        ("commercial", (2, 2, 2)),
        ("residential", (70, 70, 69)),
        ("residential", (70, 70, 69)),
        ("residential", (70, 70, 69)),
        ("institutional", (1, 1, 1)),
        ("institutional", (1, 1, 1)),
        ("commercial", (2, 2, 2)),
    ],
]

INCLUDE_SUBSTATION = True

# Accuracy class (%) of every meter in the profile. Class-2 meters keep the
# single-sample case (N = total meters) below the success threshold.
ACCURACY_CLASS_PCT = 2.0
